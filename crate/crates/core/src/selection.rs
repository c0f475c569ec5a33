//! Conventional optimal transmitter selection and secrecy outage estimation.

use rayon::prelude::*;

use crate::backhaul::{active_set_probability, ActiveSet, BackhaulState};
use crate::channel::{sample_channels, secondary_power, secrecy_rates, solve_power};
use crate::config::SystemConfig;
use crate::dataset::{build_feature_matrix, normalize, FeatureMatrix};
use crate::error::{Error, Result};
use crate::rng::{self, derive_seed, TAG_SUBSET};
use crate::sim::{draw_chunk, map_chunks};

/// Largest K accepted by [`sop_decomposed`] (4096 subsets).
pub const MAX_DECOMPOSED_K: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// 1-based transmitter index.
    Transmitter(usize),
    NoActiveTransmitter,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionOutcome {
    pub selected: Selection,
    pub secrecy_rate: f64,
}

/// Argmax of `rates` over transmitters with active backhaul; ties go to the
/// smallest index.
pub fn select_optimal(rates: &[f64], bh: &BackhaulState) -> SelectionOutcome {
    let mut best: Option<(usize, f64)> = None;
    for (idx, &rate) in rates.iter().enumerate() {
        if bh.is_active(idx) && best.is_none_or(|(_, b)| rate > b) {
            best = Some((idx, rate));
        }
    }
    match best {
        Some((idx, rate)) => SelectionOutcome {
            selected: Selection::Transmitter(idx + 1),
            secrecy_rate: rate,
        },
        None => SelectionOutcome {
            selected: Selection::NoActiveTransmitter,
            secrecy_rate: 0.0,
        },
    }
}

/// A Monte Carlo probability with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SopEstimate {
    pub sop: f64,
    pub std_err: f64,
    pub samples: usize,
}

impl SopEstimate {
    pub fn from_counts(outages: usize, n: usize) -> Self {
        let p = outages as f64 / n as f64;
        Self {
            sop: p,
            std_err: (p * (1.0 - p) / n as f64).sqrt(),
            samples: n,
        }
    }
}

fn check_samples(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidConfig("Monte Carlo sample count must be positive".into()));
    }
    Ok(())
}

/// SOP of conventional selection, sampling channels and backhaul jointly.
/// Realizations without any active transmitter count as outages.
pub fn sop_direct(cfg: &SystemConfig, n_samples: usize, seed: u64) -> Result<SopEstimate> {
    cfg.validate()?;
    check_samples(n_samples)?;
    let p_s = secondary_power(cfg)?;
    let outages: usize = map_chunks(cfg, n_samples, seed, |draws| {
        draws
            .iter()
            .filter(|d| {
                let rates = secrecy_rates(cfg, p_s, &d.channels);
                !(select_optimal(&rates, &d.backhaul).secrecy_rate >= cfg.r_secrecy
                    && d.backhaul.any_active())
            })
            .count()
    })
    .into_iter()
    .sum();
    Ok(SopEstimate::from_counts(outages, n_samples))
}

/// SOP as `sum_S P[S] * P[max_{k in S} C_s^k < R_th]`, with every term
/// estimated from `n_per_subset` channel draws. The empty set contributes
/// `P[empty]`.
pub fn sop_decomposed(cfg: &SystemConfig, n_per_subset: usize, seed: u64) -> Result<SopEstimate> {
    cfg.validate()?;
    if cfg.k > MAX_DECOMPOSED_K {
        return Err(Error::SubsetBudgetExceeded {
            k: cfg.k,
            max: MAX_DECOMPOSED_K,
        });
    }
    check_samples(n_per_subset)?;
    let p_s = secondary_power(cfg)?;
    let terms: Vec<(f64, f64)> = ActiveSet::all(cfg.k)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|set| {
            let weight = active_set_probability(&cfg.delta, set);
            if weight == 0.0 {
                return (0.0, 0.0);
            }
            if set.is_empty() {
                return (weight, 0.0);
            }
            let subset_seed = derive_seed(seed, set.0, TAG_SUBSET);
            let mut outages = 0usize;
            for (chunk, len) in rng::chunks(n_per_subset) {
                let mut rng = rng::chunk_rng(subset_seed, chunk);
                for _ in 0..len {
                    let rates = secrecy_rates(cfg, p_s, &sample_channels(cfg, &mut rng));
                    let best = rates
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| set.contains(*i))
                        .map(|(_, &r)| r)
                        .fold(f64::NEG_INFINITY, f64::max);
                    outages += (best < cfg.r_secrecy) as usize;
                }
            }
            let p = outages as f64 / n_per_subset as f64;
            (weight * p, weight * weight * p * (1.0 - p) / n_per_subset as f64)
        })
        .collect();
    let sop = terms.iter().map(|t| t.0).sum::<f64>();
    let var = terms.iter().map(|t| t.1).sum::<f64>();
    Ok(SopEstimate {
        sop,
        std_err: var.sqrt(),
        samples: n_per_subset,
    })
}

/// SOP of a learned policy next to conventional selection on the same draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicySop {
    pub policy: SopEstimate,
    pub conventional: SopEstimate,
    /// `policy.sop - conventional.sop`.
    pub gap: f64,
    /// Standard error of the paired per-draw outage difference.
    pub gap_std_err: f64,
}

/// Evaluates a selection policy on `n_samples` draws of the stream `seed`.
///
/// The policy sees batches of normalized feature matrices, exactly as a
/// learner does, and returns labels in `1..=K+1`. An outage is counted when it
/// abstains (`K + 1`), picks a transmitter whose backhaul is down, or picks
/// one whose secrecy rate is below `r_secrecy`. Batches arrive in stream
/// order. An infeasible power constraint evaluates with `P_S = 0`.
pub fn policy_sop<P>(cfg: &SystemConfig, mut policy: P, n_samples: usize, seed: u64) -> Result<PolicySop>
where
    P: FnMut(&[FeatureMatrix]) -> Vec<usize>,
{
    cfg.validate()?;
    check_samples(n_samples)?;
    let p_s = solve_power(cfg).p_s;
    let k = cfg.k;
    let (mut policy_out, mut conv_out) = (0usize, 0usize);
    let (mut diff_sum, mut diff_sq) = (0i64, 0u64);
    for (chunk, len) in rng::chunks(n_samples) {
        let draws = draw_chunk(cfg, seed, chunk, len);
        let feats: Vec<FeatureMatrix> = draws
            .iter()
            .map(|d| normalize(&build_feature_matrix(&d.channels, &d.backhaul)))
            .collect();
        let labels = policy(&feats);
        if labels.len() != draws.len() {
            return Err(Error::ShapeMismatch {
                expected: draws.len(),
                got: labels.len(),
            });
        }
        for (d, &label) in draws.iter().zip(&labels) {
            if !(1..=k + 1).contains(&label) {
                return Err(Error::InvalidLabel { label, max: k + 1 });
            }
            let rates = secrecy_rates(cfg, p_s, &d.channels);
            let best = select_optimal(&rates, &d.backhaul);
            let conv = best.selected == Selection::NoActiveTransmitter
                || best.secrecy_rate < cfg.r_secrecy;
            let pol = label == k + 1
                || !d.backhaul.is_active(label - 1)
                || rates[label - 1] < cfg.r_secrecy;
            policy_out += pol as usize;
            conv_out += conv as usize;
            let diff = pol as i64 - conv as i64;
            diff_sum += diff;
            diff_sq += (diff * diff) as u64;
        }
    }
    let n = n_samples as f64;
    let mean = diff_sum as f64 / n;
    let var = (diff_sq as f64 / n - mean * mean).max(0.0);
    Ok(PolicySop {
        policy: SopEstimate::from_counts(policy_out, n_samples),
        conventional: SopEstimate::from_counts(conv_out, n_samples),
        gap: mean,
        gap_std_err: (var / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_dataset;
    use crate::sim::sample_draw;

    fn bh(bits: &[u8]) -> BackhaulState {
        BackhaulState::new(bits.iter().map(|&b| b == 1).collect())
    }

    #[test]
    fn selection_examples() {
        let rates = [0.3, 0.9, 0.5];
        let out = select_optimal(&rates, &bh(&[1, 1, 1]));
        assert_eq!(out.selected, Selection::Transmitter(2));
        assert_eq!(out.secrecy_rate, 0.9);
        let out = select_optimal(&rates, &bh(&[1, 0, 1]));
        assert_eq!(out.selected, Selection::Transmitter(3));
        assert_eq!(out.secrecy_rate, 0.5);
        let out = select_optimal(&rates, &bh(&[0, 0, 0]));
        assert_eq!(out.selected, Selection::NoActiveTransmitter);
        assert_eq!(out.secrecy_rate, 0.0);
    }

    #[test]
    fn ties_go_to_smallest_index() {
        let out = select_optimal(&[0.0, 0.7, 0.7, 0.0], &bh(&[1, 1, 1, 1]));
        assert_eq!(out.selected, Selection::Transmitter(2));
        let out = select_optimal(&[0.0, 0.0, 0.0], &bh(&[0, 1, 1]));
        assert_eq!(out.selected, Selection::Transmitter(2));
    }

    #[test]
    fn oracle_dominates_every_active_choice() {
        let cfg = SystemConfig::iid(6, 0.6, 8.0);
        let p_s = secondary_power(&cfg).unwrap();
        let mut rng = rng::rng_from_seed(31);
        for _ in 0..2000 {
            let d = sample_draw(&cfg, &mut rng);
            let rates = secrecy_rates(&cfg, p_s, &d.channels);
            let best = select_optimal(&rates, &d.backhaul);
            if let Selection::Transmitter(k) = best.selected {
                assert!(d.backhaul.is_active(k - 1));
            }
            for (i, &r) in rates.iter().enumerate() {
                if d.backhaul.is_active(i) {
                    assert!(best.secrecy_rate >= r);
                }
            }
        }
    }

    #[test]
    fn zero_threshold_outage_is_empty_backhaul() {
        let mut cfg = SystemConfig::iid(3, 0.5, 8.0);
        cfg.r_secrecy = 0.0;
        let est = sop_direct(&cfg, 200_000, 4).unwrap();
        let expect = 0.125;
        assert!((est.sop - expect).abs() <= 3.0 * est.std_err, "{est:?}");
    }

    #[test]
    fn unattainable_threshold_always_outage() {
        let mut cfg = SystemConfig::iid(3, 0.9, 8.0);
        cfg.r_secrecy = 50.0;
        assert_eq!(sop_direct(&cfg, 20_000, 4).unwrap().sop, 1.0);
        assert_eq!(sop_decomposed(&cfg, 10_000, 4).unwrap().sop, 1.0);
    }

    #[test]
    fn single_transmitter_estimators_agree() {
        let cfg = SystemConfig::iid(1, 1.0, 8.0);
        let a = sop_direct(&cfg, 400_000, 8).unwrap();
        let b = sop_decomposed(&cfg, 400_000, 9).unwrap();
        let tol = 3.0 * (a.std_err.powi(2) + b.std_err.powi(2)).sqrt();
        assert!((a.sop - b.sop).abs() <= tol, "{a:?} vs {b:?}");
    }

    #[test]
    fn decomposed_reliable_backhaul_is_single_subset() {
        let cfg = SystemConfig::iid(3, 1.0, 8.0);
        let dec = sop_decomposed(&cfg, 50_000, 12).unwrap();
        // Only the full set has weight; reproduce its term by hand.
        let p_s = secondary_power(&cfg).unwrap();
        let seed = derive_seed(12, 0b111, TAG_SUBSET);
        let mut outages = 0;
        for (chunk, len) in rng::chunks(50_000) {
            let mut rng = rng::chunk_rng(seed, chunk);
            for _ in 0..len {
                let rates = secrecy_rates(&cfg, p_s, &sample_channels(&cfg, &mut rng));
                outages += (rates.iter().cloned().fold(f64::MIN, f64::max) < cfg.r_secrecy) as usize;
            }
        }
        assert_eq!(dec.sop, outages as f64 / 50_000.0);
    }

    #[test]
    fn dead_backhaul_is_certain_outage() {
        let cfg = SystemConfig::iid(4, 0.0, 8.0);
        assert_eq!(sop_decomposed(&cfg, 1000, 1).unwrap().sop, 1.0);
        assert_eq!(sop_direct(&cfg, 10_000, 1).unwrap().sop, 1.0);
    }

    #[test]
    fn subset_budget() {
        let cfg = SystemConfig::iid(13, 0.8, 8.0);
        assert!(matches!(
            sop_decomposed(&cfg, 10, 1),
            Err(Error::SubsetBudgetExceeded { k: 13, .. })
        ));
    }

    #[test]
    fn infeasible_power_propagates() {
        let cfg = SystemConfig::iid(2, 0.8, 0.0);
        assert!(matches!(
            sop_direct(&cfg, 10_000, 1),
            Err(Error::InfeasiblePrimaryConstraint { .. })
        ));
        let est = policy_sop(&cfg, |f| vec![1; f.len()], 10_000, 1).unwrap();
        assert_eq!(est.policy.sop, 1.0);
    }

    #[test]
    fn oracle_policy_reproduces_direct_estimate() {
        let cfg = SystemConfig::iid(4, 0.8, 8.0);
        let n = 30_000;
        let ds = generate_dataset(&cfg, n, 77).unwrap();
        let mut labels = ds.labels().into_iter();
        let est = policy_sop(&cfg, |f| labels.by_ref().take(f.len()).collect(), n, 77).unwrap();
        let direct = sop_direct(&cfg, n, 77).unwrap();
        assert_eq!(est.policy, direct);
        assert_eq!(est.conventional, direct);
        assert_eq!(est.gap, 0.0);
    }

    #[test]
    fn abstaining_policy_always_outage() {
        let cfg = SystemConfig::iid(4, 0.8, 8.0);
        let est = policy_sop(&cfg, |f| vec![5; f.len()], 5000, 3).unwrap();
        assert_eq!(est.policy.sop, 1.0);
        assert!(matches!(
            policy_sop(&cfg, |f| vec![6; f.len()], 10, 3),
            Err(Error::InvalidLabel { label: 6, .. })
        ));
    }

    #[test]
    fn any_policy_is_dominated_by_oracle() {
        let cfg = SystemConfig::iid(4, 0.8, 8.0);
        let est = policy_sop(&cfg, |f| (0..f.len()).map(|i| i % 5 + 1).collect(), 20_000, 5).unwrap();
        assert!(est.policy.sop >= est.conventional.sop);
        assert!(est.gap > 0.0 && est.gap_std_err > 0.0);
    }

    #[test]
    fn sop_monotone_in_reliability_and_threshold() {
        let base = SystemConfig::iid(3, 0.6, 8.0);
        let mut prev = f64::INFINITY;
        for d in [0.5, 0.7, 0.9] {
            let est = sop_direct(&base.clone().with_delta(d), 100_000, 6).unwrap();
            assert!(est.sop <= prev);
            prev = est.sop;
        }
        let mut prev = 0.0;
        for r in [0.25, 0.5, 1.0, 2.0] {
            let mut cfg = base.clone();
            cfg.r_secrecy = r;
            let est = sop_direct(&cfg, 100_000, 6).unwrap();
            assert!(est.sop >= prev);
            prev = est.sop;
        }
    }
}
