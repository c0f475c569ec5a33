//! Rayleigh fading channels, secondary power control and link rates.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::rng;

/// One draw of every channel coefficient in the network.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h_sd: Vec<Complex64>,
    pub h_se: Vec<Complex64>,
    pub h_sr: Vec<Complex64>,
    pub h_tr: Complex64,
    pub h_td: Complex64,
    pub h_te: Complex64,
}

impl ChannelRealization {
    pub fn k(&self) -> usize {
        self.h_sd.len()
    }
}

/// Circularly-symmetric complex Gaussian with total variance `variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

/// Draws all coefficients. The draw order is fixed: `h_sd[..]`, `h_se[..]`,
/// `h_sr[..]`, then `h_tr`, `h_td`, `h_te`.
pub fn sample_channels<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> ChannelRealization {
    let mut draw = |vars: &[f64]| -> Vec<Complex64> {
        vars.iter().map(|&v| complex_gaussian(rng, v)).collect()
    };
    let h_sd = draw(&cfg.inv_lambda_sd);
    let h_se = draw(&cfg.inv_lambda_se);
    let h_sr = draw(&cfg.inv_lambda_sr);
    ChannelRealization {
        h_sd,
        h_se,
        h_sr,
        h_tr: complex_gaussian(rng, cfg.inv_lambda_tr),
        h_td: complex_gaussian(rng, cfg.inv_lambda_td),
        h_te: complex_gaussian(rng, cfg.inv_lambda_te),
    }
}

/// `p_tx |h_main|^2 / (p_int |h_int|^2 + n0)`.
pub fn sinr(p_tx: f64, h_main: Complex64, p_int: f64, h_int: Complex64, n0: f64) -> Result<f64> {
    let denom = p_int * h_int.norm_sqr() + n0;
    if denom == 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    Ok(p_tx * h_main.norm_sqr() / denom)
}

/// `max(log2((1 + gamma_d) / (1 + gamma_e)), 0)`.
pub fn secrecy_rate(gamma_d: f64, gamma_e: f64) -> f64 {
    if gamma_d <= gamma_e {
        return 0.0;
    }
    ((1.0 + gamma_d) / (1.0 + gamma_e)).log2().max(0.0)
}

/// Secrecy rate of every transmitter for secondary power `p_s`, ignoring backhaul.
pub fn secrecy_rates(cfg: &SystemConfig, p_s: f64, real: &ChannelRealization) -> Vec<f64> {
    // A zero denominator needs n0 = 0 and an exactly-zero interference
    // coefficient; treat it as unbounded SINR.
    let link = |h: Complex64, h_int: Complex64| {
        sinr(p_s, h, cfg.p_t, h_int, cfg.n0).unwrap_or(f64::INFINITY)
    };
    real.h_sd
        .iter()
        .zip(&real.h_se)
        .map(|(&sd, &se)| secrecy_rate(link(sd, real.h_td), link(se, real.h_te)))
        .collect()
}

/// Largest interference variance among the secondary-to-primary links. The
/// power constraint is solved against this link so it holds whichever
/// transmitter is selected.
pub fn worst_case_inv_lambda_sr(cfg: &SystemConfig) -> f64 {
    cfg.inv_lambda_sr.iter().copied().fold(f64::MIN, f64::max)
}

/// Primary outage probability without any secondary interference.
pub fn baseline_primary_outage(cfg: &SystemConfig) -> f64 {
    let lambda_tr = 1.0 / cfg.inv_lambda_tr;
    -(-lambda_tr * cfg.gamma0() * cfg.n0 / cfg.p_t).exp_m1()
}

/// Closed-form primary outage `P[Γ_TR < Γ_0]` when the secondary transmits
/// with power `p_s` over the worst-case interference link.
pub fn primary_outage(cfg: &SystemConfig, p_s: f64) -> f64 {
    let lambda_tr = 1.0 / cfg.inv_lambda_tr;
    let lambda_sr = 1.0 / worst_case_inv_lambda_sr(cfg);
    let g0 = cfg.gamma0();
    let no_outage_noise = (-lambda_tr * g0 * cfg.n0 / cfg.p_t).exp();
    1.0 - no_outage_noise * lambda_sr / (lambda_sr + lambda_tr * g0 * p_s / cfg.p_t)
}

/// Maximum secondary power keeping the primary outage at or below `phi`.
///
/// Inverts [`primary_outage`] at equality:
/// `P_S = P_T λ_sr / (λ_tr Γ_0) · (exp(-λ_tr Γ_0 N_0 / P_T) / (1 - Φ) - 1)`.
pub fn secondary_power(cfg: &SystemConfig) -> Result<f64> {
    let baseline = baseline_primary_outage(cfg);
    if baseline > cfg.phi {
        return Err(Error::InfeasiblePrimaryConstraint {
            baseline_outage: baseline,
            phi: cfg.phi,
        });
    }
    let lambda_tr = 1.0 / cfg.inv_lambda_tr;
    let lambda_sr = 1.0 / worst_case_inv_lambda_sr(cfg);
    let g0 = cfg.gamma0();
    let slack = (1.0 - baseline) / (1.0 - cfg.phi) - 1.0;
    Ok((cfg.p_t * lambda_sr / (lambda_tr * g0) * slack).max(0.0))
}

/// Result of power control where infeasibility is a flag rather than an error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerControl {
    pub p_s: f64,
    pub feasible: bool,
}

/// Like [`secondary_power`], but an infeasible constraint yields `P_S = 0`.
pub fn solve_power(cfg: &SystemConfig) -> PowerControl {
    match secondary_power(cfg) {
        Ok(p_s) => PowerControl { p_s, feasible: true },
        Err(_) => PowerControl {
            p_s: 0.0,
            feasible: false,
        },
    }
}

/// Monte Carlo estimate of the primary outage at power `p_s` over the
/// worst-case interference link. Returns `(estimate, standard error)`.
pub fn primary_outage_monte_carlo(cfg: &SystemConfig, p_s: f64, n: usize, seed: u64) -> (f64, f64) {
    let inv_sr = worst_case_inv_lambda_sr(cfg);
    let g0 = cfg.gamma0();
    let outages: usize = rng::chunks(n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(chunk, len)| {
            let mut rng = rng::chunk_rng(seed, chunk);
            (0..len)
                .filter(|_| {
                    let h_tr = complex_gaussian(&mut rng, cfg.inv_lambda_tr);
                    let h_sr = complex_gaussian(&mut rng, inv_sr);
                    cfg.p_t * h_tr.norm_sqr() < g0 * (p_s * h_sr.norm_sqr() + cfg.n0)
                })
                .count()
        })
        .sum();
    let p = outages as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;

    fn simple_cfg(p_t: f64, n0: f64, g0: f64, phi: f64) -> SystemConfig {
        let mut cfg = SystemConfig::iid(1, 1.0, 0.0);
        cfg.p_t = p_t;
        cfg.n0 = n0;
        cfg.inv_lambda_tr = 1.0;
        cfg.inv_lambda_sr = vec![1.0];
        cfg.r_primary = (1.0 + g0).log2();
        cfg.phi = phi;
        cfg
    }

    #[test]
    fn sinr_examples() {
        let c = |x: f64| Complex64::new(x.sqrt(), 0.0);
        assert!((sinr(2.0, c(3.0), 1.0, c(4.0), 1.0).unwrap() - 1.2).abs() < 1e-12);
        assert!((sinr(1.0, c(1.0), 0.0, c(5.0), 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(sinr(1.0, Complex64::new(0.0, 0.0), 1.0, c(1.0), 1.0).unwrap(), 0.0);
        assert!(matches!(
            sinr(1.0, c(1.0), 0.0, c(1.0), 0.0),
            Err(Error::DegenerateDenominator)
        ));
    }

    #[test]
    fn secrecy_rate_examples() {
        assert!((secrecy_rate(3.0, 1.0) - 1.0).abs() < 1e-15);
        assert_eq!(secrecy_rate(1.0, 3.0), 0.0);
        assert_eq!(secrecy_rate(2.5, 2.5), 0.0);
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = SystemConfig::iid(4, 0.8, 8.0);
        let a = sample_channels(&cfg, &mut rng_from_seed(42));
        let b = sample_channels(&cfg, &mut rng_from_seed(42));
        assert_eq!(a, b);
        let c = sample_channels(&cfg, &mut rng_from_seed(43));
        assert_ne!(a, c);
    }

    #[test]
    fn channel_moments_match_configured_variances() {
        let mut cfg = SystemConfig::iid(2, 1.0, 8.0);
        cfg.inv_lambda_sd = vec![1.0, 4.0];
        cfg.inv_lambda_td = 0.25;
        let n = 1_000_000;
        let mut rng = rng_from_seed(7);
        let (mut sd0, mut sd1, mut tr, mut te) = (0.0, 0.0, 0.0, 0.0);
        let (mut td_re, mut td_re2) = (0.0, 0.0);
        for _ in 0..n {
            let r = sample_channels(&cfg, &mut rng);
            sd0 += r.h_sd[0].norm_sqr();
            sd1 += r.h_sd[1].norm_sqr();
            tr += r.h_tr.norm_sqr();
            te += r.h_te.norm_sqr();
            td_re += r.h_td.re;
            td_re2 += r.h_td.re * r.h_td.re;
        }
        let n = n as f64;
        // |h|^2 is exponential, so its standard deviation equals its mean.
        let check = |sum: f64, mean: f64| {
            let tol = 3.0 * mean / n.sqrt();
            assert!((sum / n - mean).abs() < tol, "{} vs {mean}", sum / n);
        };
        check(sd0, 1.0);
        check(sd1, 4.0);
        check(tr, cfg.inv_lambda_tr);
        check(te, cfg.inv_lambda_te);
        assert!((sd0 / n - 1.0).abs() < 0.01);
        let var_re = td_re2 / n - (td_re / n).powi(2);
        assert!((var_re - 0.125).abs() < 0.125 * 0.02, "{var_re}");
    }

    #[test]
    fn infeasible_when_noise_alone_violates_constraint() {
        let cfg = simple_cfg(1.0, 1.0, 1.0, 0.5);
        match secondary_power(&cfg) {
            Err(Error::InfeasiblePrimaryConstraint { baseline_outage, .. }) => {
                assert!((baseline_outage - (1.0 - (-1f64).exp())).abs() < 1e-12);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
        let pc = solve_power(&cfg);
        assert_eq!(pc, PowerControl { p_s: 0.0, feasible: false });
        let (mc, se) = primary_outage_monte_carlo(&cfg, 0.0, 200_000, 3);
        assert!((mc - 0.632_120_558_8).abs() < 4.0 * se);
    }

    #[test]
    fn noiseless_power_matches_closed_form_and_oracle() {
        let cfg = simple_cfg(1.0, 0.0, 1.0, 0.1);
        let p_s = secondary_power(&cfg).unwrap();
        assert!((p_s - 1.0 / 9.0).abs() < 1e-12);
        let (mc, _) = primary_outage_monte_carlo(&cfg, p_s, 1_000_000, 11);
        assert!((mc - 0.1).abs() < 0.003, "{mc}");
    }

    #[test]
    fn iid_power_at_8db_meets_constraint_by_monte_carlo() {
        let cfg = SystemConfig::iid(4, 0.8, 8.0);
        let p_s = secondary_power(&cfg).unwrap();
        assert!((primary_outage(&cfg, p_s) - cfg.phi).abs() < 1e-12);
        let (mc, se) = primary_outage_monte_carlo(&cfg, p_s, 1_000_000, 5);
        assert!((mc - cfg.phi).abs() <= 3.0 * se, "{mc} +- {se}");
    }

    #[test]
    fn power_uses_most_restrictive_interference_link() {
        let mut cfg = SystemConfig::iid(3, 1.0, 8.0);
        let reference = secondary_power(&cfg).unwrap();
        cfg.inv_lambda_sr[1] *= 2.0;
        let tighter = secondary_power(&cfg).unwrap();
        assert!(tighter < reference);
        cfg.inv_lambda_sr = vec![cfg.inv_lambda_sr[1]; 3];
        assert!((secondary_power(&cfg).unwrap() - tighter).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn secrecy_rate_monotone(gd in 0.0f64..50.0, ge in 0.0f64..50.0, bump in 0.0f64..10.0) {
            let base = secrecy_rate(gd, ge);
            prop_assert!(base >= 0.0);
            prop_assert!(secrecy_rate(gd + bump, ge) >= base);
            prop_assert!(secrecy_rate(gd, ge + bump) <= base);
        }

        #[test]
        fn power_monotone_in_threshold_and_phi(
            gt_db in 4.0f64..20.0,
            r0 in 0.1f64..1.0,
            dr in 0.0f64..0.5,
            phi in 0.05f64..0.5,
            dphi in 0.0f64..0.3,
        ) {
            let mut cfg = SystemConfig::iid(2, 1.0, gt_db);
            cfg.r_primary = r0;
            cfg.phi = phi;
            let base = solve_power(&cfg);
            let mut harder = cfg.clone();
            harder.r_primary = r0 + dr;
            let h = solve_power(&harder);
            if h.feasible {
                prop_assert!(base.feasible);
                prop_assert!(h.p_s <= base.p_s * (1.0 + 1e-12));
            }
            let mut looser = cfg.clone();
            looser.phi = (phi + dphi).min(0.95);
            let l = solve_power(&looser);
            if base.feasible {
                prop_assert!(l.feasible);
                prop_assert!(l.p_s >= base.p_s * (1.0 - 1e-12));
            }
        }
    }
}
