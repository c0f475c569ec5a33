//! Unreliable wireless backhaul modelled as independent Bernoulli links.

use rand::Rng;

/// Indicator `I_k` per transmitter; `true` means the backhaul is up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackhaulState {
    indicators: Vec<bool>,
}

impl BackhaulState {
    pub fn new(indicators: Vec<bool>) -> Self {
        Self { indicators }
    }

    pub fn all_active(k: usize) -> Self {
        Self::new(vec![true; k])
    }

    pub fn k(&self) -> usize {
        self.indicators.len()
    }

    /// Whether transmitter `idx` (0-based) has an active backhaul.
    pub fn is_active(&self, idx: usize) -> bool {
        self.indicators[idx]
    }

    pub fn indicators(&self) -> &[bool] {
        &self.indicators
    }

    pub fn any_active(&self) -> bool {
        self.indicators.iter().any(|&b| b)
    }

    pub fn active_set(&self) -> ActiveSet {
        ActiveSet::from_indicators(&self.indicators)
    }
}

/// A subset of `{1..K}` stored as a bit mask: bit `k-1` is transmitter `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ActiveSet(pub u64);

impl ActiveSet {
    pub const EMPTY: ActiveSet = ActiveSet(0);

    /// Builds a set from 1-based transmitter indices.
    pub fn from_indices(indices: &[usize]) -> Self {
        ActiveSet(indices.iter().fold(0, |m, &i| {
            assert!((1..=64).contains(&i), "transmitter index {i} out of range");
            m | 1 << (i - 1)
        }))
    }

    pub fn from_indicators(ind: &[bool]) -> Self {
        ActiveSet(
            ind.iter()
                .enumerate()
                .filter(|(_, &b)| b)
                .fold(0, |m, (i, _)| m | 1 << i),
        )
    }

    /// Whether transmitter `idx` (0-based) belongs to the set.
    pub fn contains(self, idx: usize) -> bool {
        self.0 >> idx & 1 == 1
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// All `2^K` subsets of `{1..K}` in mask order.
    pub fn all(k: usize) -> impl Iterator<Item = ActiveSet> {
        assert!(k < 64);
        (0..1u64 << k).map(ActiveSet)
    }
}

/// Draws each indicator independently with `P(I_k = 1) = delta[k]`.
pub fn sample_backhaul<R: Rng + ?Sized>(delta: &[f64], rng: &mut R) -> BackhaulState {
    BackhaulState::new(delta.iter().map(|&d| rng.random::<f64>() < d).collect())
}

/// `P[S] = prod_{i in S} delta_i * prod_{j not in S} (1 - delta_j)`.
pub fn active_set_probability(delta: &[f64], active: ActiveSet) -> f64 {
    delta
        .iter()
        .enumerate()
        .map(|(i, &d)| if active.contains(i) { d } else { 1.0 - d })
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use std::collections::HashMap;

    #[test]
    fn degenerate_reliabilities() {
        let mut rng = rng_from_seed(1);
        for _ in 0..1000 {
            assert!(sample_backhaul(&[1.0; 5], &mut rng).indicators().iter().all(|&b| b));
            assert!(!sample_backhaul(&[0.0; 5], &mut rng).any_active());
        }
    }

    #[test]
    fn activation_rate() {
        let mut rng = rng_from_seed(2);
        let n = 1_000_000;
        let mut hits = [0usize; 4];
        for _ in 0..n {
            let s = sample_backhaul(&[0.8; 4], &mut rng);
            for (h, &b) in hits.iter_mut().zip(s.indicators()) {
                *h += b as usize;
            }
        }
        for h in hits {
            let rate = h as f64 / n as f64;
            assert!((rate - 0.8).abs() < 0.002, "{rate}");
        }
    }

    #[test]
    fn probability_examples() {
        let d = [0.8; 4];
        let p = active_set_probability(&d, ActiveSet::from_indices(&[1, 2]));
        assert!((p - 0.0256).abs() < 1e-15);
        assert!((active_set_probability(&d, ActiveSet::EMPTY) - 0.0016).abs() < 1e-15);
    }

    #[test]
    fn probabilities_sum_to_one() {
        for k in 1..=12 {
            let delta: Vec<f64> = (0..k).map(|i| 0.05 + 0.9 * i as f64 / k as f64).collect();
            let total: f64 = ActiveSet::all(k).map(|s| active_set_probability(&delta, s)).sum();
            assert!((total - 1.0).abs() < 1e-12, "K={k}: {total}");
        }
    }

    #[test]
    fn mask_convention() {
        let s = ActiveSet::from_indices(&[1, 3]);
        assert_eq!(s.0, 0b101);
        assert!(s.contains(0) && !s.contains(1) && s.contains(2));
        assert_eq!(s.len(), 2);
        let st = BackhaulState::new(vec![true, false, true]);
        assert_eq!(st.active_set(), s);
    }

    #[test]
    fn empirical_subset_frequencies() {
        let delta = [0.9, 0.6, 0.3];
        let n = 400_000;
        let mut rng = rng_from_seed(9);
        let mut counts: HashMap<u64, usize> = HashMap::new();
        for _ in 0..n {
            *counts.entry(sample_backhaul(&delta, &mut rng).active_set().0).or_default() += 1;
        }
        for s in ActiveSet::all(3) {
            let p = active_set_probability(&delta, s);
            let freq = *counts.get(&s.0).unwrap_or(&0) as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() <= 3.0 * se + 1e-12, "{s:?}: {freq} vs {p}");
        }
    }
}
