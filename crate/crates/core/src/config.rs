//! Physical-layer parameters of the cognitive small-cell network.

use crate::error::{Error, Result};

/// Converts a power ratio from dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// All physical and channel parameters, in linear scale.
///
/// Variances are the `1/λ` values of the corresponding Rayleigh links:
/// `sd`, `se`, `sr` are per secondary transmitter (towards destination,
/// eavesdropper and primary receiver), `tr`, `td`, `te` belong to the
/// primary transmitter.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub k: usize,
    pub inv_lambda_sd: Vec<f64>,
    pub inv_lambda_se: Vec<f64>,
    pub inv_lambda_sr: Vec<f64>,
    pub inv_lambda_tr: f64,
    pub inv_lambda_td: f64,
    pub inv_lambda_te: f64,
    /// Primary transmit power.
    pub p_t: f64,
    /// Noise variance.
    pub n0: f64,
    /// Primary outage constraint.
    pub phi: f64,
    /// Primary threshold rate in bits/s/Hz.
    pub r_primary: f64,
    /// Secrecy threshold rate in bits/s/Hz.
    pub r_secrecy: f64,
    /// Backhaul reliabilities.
    pub delta: Vec<f64>,
}

impl SystemConfig {
    /// The IID channel set used throughout the experiments:
    /// `(1/λ_tr, 1/λ_td, 1/λ_sd, 1/λ_sr, 1/λ_se, 1/λ_te) = (3, -6, 3, -3, -3, 6)` dB,
    /// `Φ = 0.1`, both threshold rates 0.5, `N_0 = 1`.
    pub fn iid(k: usize, delta: f64, gamma_t_db: f64) -> Self {
        Self {
            k,
            inv_lambda_sd: vec![db_to_linear(3.0); k],
            inv_lambda_se: vec![db_to_linear(-3.0); k],
            inv_lambda_sr: vec![db_to_linear(-3.0); k],
            inv_lambda_tr: db_to_linear(3.0),
            inv_lambda_td: db_to_linear(-6.0),
            inv_lambda_te: db_to_linear(6.0),
            p_t: db_to_linear(gamma_t_db),
            n0: 1.0,
            phi: 0.1,
            r_primary: 0.5,
            r_secrecy: 0.5,
            delta: vec![delta; k],
        }
    }

    /// The INID channel sets, defined for `K = 4` and `K = 12`.
    ///
    /// For `K = 12` the reliabilities run from 0.78 to 1.00 in steps of 0.02.
    pub fn inid(k: usize, gamma_t_db: f64) -> Result<Self> {
        let (sd_db, se_db, delta): (Vec<f64>, Vec<f64>, Vec<f64>) = match k {
            4 => (
                vec![0.0, 3.0, 6.0, 9.0],
                vec![-6.0, -3.0, 0.0, 3.0],
                vec![0.90, 0.92, 0.94, 0.96],
            ),
            12 => (
                (0..12).map(|i| -12.0 + 3.0 * i as f64).collect(),
                (0..12).map(|i| -21.0 + 3.0 * i as f64).collect(),
                (0..12).map(|i| 0.78 + 0.02 * i as f64).collect(),
            ),
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "INID preset exists for K = 4 and K = 12 only, got {k}"
                )))
            }
        };
        let mut cfg = Self::iid(k, 1.0, gamma_t_db);
        cfg.inv_lambda_sd = sd_db.into_iter().map(db_to_linear).collect();
        cfg.inv_lambda_se = se_db.into_iter().map(db_to_linear).collect();
        cfg.delta = delta;
        Ok(cfg)
    }

    /// `P_T / N_0` in dB.
    pub fn gamma_t_db(&self) -> f64 {
        linear_to_db(self.p_t / self.n0)
    }

    /// Sets `P_T` so that `P_T / N_0` equals `gamma_t_db`.
    pub fn with_gamma_t_db(mut self, gamma_t_db: f64) -> Self {
        self.p_t = db_to_linear(gamma_t_db) * self.n0;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = vec![delta; self.k];
        self
    }

    /// Primary SINR threshold `Γ_0 = 2^{r_primary} - 1`.
    pub fn gamma0(&self) -> f64 {
        2f64.powf(self.r_primary) - 1.0
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.k == 0 {
            return bad("K must be at least 1".into());
        }
        for (name, v) in [
            ("inv_lambda_sd", &self.inv_lambda_sd),
            ("inv_lambda_se", &self.inv_lambda_se),
            ("inv_lambda_sr", &self.inv_lambda_sr),
            ("delta", &self.delta),
        ] {
            if v.len() != self.k {
                return bad(format!("{name} has {} entries, expected K = {}", v.len(), self.k));
            }
        }
        let variances = self
            .inv_lambda_sd
            .iter()
            .chain(&self.inv_lambda_se)
            .chain(&self.inv_lambda_sr)
            .chain([&self.inv_lambda_tr, &self.inv_lambda_td, &self.inv_lambda_te]);
        for &v in variances {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("channel variances must be positive and finite, got {v}"));
            }
        }
        if !(self.phi > 0.0 && self.phi < 1.0) {
            return bad(format!("phi must lie in (0, 1), got {}", self.phi));
        }
        if !(self.p_t.is_finite() && self.p_t > 0.0) {
            return bad(format!("p_t must be positive, got {}", self.p_t));
        }
        if !(self.n0.is_finite() && self.n0 >= 0.0) {
            return bad(format!("n0 must be non-negative, got {}", self.n0));
        }
        if !(self.r_primary.is_finite() && self.r_primary > 0.0) {
            return bad(format!("r_primary must be positive, got {}", self.r_primary));
        }
        if !(self.r_secrecy.is_finite() && self.r_secrecy >= 0.0) {
            return bad(format!("r_secrecy must be non-negative, got {}", self.r_secrecy));
        }
        if let Some(d) = self.delta.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            return bad(format!("backhaul reliabilities must lie in [0, 1], got {d}"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_conversion() {
        assert_eq!(db_to_linear(0.0), 1.0);
        assert!((db_to_linear(10.0) - 10.0).abs() < 1e-12);
        assert!((db_to_linear(-6.0) - 0.251_188_643_150_958).abs() < 1e-12);
        assert!((linear_to_db(db_to_linear(8.0)) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn presets_validate() {
        SystemConfig::iid(4, 0.8, 8.0).validate().unwrap();
        let inid = SystemConfig::inid(12, 8.0).unwrap();
        inid.validate().unwrap();
        assert!((inid.delta[0] - 0.78).abs() < 1e-12);
        assert!((inid.delta[11] - 1.0).abs() < 1e-12);
        assert!((linear_to_db(inid.inv_lambda_sd[11]) - 21.0).abs() < 1e-9);
        assert!((linear_to_db(inid.inv_lambda_se[0]) + 21.0).abs() < 1e-9);
        assert!(SystemConfig::inid(5, 8.0).is_err());
    }

    #[test]
    fn gamma_t_round_trip() {
        let cfg = SystemConfig::iid(2, 0.9, 8.0);
        assert!((cfg.gamma_t_db() - 8.0).abs() < 1e-12);
        assert!((cfg.gamma0() - (2f64.sqrt() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid() {
        let base = SystemConfig::iid(3, 0.8, 8.0);
        let mut c = base.clone();
        c.phi = 1.0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.delta[1] = 1.2;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.inv_lambda_se.pop();
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.inv_lambda_td = 0.0;
        assert!(c.validate().is_err());
        let mut c = base;
        c.k = 0;
        assert!(c.validate().is_err());
    }
}
