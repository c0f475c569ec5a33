//! Experiment configuration files.
//!
//! TOML with dotted keys; every key is optional and unknown keys are
//! rejected. Channel variances are given in dB, and per-transmitter values
//! accept either one number (shared by all transmitters) or a list of `K`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::config::{db_to_linear, SystemConfig};
use crate::error::{Error, Result};
use crate::learners::{ModelKind, TrainConfig};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum PerTransmitter {
    One(f64),
    Many(Vec<f64>),
}

impl PerTransmitter {
    fn expand(&self, k: usize, key: &str) -> Result<Vec<f64>> {
        match self {
            PerTransmitter::One(v) => Ok(vec![*v; k]),
            PerTransmitter::Many(v) if v.len() == k => Ok(v.clone()),
            PerTransmitter::Many(v) => Err(Error::InvalidConfig(format!(
                "{key} has {} entries, expected K = {k}",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    #[serde(default)]
    system: RawSystem,
    #[serde(default)]
    channel: RawChannel,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    data: RawData,
    models: Option<Vec<String>>,
    #[serde(default)]
    train: toml::Table,
    #[serde(default)]
    experiment: RawExperiment,
    #[serde(default)]
    misclass: RawMisclass,
    #[serde(default)]
    power: RawPower,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    preset: Option<String>,
    k: Option<usize>,
    delta: Option<PerTransmitter>,
    phi: Option<f64>,
    n0: Option<f64>,
    r_primary: Option<f64>,
    r_secrecy: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    inv_lambda_sd_db: Option<PerTransmitter>,
    inv_lambda_se_db: Option<PerTransmitter>,
    inv_lambda_sr_db: Option<PerTransmitter>,
    inv_lambda_tr_db: Option<f64>,
    inv_lambda_td_db: Option<f64>,
    inv_lambda_te_db: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    gamma_t_db: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawData {
    m_train: Option<usize>,
    m_test: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMisclass {
    gamma_t_db: Option<f64>,
    m_test: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPower {
    samples: Option<usize>,
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Physical parameters; `p_t` is overwritten by every sweep point.
    pub system: SystemConfig,
    pub gamma_t_db: Vec<f64>,
    pub m_train: usize,
    pub m_test: usize,
    pub models: Vec<ModelKind>,
    /// Training settings per model kind.
    pub train: BTreeMap<ModelKind, TrainConfig>,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Operating point and test-set size of the misclassification study.
    pub misclass_gamma_t_db: f64,
    pub misclass_m_test: usize,
    /// Monte Carlo draws per point of the power check.
    pub power_samples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::from_toml("").expect("defaults are valid")
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawFile = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let sweep = raw
            .sweep
            .gamma_t_db
            .unwrap_or_else(|| (0..=8).map(|i| 2.0 * i as f64).collect());
        let first_gamma = sweep.first().copied().unwrap_or(0.0);

        let k = raw.system.k.unwrap_or(4);
        let mut system = match raw.system.preset.as_deref().unwrap_or("iid") {
            "iid" => SystemConfig::iid(k, 0.8, first_gamma),
            "inid" => SystemConfig::inid(k, first_gamma)?,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "system.preset must be \"iid\" or \"inid\", got \"{other}\""
                )))
            }
        };
        let s = &raw.system;
        if let Some(d) = &s.delta {
            system.delta = d.expand(k, "system.delta")?;
        }
        system.phi = s.phi.unwrap_or(system.phi);
        system.r_primary = s.r_primary.unwrap_or(system.r_primary);
        system.r_secrecy = s.r_secrecy.unwrap_or(system.r_secrecy);
        if let Some(n0) = s.n0 {
            system.n0 = n0;
            system = system.with_gamma_t_db(first_gamma);
        }
        let c = &raw.channel;
        for (field, target, key) in [
            (&c.inv_lambda_sd_db, &mut system.inv_lambda_sd, "channel.inv_lambda_sd_db"),
            (&c.inv_lambda_se_db, &mut system.inv_lambda_se, "channel.inv_lambda_se_db"),
            (&c.inv_lambda_sr_db, &mut system.inv_lambda_sr, "channel.inv_lambda_sr_db"),
        ] {
            if let Some(v) = field {
                *target = v.expand(k, key)?.into_iter().map(db_to_linear).collect();
            }
        }
        for (field, target) in [
            (c.inv_lambda_tr_db, &mut system.inv_lambda_tr),
            (c.inv_lambda_td_db, &mut system.inv_lambda_td),
            (c.inv_lambda_te_db, &mut system.inv_lambda_te),
        ] {
            if let Some(db) = field {
                *target = db_to_linear(db);
            }
        }

        let models = match raw.models {
            Some(list) => list.iter().map(|m| m.parse()).collect::<Result<Vec<ModelKind>>>()?,
            None => ModelKind::ALL.to_vec(),
        };
        let train = resolve_train(&raw.train)?;
        let m_test = raw.data.m_test.unwrap_or(200_000);
        let ec = Self {
            system,
            gamma_t_db: sweep,
            m_train: raw.data.m_train.unwrap_or(20_000),
            m_test,
            models,
            train,
            seed: raw.experiment.seed.unwrap_or(1),
            out_dir: raw.experiment.out_dir.unwrap_or_else(|| PathBuf::from("out")),
            misclass_gamma_t_db: raw.misclass.gamma_t_db.unwrap_or(8.0),
            misclass_m_test: raw.misclass.m_test.unwrap_or(m_test),
            power_samples: raw.power.samples.unwrap_or(1_000_000),
        };
        ec.validate()?;
        Ok(ec)
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.gamma_t_db.is_empty() {
            return bad("sweep.gamma_t_db must not be empty");
        }
        if self.gamma_t_db.iter().chain([&self.misclass_gamma_t_db]).any(|g| !g.is_finite()) {
            return bad("operating points must be finite");
        }
        if self.m_train == 0 || self.m_test == 0 || self.misclass_m_test == 0 || self.power_samples == 0 {
            return bad("dataset and sample sizes must be at least 1");
        }
        for tc in self.train.values() {
            tc.validate()?;
        }
        Ok(())
    }

    /// System parameters at one operating point.
    pub fn system_at(&self, gamma_t_db: f64) -> SystemConfig {
        self.system.clone().with_gamma_t_db(gamma_t_db)
    }

    pub fn train_config(&self, kind: ModelKind) -> TrainConfig {
        self.train.get(&kind).cloned().unwrap_or_default()
    }

    /// Short SHA-256 digest of everything that influences results.
    ///
    /// The output directory is excluded.
    pub fn hash(&self) -> String {
        let canonical = format!(
            "{:?}|{:?}|{}|{}|{:?}|{:?}|{}|{:?}|{}|{}",
            self.system,
            self.gamma_t_db,
            self.m_train,
            self.m_test,
            self.models,
            self.train,
            self.seed,
            self.misclass_gamma_t_db,
            self.misclass_m_test,
            self.power_samples
        );
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// `train.*` holds the shared settings; `train.<model>.*` overrides them.
fn resolve_train(table: &toml::Table) -> Result<BTreeMap<ModelKind, TrainConfig>> {
    let mut base = toml::Table::new();
    let mut overrides: BTreeMap<ModelKind, toml::Table> = BTreeMap::new();
    for (key, value) in table {
        match (key.parse::<ModelKind>(), value) {
            (Ok(kind), toml::Value::Table(t)) if key == kind.name() => {
                overrides.insert(kind, t.clone());
            }
            _ => {
                base.insert(key.clone(), value.clone());
            }
        }
    }
    let parse = |t: toml::Table, scope: &str| -> Result<TrainConfig> {
        let tc: TrainConfig = toml::Value::Table(t)
            .try_into()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(format!("{scope}: {}", e.message())))?;
        tc.validate()?;
        Ok(tc)
    };
    parse(base.clone(), "train")?;
    let mut out = BTreeMap::new();
    for kind in ModelKind::ALL {
        let mut merged = base.clone();
        if let Some(o) = overrides.get(&kind) {
            merged.extend(o.clone());
        }
        out.insert(kind, parse(merged, &format!("train.{kind}"))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::linear_to_db;

    #[test]
    fn defaults() {
        let ec = ExperimentConfig::default();
        assert_eq!(ec.system, SystemConfig::iid(4, 0.8, 0.0));
        assert_eq!(ec.gamma_t_db, vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0]);
        assert_eq!((ec.m_train, ec.m_test), (20_000, 200_000));
        assert_eq!(ec.models.len(), 5);
        assert_eq!(ec.train_config(ModelKind::Lstm), TrainConfig::default());
    }

    #[test]
    fn dotted_keys_and_overrides() {
        let ec = ExperimentConfig::from_toml(
            r#"
            system.k = 4
            system.delta = [0.9, 0.92, 0.94, 0.96]
            channel.inv_lambda_sd_db = [0, 3, 6, 9]
            channel.inv_lambda_te_db = 3
            sweep.gamma_t_db = [4, 8]
            models = ["lstm", "dnn"]
            train.epochs = 5
            train.lstm.learning_rate = 0.01
            experiment.seed = 99
            "#,
        )
        .unwrap();
        assert_eq!(ec.system.delta, vec![0.9, 0.92, 0.94, 0.96]);
        assert!((linear_to_db(ec.system.inv_lambda_sd[3]) - 9.0).abs() < 1e-12);
        assert!((linear_to_db(ec.system.inv_lambda_te) - 3.0).abs() < 1e-12);
        assert_eq!(ec.models, vec![ModelKind::Lstm, ModelKind::Mlp]);
        assert_eq!(ec.train_config(ModelKind::Lstm).learning_rate, 0.01);
        assert_eq!(ec.train_config(ModelKind::Lstm).epochs, 5);
        assert_eq!(ec.train_config(ModelKind::Mlp).learning_rate, 1e-3);
        assert_eq!(ec.seed, 99);
        assert!((ec.system_at(8.0).gamma_t_db() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn inid_preset() {
        let ec = ExperimentConfig::from_toml("system.preset = \"inid\"\nsystem.k = 12").unwrap();
        assert_eq!(ec.system, SystemConfig::inid(12, 0.0).unwrap());
    }

    #[test]
    fn errors() {
        for bad in [
            "system.kk = 4",
            "bogus = 1",
            "train.epochz = 3",
            "train.lstm.nope = 1",
            "sweep.gamma_t_db = []",
            "data.m_train = 0",
            "system.delta = [0.5, 0.5]",
            "models = [\"forest\"]",
            "system.preset = \"inid\"\nsystem.k = 5",
            "system.phi = 2.0",
        ] {
            assert!(ExperimentConfig::from_toml(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn hash_tracks_content_not_output_dir() {
        let a = ExperimentConfig::from_toml("experiment.out_dir = \"a\"").unwrap();
        let b = ExperimentConfig::from_toml("experiment.out_dir = \"b\"").unwrap();
        let c = ExperimentConfig::from_toml("experiment.seed = 2").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 16);
    }
}
