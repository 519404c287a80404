//! Run configuration: every tunable of the pipeline in one TOML file.
//!
//! Missing keys take the defaults below; command-line flags override the file.
//! The config hash is the SHA-256 of the resolved configuration re-serialised
//! as TOML, so it identifies the effective settings rather than the file text.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::filter::{BankParams, FilterKind};
use crate::train::{ThresholdSet, TrainOptions};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BankConfig {
    pub lengths: Vec<usize>,
    pub stride: usize,
    pub kinds: Vec<FilterKind>,
    /// Keep a seeded random subset of this many filters.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subsample: Option<usize>,
    pub subsample_seed: u64,
}

impl Default for BankConfig {
    fn default() -> Self {
        let p = BankParams::default();
        BankConfig {
            lengths: p.lengths,
            stride: p.stride,
            kinds: p.kinds,
            subsample: None,
            subsample_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    pub min: i32,
    pub max: i32,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig { min: -15, max: 15 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Fingerprint length `M`.
    pub bits: usize,
    pub allow_repeat: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            bits: 16,
            allow_repeat: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairConfig {
    pub matching: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub split_seed: u64,
}

impl Default for PairConfig {
    fn default() -> Self {
        PairConfig {
            matching: 1000,
            train_fraction: 0.6,
            seed: 0,
            split_seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Random device subsets per population size.
    pub repetitions: usize,
    pub seed: u64,
    /// Clustering threshold; when unset the ROC-optimal value is used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<u32>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            repetitions: 10,
            seed: 0,
            tau: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub bank: BankConfig,
    pub thresholds: ThresholdConfig,
    pub train: TrainConfig,
    pub pairs: PairConfig,
    pub eval: EvalConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml(&text).map_err(|e| ConfigError::Parse {
            path: path.to_owned(),
            message: e.message().to_owned(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Hex SHA-256 of the resolved configuration.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.bank.lengths.is_empty() || self.bank.kinds.is_empty() {
            return invalid("bank needs at least one length and one kind".into());
        }
        if self.bank.stride == 0 {
            return invalid("bank.stride must be positive".into());
        }
        if self.thresholds.min > self.thresholds.max {
            return invalid(format!(
                "thresholds.min {} exceeds thresholds.max {}",
                self.thresholds.min, self.thresholds.max
            ));
        }
        if self.train.bits == 0 {
            return invalid("train.bits must be positive".into());
        }
        if self.pairs.matching == 0 {
            return invalid("pairs.matching must be positive".into());
        }
        if !(self.pairs.train_fraction > 0.0 && self.pairs.train_fraction < 1.0) {
            return invalid(format!(
                "pairs.train_fraction {} must lie strictly between 0 and 1",
                self.pairs.train_fraction
            ));
        }
        if self.eval.repetitions == 0 {
            return invalid("eval.repetitions must be positive".into());
        }
        Ok(())
    }

    pub fn bank_params(&self) -> BankParams {
        BankParams {
            lengths: self.bank.lengths.clone(),
            stride: self.bank.stride,
            kinds: self.bank.kinds.clone(),
            subsample: self.bank.subsample.map(|n| (n, self.bank.subsample_seed)),
        }
    }

    pub fn threshold_set(&self) -> Result<ThresholdSet, ConfigError> {
        ThresholdSet::range(self.thresholds.min, self.thresholds.max).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn train_options(&self) -> TrainOptions {
        TrainOptions {
            rounds: self.train.bits,
            allow_repeat: self.train.allow_repeat,
        }
    }
}
