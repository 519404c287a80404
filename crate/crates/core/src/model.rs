//! Trained fingerprint model and its JSON file format.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filter::{BankParams, BitmaskFilter, FilterKind};
use crate::ingest::ProbeBits;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// One boosting round's output: a filter, its threshold and confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakClassifier {
    /// Position of the filter in the bank it was trained from.
    pub filter_index: usize,
    pub filter: BitmaskFilter,
    pub threshold: i32,
    pub confidence: f64,
    /// Weighted training error of the selected (filter, threshold).
    pub training_error: f64,
}

impl WeakClassifier {
    /// Fingerprint bit: `response > threshold`.
    pub fn bit(&self, x: &ProbeBits) -> bool {
        self.filter.response(x) > self.threshold
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub bank: BankParams,
    pub bank_size: usize,
    pub thresholds: Vec<i32>,
    pub allow_repeat: bool,
    pub training_pairs: usize,
    pub pair_seed: u64,
    pub rng: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintModel {
    classifiers: Vec<WeakClassifier>,
    pub metadata: ModelMetadata,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model i/o: {0}")]
    Io(#[from] io::Error),
    #[error("model file is not valid: {0}")]
    Format(String),
    #[error("model format version {found} is not supported (this build reads version {supported})")]
    Version { found: u32, supported: u32 },
    #[error("a model needs at least one classifier")]
    Empty,
}

impl FingerprintModel {
    pub fn new(classifiers: Vec<WeakClassifier>, metadata: ModelMetadata) -> Result<Self, ModelError> {
        if classifiers.is_empty() {
            return Err(ModelError::Empty);
        }
        Ok(FingerprintModel { classifiers, metadata })
    }

    pub fn classifiers(&self) -> &[WeakClassifier] {
        &self.classifiers
    }

    /// Fingerprint length `M`.
    pub fn bits(&self) -> usize {
        self.classifiers.len()
    }

    pub fn confidences(&self) -> impl Iterator<Item = f64> + '_ {
        self.classifiers.iter().map(|c| c.confidence)
    }

    /// Same classifiers with every confidence set to 1.
    pub fn unweighted(&self) -> FingerprintModel {
        let mut m = self.clone();
        for c in &mut m.classifiers {
            c.confidence = 1.0;
        }
        m
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            version: MODEL_FORMAT_VERSION,
            m: self.bits(),
            classifiers: self.classifiers.iter().map(ClassifierRecord::from).collect(),
            metadata: self.metadata.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("model serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        #[derive(Deserialize)]
        struct VersionOnly {
            version: u32,
        }
        let probe: VersionOnly = serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
        if probe.version != MODEL_FORMAT_VERSION {
            return Err(ModelError::Version {
                found: probe.version,
                supported: MODEL_FORMAT_VERSION,
            });
        }
        let file: ModelFile = serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
        if file.m != file.classifiers.len() {
            return Err(ModelError::Format(format!(
                "M is {} but {} classifiers are listed",
                file.m,
                file.classifiers.len()
            )));
        }
        let classifiers = file
            .classifiers
            .into_iter()
            .map(WeakClassifier::try_from)
            .collect::<Result<Vec<_>, _>>()?;
        FingerprintModel::new(classifiers, file.metadata)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

pub fn save_model(path: &Path, model: &FingerprintModel) -> Result<(), ModelError> {
    model.save(path)
}

pub fn load_model(path: &Path) -> Result<FingerprintModel, ModelError> {
    FingerprintModel::load(path)
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    #[serde(rename = "M")]
    m: usize,
    classifiers: Vec<ClassifierRecord>,
    metadata: ModelMetadata,
}

/// Reals are stored as strings with 17 significant digits so they survive
/// any JSON tooling unchanged.
#[derive(Serialize, Deserialize)]
struct ClassifierRecord {
    kind: FilterKind,
    #[serde(rename = "L")]
    length: usize,
    #[serde(rename = "P")]
    prefix: usize,
    #[serde(rename = "S")]
    suffix: usize,
    t: i32,
    confidence: String,
    epsilon: String,
    filter_index: usize,
}

fn exact_decimal(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_real(field: &str, s: &str) -> Result<f64, ModelError> {
    s.parse::<f64>()
        .map_err(|e| ModelError::Format(format!("{field} {s:?}: {e}")))
}

impl From<&WeakClassifier> for ClassifierRecord {
    fn from(c: &WeakClassifier) -> Self {
        ClassifierRecord {
            kind: c.filter.kind(),
            length: c.filter.length(),
            prefix: c.filter.prefix(),
            suffix: c.filter.suffix(),
            t: c.threshold,
            confidence: exact_decimal(c.confidence),
            epsilon: exact_decimal(c.training_error),
            filter_index: c.filter_index,
        }
    }
}

impl TryFrom<ClassifierRecord> for WeakClassifier {
    type Error = ModelError;

    fn try_from(r: ClassifierRecord) -> Result<Self, ModelError> {
        let filter = BitmaskFilter::new(r.kind, r.length, r.prefix).map_err(|e| ModelError::Format(e.to_string()))?;
        if filter.suffix() != r.suffix {
            return Err(ModelError::Format(format!(
                "{filter}: stored suffix {} disagrees with geometry",
                r.suffix
            )));
        }
        Ok(WeakClassifier {
            filter_index: r.filter_index,
            filter,
            threshold: r.t,
            confidence: parse_real("confidence", &r.confidence)?,
            training_error: parse_real("epsilon", &r.epsilon)?,
        })
    }
}
