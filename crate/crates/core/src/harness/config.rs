use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algorithms::OuterSpec;
use crate::rng::derive_seed;
use crate::tasks::SuiteDescriptor;
use crate::theory::BoundId;
use crate::{MetaError, Result};

/// Either an explicit seed list or `count` seeds derived from `base_seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Repetitions {
    Seeds { seeds: Vec<u64> },
    Count { count: usize, base_seed: u64 },
}

impl Repetitions {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            Repetitions::Seeds { seeds } => seeds.clone(),
            Repetitions::Count { count, base_seed } => (0..*count as u64).map(|i| derive_seed(*base_seed, i)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Repetitions::Seeds { seeds } => seeds.len(),
            Repetitions::Count { count, .. } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for Repetitions {
    fn default() -> Self {
        Repetitions::Count { count: 1, base_seed: 0 }
    }
}

/// Which bounds to compare the averaged trajectory against.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checks {
    #[serde(default)]
    pub thm41: bool,
    #[serde(default)]
    pub thm42: bool,
    #[serde(default)]
    pub thm54: bool,
    #[serde(default)]
    pub thm56: bool,
}

impl Checks {
    pub fn enabled(&self) -> Vec<BoundId> {
        let flags = [self.thm41, self.thm42, self.thm54, self.thm56];
        BoundId::ALL.iter().zip(flags).filter(|(_, on)| *on).map(|(id, _)| *id).collect()
    }

    pub fn set(&mut self, id: BoundId, on: bool) {
        match id {
            BoundId::FoMamlInexactSgd => self.thm41 = on,
            BoundId::InexactOracleSgd => self.thm42 = on,
            BoundId::PerturbedIterate => self.thm54 = on,
            BoundId::Nonconvex => self.thm56 = on,
        }
    }
}

fn default_true() -> bool {
    true
}

/// One experiment: a suite, a method and its repetitions.
///
/// `outer.seed` is replaced by the repetition seed of each run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub alpha: f64,
    /// Directory for this experiment's files, relative to the output root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_stride: Option<usize>,
    /// Write wall-clock times; when off `wall_ns` is 0 and runs are byte-reproducible.
    #[serde(default = "default_true")]
    pub timing: bool,
    pub suite: SuiteDescriptor,
    pub outer: OuterSpec,
    #[serde(default)]
    pub repetitions: Repetitions,
    #[serde(default)]
    pub checks: Checks,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| MetaError::Toml(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| MetaError::Toml(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name == "." || self.name == ".." {
            return Err(MetaError::InvalidConfig(format!("name must be a plain file name, got {:?}", self.name)));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(MetaError::InvalidConfig(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.repetitions.is_empty() {
            return Err(MetaError::InvalidConfig("repetitions must be >= 1".into()));
        }
        let n = match &self.suite {
            SuiteDescriptor::Quadratic { n, .. } | SuiteDescriptor::Logistic { n, .. } => *n,
            SuiteDescriptor::ExplicitQuadratic { curvatures, .. } => curvatures.len(),
        };
        self.outer.validate(n)?;
        if self.checks.thm56 && self.outer.iterations == 0 {
            return Err(MetaError::InvalidConfig("the stationarity check needs iterations >= 1".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.repetitions.seeds()
    }
}
