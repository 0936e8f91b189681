use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::DataForm;
use crate::error::{Error, Result};
use crate::ingest::SchemaConfig;
use crate::models::{ClassifierKind, Hyperparameters};
use crate::preprocess::StdConvention;

/// Where scalers and reducers are fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeakageMode {
    /// Refit on each CV training part and on the training split only.
    #[default]
    Strict,
    /// Fit once on the full cleaned dataset before splitting.
    Paper,
}

impl fmt::Display for LeakageMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LeakageMode::Strict => "strict",
            LeakageMode::Paper => "paper",
        })
    }
}

impl FromStr for LeakageMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(LeakageMode::Strict),
            "paper" => Ok(LeakageMode::Paper),
            _ => Err(Error::InvalidParameter(format!("unknown leakage mode `{s}`"))),
        }
    }
}

/// Data form that PCA and ICA are fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReduceBase {
    #[default]
    Clean,
    Stand,
}

impl FromStr for ReduceBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clean" => Ok(ReduceBase::Clean),
            "stand" => Ok(ReduceBase::Stand),
            _ => Err(Error::InvalidParameter(format!("unknown reduction base `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IcaSettings {
    /// Defaults to a sub-seed of the master seed.
    pub seed: Option<u64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IcaSettings {
    fn default() -> Self {
        Self {
            seed: None,
            tol: 1e-4,
            max_iter: 200,
        }
    }
}

/// Everything that determines a grid run's numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub schema: SchemaConfig,
    pub k_sigma: f64,
    pub std_convention: StdConvention,
    pub pca_components: usize,
    pub reduce_on: ReduceBase,
    pub ica: IcaSettings,
    pub hyperparameters: Hyperparameters,
    pub train_fraction: f64,
    pub cv_folds: usize,
    pub cv_shuffle: bool,
    pub cv_stratified: bool,
    pub leakage_mode: LeakageMode,
    pub master_seed: u64,
    /// Worker threads for grid cells. Results do not depend on it.
    pub jobs: usize,
    pub forms: Vec<DataForm>,
    pub models: Vec<ClassifierKind>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            schema: SchemaConfig::default(),
            k_sigma: 3.0,
            std_convention: StdConvention::Population,
            pca_components: 10,
            reduce_on: ReduceBase::Clean,
            ica: IcaSettings::default(),
            hyperparameters: Hyperparameters::default(),
            train_fraction: 0.8,
            cv_folds: 10,
            cv_shuffle: true,
            cv_stratified: true,
            leakage_mode: LeakageMode::Strict,
            master_seed: 42,
            jobs: 1,
            forms: DataForm::ALL.to_vec(),
            models: ClassifierKind::ALL.to_vec(),
        }
    }
}

/// Seeds derived from the master seed by fixed offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPlan {
    pub master: u64,
    pub split: u64,
    pub folds: u64,
    pub ica: u64,
    pub models: u64,
}

impl PipelineConfig {
    pub fn seeds(&self) -> SeedPlan {
        let m = self.master_seed;
        SeedPlan {
            master: m,
            split: m.wrapping_add(1),
            folds: m.wrapping_add(2),
            ica: self.ica.seed.unwrap_or(m.wrapping_add(3)),
            models: m.wrapping_add(4),
        }
    }

    pub fn check(&self) -> Result<()> {
        self.schema.check()?;
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.k_sigma > 0.0) {
            return bad(format!("k_sigma must be positive, got {}", self.k_sigma));
        }
        if self.pca_components == 0 {
            return bad("pca_components must be ≥ 1".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction must be in (0, 1), got {}", self.train_fraction));
        }
        if self.cv_folds < 2 {
            return Err(Error::BadK(self.cv_folds));
        }
        if !(self.ica.tol > 0.0) || self.ica.max_iter == 0 {
            return bad("ICA needs tol > 0 and max_iter ≥ 1".into());
        }
        if self.jobs == 0 {
            return bad("jobs must be ≥ 1".into());
        }
        if self.forms.is_empty() || self.models.is_empty() {
            return bad("at least one form and one model are required".into());
        }
        self.hyperparameters.check()
    }
}
