//! Flags, config files and manifests share one flat key set.
//!
//! Every key is optional on input. Flags win over a config file, which wins
//! over built-in defaults. A manifest is the same document with every key
//! filled in from the effective configuration, so feeding it back through
//! `--config` reproduces the run.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anura_core::ingest::SchemaConfig;
use anura_core::preprocess::StdConvention;
use anura_core::{ClassifierKind, DataForm, LeakageMode, PipelineConfig, ReduceBase};
use clap::Args;
use serde::{Deserialize, Serialize};

/// A problem with flags or a config file. Reported with exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Markdown,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Json, Format::Csv, Format::Markdown];

    fn name(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Markdown => "markdown",
        }
    }
}

impl FromStr for Format {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        Format::ALL
            .into_iter()
            .find(|f| f.name() == s || (s == "md" && *f == Format::Markdown))
            .ok_or_else(|| config_err(format!("unknown output format `{s}` (expected json, csv or markdown)")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Settings {
    /// Input CSV: MFCC feature columns plus a species column.
    #[arg(long, value_name = "CSV")]
    pub data: Option<PathBuf>,
    /// Output directory [default: anura-out].
    #[arg(long, value_name = "DIR")]
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    /// Comma-separated output formats: json, csv, markdown [default: all].
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub formats: Option<Vec<String>>,
    /// Worker threads for grid cells. Does not change any result [default: 1].
    #[arg(long, value_name = "N")]
    #[serde(skip_serializing)]
    pub jobs: Option<usize>,

    /// Where scalers and reducers are fitted: strict or paper [default: strict].
    #[arg(long)]
    pub mode: Option<String>,
    /// Master seed; split, fold, ICA and model seeds derive from it [default: 42].
    #[arg(long)]
    pub seed: Option<u64>,

    /// Label column name [default: Species].
    #[arg(long)]
    pub label_column: Option<String>,
    /// Comma-separated columns to ignore [default: Family,Genus,RecordID].
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub drop_columns: Option<Vec<String>>,
    /// Field delimiter [default: ,].
    #[arg(long)]
    pub delimiter: Option<char>,
    /// Whether the first line is a header [default: true].
    #[arg(long, value_name = "BOOL")]
    pub has_header: Option<bool>,

    /// Outlier band half-width in standard deviations [default: 3].
    #[arg(long)]
    pub k_sigma: Option<f64>,
    /// Standard deviation divisor: population or sample [default: population].
    #[arg(long)]
    pub std: Option<String>,
    /// Components kept by PCA and ICA [default: 10].
    #[arg(long)]
    pub pca_components: Option<usize>,
    /// Form PCA and ICA are fitted on: clean or stand [default: clean].
    #[arg(long)]
    pub reduce_on: Option<String>,
    /// ICA seed [default: derived from --seed].
    #[arg(long)]
    pub ica_seed: Option<u64>,
    #[arg(long)]
    pub ica_tol: Option<f64>,
    #[arg(long)]
    pub ica_max_iter: Option<usize>,

    /// Training share of the stratified split [default: 0.8].
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Cross-validation folds [default: 10].
    #[arg(long)]
    pub cv_folds: Option<usize>,
    #[arg(long, value_name = "BOOL")]
    pub cv_shuffle: Option<bool>,
    #[arg(long, value_name = "BOOL")]
    pub cv_stratified: Option<bool>,
    /// Comma-separated data forms: raw, clean, norm, stand, pca, ica [default: all].
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub forms: Option<Vec<String>>,
    /// Comma-separated models: lr, lda, knn, cart, nb, svm [default: all].
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub models: Option<Vec<String>>,

    #[arg(long)]
    pub lr_lambda: Option<f64>,
    #[arg(long)]
    pub lr_max_iter: Option<usize>,
    #[arg(long)]
    pub lr_tol: Option<f64>,
    #[arg(long)]
    pub lr_step_scale: Option<f64>,
    #[arg(long)]
    pub lda_ridge: Option<f64>,
    #[arg(long)]
    pub knn_k: Option<usize>,
    /// Depth limit for CART [default: unlimited].
    #[arg(long)]
    pub cart_max_depth: Option<usize>,
    #[arg(long)]
    pub nb_var_smoothing: Option<f64>,
    #[arg(long)]
    pub svm_c: Option<f64>,
    /// RBF width [default: 1 / (features × mean feature variance)].
    #[arg(long)]
    pub svm_gamma: Option<f64>,
    #[arg(long)]
    pub svm_tol: Option<f64>,
    #[arg(long)]
    pub svm_max_passes: Option<usize>,
    #[arg(long)]
    pub svm_max_iter: Option<usize>,

    // Derived seeds, written to manifests and checked when read back.
    #[arg(skip)]
    pub split_seed: Option<u64>,
    #[arg(skip)]
    pub fold_seed: Option<u64>,
    #[arg(skip)]
    pub model_seed: Option<u64>,
}

macro_rules! merged {
    ($hi:ident, $lo:ident; $($field:ident),* $(,)?) => {
        Settings { $($field: $hi.$field.or($lo.$field)),* }
    };
}

/// Everything a command needs after merging and validation.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub data: PathBuf,
    pub out: PathBuf,
    pub formats: Vec<Format>,
    pub config: PipelineConfig,
}

impl Resolved {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

fn parse_list<T: FromStr>(items: &[String]) -> Result<Vec<T>, T::Err> {
    items.iter().map(|s| s.trim().parse()).collect()
}

impl Settings {
    pub fn from_file(path: &Path) -> anyhow::Result<Settings> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config file {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| config_err(format!("config file {}: {e}", path.display())))
    }

    /// Keys set here win; unset keys fall back to `lower`.
    pub fn over(self, lower: Settings) -> Settings {
        let hi = self;
        let lo = lower;
        merged!(hi, lo;
            data, out, formats, jobs, mode, seed,
            label_column, drop_columns, delimiter, has_header,
            k_sigma, std, pca_components, reduce_on, ica_seed, ica_tol, ica_max_iter,
            train_fraction, cv_folds, cv_shuffle, cv_stratified, forms, models,
            lr_lambda, lr_max_iter, lr_tol, lr_step_scale, lda_ridge, knn_k, cart_max_depth,
            nb_var_smoothing, svm_c, svm_gamma, svm_tol, svm_max_passes, svm_max_iter,
            split_seed, fold_seed, model_seed,
        )
    }

    pub fn schema(&self) -> anyhow::Result<SchemaConfig> {
        let mut schema = SchemaConfig::default();
        if let Some(v) = &self.label_column {
            schema.label_column = v.clone();
        }
        if let Some(v) = &self.drop_columns {
            schema.drop_columns = v.clone();
        }
        if let Some(c) = self.delimiter {
            if !c.is_ascii() {
                return Err(config_err(format!("delimiter `{c}` is not a single ASCII character")));
            }
            schema.delimiter = c as u8;
        }
        if let Some(v) = self.has_header {
            schema.has_header = v;
        }
        schema.check().map_err(|e| config_err(e.to_string()))?;
        Ok(schema)
    }

    pub fn resolve(&self) -> anyhow::Result<Resolved> {
        let data = self.data.clone().ok_or_else(|| config_err("no data file given (use --data)"))?;
        let mut c = PipelineConfig {
            schema: self.schema()?,
            ..PipelineConfig::default()
        };
        let bad = |e: anura_core::Error| config_err(e.to_string());

        macro_rules! set {
            ($($src:ident => $($dst:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$src.clone() { c.$($dst).+ = v; })*
            };
        }
        set!(
            seed => master_seed,
            jobs => jobs,
            k_sigma => k_sigma,
            pca_components => pca_components,
            ica_tol => ica.tol,
            ica_max_iter => ica.max_iter,
            train_fraction => train_fraction,
            cv_folds => cv_folds,
            cv_shuffle => cv_shuffle,
            cv_stratified => cv_stratified,
            lr_lambda => hyperparameters.lr.lambda,
            lr_max_iter => hyperparameters.lr.max_iter,
            lr_tol => hyperparameters.lr.tol,
            lr_step_scale => hyperparameters.lr.step_scale,
            lda_ridge => hyperparameters.lda.ridge,
            knn_k => hyperparameters.knn.k,
            nb_var_smoothing => hyperparameters.nb.var_smoothing,
            svm_c => hyperparameters.svm.c,
            svm_tol => hyperparameters.svm.tol,
            svm_max_passes => hyperparameters.svm.max_passes,
            svm_max_iter => hyperparameters.svm.max_iter,
        );
        c.ica.seed = self.ica_seed;
        c.hyperparameters.cart.max_depth = self.cart_max_depth;
        c.hyperparameters.svm.gamma = self.svm_gamma;
        if let Some(v) = &self.mode {
            c.leakage_mode = v.parse::<LeakageMode>().map_err(bad)?;
        }
        if let Some(v) = &self.std {
            c.std_convention = v.parse::<StdConvention>().map_err(bad)?;
        }
        if let Some(v) = &self.reduce_on {
            c.reduce_on = v.parse::<ReduceBase>().map_err(bad)?;
        }
        if let Some(v) = &self.forms {
            c.forms = parse_list::<DataForm>(v).map_err(bad)?;
        }
        if let Some(v) = &self.models {
            c.models = parse_list::<ClassifierKind>(v).map_err(bad)?;
        }
        // Tables always use the canonical row and column order.
        c.forms.sort_unstable();
        c.forms.dedup();
        c.models.sort_unstable();
        c.models.dedup();
        c.check().map_err(bad)?;

        let seeds = c.seeds();
        for (key, given, derived) in [
            ("split-seed", self.split_seed, seeds.split),
            ("fold-seed", self.fold_seed, seeds.folds),
            ("model-seed", self.model_seed, seeds.models),
        ] {
            if given.is_some_and(|g| g != derived) {
                return Err(config_err(format!(
                    "{key} {} does not match seed {} (expected {derived})",
                    given.unwrap(),
                    c.master_seed
                )));
            }
        }

        let formats = match &self.formats {
            Some(v) => parse_list::<Format>(v)?,
            None => Format::ALL.to_vec(),
        };
        Ok(Resolved {
            data,
            out: self.out.clone().unwrap_or_else(|| PathBuf::from("anura-out")),
            formats,
            config: c,
        })
    }

    /// Fully populated settings describing `r`, for the run manifest.
    pub fn effective(r: &Resolved) -> Settings {
        let c = &r.config;
        let h = &c.hyperparameters;
        let seeds = c.seeds();
        let std = match c.std_convention {
            StdConvention::Population => "population",
            StdConvention::Sample => "sample",
        };
        let reduce_on = match c.reduce_on {
            ReduceBase::Clean => "clean",
            ReduceBase::Stand => "stand",
        };
        Settings {
            data: Some(r.data.clone()),
            out: None,
            formats: Some(r.formats.iter().map(|f| f.name().to_owned()).collect()),
            jobs: None,
            mode: Some(c.leakage_mode.to_string()),
            seed: Some(c.master_seed),
            label_column: Some(c.schema.label_column.clone()),
            drop_columns: Some(c.schema.drop_columns.clone()),
            delimiter: Some(c.schema.delimiter as char),
            has_header: Some(c.schema.has_header),
            k_sigma: Some(c.k_sigma),
            std: Some(std.into()),
            pca_components: Some(c.pca_components),
            reduce_on: Some(reduce_on.into()),
            ica_seed: Some(seeds.ica),
            ica_tol: Some(c.ica.tol),
            ica_max_iter: Some(c.ica.max_iter),
            train_fraction: Some(c.train_fraction),
            cv_folds: Some(c.cv_folds),
            cv_shuffle: Some(c.cv_shuffle),
            cv_stratified: Some(c.cv_stratified),
            forms: Some(c.forms.iter().map(|f| f.tag().to_owned()).collect()),
            models: Some(c.models.iter().map(|m| m.label().to_lowercase()).collect()),
            lr_lambda: Some(h.lr.lambda),
            lr_max_iter: Some(h.lr.max_iter),
            lr_tol: Some(h.lr.tol),
            lr_step_scale: Some(h.lr.step_scale),
            lda_ridge: Some(h.lda.ridge),
            knn_k: Some(h.knn.k),
            cart_max_depth: h.cart.max_depth,
            nb_var_smoothing: Some(h.nb.var_smoothing),
            svm_c: Some(h.svm.c),
            svm_gamma: h.svm.gamma,
            svm_tol: Some(h.svm.tol),
            svm_max_passes: Some(h.svm.max_passes),
            svm_max_iter: Some(h.svm.max_iter),
            split_seed: Some(seeds.split),
            fold_seed: Some(seeds.folds),
            model_seed: Some(seeds.models),
        }
    }

    pub fn to_manifest(&self) -> String {
        let body = toml::to_string(self).expect("settings serialize to TOML");
        format!("# Effective configuration. Reproduce with: anura <command> --config manifest.toml\n{body}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_data() -> Settings {
        Settings {
            data: Some("frogs.csv".into()),
            ..Settings::default()
        }
    }

    #[test]
    fn flags_win_over_file() {
        let flags = Settings {
            k_sigma: Some(2.5),
            ..with_data()
        };
        let file = Settings {
            k_sigma: Some(4.0),
            cv_folds: Some(5),
            ..Settings::default()
        };
        let r = flags.over(file).resolve().unwrap();
        assert_eq!(r.config.k_sigma, 2.5);
        assert_eq!(r.config.cv_folds, 5);
    }

    #[test]
    fn manifest_round_trips_to_the_same_config() {
        let s = Settings {
            mode: Some("paper".into()),
            seed: Some(7),
            svm_gamma: Some(0.25),
            models: Some(vec!["knn".into(), "SVM".into()]),
            ..with_data()
        };
        let r = s.resolve().unwrap();
        let manifest = Settings::effective(&r).to_manifest();
        let back: Settings = toml::from_str(&manifest).unwrap();
        let r2 = back.resolve().unwrap();
        // The manifest pins the derived ICA seed explicitly.
        assert_eq!(r2.config.seeds(), r.config.seeds());
        assert_eq!(r2.config.ica.seed, Some(r.config.seeds().ica));
        assert_eq!(
            PipelineConfig { ica: r.config.ica, ..r2.config.clone() },
            r.config
        );
        assert_eq!(Settings::effective(&r2).to_manifest(), manifest);
    }

    #[test]
    fn mismatched_derived_seed_is_rejected() {
        let s = Settings {
            seed: Some(1),
            split_seed: Some(99),
            ..with_data()
        };
        let err = s.resolve().unwrap_err();
        assert!(err.downcast_ref::<ConfigError>().is_some());
        assert!(err.to_string().contains("split-seed"));
    }

    #[test]
    fn bad_values_are_config_errors() {
        for s in [
            Settings { mode: Some("loose".into()), ..with_data() },
            Settings { cv_folds: Some(1), ..with_data() },
            Settings { formats: Some(vec!["xml".into()]), ..with_data() },
            Settings { delimiter: Some('→'), ..with_data() },
            Settings::default(),
        ] {
            let err = s.resolve().unwrap_err();
            assert!(err.downcast_ref::<ConfigError>().is_some(), "{err}");
        }
    }

    #[test]
    fn unknown_file_keys_are_rejected() {
        assert!(toml::from_str::<Settings>("k-sigma = 2.0\nbogus = 1\n").is_err());
    }
}
