use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The six data representations models are benchmarked on, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataForm {
    Raw,
    Clean,
    Norm,
    Stand,
    Pca,
    Ica,
}

impl DataForm {
    pub const ALL: [DataForm; 6] = [
        DataForm::Raw,
        DataForm::Clean,
        DataForm::Norm,
        DataForm::Stand,
        DataForm::Pca,
        DataForm::Ica,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            DataForm::Raw => "raw",
            DataForm::Clean => "clean",
            DataForm::Norm => "norm",
            DataForm::Stand => "stand",
            DataForm::Pca => "pca",
            DataForm::Ica => "ica",
        }
    }

    /// Row label used in the result tables.
    pub fn table_label(self) -> &'static str {
        match self {
            DataForm::Raw => "Raw",
            DataForm::Clean => "Clean",
            DataForm::Norm => "Norm",
            DataForm::Stand => "Stand",
            DataForm::Pca => "PCA",
            DataForm::Ica => "ICA",
        }
    }
}

impl fmt::Display for DataForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for DataForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DataForm::ALL
            .into_iter()
            .find(|f| f.tag().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown data form `{s}`")))
    }
}

/// A labelled feature matrix. Rows are instances, columns are attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub column_names: Vec<String>,
    /// 0-based indices into `label_names`.
    pub labels: Vec<usize>,
    pub label_names: Vec<String>,
    pub provenance: DataForm,
}

impl Dataset {
    /// Builds a dataset, checking the shape invariants. Finiteness is checked
    /// separately by [`Dataset::validate`].
    pub fn new(
        features: Array2<f64>,
        column_names: Vec<String>,
        labels: Vec<usize>,
        label_names: Vec<String>,
        provenance: DataForm,
    ) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::LengthMismatch(features.nrows(), labels.len()));
        }
        if features.ncols() != column_names.len() {
            return Err(Error::ColumnCountMismatch {
                expected: features.ncols(),
                got: column_names.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= label_names.len()) {
            return Err(Error::InvalidParameter(format!(
                "label index {bad} out of range for {} classes",
                label_names.len()
            )));
        }
        Ok(Self {
            features,
            column_names,
            labels,
            label_names,
            provenance,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.features.ncols()
    }

    pub fn class_count(&self) -> usize {
        self.label_names.len()
    }

    /// Number of instances per class index.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Fails with [`Error::MissingValues`] if any cell is NaN or infinite.
    pub fn validate(&self) -> Result<()> {
        let bad = self.features.iter().filter(|v| !v.is_finite()).count();
        if bad > 0 {
            return Err(Error::MissingValues(bad));
        }
        Ok(())
    }

    /// New dataset holding the given rows, in the given order. The label
    /// dictionary is kept whole so class indices stay comparable.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), rows),
            column_names: self.column_names.clone(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            label_names: self.label_names.clone(),
            provenance: self.provenance,
        }
    }

    /// Same rows and labels, different feature columns.
    pub fn with_features(
        &self,
        features: Array2<f64>,
        column_names: Vec<String>,
        provenance: DataForm,
    ) -> Result<Dataset> {
        Dataset::new(
            features,
            column_names,
            self.labels.clone(),
            self.label_names.clone(),
            provenance,
        )
    }
}
