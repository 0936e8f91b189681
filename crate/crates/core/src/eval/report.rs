use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::{LeakageMode, ReduceBase, SeedPlan};
use crate::dataset::DataForm;
use crate::error::Result;
use crate::models::{ClassifierKind, Hyperparameters};
use crate::preprocess::StdConvention;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub form: DataForm,
    pub model: ClassifierKind,
    pub cva_mean: f64,
    pub cva_per_fold: Vec<f64>,
    pub test_accuracy: f64,
    pub macro_recall: f64,
    pub weighted_recall: f64,
    pub per_class_recall: Vec<f64>,
    /// Classes missing from the test split.
    pub absent_classes: Vec<usize>,
    /// `confusion[true][predicted]` on the test split.
    pub confusion: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleaningSummary {
    pub input_rows: usize,
    pub removed: usize,
    pub output_rows: usize,
    pub degenerate_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub seeds: SeedPlan,
    pub leakage_mode: LeakageMode,
    pub hyperparameters: Hyperparameters,
    pub train_fraction: f64,
    pub cv_folds: usize,
    pub cv_shuffle: bool,
    pub cv_stratified: bool,
    pub k_sigma: f64,
    pub std_convention: StdConvention,
    pub pca_components: usize,
    pub reduce_on: ReduceBase,
    /// Class names in index order (first appearance in the input file).
    pub label_names: Vec<String>,
    pub cleaning: CleaningSummary,
    pub train_rows: usize,
    pub test_rows: usize,
    /// From the PCA used for the test column.
    pub pca_explained_variance_ratio: Option<Vec<f64>>,
    pub pca_meets_variance_target: Option<bool>,
    pub ica_iterations: Option<usize>,
    pub ica_converged: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub cells: Vec<CellResult>,
    pub metadata: ReportMetadata,
}

/// Which number a results table shows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Mean cross-validation accuracy on the training split.
    CrossValidation,
    /// Accuracy (support-weighted recall) on the test split.
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub form: DataForm,
    /// One entry per model, in the report's model order.
    pub values: Vec<f64>,
    pub mean: f64,
}

impl EvalReport {
    pub fn cell(&self, form: DataForm, model: ClassifierKind) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.form == form && c.model == model)
    }

    pub fn forms(&self) -> Vec<DataForm> {
        let mut forms: Vec<DataForm> = Vec::new();
        for c in &self.cells {
            if !forms.contains(&c.form) {
                forms.push(c.form);
            }
        }
        forms
    }

    pub fn models(&self) -> Vec<ClassifierKind> {
        let mut models: Vec<ClassifierKind> = Vec::new();
        for c in &self.cells {
            if !models.contains(&c.model) {
                models.push(c.model);
            }
        }
        models
    }

    pub fn table(&self, metric: Metric) -> Vec<TableRow> {
        let models = self.models();
        self.forms()
            .into_iter()
            .map(|form| {
                let values: Vec<f64> = models
                    .iter()
                    .map(|&m| {
                        let cell = self.cell(form, m).expect("grid is complete");
                        match metric {
                            Metric::CrossValidation => cell.cva_mean,
                            Metric::Test => cell.weighted_recall,
                        }
                    })
                    .collect();
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                TableRow { form, values, mean }
            })
            .collect()
    }

    pub fn row_mean(&self, metric: Metric, form: DataForm) -> Option<f64> {
        self.table(metric).into_iter().find(|r| r.form == form).map(|r| r.mean)
    }

    fn header(&self) -> Vec<String> {
        let mut h = vec!["Data".to_owned()];
        h.extend(self.models().iter().map(|m| m.label().to_owned()));
        h.push("Mean".into());
        h
    }

    /// Table as CSV with four-decimal values.
    pub fn write_table_csv<W: Write>(&self, metric: Metric, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.header())?;
        for row in self.table(metric) {
            let mut rec = vec![row.form.table_label().to_owned()];
            rec.extend(row.values.iter().map(|v| format!("{v:.4}")));
            rec.push(format!("{:.4}", row.mean));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn table_markdown(&self, metric: Metric) -> String {
        let header = self.header();
        let mut out = String::new();
        let _ = writeln!(out, "| {} |", header.join(" | "));
        let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
        for row in self.table(metric) {
            let mut cells = vec![row.form.table_label().to_owned()];
            cells.extend(row.values.iter().map(|v| format!("{v:.4}")));
            cells.push(format!("{:.4}", row.mean));
            let _ = writeln!(out, "| {} |", cells.join(" | "));
        }
        out
    }
}
