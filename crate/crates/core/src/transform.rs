//! Fitted transform chains for each data form, and the versioned JSON
//! envelope used to persist transforms and models.

use std::io::{Read, Write};

use ndarray::{Array2, ArrayView2};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{PipelineConfig, ReduceBase};
use crate::dataset::{DataForm, Dataset};
use crate::error::{Error, Result};
use crate::models::ClassifierModel;
use crate::preprocess::{MinMaxParams, ZScoreParams};
use crate::reduce::{fit_ica, fit_pca, IcaConfig, IcaModel, PcaModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TransformStep {
    MinMax(MinMaxParams),
    ZScore(ZScoreParams),
    Pca(PcaModel),
    Ica(IcaModel),
}

impl TransformStep {
    fn apply(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        match self {
            TransformStep::MinMax(p) => p.apply_matrix(x),
            TransformStep::ZScore(p) => p.apply_matrix(x),
            TransformStep::Pca(m) => m.transform_matrix(x),
            TransformStep::Ica(m) => m.transform_matrix(x),
        }
    }
}

/// The learned steps that turn cleaned features into one data form.
/// `raw` and `clean` have no steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedTransform {
    pub form: DataForm,
    pub input_columns: Vec<String>,
    pub output_columns: Vec<String>,
    pub steps: Vec<TransformStep>,
}

impl FittedTransform {
    pub fn apply_matrix(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_columns.len() {
            return Err(Error::DimensionMismatch {
                expected: self.input_columns.len(),
                got: x.ncols(),
            });
        }
        let mut out = x.to_owned();
        for step in &self.steps {
            out = step.apply(out.view())?;
        }
        Ok(out)
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        let x = self.apply_matrix(ds.features.view())?;
        ds.with_features(x, self.output_columns.clone(), self.form)
    }

    pub fn pca(&self) -> Option<&PcaModel> {
        self.steps.iter().find_map(|s| match s {
            TransformStep::Pca(m) => Some(m),
            _ => None,
        })
    }

    pub fn ica(&self) -> Option<&IcaModel> {
        self.steps.iter().find_map(|s| match s {
            TransformStep::Ica(m) => Some(m),
            _ => None,
        })
    }
}

/// Fits the transform for `form` on `train` (cleaned, or raw for the raw form).
pub fn fit_form(form: DataForm, train: &Dataset, config: &PipelineConfig) -> Result<FittedTransform> {
    let conv = config.std_convention;
    let m = config.pca_components;
    let mut steps = Vec::new();
    let mut output_columns = train.column_names.clone();

    let reduction_input = |steps: &mut Vec<TransformStep>| -> Result<Dataset> {
        match config.reduce_on {
            ReduceBase::Clean => Ok(train.clone()),
            ReduceBase::Stand => {
                let z = ZScoreParams::fit(train, conv)?;
                let out = z.apply(train)?;
                steps.push(TransformStep::ZScore(z));
                Ok(out)
            }
        }
    };

    match form {
        DataForm::Raw | DataForm::Clean => {}
        DataForm::Norm => steps.push(TransformStep::MinMax(MinMaxParams::fit(train)?)),
        DataForm::Stand => steps.push(TransformStep::ZScore(ZScoreParams::fit(train, conv)?)),
        DataForm::Pca => {
            let base = reduction_input(&mut steps)?;
            steps.push(TransformStep::Pca(fit_pca(&base, m)?));
            output_columns = (1..=m).map(|i| format!("PC{i}")).collect();
        }
        DataForm::Ica => {
            let base = reduction_input(&mut steps)?;
            let cfg = IcaConfig {
                components: m,
                seed: config.seeds().ica,
                max_iter: config.ica.max_iter,
                tol: config.ica.tol,
            };
            steps.push(TransformStep::Ica(fit_ica(&base, &cfg)?));
            output_columns = (1..=m).map(|i| format!("IC{i}")).collect();
        }
    }
    Ok(FittedTransform {
        form,
        input_columns: train.column_names.clone(),
        output_columns,
        steps,
    })
}

pub const ARTIFACT_VERSION: u32 = 1;

/// On-disk wrapper: `{"version", "kind", "columns", "values"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub version: u32,
    pub kind: String,
    /// Input feature columns the payload expects.
    pub columns: Vec<String>,
    pub values: T,
}

/// A classifier bundled with the transform and label dictionary it was
/// trained with, so it can be applied to raw feature rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub form: DataForm,
    pub label_names: Vec<String>,
    pub transform: FittedTransform,
    pub model: ClassifierModel,
}

impl ModelArtifact {
    /// Predicted class names for raw feature rows.
    pub fn predict_names(&self, x: ArrayView2<'_, f64>) -> Result<Vec<String>> {
        let z = self.transform.apply_matrix(x)?;
        let idx = self.model.predict(z.view())?;
        Ok(idx.into_iter().map(|i| self.label_names[i].clone()).collect())
    }
}

pub const TRANSFORM_KIND: &str = "transform";
pub const MODEL_KIND: &str = "model";

pub fn write_envelope<T: Serialize, W: Write>(
    writer: W,
    kind: &str,
    columns: &[String],
    values: &T,
) -> Result<()> {
    let env = Envelope {
        version: ARTIFACT_VERSION,
        kind: kind.to_owned(),
        columns: columns.to_vec(),
        values,
    };
    serde_json::to_writer(writer, &env)?;
    Ok(())
}

pub fn read_envelope<T: DeserializeOwned, R: Read>(reader: R, kind: &str) -> Result<Envelope<T>> {
    let env: Envelope<serde_json::Value> = serde_json::from_reader(reader)?;
    if env.version != ARTIFACT_VERSION {
        return Err(Error::BadArtifact(format!("version {}", env.version)));
    }
    if env.kind != kind {
        return Err(Error::BadArtifact(format!("expected kind `{kind}`, found `{}`", env.kind)));
    }
    Ok(Envelope {
        version: env.version,
        kind: env.kind,
        columns: env.columns,
        values: serde_json::from_value(env.values)?,
    })
}
