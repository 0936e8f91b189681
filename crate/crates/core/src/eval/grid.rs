use rayon::prelude::*;

use crate::config::{LeakageMode, PipelineConfig};
use crate::dataset::{DataForm, Dataset};
use crate::error::{Error, Result};
use crate::models::{fit_dataset, ClassifierKind, ClassifierModel, ClassifierSpec};
use crate::preprocess::{remove_outliers, OutlierRule};
use crate::reduce::VARIANCE_TARGET;
use crate::transform::{fit_form, FittedTransform};

use super::report::{CellResult, CleaningSummary, EvalReport, ReportMetadata};
use super::{accuracy, kfold_plan, recall_scores, stratified_split, FoldOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStage {
    /// Fitted once on every row of the form's base data (`LeakageMode::Paper`).
    Full,
    /// Fitted on the training part of a CV fold.
    Fold(usize),
    /// Fitted on the whole training split, applied to the test split.
    Test,
}

/// Reports which rows a transform was fitted on and which rows it was then
/// used to evaluate. Row indices refer to the form's base dataset (raw data
/// for the raw form, cleaned data otherwise).
#[derive(Debug, Clone)]
pub struct FitEvent {
    pub form: DataForm,
    pub stage: FitStage,
    pub fit_rows: Vec<usize>,
    pub eval_rows: Vec<usize>,
}

pub trait FitObserver: Sync {
    fn on_fit(&self, event: &FitEvent);
}

impl FitObserver for () {
    fn on_fit(&self, _: &FitEvent) {}
}

/// Transforms and models fitted on the training split, for persistence.
#[derive(Debug, Clone)]
pub struct GridArtifacts {
    pub transforms: Vec<FittedTransform>,
    pub models: Vec<(DataForm, ClassifierKind, ClassifierModel)>,
    pub label_names: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct GridOutput {
    pub report: EvalReport,
    pub artifacts: GridArtifacts,
}

struct PreparedForm {
    form: DataForm,
    /// `(train, held-out)` per fold, already transformed.
    folds: Vec<(Dataset, Dataset)>,
    train: Dataset,
    test: Dataset,
    transform: FittedTransform,
}

fn map_rows(positions: &[usize], rows: &[usize]) -> Vec<usize> {
    positions.iter().map(|&p| rows[p]).collect()
}

fn prepare_form(
    form: DataForm,
    base: &Dataset,
    config: &PipelineConfig,
    observer: &dyn FitObserver,
) -> Result<PreparedForm> {
    let seeds = config.seeds();
    let split = stratified_split(&base.labels, &base.label_names, config.train_fraction, seeds.split)?;
    let train_base = base.select_rows(&split.train_indices);
    let plan = kfold_plan(
        &train_base.labels,
        base.class_count(),
        config.cv_folds,
        seeds.folds,
        FoldOptions {
            shuffle: config.cv_shuffle,
            stratified: config.cv_stratified,
        },
    )?;

    match config.leakage_mode {
        LeakageMode::Paper => {
            let all: Vec<usize> = (0..base.n_rows()).collect();
            let transform = fit_form(form, base, config)?;
            observer.on_fit(&FitEvent {
                form,
                stage: FitStage::Full,
                fit_rows: all.clone(),
                eval_rows: all,
            });
            let data = transform.apply(base)?;
            let train = data.select_rows(&split.train_indices);
            let test = data.select_rows(&split.test_indices);
            let folds = (0..plan.k)
                .map(|f| {
                    let (tr, va) = plan.fold(f);
                    (train.select_rows(&tr), train.select_rows(&va))
                })
                .collect();
            Ok(PreparedForm {
                form,
                folds,
                train,
                test,
                transform,
            })
        }
        LeakageMode::Strict => {
            let mut folds = Vec::with_capacity(plan.k);
            for f in 0..plan.k {
                let (tr, va) = plan.fold(f);
                let fit_part = train_base.select_rows(&tr);
                let held = train_base.select_rows(&va);
                let t = fit_form(form, &fit_part, config)?;
                observer.on_fit(&FitEvent {
                    form,
                    stage: FitStage::Fold(f),
                    fit_rows: map_rows(&tr, &split.train_indices),
                    eval_rows: map_rows(&va, &split.train_indices),
                });
                folds.push((t.apply(&fit_part)?, t.apply(&held)?));
            }
            let transform = fit_form(form, &train_base, config)?;
            observer.on_fit(&FitEvent {
                form,
                stage: FitStage::Test,
                fit_rows: split.train_indices.clone(),
                eval_rows: split.test_indices.clone(),
            });
            let train = transform.apply(&train_base)?;
            let test = transform.apply(&base.select_rows(&split.test_indices))?;
            Ok(PreparedForm {
                form,
                folds,
                train,
                test,
                transform,
            })
        }
    }
}

fn run_cell(prep: &PreparedForm, spec: &ClassifierSpec) -> Result<(CellResult, ClassifierModel)> {
    let mut cva_per_fold = Vec::with_capacity(prep.folds.len());
    for (train, held) in &prep.folds {
        let model = fit_dataset(spec, train)?;
        let pred = model.predict(held.features.view())?;
        cva_per_fold.push(accuracy(&held.labels, &pred));
    }
    let cva_mean = cva_per_fold.iter().sum::<f64>() / cva_per_fold.len() as f64;

    let model = fit_dataset(spec, &prep.train)?;
    let pred = model.predict(prep.test.features.view())?;
    let scores = recall_scores(&prep.test.labels, &pred, prep.test.class_count())?;
    let cell = CellResult {
        form: prep.form,
        model: spec.kind,
        cva_mean,
        cva_per_fold,
        test_accuracy: accuracy(&prep.test.labels, &pred),
        macro_recall: scores.macro_recall,
        weighted_recall: scores.weighted_recall,
        per_class_recall: scores.per_class,
        absent_classes: scores.absent,
        confusion: scores.confusion,
    };
    Ok((cell, model))
}

/// Runs the full forms × models grid and returns the report.
pub fn run_grid(raw: &Dataset, config: &PipelineConfig) -> Result<EvalReport> {
    Ok(run_grid_with(raw, config, &())?.report)
}

/// Builds every configured data form, then for each (form, model) cell
/// computes k-fold CV accuracy on the training split and test-split recall
/// of a model fitted on the whole training split.
pub fn run_grid_with(
    raw: &Dataset,
    config: &PipelineConfig,
    observer: &dyn FitObserver,
) -> Result<GridOutput> {
    config.check()?;
    raw.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| run_grid_inner(raw, config, observer))
}

fn run_grid_inner(
    raw: &Dataset,
    config: &PipelineConfig,
    observer: &dyn FitObserver,
) -> Result<GridOutput> {
    let rule = OutlierRule {
        k_sigma: config.k_sigma,
        std: config.std_convention,
    };
    let cleaning = remove_outliers(raw, &rule)?;
    let clean = &cleaning.dataset;
    log::info!(
        "cleaning: {} rows in, {} removed, {} kept",
        raw.n_rows(),
        cleaning.removed_count,
        clean.n_rows()
    );

    let prepared: Vec<PreparedForm> = config
        .forms
        .par_iter()
        .map(|&form| {
            let base = if form == DataForm::Raw { raw } else { clean };
            prepare_form(form, base, config, observer).map_err(|e| Error::Form {
                form: form.tag().into(),
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let seeds = config.seeds();
    let jobs: Vec<(usize, ClassifierKind)> = (0..prepared.len())
        .flat_map(|p| config.models.iter().map(move |&m| (p, m)))
        .collect();
    let results: Vec<(CellResult, ClassifierModel)> = jobs
        .par_iter()
        .map(|&(p, kind)| {
            let prep = &prepared[p];
            log::debug!("fitting {} on {}", kind, prep.form);
            let spec = ClassifierSpec {
                kind,
                hyperparameters: config.hyperparameters.clone(),
                seed: seeds.models,
            };
            run_cell(prep, &spec).map_err(|e| Error::Cell {
                form: prep.form.tag().into(),
                model: kind.label().into(),
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let reference = &prepared[0];
    let pca = prepared.iter().find_map(|p| p.transform.pca());
    let ica = prepared.iter().find_map(|p| p.transform.ica());
    let clean_split = prepared.iter().find(|p| p.form != DataForm::Raw).unwrap_or(reference);
    let metadata = ReportMetadata {
        seeds,
        leakage_mode: config.leakage_mode,
        hyperparameters: config.hyperparameters.clone(),
        train_fraction: config.train_fraction,
        cv_folds: config.cv_folds,
        cv_shuffle: config.cv_shuffle,
        cv_stratified: config.cv_stratified,
        k_sigma: config.k_sigma,
        std_convention: config.std_convention,
        pca_components: config.pca_components,
        reduce_on: config.reduce_on,
        label_names: raw.label_names.clone(),
        cleaning: CleaningSummary {
            input_rows: raw.n_rows(),
            removed: cleaning.removed_count,
            output_rows: clean.n_rows(),
            degenerate_columns: cleaning.degenerate_columns.clone(),
        },
        train_rows: clean_split.train.n_rows(),
        test_rows: clean_split.test.n_rows(),
        pca_explained_variance_ratio: pca.map(|m| m.explained_variance_ratio.to_vec()),
        pca_meets_variance_target: pca.map(|m| m.explained_ratio_sum() >= VARIANCE_TARGET),
        ica_iterations: ica.map(|m| m.iterations_used),
        ica_converged: ica.map(|m| m.converged),
    };
    if let Some(m) = pca {
        let sum = m.explained_ratio_sum();
        if sum < VARIANCE_TARGET {
            log::warn!(
                "{} principal components explain {:.4} of the variance, below {VARIANCE_TARGET}",
                m.n_components(),
                sum
            );
        }
    }

    let mut cells = Vec::with_capacity(results.len());
    let mut models = Vec::with_capacity(results.len());
    for (cell, model) in results {
        models.push((cell.form, cell.model, model));
        cells.push(cell);
    }
    Ok(GridOutput {
        report: EvalReport { cells, metadata },
        artifacts: GridArtifacts {
            transforms: prepared.into_iter().map(|p| p.transform).collect(),
            models,
            label_names: raw.label_names.clone(),
        },
    })
}
