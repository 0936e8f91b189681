//! Outlier removal by a ±kσ band, min-max normalisation and z-score
//! standardisation.
//!
//! Every scaler is split into a fit step (which learns column parameters from
//! one dataset) and an apply step (which can run on any dataset with the same
//! columns). Fitting on training rows only and fitting on all rows go through
//! the same code.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

use crate::dataset::{DataForm, Dataset};
use crate::error::{Error, Result};

/// Divisor used for standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StdConvention {
    /// Divide by `n`.
    #[default]
    Population,
    /// Divide by `n − 1`.
    Sample,
}

impl std::str::FromStr for StdConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "population" => Ok(StdConvention::Population),
            "sample" => Ok(StdConvention::Sample),
            _ => Err(Error::InvalidParameter(format!("unknown std convention `{s}`"))),
        }
    }
}

/// Per-column mean and standard deviation.
pub fn column_moments(x: ArrayView2<'_, f64>, conv: StdConvention) -> (Array1<f64>, Array1<f64>) {
    let n = x.nrows();
    let mean = x.sum_axis(Axis(0)) / n as f64;
    let denom = match conv {
        StdConvention::Population => n as f64,
        StdConvention::Sample => (n as f64 - 1.0).max(1.0),
    };
    let mut ss = Array1::<f64>::zeros(x.ncols());
    for row in x.rows() {
        Zip::from(&mut ss)
            .and(&row)
            .and(&mean)
            .for_each(|s, &v, &m| *s += (v - m) * (v - m));
    }
    let std = ss.mapv(|s| (s / denom).sqrt());
    (mean, std)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierRule {
    /// Half-width of the kept band in standard deviations.
    pub k_sigma: f64,
    pub std: StdConvention,
}

impl Default for OutlierRule {
    fn default() -> Self {
        Self {
            k_sigma: 3.0,
            std: StdConvention::Population,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OutlierRemoval {
    pub dataset: Dataset,
    pub removed_count: usize,
    /// Indices into the input rows, ascending.
    pub removed_rows: Vec<usize>,
    /// Columns with zero spread. They are kept and never cause a removal.
    pub degenerate_columns: Vec<String>,
}

/// Drops every row that has at least one feature outside `μ ± kσ`, with μ and
/// σ computed once over the whole input. Bounds are inclusive.
pub fn remove_outliers(ds: &Dataset, rule: &OutlierRule) -> Result<OutlierRemoval> {
    if !(rule.k_sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "k_sigma must be positive, got {}",
            rule.k_sigma
        )));
    }
    if ds.provenance != DataForm::Raw {
        return Err(Error::WrongProvenance {
            expected: DataForm::Raw.tag().into(),
            got: ds.provenance.tag().into(),
        });
    }
    if ds.n_rows() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: ds.n_rows(),
        });
    }
    let (mean, std) = column_moments(ds.features.view(), rule.std);
    let degenerate_columns: Vec<String> = std
        .iter()
        .zip(&ds.column_names)
        .filter(|(&s, _)| s == 0.0)
        .map(|(_, name)| name.clone())
        .collect();
    if !degenerate_columns.is_empty() {
        log::warn!("constant columns never flag outliers: {degenerate_columns:?}");
    }

    let lo = &mean - &(&std * rule.k_sigma);
    let hi = &mean + &(&std * rule.k_sigma);
    let mut kept = Vec::with_capacity(ds.n_rows());
    let mut removed_rows = Vec::new();
    for (i, row) in ds.features.rows().into_iter().enumerate() {
        let outlier = row
            .iter()
            .enumerate()
            .any(|(j, &v)| std[j] > 0.0 && (v < lo[j] || v > hi[j]));
        if outlier {
            removed_rows.push(i);
        } else {
            kept.push(i);
        }
    }
    let mut dataset = ds.select_rows(&kept);
    dataset.provenance = DataForm::Clean;
    Ok(OutlierRemoval {
        removed_count: removed_rows.len(),
        dataset,
        removed_rows,
        degenerate_columns,
    })
}

fn check_columns(expected: usize, ds: &Dataset) -> Result<()> {
    if ds.n_cols() != expected {
        return Err(Error::ColumnCountMismatch {
            expected,
            got: ds.n_cols(),
        });
    }
    Ok(())
}

fn check_fit_input(train: &Dataset) -> Result<()> {
    if train.n_rows() == 0 {
        return Err(Error::TooFewRows { needed: 1, got: 0 });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxParams {
    pub min: Array1<f64>,
    pub max: Array1<f64>,
}

impl MinMaxParams {
    pub fn fit(train: &Dataset) -> Result<Self> {
        check_fit_input(train)?;
        let x = &train.features;
        let min = x.fold_axis(Axis(0), f64::INFINITY, |&a, &b| a.min(b));
        let max = x.fold_axis(Axis(0), f64::NEG_INFINITY, |&a, &b| a.max(b));
        Ok(Self { min, max })
    }

    pub fn apply_matrix(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.min.len() {
            return Err(Error::ColumnCountMismatch {
                expected: self.min.len(),
                got: x.ncols(),
            });
        }
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                let range = self.max[j] - self.min[j];
                *v = if range > 0.0 {
                    (*v - self.min[j]) / range
                } else {
                    0.0
                };
            }
        }
        Ok(out)
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        check_columns(self.min.len(), ds)?;
        let x = self.apply_matrix(ds.features.view())?;
        ds.with_features(x, ds.column_names.clone(), DataForm::Norm)
    }
}

/// Fits min/max on `train` and rescales `apply_to` to `(x − min)/(max − min)`.
/// Constant columns map to 0.
pub fn fit_apply_minmax(train: &Dataset, apply_to: &Dataset) -> Result<(MinMaxParams, Dataset)> {
    check_columns(train.n_cols(), apply_to)?;
    let params = MinMaxParams::fit(train)?;
    let out = params.apply(apply_to)?;
    Ok((params, out))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScoreParams {
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
}

impl ZScoreParams {
    pub fn fit(train: &Dataset, conv: StdConvention) -> Result<Self> {
        check_fit_input(train)?;
        let (mean, std) = column_moments(train.features.view(), conv);
        Ok(Self { mean, std })
    }

    pub fn apply_matrix(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::ColumnCountMismatch {
                expected: self.mean.len(),
                got: x.ncols(),
            });
        }
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if self.std[j] > 0.0 {
                    (*v - self.mean[j]) / self.std[j]
                } else {
                    0.0
                };
            }
        }
        Ok(out)
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        check_columns(self.mean.len(), ds)?;
        let x = self.apply_matrix(ds.features.view())?;
        ds.with_features(x, ds.column_names.clone(), DataForm::Stand)
    }
}

/// Fits μ and σ on `train` and maps `apply_to` to `(x − μ)/σ`. Columns with
/// σ = 0 map to 0.
pub fn fit_apply_zscore(
    train: &Dataset,
    apply_to: &Dataset,
    conv: StdConvention,
) -> Result<(ZScoreParams, Dataset)> {
    check_columns(train.n_cols(), apply_to)?;
    let params = ZScoreParams::fit(train, conv)?;
    let out = params.apply(apply_to)?;
    Ok((params, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn single_column(values: &[f64]) -> Dataset {
        let n = values.len();
        Dataset::new(
            Array2::from_shape_vec((n, 1), values.to_vec()).unwrap(),
            vec!["x".into()],
            vec![0; n],
            vec!["A".into()],
            DataForm::Raw,
        )
        .unwrap()
    }

    #[test]
    fn single_extreme_value_is_removed() {
        let mut values = vec![0.0; 100];
        values.push(1000.0);
        let ds = single_column(&values);
        // Oracle: μ = 1000/101, σ = sqrt(E[x²] − μ²). With the population σ
        // the extreme sits at z = sqrt(n − 1) = 10; with the sample σ, ≈ 9.95.
        let mu = 1000.0 / 101.0;
        let sigma = (1000.0f64.powi(2) / 101.0 - mu * mu).sqrt();
        let z = (1000.0 - mu) / sigma;
        assert!((z - 10.0).abs() < 1e-9);
        assert!((z * (100.0f64 / 101.0).sqrt() - 9.95).abs() < 0.01);
        assert!(mu / sigma < 3.0);

        let out = remove_outliers(&ds, &OutlierRule::default()).unwrap();
        assert_eq!(out.removed_rows, vec![100]);
        assert_eq!(out.removed_count, 1);
        assert_eq!(out.dataset.n_rows(), 100);
        assert_eq!(out.dataset.provenance, DataForm::Clean);
    }

    #[test]
    fn constant_columns_remove_nothing() {
        let ds = Dataset::new(
            Array2::from_elem((5, 3), 2.5),
            vec!["a".into(), "b".into(), "c".into()],
            vec![0, 1, 0, 1, 0],
            vec!["A".into(), "B".into()],
            DataForm::Raw,
        )
        .unwrap();
        let out = remove_outliers(&ds, &OutlierRule::default()).unwrap();
        assert_eq!(out.removed_count, 0);
        assert_eq!(out.degenerate_columns.len(), 3);
    }

    #[test]
    fn outlier_preconditions() {
        let ds = single_column(&[1.0]);
        assert!(matches!(
            remove_outliers(&ds, &OutlierRule::default()),
            Err(Error::TooFewRows { .. })
        ));
        let mut ds = single_column(&[1.0, 2.0]);
        assert!(matches!(
            remove_outliers(&ds, &OutlierRule { k_sigma: 0.0, ..Default::default() }),
            Err(Error::InvalidParameter(_))
        ));
        ds.provenance = DataForm::Norm;
        assert!(matches!(
            remove_outliers(&ds, &OutlierRule::default()),
            Err(Error::WrongProvenance { .. })
        ));
    }

    #[test]
    fn minmax_examples() {
        let ds = single_column(&[2.0, 4.0, 6.0]);
        let (_, out) = fit_apply_minmax(&ds, &ds).unwrap();
        assert_eq!(out.features.column(0).to_vec(), vec![0.0, 0.5, 1.0]);
        assert_eq!(out.provenance, DataForm::Norm);

        let (_, out) = fit_apply_minmax(&single_column(&[0.0, 10.0]), &single_column(&[15.0])).unwrap();
        assert_eq!(out.features[[0, 0]], 1.5);

        let ds = single_column(&[5.0, 5.0, 5.0]);
        let (_, out) = fit_apply_minmax(&ds, &ds).unwrap();
        assert_eq!(out.features.column(0).to_vec(), vec![0.0; 3]);
    }

    #[test]
    fn zscore_examples() {
        let ds = single_column(&[1.0, 2.0, 3.0]);
        let (params, out) = fit_apply_zscore(&ds, &ds, StdConvention::Population).unwrap();
        assert_abs_diff_eq!(params.std[0], (2.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            out.features.column(0).to_owned(),
            array![-1.224744871391589, 0.0, 1.224744871391589],
            epsilon = 1e-6
        );
        assert_eq!(out.provenance, DataForm::Stand);

        let mut again = out.clone();
        again.provenance = DataForm::Raw;
        let (_, twice) = fit_apply_zscore(&again, &again, StdConvention::Population).unwrap();
        assert_abs_diff_eq!(twice.features, out.features, epsilon = 1e-12);

        let ds = single_column(&[7.0, 7.0]);
        let (_, out) = fit_apply_zscore(&ds, &ds, StdConvention::Population).unwrap();
        assert_eq!(out.features.column(0).to_vec(), vec![0.0, 0.0]);
    }

    #[test]
    fn column_count_mismatch() {
        let one = single_column(&[1.0, 2.0]);
        let two = Dataset::new(
            Array2::zeros((2, 2)),
            vec!["a".into(), "b".into()],
            vec![0, 0],
            vec!["A".into()],
            DataForm::Raw,
        )
        .unwrap();
        assert!(matches!(
            fit_apply_minmax(&one, &two),
            Err(Error::ColumnCountMismatch { expected: 1, got: 2 })
        ));
        assert!(matches!(
            fit_apply_zscore(&one, &two, StdConvention::Population),
            Err(Error::ColumnCountMismatch { .. })
        ));
    }

    #[test]
    fn sample_convention_divides_by_n_minus_one() {
        let (_, std) = column_moments(array![[1.0], [3.0]].view(), StdConvention::Sample);
        assert_abs_diff_eq!(std[0], 2.0f64.sqrt(), epsilon = 1e-15);
    }
}
