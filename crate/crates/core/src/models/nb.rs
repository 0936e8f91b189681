use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{argmax, class_counts};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NbParams {
    /// Fraction of the largest feature variance added to every variance.
    pub var_smoothing: f64,
}

impl Default for NbParams {
    fn default() -> Self {
        Self { var_smoothing: 1e-9 }
    }
}

impl NbParams {
    pub fn check(&self) -> Result<()> {
        if !(self.var_smoothing >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "NB var_smoothing {}",
                self.var_smoothing
            )));
        }
        Ok(())
    }
}

/// Gaussian naive Bayes: independent normal likelihood per class and feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    /// Class index for each row of `means`/`variances`.
    pub classes: Vec<usize>,
    pub means: Array2<f64>,
    pub variances: Array2<f64>,
    pub log_priors: Array1<f64>,
    pub class_count: usize,
}

impl GaussianNb {
    pub fn fit(params: &NbParams, x: ArrayView2<'_, f64>, y: &[usize], class_count: usize) -> Result<Self> {
        params.check()?;
        let (n, d) = x.dim();
        let counts = class_counts(y, class_count);
        let classes: Vec<usize> = (0..class_count).filter(|&c| counts[c] > 0).collect();
        let slot: Vec<Option<usize>> = (0..class_count)
            .map(|c| classes.iter().position(|&k| k == c))
            .collect();

        let mut means = Array2::<f64>::zeros((classes.len(), d));
        for (row, &c) in x.rows().into_iter().zip(y) {
            let mut m = means.row_mut(slot[c].expect("seen class"));
            m += &row;
        }
        for (k, &c) in classes.iter().enumerate() {
            let mut m = means.row_mut(k);
            m /= counts[c] as f64;
        }
        let mut variances = Array2::<f64>::zeros((classes.len(), d));
        for (row, &c) in x.rows().into_iter().zip(y) {
            let k = slot[c].expect("seen class");
            let dev = &row - &means.row(k);
            let mut v = variances.row_mut(k);
            v += &dev.mapv(|e| e * e);
        }
        for (k, &c) in classes.iter().enumerate() {
            let mut v = variances.row_mut(k);
            v /= counts[c] as f64;
        }

        let global_mean = x.sum_axis(Axis(0)) / n as f64;
        let max_var = x
            .columns()
            .into_iter()
            .zip(&global_mean)
            .map(|(col, &m)| col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64)
            .fold(0.0, f64::max);
        let floor = params.var_smoothing * max_var;
        variances.mapv_inplace(|v| (v + floor).max(f64::MIN_POSITIVE));

        let log_priors = classes
            .iter()
            .map(|&c| (counts[c] as f64 / n as f64).ln())
            .collect();
        Ok(Self {
            classes,
            means,
            variances,
            log_priors,
            class_count,
        })
    }

    pub fn n_features(&self) -> usize {
        self.means.ncols()
    }

    /// Unnormalised log posterior per trained class.
    pub fn joint_log_likelihood(&self, row: ArrayView1<'_, f64>) -> Array1<f64> {
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        Array1::from_iter((0..self.classes.len()).map(|k| {
            let mut s = self.log_priors[k];
            for j in 0..row.len() {
                let var = self.variances[[k, j]];
                let dev = row[j] - self.means[[k, j]];
                s += -0.5 * (ln_2pi + var.ln()) - dev * dev / (2.0 * var);
            }
            s
        }))
    }

    /// Normalised posterior per trained class.
    pub fn posterior(&self, row: ArrayView1<'_, f64>) -> Array1<f64> {
        let jll = self.joint_log_likelihood(row);
        let max = jll.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let e = jll.mapv(|v| (v - max).exp());
        let s = e.sum();
        e / s
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<usize> {
        x.rows()
            .into_iter()
            .map(|r| self.classes[argmax(self.joint_log_likelihood(r).iter().copied())])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn model(means: [f64; 2], vars: [f64; 2], priors: [f64; 2]) -> GaussianNb {
        GaussianNb {
            classes: vec![0, 1],
            means: array![[means[0]], [means[1]]],
            variances: array![[vars[0]], [vars[1]]],
            log_priors: array![priors[0].ln(), priors[1].ln()],
            class_count: 2,
        }
    }

    #[test]
    fn far_apart_classes() {
        let m = model([0.0, 10.0], [1.0, 1.0], [0.5, 0.5]);
        assert_eq!(m.predict(array![[2.0]].view()), vec![0]);
    }

    #[test]
    fn midpoint_is_an_exact_tie() {
        let m = model([0.0, 4.0], [1.0, 1.0], [0.5, 0.5]);
        let p = m.posterior(array![2.0].view());
        assert_eq!(p[0], 0.5);
        assert_eq!(p[1], 0.5);
        assert_eq!(m.predict(array![[2.0]].view()), vec![0]);
    }

    #[test]
    fn fitted_moments_are_population_estimates() {
        let x = array![[1.0], [3.0], [10.0], [14.0]];
        let m = GaussianNb::fit(&NbParams { var_smoothing: 0.0 }, x.view(), &[0, 0, 1, 1], 2).unwrap();
        assert_eq!(m.means, array![[2.0], [12.0]]);
        assert_eq!(m.variances, array![[1.0], [4.0]]);
    }
}
