use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::cholesky_solve;

use super::{argmax, class_counts};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LdaParams {
    /// Ridge added to the pooled covariance diagonal, as a fraction of its mean diagonal.
    pub ridge: f64,
}

impl Default for LdaParams {
    fn default() -> Self {
        Self { ridge: 1e-6 }
    }
}

impl LdaParams {
    pub fn check(&self) -> Result<()> {
        if !(self.ridge >= 0.0) {
            return Err(Error::InvalidParameter(format!("LDA ridge {}", self.ridge)));
        }
        Ok(())
    }
}

/// Linear discriminant analysis with a shared (pooled) covariance.
///
/// Scores are `δ_c(x) = xᵀΣ⁻¹μ_c − ½μ_cᵀΣ⁻¹μ_c + log π_c`, kept as one
/// coefficient row and one intercept per class seen in training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearDiscriminant {
    /// Class index for each coefficient row.
    pub classes: Vec<usize>,
    /// `|classes| × d`, rows are `Σ⁻¹μ_c`.
    pub coef: Array2<f64>,
    pub intercept: Array1<f64>,
    pub class_count: usize,
}

impl LinearDiscriminant {
    pub fn fit(params: &LdaParams, x: ArrayView2<'_, f64>, y: &[usize], class_count: usize) -> Result<Self> {
        params.check()?;
        let (n, d) = x.dim();
        let counts = class_counts(y, class_count);
        let classes: Vec<usize> = (0..class_count).filter(|&c| counts[c] > 0).collect();

        let mut means = Array2::<f64>::zeros((class_count, d));
        for (row, &c) in x.rows().into_iter().zip(y) {
            let mut m = means.row_mut(c);
            m += &row;
        }
        for c in &classes {
            let mut m = means.row_mut(*c);
            m /= counts[*c] as f64;
        }

        let mut cov = Array2::<f64>::zeros((d, d));
        for (row, &c) in x.rows().into_iter().zip(y) {
            let dev = &row - &means.row(c);
            for i in 0..d {
                for j in 0..d {
                    cov[[i, j]] += dev[i] * dev[j];
                }
            }
        }
        let dof = (n.saturating_sub(classes.len())).max(1) as f64;
        cov /= dof;
        let trace: f64 = cov.diag().sum();
        let eps = if trace > 0.0 {
            params.ridge * trace / d as f64
        } else {
            params.ridge.max(f64::MIN_POSITIVE)
        };
        for i in 0..d {
            cov[[i, i]] += eps;
        }

        let priors: Vec<f64> = classes.iter().map(|&c| counts[c] as f64 / n as f64).collect();
        let class_means: Vec<Array1<f64>> = classes.iter().map(|&c| means.row(c).to_owned()).collect();
        Self::from_parts(&classes, &class_means, &cov, &priors, class_count)
    }

    /// Builds the discriminant from explicit class means, shared covariance
    /// and priors.
    pub fn from_parts(
        classes: &[usize],
        means: &[Array1<f64>],
        covariance: &Array2<f64>,
        priors: &[f64],
        class_count: usize,
    ) -> Result<Self> {
        let d = covariance.nrows();
        let mut coef = Array2::<f64>::zeros((classes.len(), d));
        let mut intercept = Array1::<f64>::zeros(classes.len());
        for (k, mu) in means.iter().enumerate() {
            let a = cholesky_solve(covariance, mu).ok_or_else(|| {
                Error::InvalidParameter("pooled covariance is not positive definite".into())
            })?;
            intercept[k] = -0.5 * mu.dot(&a) + priors[k].ln();
            coef.row_mut(k).assign(&a);
        }
        Ok(Self {
            classes: classes.to_vec(),
            coef,
            intercept,
            class_count,
        })
    }

    pub fn n_features(&self) -> usize {
        self.coef.ncols()
    }

    /// Discriminant scores, one column per entry of `classes`.
    pub fn decision_function(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        x.dot(&self.coef.t()) + &self.intercept
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<usize> {
        self.decision_function(x)
            .rows()
            .into_iter()
            .map(|r| self.classes[argmax(r.iter().copied())])
            .collect()
    }
}
