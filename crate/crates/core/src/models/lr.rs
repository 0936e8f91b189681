use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::sym_eigen;

use super::argmax;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrParams {
    /// L2 penalty on the non-bias weights.
    pub lambda: f64,
    pub max_iter: usize,
    /// Stop once the relative loss change falls below this.
    pub tol: f64,
    /// Multiplier on the curvature-bound step `1/L`. Halved on every loss increase.
    pub step_scale: f64,
}

impl Default for LrParams {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            max_iter: 500,
            tol: 1e-6,
            step_scale: 8.0,
        }
    }
}

impl LrParams {
    pub fn check(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !(self.tol > 0.0) || !(self.step_scale > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidParameter(format!("bad LR parameters {self:?}")));
        }
        Ok(())
    }
}

/// Multinomial logistic regression fitted by full-batch gradient descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    /// `(d + 1) × K`; the last row is the bias.
    pub weights: Array2<f64>,
    /// Loss after each accepted step, starting with the initial loss.
    pub loss_history: Vec<f64>,
}

fn with_bias(x: ArrayView2<'_, f64>) -> Array2<f64> {
    concatenate![Axis(1), x, Array2::ones((x.nrows(), 1))]
}

fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

/// Mean cross-entropy plus `(λ/2)‖W‖²` over the non-bias rows, and its
/// gradient. `xb` already carries the bias column.
pub(crate) fn loss_and_gradient(
    w: &Array2<f64>,
    xb: &Array2<f64>,
    y: &[usize],
    lambda: f64,
) -> (f64, Array2<f64>) {
    let n = xb.nrows() as f64;
    let d = w.nrows() - 1;
    let mut logits = xb.dot(w);
    let mut loss = 0.0;
    for (row, &c) in logits.rows().into_iter().zip(y) {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += lse - row[c];
    }
    loss /= n;
    softmax_rows(&mut logits);
    for (mut row, &c) in logits.rows_mut().into_iter().zip(y) {
        row[c] -= 1.0;
    }
    let mut grad = xb.t().dot(&logits) / n;
    let penalty = w.slice(s![..d, ..]);
    loss += 0.5 * lambda * penalty.iter().map(|v| v * v).sum::<f64>();
    grad.slice_mut(s![..d, ..]).scaled_add(lambda, &penalty);
    (loss, grad)
}

impl LogisticRegression {
    /// Exposed for gradient checks.
    pub fn loss_and_gradient(
        weights: &Array2<f64>,
        x: ArrayView2<'_, f64>,
        y: &[usize],
        lambda: f64,
    ) -> (f64, Array2<f64>) {
        loss_and_gradient(weights, &with_bias(x), y, lambda)
    }

    pub fn fit(params: &LrParams, x: ArrayView2<'_, f64>, y: &[usize], class_count: usize) -> Result<Self> {
        params.check()?;
        let xb = with_bias(x);
        let n = xb.nrows() as f64;

        // Softmax cross-entropy has curvature at most ½·λ_max(XᵀX/n).
        let gram = xb.t().dot(&xb) / n;
        let lmax = sym_eigen(&gram)?.eigenvalues[0];
        let lipschitz = 0.5 * lmax + params.lambda;
        let mut step = params.step_scale / lipschitz.max(f64::MIN_POSITIVE);

        let mut w = Array2::<f64>::zeros((xb.ncols(), class_count));
        let (mut loss, mut grad) = loss_and_gradient(&w, &xb, y, params.lambda);
        let mut loss_history = vec![loss];
        for _ in 0..params.max_iter {
            let candidate = &w - &(&grad * step);
            let (new_loss, new_grad) = loss_and_gradient(&candidate, &xb, y, params.lambda);
            if !(new_loss <= loss) {
                step *= 0.5;
                if step < 1e-300 {
                    break;
                }
                continue;
            }
            let rel = (loss - new_loss) / loss.abs().max(f64::MIN_POSITIVE);
            w = candidate;
            loss = new_loss;
            grad = new_grad;
            loss_history.push(loss);
            if rel < params.tol {
                break;
            }
        }
        Ok(Self {
            weights: w,
            loss_history,
        })
    }

    pub fn n_features(&self) -> usize {
        self.weights.nrows() - 1
    }

    pub fn class_count(&self) -> usize {
        self.weights.ncols()
    }

    pub fn decision_function(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        with_bias(x).dot(&self.weights)
    }

    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut p = self.decision_function(x);
        softmax_rows(&mut p);
        p
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<usize> {
        self.decision_function(x)
            .rows()
            .into_iter()
            .map(|r| argmax(r.iter().copied()))
            .collect()
    }
}
