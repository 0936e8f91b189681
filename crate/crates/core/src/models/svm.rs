//! Soft-margin RBF support vector machine trained by simplified SMO, with
//! one-vs-one voting for multiclass problems.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::class_counts;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub c: f64,
    /// `None` picks `1 / (d · mean feature variance)`.
    pub gamma: Option<f64>,
    /// KKT tolerance.
    pub tol: f64,
    /// Consecutive passes without any update before stopping.
    pub max_passes: usize,
    /// Hard cap on passes over the data.
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: None,
            tol: 1e-3,
            max_passes: 5,
            max_iter: 10_000,
        }
    }
}

impl SvmParams {
    pub fn check(&self) -> Result<()> {
        let gamma_ok = self.gamma.is_none_or(|g| g > 0.0);
        if !(self.c > 0.0) || !(self.tol > 0.0) || self.max_passes == 0 || self.max_iter == 0 || !gamma_ok {
            return Err(Error::InvalidParameter(format!("bad SVM parameters {self:?}")));
        }
        Ok(())
    }
}

/// Smallest change in a multiplier that counts as progress.
const ALPHA_EPS: f64 = 1e-5;

pub fn rbf_kernel(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>, gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b.iter()).map(|(p, q)| (p - q) * (p - q)).sum();
    (-gamma * d2).exp()
}

/// `1 / (d · mean_j Var(x_j))` with population variances; 1 if the data are constant.
pub fn scale_gamma(x: ArrayView2<'_, f64>) -> f64 {
    let (n, d) = x.dim();
    let mean_var = x
        .columns()
        .into_iter()
        .map(|col| {
            let m = col.sum() / n as f64;
            col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64
        })
        .sum::<f64>()
        / d as f64;
    if mean_var > 0.0 {
        1.0 / (d as f64 * mean_var)
    } else {
        1.0
    }
}

/// Dual solution of one binary problem.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl BinarySolution {
    /// `f(x_i) = Σ_k α_k y_k K(k, i) + b` for every training point.
    pub fn decision_values(&self, kernel: &Array2<f64>, y: &[f64]) -> Vec<f64> {
        (0..y.len())
            .map(|i| {
                self.alpha
                    .iter()
                    .zip(y)
                    .enumerate()
                    .map(|(k, (a, yk))| a * yk * kernel[[k, i]])
                    .sum::<f64>()
                    + self.bias
            })
            .collect()
    }
}

/// Simplified SMO on a precomputed kernel matrix with labels in {−1, +1}.
///
/// Each pass visits every multiplier in order. A KKT violator is paired with
/// a uniformly drawn partner; if that pair cannot move, the remaining indices
/// are tried in order from the drawn one. The pair is optimised
/// analytically. A pass that changes nothing refits the bias from the KKT
/// conditions, since pairwise steps only adjust it incidentally. The solver
/// stops after `max_passes` consecutive passes change nothing.
pub fn solve_binary(
    kernel: &Array2<f64>,
    y: &[f64],
    params: &SvmParams,
    rng: &mut impl Rng,
) -> BinarySolution {
    let n = y.len();
    let mut state = Smo {
        kernel,
        y,
        c: params.c,
        alpha: vec![0.0; n],
        b: 0.0,
        f: vec![0.0; n],
    };

    let mut passes = 0;
    let mut iterations = 0;
    while passes < params.max_passes && iterations < params.max_iter {
        iterations += 1;
        let mut changed = 0;
        for i in 0..n {
            let ei = state.f[i] - y[i];
            let violates = (y[i] * ei < -params.tol && state.alpha[i] < params.c)
                || (y[i] * ei > params.tol && state.alpha[i] > 0.0);
            if !violates || n < 2 {
                continue;
            }
            let mut j0 = rng.random_range(0..n - 1);
            if j0 >= i {
                j0 += 1;
            }
            let moved = (0..n)
                .map(|t| (j0 + t) % n)
                .filter(|&j| j != i)
                .any(|j| state.take_step(i, j));
            if moved {
                changed += 1;
            }
        }
        if changed == 0 {
            state.refit_bias();
            passes += 1;
        } else {
            passes = 0;
        }
    }
    BinarySolution {
        alpha: state.alpha,
        bias: state.b,
        iterations,
        converged: passes >= params.max_passes,
    }
}

/// Clamps to `[0, C]` and snaps values within rounding distance of a bound
/// onto it, so bound multipliers are never mistaken for free ones.
fn snap_to_box(a: f64, c: f64) -> f64 {
    let eps = 1e-12 * c;
    if a <= eps {
        0.0
    } else if a >= c - eps {
        c
    } else {
        a
    }
}

struct Smo<'a> {
    kernel: &'a Array2<f64>,
    y: &'a [f64],
    c: f64,
    alpha: Vec<f64>,
    b: f64,
    /// `f[i] = Σ_k α_k y_k K(k, i) + b`, updated incrementally.
    f: Vec<f64>,
}

impl Smo<'_> {
    /// Mean of `y_i − g_i` over free multipliers, where `g_i = f_i − b`; with
    /// no free multiplier, the midpoint of the interval of biases the bound
    /// ones allow.
    fn refit_bias(&mut self) {
        let (y, c) = (self.y, self.c);
        let mut free_sum = 0.0;
        let mut free_count = 0usize;
        let (mut lower, mut upper) = (f64::NEG_INFINITY, f64::INFINITY);
        for (i, &a) in self.alpha.iter().enumerate() {
            let target = y[i] - (self.f[i] - self.b);
            if a > 0.0 && a < c {
                free_sum += target;
                free_count += 1;
            } else if (a <= 0.0) == (y[i] > 0.0) {
                lower = lower.max(target);
            } else {
                upper = upper.min(target);
            }
        }
        let b_new = if free_count > 0 {
            free_sum / free_count as f64
        } else if lower.is_finite() && upper.is_finite() {
            0.5 * (lower + upper)
        } else if lower.is_finite() {
            lower
        } else if upper.is_finite() {
            upper
        } else {
            self.b
        };
        let db = b_new - self.b;
        self.f.iter_mut().for_each(|v| *v += db);
        self.b = b_new;
    }

    /// Jointly optimises `α_i, α_j`. Returns false if the pair cannot move.
    fn take_step(&mut self, i: usize, j: usize) -> bool {
        let (k, y, c) = (self.kernel, self.y, self.c);
        let ei = self.f[i] - y[i];
        let ej = self.f[j] - y[j];
        let (ai_old, aj_old) = (self.alpha[i], self.alpha[j]);
        let (lo, hi) = if y[i] != y[j] {
            ((aj_old - ai_old).max(0.0), (c + aj_old - ai_old).min(c))
        } else {
            ((ai_old + aj_old - c).max(0.0), (ai_old + aj_old).min(c))
        };
        if lo >= hi {
            return false;
        }
        let eta = 2.0 * k[[i, j]] - k[[i, i]] - k[[j, j]];
        if eta >= 0.0 {
            return false;
        }
        let aj = snap_to_box((aj_old - y[j] * (ei - ej) / eta).clamp(lo, hi), c);
        // Tiny moves are skipped unless they put the multiplier on a bound.
        let reaches_bound = aj != aj_old && (aj == 0.0 || aj == c);
        if (aj - aj_old).abs() < ALPHA_EPS && !reaches_bound {
            return false;
        }
        let ai = snap_to_box(ai_old + y[i] * y[j] * (aj_old - aj), c);
        let (dai, daj) = (ai - ai_old, aj - aj_old);
        let b1 = self.b - ei - y[i] * dai * k[[i, i]] - y[j] * daj * k[[i, j]];
        let b2 = self.b - ej - y[i] * dai * k[[i, j]] - y[j] * daj * k[[j, j]];
        let b_new = if ai > 0.0 && ai < c {
            b1
        } else if aj > 0.0 && aj < c {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        let db = b_new - self.b;
        let (ri, rj) = (k.row(i), k.row(j));
        for (t, ft) in self.f.iter_mut().enumerate() {
            *ft += y[i] * dai * ri[t] + y[j] * daj * rj[t] + db;
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        self.b = b_new;
        true
    }
}

/// One fitted pairwise classifier. Positive decision values vote for
/// `positive`, which is always the lower class index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryProblem {
    pub positive: usize,
    pub negative: usize,
    /// Indices into the model's support vector table.
    pub support: Vec<usize>,
    /// `α_i y_i` for each entry of `support`.
    pub coef: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportVectorMachine {
    pub gamma: f64,
    /// Union of support vectors over all pairwise problems.
    pub support_vectors: Array2<f64>,
    pub problems: Vec<BinaryProblem>,
    pub class_count: usize,
}

impl SupportVectorMachine {
    pub fn fit(
        params: &SvmParams,
        x: ArrayView2<'_, f64>,
        y: &[usize],
        class_count: usize,
        seed: u64,
    ) -> Result<Self> {
        params.check()?;
        let gamma = params.gamma.unwrap_or_else(|| scale_gamma(x));
        let counts = class_counts(y, class_count);
        let present: Vec<usize> = (0..class_count).filter(|&c| counts[c] > 0).collect();
        let pairs: Vec<(usize, usize)> = present
            .iter()
            .enumerate()
            .flat_map(|(i, &a)| present[i + 1..].iter().map(move |&b| (a, b)))
            .collect();

        let solved: Vec<(usize, usize, Vec<usize>, BinarySolution, Vec<f64>)> = pairs
            .par_iter()
            .enumerate()
            .map(|(p, &(a, b))| {
                let rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == a || y[i] == b).collect();
                let labels: Vec<f64> = rows.iter().map(|&i| if y[i] == a { 1.0 } else { -1.0 }).collect();
                let kernel = kernel_matrix(x, &rows, gamma);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(p as u64);
                let sol = solve_binary(&kernel, &labels, params, &mut rng);
                (a, b, rows, sol, labels)
            })
            .collect();

        let mut sv_slot: BTreeMap<usize, usize> = BTreeMap::new();
        for (_, _, rows, sol, _) in &solved {
            for (k, &a) in sol.alpha.iter().enumerate() {
                if a > 0.0 {
                    sv_slot.insert(rows[k], 0);
                }
            }
        }
        for (slot, v) in sv_slot.values_mut().enumerate() {
            *v = slot;
        }
        let sv_rows: Vec<usize> = sv_slot.keys().copied().collect();
        let support_vectors = x.select(ndarray::Axis(0), &sv_rows);

        let problems = solved
            .into_iter()
            .map(|(a, b, rows, sol, labels)| {
                let (support, coef) = sol
                    .alpha
                    .iter()
                    .enumerate()
                    .filter(|(_, &al)| al > 0.0)
                    .map(|(k, &al)| (sv_slot[&rows[k]], al * labels[k]))
                    .unzip();
                if !sol.converged {
                    log::warn!("SMO for classes {a} vs {b} hit the pass limit");
                }
                BinaryProblem {
                    positive: a,
                    negative: b,
                    support,
                    coef,
                    bias: sol.bias,
                    converged: sol.converged,
                }
            })
            .collect();

        Ok(Self {
            gamma,
            support_vectors,
            problems,
            class_count,
        })
    }

    pub fn n_features(&self) -> usize {
        self.support_vectors.ncols()
    }

    fn predict_one(&self, q: ArrayView1<'_, f64>) -> usize {
        let k: Vec<f64> = self
            .support_vectors
            .rows()
            .into_iter()
            .map(|sv| rbf_kernel(sv, q, self.gamma))
            .collect();
        let mut votes = vec![0usize; self.class_count];
        for p in &self.problems {
            let f: f64 = p.support.iter().zip(&p.coef).map(|(&s, c)| c * k[s]).sum::<f64>() + p.bias;
            if f >= 0.0 {
                votes[p.positive] += 1;
            } else {
                votes[p.negative] += 1;
            }
        }
        let mut best = 0;
        for c in 1..self.class_count {
            if votes[c] > votes[best] {
                best = c;
            }
        }
        best
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<usize> {
        x.rows().into_iter().map(|q| self.predict_one(q)).collect()
    }
}

fn kernel_matrix(x: ArrayView2<'_, f64>, rows: &[usize], gamma: f64) -> Array2<f64> {
    let n = rows.len();
    let mut k = Array2::<f64>::zeros((n, n));
    for a in 0..n {
        k[[a, a]] = 1.0;
        for b in (a + 1)..n {
            let v = rbf_kernel(x.row(rows[a]), x.row(rows[b]), gamma);
            k[[a, b]] = v;
            k[[b, a]] = v;
        }
    }
    k
}
