//! Feature extraction: PCA on the sample covariance and symmetric FastICA
//! with the logcosh contrast.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{DataForm, Dataset};
use crate::error::{Error, Result};
use crate::numcore::{self, center, column_means, covariance_matrix, sym_eigen};

/// Share of total variance that the retained components are expected to cover.
pub const VARIANCE_TARGET: f64 = 0.96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Array1<f64>,
    /// `d × m`; column `i` is the i-th principal axis.
    pub components: Array2<f64>,
    /// Covariance eigenvalues of the retained axes.
    pub explained_variance: Array1<f64>,
    pub explained_variance_ratio: Array1<f64>,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.ncols()
    }

    pub fn explained_ratio_sum(&self) -> f64 {
        self.explained_variance_ratio.sum()
    }

    pub fn transform_matrix(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: x.ncols(),
            });
        }
        Ok(center(x, &self.mean).dot(&self.components))
    }

    /// Maps projected rows back to the input space.
    pub fn inverse_transform(&self, z: ArrayView2<'_, f64>) -> Array2<f64> {
        z.dot(&self.components.t()) + &self.mean.view().insert_axis(Axis(0))
    }
}

fn check_reduce_input(train: &Dataset, m: usize) -> Result<()> {
    let (n, d) = train.features.dim();
    if m == 0 || m > d {
        return Err(Error::BadComponentCount { requested: m, max: d });
    }
    if n <= d {
        return Err(Error::TooFewRows { needed: d + 1, got: n });
    }
    Ok(())
}

/// Fits `m` principal axes: the top eigenvectors of the sample covariance.
pub fn fit_pca(train: &Dataset, m: usize) -> Result<PcaModel> {
    check_reduce_input(train, m)?;
    let x = train.features.view();
    let mean = column_means(x);
    let cov = covariance_matrix(center(x, &mean).view(), true)?;
    let eig = sym_eigen(&cov)?;
    let total: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0)).sum();
    let explained_variance = eig.eigenvalues.slice(s![..m]).mapv(|l| l.max(0.0));
    let explained_variance_ratio = if total > 0.0 {
        &explained_variance / total
    } else {
        Array1::zeros(m)
    };
    Ok(PcaModel {
        mean,
        components: eig.eigenvectors.slice(s![.., ..m]).to_owned(),
        explained_variance,
        explained_variance_ratio,
    })
}

pub fn transform_pca(model: &PcaModel, ds: &Dataset) -> Result<Dataset> {
    let z = model.transform_matrix(ds.features.view())?;
    let names = (1..=model.n_components()).map(|i| format!("PC{i}")).collect();
    ds.with_features(z, names, DataForm::Pca)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcaConfig {
    pub components: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for IcaConfig {
    fn default() -> Self {
        Self {
            components: 10,
            seed: 42,
            max_iter: 200,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcaModel {
    pub mean: Array1<f64>,
    /// `m × d`, applied to centred rows.
    pub unmixing: Array2<f64>,
    /// `m × d` whitening map the rotation acts on.
    pub whitening: Array2<f64>,
    /// Orthonormal `m × m` rotation; `unmixing = rotation · whitening`.
    pub rotation: Array2<f64>,
    pub iterations_used: usize,
    pub converged: bool,
}

impl IcaModel {
    pub fn n_components(&self) -> usize {
        self.unmixing.nrows()
    }

    pub fn transform_matrix(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: x.ncols(),
            });
        }
        Ok(center(x, &self.mean).dot(&self.unmixing.t()))
    }
}

/// `(W Wᵀ)^(-1/2) W`.
fn symmetric_decorrelation(w: &Array2<f64>) -> Result<Array2<f64>> {
    let eig = sym_eigen(&w.dot(&w.t()))?;
    let inv_sqrt = eig.map_spectrum(|l| 1.0 / l.max(f64::MIN_POSITIVE).sqrt());
    Ok(inv_sqrt.dot(w))
}

/// Parallel FastICA with `g = tanh`.
///
/// The data are whitened to `m` dimensions, then a random orthonormal
/// rotation is refined by the fixed-point update
/// `W ← E[g(Wx) xᵀ] − diag(E[g'(Wx)]) W` followed by symmetric
/// decorrelation, until every row moves by less than `tol` (measured as
/// `|1 − |⟨w_new, w_old⟩||`). Running out of iterations is not an error; the
/// model records `converged = false`.
///
/// Components are ordered by how much variance each contributes to the
/// original data (descending), and each unmixing row is sign-fixed so its
/// largest-magnitude entry is positive.
pub fn fit_ica(train: &Dataset, config: &IcaConfig) -> Result<IcaModel> {
    let m = config.components;
    check_reduce_input(train, m)?;
    if config.max_iter == 0 || !(config.tol > 0.0) {
        return Err(Error::InvalidParameter(
            "ICA needs max_iter ≥ 1 and tol > 0".into(),
        ));
    }
    let white = numcore::whiten(train.features.view(), m)?;
    let xw = &white.data; // n × m
    let n = xw.nrows() as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let init = Array2::from_shape_simple_fn((m, m), || StandardNormal.sample(&mut rng));
    let mut w = symmetric_decorrelation(&init)?;

    let mut iterations_used = 0;
    let mut converged = false;
    for it in 0..config.max_iter {
        let wx = xw.dot(&w.t()); // n × m
        let g = wx.mapv(f64::tanh);
        let g_prime_mean = g.mapv(|t| 1.0 - t * t).sum_axis(Axis(0)) / n;
        let mut w_new = g.t().dot(xw) / n;
        for i in 0..m {
            let scale = g_prime_mean[i];
            let mut row = w_new.row_mut(i);
            row.scaled_add(-scale, &w.row(i));
        }
        let w_new = symmetric_decorrelation(&w_new)?;
        let lim = (0..m)
            .map(|i| (1.0 - w_new.row(i).dot(&w.row(i)).abs()).abs())
            .fold(0.0, f64::max);
        w = w_new;
        iterations_used = it + 1;
        if lim < config.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("FastICA stopped after {iterations_used} iterations without converging");
    }

    // Variance each source contributes to the data: Σ_k λ_k w_ik².
    let contribution: Vec<f64> = (0..m)
        .map(|i| {
            w.row(i)
                .iter()
                .zip(&white.eigenvalues)
                .map(|(wi, l)| l * wi * wi)
                .sum()
        })
        .collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| contribution[b].total_cmp(&contribution[a]));

    let mut rotation = Array2::<f64>::zeros((m, m));
    for (dst, &src) in order.iter().enumerate() {
        rotation.row_mut(dst).assign(&w.row(src));
    }
    let mut unmixing = rotation.dot(&white.map);
    for i in 0..m {
        let row = unmixing.row(i);
        let peak = row
            .iter()
            .copied()
            .reduce(|a, b| if b.abs() > a.abs() { b } else { a })
            .unwrap_or(0.0);
        if peak < 0.0 {
            unmixing.row_mut(i).mapv_inplace(|v| -v);
            rotation.row_mut(i).mapv_inplace(|v| -v);
        }
    }

    Ok(IcaModel {
        mean: white.mean,
        unmixing,
        whitening: white.map,
        rotation,
        iterations_used,
        converged,
    })
}

pub fn transform_ica(model: &IcaModel, ds: &Dataset) -> Result<Dataset> {
    let z = model.transform_matrix(ds.features.view())?;
    let names = (1..=model.n_components()).map(|i| format!("IC{i}")).collect();
    ds.with_features(z, names, DataForm::Ica)
}
