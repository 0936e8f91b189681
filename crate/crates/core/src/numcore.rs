//! Dense numeric kernels: sample covariance, a cyclic Jacobi eigensolver for
//! symmetric matrices, and whitening.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Eigendecomposition of a symmetric matrix, `A = V diag(λ) Vᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen {
    /// Sorted descending.
    pub eigenvalues: Array1<f64>,
    /// Column `i` is the unit eigenvector for `eigenvalues[i]`.
    pub eigenvectors: Array2<f64>,
}

impl SymEigen {
    /// `V diag(f(λ)) Vᵀ`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Array2<f64> {
        let v = &self.eigenvectors;
        let scaled = v * &self.eigenvalues.mapv(f).insert_axis(Axis(0));
        scaled.dot(&v.t())
    }

    pub fn reconstruct(&self) -> Array2<f64> {
        self.map_spectrum(|l| l)
    }
}

pub const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-12;
const SYMMETRY_REL_TOL: f64 = 1e-10;

pub fn column_means(x: ArrayView2<'_, f64>) -> Array1<f64> {
    let n = x.nrows().max(1) as f64;
    x.sum_axis(Axis(0)) / n
}

/// Copy of `x` with `mean` subtracted from every row.
pub fn center(x: ArrayView2<'_, f64>, mean: &Array1<f64>) -> Array2<f64> {
    &x - &mean.view().insert_axis(Axis(0))
}

/// Sample covariance (divisor `n − 1`). Columns are mean-centred first unless
/// `centered` says they already are.
pub fn covariance_matrix(x: ArrayView2<'_, f64>, centered: bool) -> Result<Array2<f64>> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    let xc = if centered {
        x.to_owned()
    } else {
        center(x, &column_means(x))
    };
    let mut cov = xc.t().dot(&xc) / (n as f64 - 1.0);
    symmetrize(&mut cov);
    Ok(cov)
}

fn symmetrize(a: &mut Array2<f64>) {
    let d = a.nrows();
    for i in 0..d {
        for j in (i + 1)..d {
            let m = 0.5 * (a[[i, j]] + a[[j, i]]);
            a[[i, j]] = m;
            a[[j, i]] = m;
        }
    }
}

fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn off_diagonal_norm(a: &Array2<f64>) -> f64 {
    let d = a.nrows();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                s += a[[i, j]] * a[[i, j]];
            }
        }
    }
    s.sqrt()
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Sweeps until the off-diagonal Frobenius norm drops below `1e-12·‖A‖_F`.
/// Eigenvalues come back in descending order and every eigenvector has its
/// largest-magnitude entry positive, so the output is fully determined by the
/// input.
pub fn sym_eigen(a: &Array2<f64>) -> Result<SymEigen> {
    let d = a.nrows();
    if a.ncols() != d {
        return Err(Error::ColumnCountMismatch {
            expected: d,
            got: a.ncols(),
        });
    }
    let norm = frobenius(a);
    let mut asym: f64 = 0.0;
    for i in 0..d {
        for j in (i + 1)..d {
            asym = asym.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    if asym > SYMMETRY_REL_TOL * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::NotSymmetric(asym));
    }

    let mut m = a.clone();
    symmetrize(&mut m);
    let mut v = Array2::<f64>::eye(d);
    let threshold = JACOBI_REL_TOL * norm;

    let mut converged = off_diagonal_norm(&m) <= threshold;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence(sweeps));
        }
        sweeps += 1;
        for p in 0..d {
            for q in (p + 1)..d {
                rotate(&mut m, &mut v, p, q);
            }
        }
        converged = off_diagonal_norm(&m) <= threshold;
    }

    let mut order: Vec<usize> = (0..d).collect();
    // Stable sort keeps equal eigenvalues in their original diagonal order.
    order.sort_by(|&i, &j| m[[j, j]].total_cmp(&m[[i, i]]));
    let eigenvalues = Array1::from_iter(order.iter().map(|&i| m[[i, i]]));
    let mut eigenvectors = Array2::<f64>::zeros((d, d));
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src).to_owned();
        fix_sign(&mut col);
        eigenvectors.column_mut(dst).assign(&col);
    }
    Ok(SymEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// Flips `v` so that its largest-magnitude entry (first one on ties) is positive.
pub fn fix_sign(v: &mut Array1<f64>) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v.len() > 0 && v[best] < 0.0 {
        v.mapv_inplace(|x| -x);
    }
}

/// One Jacobi rotation zeroing `m[p][q]`, accumulated into `v`.
fn rotate(m: &mut Array2<f64>, v: &mut Array2<f64>, p: usize, q: usize) {
    let apq = m[[p, q]];
    if apq == 0.0 {
        return;
    }
    let app = m[[p, p]];
    let aqq = m[[q, q]];
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let d = m.nrows();
    for k in 0..d {
        let mkp = m[[k, p]];
        let mkq = m[[k, q]];
        m[[k, p]] = c * mkp - s * mkq;
        m[[k, q]] = s * mkp + c * mkq;
    }
    for k in 0..d {
        let mpk = m[[p, k]];
        let mqk = m[[q, k]];
        m[[p, k]] = c * mpk - s * mqk;
        m[[q, k]] = s * mpk + c * mqk;
    }
    m[[p, q]] = 0.0;
    m[[q, p]] = 0.0;

    for k in 0..d {
        let vkp = v[[k, p]];
        let vkq = v[[k, q]];
        v[[k, p]] = c * vkp - s * vkq;
        v[[k, q]] = s * vkp + c * vkq;
    }
}

/// Result of [`whiten`].
#[derive(Debug, Clone)]
pub struct Whitening {
    /// Centred and whitened data, `n × m`.
    pub data: Array2<f64>,
    /// `m × d` map `Λ^(-1/2) Vᵀ`, applied to centred rows.
    pub map: Array2<f64>,
    pub mean: Array1<f64>,
    /// Eigenvalues of the covariance that were kept.
    pub eigenvalues: Array1<f64>,
}

/// Whitens `x` to `components` dimensions so the output has identity sample
/// covariance. Directions with eigenvalue below `1e-12·λ_max` are discarded,
/// and requesting more components than survive is an error.
pub fn whiten(x: ArrayView2<'_, f64>, components: usize) -> Result<Whitening> {
    let (n, d) = x.dim();
    if n <= d {
        return Err(Error::TooFewRows { needed: d + 1, got: n });
    }
    if components == 0 || components > d {
        return Err(Error::BadComponentCount {
            requested: components,
            max: d,
        });
    }
    let mean = column_means(x);
    let xc = center(x, &mean);
    let cov = covariance_matrix(xc.view(), true)?;
    let eig = sym_eigen(&cov)?;
    let lmax = eig.eigenvalues[0];
    let available = eig
        .eigenvalues
        .iter()
        .take_while(|&&l| lmax > 0.0 && l > 1e-12 * lmax)
        .count();
    if available < components {
        return Err(Error::RankDeficient {
            requested: components,
            available,
        });
    }
    let mut map = Array2::<f64>::zeros((components, d));
    for i in 0..components {
        let scale = 1.0 / eig.eigenvalues[i].sqrt();
        map.row_mut(i)
            .assign(&(&eig.eigenvectors.column(i) * scale));
    }
    let data = xc.dot(&map.t());
    Ok(Whitening {
        data,
        map,
        mean,
        eigenvalues: eig.eigenvalues.slice(ndarray::s![..components]).to_owned(),
    })
}

/// Solves `A x = b` for symmetric positive-definite `A` by Cholesky
/// factorisation. Returns `None` if `A` is not positive definite.
pub fn cholesky_solve(a: &Array2<f64>, b: &Array1<f64>) -> Option<Array1<f64>> {
    let d = a.nrows();
    let mut l = Array2::<f64>::zeros((d, d));
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[[i, i]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    let mut y = Array1::<f64>::zeros(d);
    for i in 0..d {
        let mut s = b[i];
        for k in 0..i {
            s -= l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    let mut x = Array1::<f64>::zeros(d);
    for i in (0..d).rev() {
        let mut s = y[i];
        for k in (i + 1)..d {
            s -= l[[k, i]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    Some(x)
}
