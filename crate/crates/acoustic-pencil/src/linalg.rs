//! Thin wrappers over the dense backend: weighted inner products, LU solves,
//! smallest singular pairs and eigen-decompositions.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMat = Mat<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    Mat::zeros(r, c)
}

pub fn identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

/// ⟨u,v⟩ = Σ wᵢ ūᵢ vᵢ.
pub fn winner(w: &[f64], u: &[C64], v: &[C64]) -> C64 {
    w.iter().zip(u).zip(v).map(|((w, u), v)| u.conj() * v * *w).sum()
}

pub fn wnorm(w: &[f64], u: &[C64]) -> f64 {
    w.iter().zip(u).map(|(w, u)| w * u.norm_sqr()).sum::<f64>().sqrt()
}

/// Σ wᵢ uᵢ (no conjugation), the pairing ⟨1,u⟩.
pub fn wsum(w: &[f64], u: &[C64]) -> C64 {
    w.iter().zip(u).map(|(w, u)| u * *w).sum()
}

pub fn norm2(u: &[C64]) -> f64 {
    u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn matvec(a: &CMat, x: &[C64]) -> Vec<C64> {
    assert_eq!(a.ncols(), x.len());
    let mut y = vec![C64::new(0.0, 0.0); a.nrows()];
    for (j, xj) in x.iter().enumerate() {
        if *xj == C64::new(0.0, 0.0) {
            continue;
        }
        let col = a.col(j);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += col[i] * xj;
        }
    }
    y
}

/// y = Aᴴ x.
pub fn matvec_adjoint(a: &CMat, x: &[C64]) -> Vec<C64> {
    assert_eq!(a.nrows(), x.len());
    (0..a.ncols())
        .map(|j| {
            let col = a.col(j);
            (0..a.nrows()).map(|i| col[i].conj() * x[i]).sum()
        })
        .collect()
}

pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    a * b
}

pub fn col_to_vec(m: &CMat, j: usize) -> Vec<C64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

pub fn vec_to_col(v: &[C64]) -> CMat {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

/// Frobenius norm.
pub fn fro(a: &CMat) -> f64 {
    a.norm_l2()
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(a: &CMat) -> Result<f64> {
    let s = a
        .singular_values()
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    Ok(s.first().copied().unwrap_or(0.0))
}

/// Copy of the sub-block `rows × cols`.
pub fn sub(a: &CMat, r0: usize, nr: usize, c0: usize, nc: usize) -> CMat {
    a.submatrix(r0, c0, nr, nc).to_owned()
}

pub fn set_block(a: &mut CMat, r0: usize, c0: usize, b: &CMat) {
    a.submatrix_mut(r0, c0, b.nrows(), b.ncols()).copy_from(b);
}

/// Weighted transpose (A^T)_{ij} = w_j A_{ji} / w_i, the adjoint of a real
/// kernel matrix with respect to ⟨·,·⟩_w.
pub fn wtranspose(a: &CMat, w: &[f64]) -> CMat {
    let n = a.nrows();
    Mat::from_fn(n, n, |i, j| a[(j, i)] * (w[j] / w[i]))
}

pub struct Lu {
    lu: PartialPivLu<C64>,
    n: usize,
}

impl Lu {
    pub fn new(a: &CMat) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Domain("LU of non-square matrix".into()));
        }
        let lu = a.partial_piv_lu();
        let n = a.nrows();
        let u = lu.U();
        let scale = (0..n).map(|i| u[(i, i)].norm()).fold(0.0, f64::max);
        let small = (0..n).map(|i| u[(i, i)].norm()).fold(f64::INFINITY, f64::min);
        if !(small.is_finite() && scale.is_finite()) || small == 0.0 || small < 1e-300 * scale {
            return Err(Error::Singular("zero pivot in LU".into()));
        }
        Ok(Self { lu, n })
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        assert_eq!(b.len(), self.n);
        col_to_vec(&self.lu.solve(vec_to_col(b)), 0)
    }

    pub fn solve_mat(&self, b: &CMat) -> CMat {
        self.lu.solve(b)
    }

    /// Solves Aᴴ x = b.
    pub fn solve_adjoint(&self, b: &[C64]) -> Vec<C64> {
        col_to_vec(&self.lu.solve_adjoint(vec_to_col(b)), 0)
    }
}

pub fn solve(a: &CMat, b: &[C64]) -> Result<Vec<C64>> {
    Ok(Lu::new(a)?.solve(b))
}

/// Smallest singular value and right singular vector.  Dense SVD below
/// `dense_limit`, otherwise inverse iteration on AᴴA through one LU (fast
/// near a kernel point, where the gap to the next singular value is large).
pub fn smallest_singular(a: &CMat, dense_limit: usize) -> Result<(f64, Vec<C64>)> {
    let n = a.ncols();
    if n == 0 {
        return Err(Error::Domain("empty matrix".into()));
    }
    if n < dense_limit {
        let svd = a.svd().map_err(|e| Error::Decomposition(format!("{e:?}")))?;
        let s = svd.S().column_vector();
        let k = s.nrows() - 1;
        let v = svd.V();
        Ok((s[k].re, (0..n).map(|i| v[(i, k)]).collect()))
    } else {
        let lu = match Lu::new(a) {
            Ok(lu) => lu,
            Err(_) => {
                // exactly singular: a null vector exists; fall back to dense SVD
                return smallest_singular(a, usize::MAX);
            }
        };
        let mut x = vec![C64::new(1.0, 0.0); n];
        let mut sigma = 0.0;
        for _ in 0..500 {
            let y = lu.solve_adjoint(&x);
            let z = lu.solve(&y);
            let nz = norm2(&z);
            let prev = sigma;
            sigma = (norm2(&x) / nz).sqrt();
            x = z.iter().map(|v| v / nz).collect();
            if (sigma - prev).abs() <= 1e-13 * sigma {
                break;
            }
        }
        let r = norm2(&matvec(a, &x));
        Ok((r, x))
    }
}

/// Smallest singular value only (no singular vectors).
pub fn smallest_singular_value(a: &CMat) -> Result<f64> {
    if a.ncols() == 0 {
        return Err(Error::Domain("empty matrix".into()));
    }
    let s = a.singular_values().map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    Ok(s.iter().copied().fold(f64::INFINITY, f64::min))
}

/// σ_min by inverse iteration on AᴴA through one LU, to relative accuracy
/// `rtol` (at most 60 steps).  Returns 0 for an exactly singular matrix.
pub fn smallest_singular_estimate(a: &CMat, rtol: f64) -> Result<f64> {
    let n = a.ncols();
    if n == 0 {
        return Err(Error::Domain("empty matrix".into()));
    }
    let lu = match Lu::new(a) {
        Ok(lu) => lu,
        Err(_) => return Ok(0.0),
    };
    // deterministic start with all modes present
    let mut x: Vec<C64> = (0..n).map(|i| C64::new(1.0, 0.37 * ((i * 7919) % 101) as f64 / 101.0)).collect();
    let nx = norm2(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut sigma = f64::INFINITY;
    for _ in 0..60 {
        let z = lu.solve(&lu.solve_adjoint(&x));
        let nz = norm2(&z);
        if !(nz.is_finite() && nz > 0.0) {
            return Ok(0.0);
        }
        let next = (1.0 / nz).sqrt();
        x = z.iter().map(|v| v / nz).collect();
        let done = (next - sigma).abs() <= rtol * next;
        sigma = next;
        if done {
            break;
        }
    }
    Ok(sigma)
}

/// Eigen-decomposition of a real symmetric matrix, eigenvalues descending.
pub fn symmetric_eigen(a: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let e = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let n = a.nrows();
    let s = e.S().column_vector();
    let u = e.U();
    let vals: Vec<f64> = (0..n).rev().map(|i| s[i]).collect();
    let vecs = Mat::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
    Ok((vals, vecs))
}

/// Eigenvalues and right eigenvectors of a general real matrix.
pub fn general_eigen(a: &Mat<f64>) -> Result<(Vec<C64>, CMat)> {
    let e = a.eigen().map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let n = a.nrows();
    let s = e.S().column_vector();
    let u = e.U();
    Ok(((0..n).map(|i| s[i]).collect(), Mat::from_fn(n, n, |i, j| u[(i, j)])))
}

/// Least-squares slope of log|y| against log|x|.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.abs().ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
