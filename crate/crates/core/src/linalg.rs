//! Thin wrappers over the dense factorizations in `faer`.
//!
//! Matrices cross this boundary as row-major `f64` slices.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use num_complex::Complex64;

use crate::{Error, Result};

/// LU factorizations whose smallest-to-largest pivot ratio falls below this are rejected.
pub const PIVOT_RATIO_FLOOR: f64 = 1e-13;

pub(crate) fn to_mat(data: &[f64], rows: usize, cols: usize) -> Mat<f64> {
    assert_eq!(data.len(), rows * cols);
    Mat::from_fn(rows, cols, |i, j| data[i * cols + j])
}

/// A partial-pivoting LU factorization that can be reused for several right-hand sides.
pub struct LuFactor {
    lu: PartialPivLu<f64>,
    n: usize,
    pivot_ratio: f64,
}

impl LuFactor {
    pub fn new(data: &[f64], n: usize) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Dimension(format!("expected {n}x{n} matrix, got {} entries", data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem { pivot_ratio: f64::NAN });
        }
        let lu = to_mat(data, n, n).partial_piv_lu();
        let u = lu.U();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let p = u[(i, i)].abs();
            lo = lo.min(p);
            hi = hi.max(p);
        }
        let pivot_ratio = if hi > 0.0 { lo / hi } else { 0.0 };
        if !(pivot_ratio >= PIVOT_RATIO_FLOOR) {
            return Err(Error::SingularSystem { pivot_ratio });
        }
        Ok(Self { lu, n, pivot_ratio })
    }

    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return Err(Error::Dimension(format!("rhs has {} entries, expected {}", rhs.len(), self.n)));
        }
        let b = Mat::from_fn(self.n, 1, |i, _| rhs[i]);
        let x = self.lu.solve(&b);
        let out: Vec<f64> = (0..self.n).map(|i| x[(i, 0)]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem { pivot_ratio: self.pivot_ratio });
        }
        Ok(out)
    }
}

/// Solves `A x = b` for a square row-major `A`.
pub fn solve(data: &[f64], n: usize, rhs: &[f64]) -> Result<Vec<f64>> {
    LuFactor::new(data, n)?.solve(rhs)
}

/// Singular values in descending order.
pub fn singular_values(data: &[f64], rows: usize, cols: usize) -> Result<Vec<f64>> {
    let mut s = to_mat(data, rows, cols)
        .singular_values()
        .map_err(|e| Error::EigensolverFailure(format!("SVD failed: {e:?}")))?;
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Generalized eigenpairs of `A v = lambda B v` as `(alpha, beta, vectors)` with
/// `lambda = alpha / beta`; `vectors[k]` is the eigenvector of pair `k`.
pub fn generalized_eigen(
    a: &[f64],
    b: &[f64],
    n: usize,
) -> Result<(Vec<Complex64>, Vec<Complex64>, Vec<Vec<Complex64>>)> {
    if a.len() != n * n || b.len() != n * n {
        return Err(Error::Dimension("generalized eigenproblem needs two n x n matrices".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::EigensolverFailure("non-finite matrix entry".into()));
    }
    let am = to_mat(a, n, n);
    let bm = to_mat(b, n, n);
    let gevd = am
        .generalized_eigen(&bm)
        .map_err(|e| Error::EigensolverFailure(format!("{e:?}")))?;
    let sa = gevd.S_a().column_vector();
    let sb = gevd.S_b().column_vector();
    let u = gevd.U();
    let alpha = (0..n).map(|k| sa[k]).collect();
    let beta = (0..n).map(|k| sb[k]).collect();
    let vectors = (0..n).map(|k| (0..n).map(|i| u[(i, k)]).collect()).collect();
    Ok((alpha, beta, vectors))
}
