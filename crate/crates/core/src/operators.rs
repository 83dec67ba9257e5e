//! Dense Nyström discretizations of the boundary operators.
//!
//! Entry `(i, j)` multiplies the density value at node `j` and is evaluated at
//! node `i`. All kernels except the single layer are smooth on the boundary, so
//! the plain trapezoid rule is used; the single layer splits off the periodic
//! logarithm on same-hole blocks and integrates it with trigonometric weights.

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::geometry::QuadratureGrid;
use crate::green::{self, dot, kernel_diagonal};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    K,
    Kstar,
    S,
    S0,
    X,
    M,
    Composite,
}

/// Node counts and torus parameter the operator was assembled on.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFingerprint {
    pub nodes_per_hole: Vec<usize>,
    pub tau: Complex64,
}

impl GridFingerprint {
    pub fn of(grid: &QuadratureGrid) -> Self {
        Self {
            nodes_per_hole: grid.nodes_per_hole(),
            tau: grid.torus().tau(),
        }
    }
}

/// A square row-major matrix tied to the grid it was assembled on.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    n: usize,
    data: Vec<f64>,
    kind: OperatorKind,
    fingerprint: GridFingerprint,
}

impl DenseOperator {
    fn zeros(grid: &QuadratureGrid, kind: OperatorKind) -> Self {
        let n = grid.len();
        Self {
            n,
            data: vec![0.0; n * n],
            kind,
            fingerprint: GridFingerprint::of(grid),
        }
    }

    /// Wraps raw row-major data; used for composites and loaded dumps.
    pub fn from_parts(data: Vec<f64>, n: usize, kind: OperatorKind, fingerprint: GridFingerprint) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Dimension(format!("{} entries for a {n}x{n} operator", data.len())));
        }
        if fingerprint.nodes_per_hole.iter().sum::<usize>() != n {
            return Err(Error::Dimension("fingerprint node count disagrees with matrix size".into()));
        }
        Ok(Self { n, data, kind, fingerprint })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn fingerprint(&self) -> &GridFingerprint {
        &self.fingerprint
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Whether this operator was assembled on `grid`.
    pub fn matches(&self, grid: &QuadratureGrid) -> bool {
        self.fingerprint == GridFingerprint::of(grid)
    }

    pub fn ensure_matches(&self, grid: &QuadratureGrid) -> Result<()> {
        if self.matches(grid) {
            Ok(())
        } else {
            Err(Error::Dimension(format!("{:?} operator was assembled on a different grid", self.kind)))
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::Dimension(format!("vector of length {} for a {}x{} operator", x.len(), self.n, self.n)));
        }
        Ok((0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `self + c I`
    pub fn shifted(&self, c: f64) -> DenseOperator {
        let mut out = self.clone();
        for i in 0..self.n {
            out.data[i * self.n + i] += c;
        }
        out.kind = OperatorKind::Composite;
        out
    }

    /// `alpha self + beta other`
    pub fn combine(&self, alpha: f64, other: &DenseOperator, beta: f64) -> Result<DenseOperator> {
        self.same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| alpha * a + beta * b).collect();
        Ok(DenseOperator {
            n: self.n,
            data,
            kind: OperatorKind::Composite,
            fingerprint: self.fingerprint.clone(),
        })
    }

    /// Matrix product `self * other`.
    pub fn compose(&self, other: &DenseOperator) -> Result<DenseOperator> {
        self.same_shape(other)?;
        let n = self.n;
        let mut data = vec![0.0; n * n];
        data.par_chunks_mut(n).enumerate().for_each(|(i, out)| {
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != 0.0 {
                    for (o, b) in out.iter_mut().zip(other.row(k)) {
                        *o += a * b;
                    }
                }
            }
        });
        Ok(DenseOperator {
            n,
            data,
            kind: OperatorKind::Composite,
            fingerprint: self.fingerprint.clone(),
        })
    }

    pub fn transpose(&self) -> DenseOperator {
        let n = self.n;
        let mut out = self.clone();
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j];
            }
        }
        out.kind = OperatorKind::Composite;
        out
    }

    fn same_shape(&self, other: &DenseOperator) -> Result<()> {
        if self.fingerprint != other.fingerprint {
            return Err(Error::Dimension("operators belong to different grids".into()));
        }
        Ok(())
    }

    /// Writes two little-endian `u64` dimensions followed by row-major little-endian `f64`s.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a dump written by [`DenseOperator::write_binary`]; returns `(rows, cols, data)`.
    pub fn read_binary<R: Read>(mut r: R) -> std::io::Result<(usize, usize, Vec<f64>)> {
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let rows = u64::from_le_bytes(word) as usize;
        r.read_exact(&mut word)?;
        let cols = u64::from_le_bytes(word) as usize;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            r.read_exact(&mut word)?;
            data.push(f64::from_le_bytes(word));
        }
        Ok((rows, cols, data))
    }
}

fn check_even(n: usize) -> Result<()> {
    if n < 4 || n % 2 != 0 {
        Err(Error::InvalidN(n))
    } else {
        Ok(())
    }
}

/// Weight for `int_0^{2pi} log(4 sin^2((s - t)/2)) f(t) dt` attached to the node
/// `t_j` at offset `d = s - t_j`, for `n` equispaced nodes.
pub fn kress_log_weight(n: usize, d: f64) -> f64 {
    let nf = n as f64;
    let step = Complex64::from_polar(1.0, d);
    let mut e = step;
    let mut sum = 0.0;
    for m in 1..n / 2 {
        sum += e.re / m as f64;
        e *= step;
    }
    -4.0 * PI / nf * sum - 4.0 * PI / (nf * nf) * (0.5 * nf * d).cos()
}

/// The circulant weights `R_{ij}` for `n` equispaced nodes, as a row-major `n x n` array.
pub fn kress_log_weights(n: usize) -> Result<Vec<f64>> {
    check_even(n)?;
    let row = kress_log_row(n);
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = row[(i + n - j) % n];
        }
    }
    Ok(out)
}

/// `R` as a function of `(i - j) mod n`.
fn kress_log_row(n: usize) -> Vec<f64> {
    let nf = n as f64;
    (0..n)
        .map(|k| {
            let mut sum = 0.0;
            for m in 1..n / 2 {
                // reduce the product so the cosine argument stays exact
                sum += (2.0 * PI * ((m * k) % n) as f64 / nf).cos() / m as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            -4.0 * PI / nf * sum - 4.0 * PI / (nf * nf) * sign
        })
        .collect()
}

/// Fills each row in parallel. Every entry is computed independently, so the
/// result does not depend on the thread count.
fn fill_rows<F>(op: &mut DenseOperator, f: F) -> Result<()>
where
    F: Fn(usize, &mut [f64]) -> Result<()> + Sync,
{
    let n = op.n;
    op.data
        .par_chunks_mut(n.max(1))
        .enumerate()
        .try_for_each(|(i, row)| f(i, row))
}

/// Double-layer operator `K`.
pub fn assemble_k(grid: &QuadratureGrid) -> Result<DenseOperator> {
    let torus = grid.torus();
    let pts = grid.points();
    let w = grid.weights();
    let mut op = DenseOperator::zeros(grid, OperatorKind::K);
    fill_rows(&mut op, |i, row| {
        for (j, out) in row.iter_mut().enumerate() {
            *out = if i == j {
                kernel_diagonal(&pts[i]) * w[i]
            } else {
                green::normal_deriv_source(pts[i].position, &pts[j], torus)? * w[j]
            };
        }
        Ok(())
    })?;
    Ok(op)
}

/// Adjoint double-layer operator `K*`.
pub fn assemble_kstar(grid: &QuadratureGrid) -> Result<DenseOperator> {
    let torus = grid.torus();
    let pts = grid.points();
    let w = grid.weights();
    let mut op = DenseOperator::zeros(grid, OperatorKind::Kstar);
    fill_rows(&mut op, |i, row| {
        for (j, out) in row.iter_mut().enumerate() {
            *out = if i == j {
                kernel_diagonal(&pts[i]) * w[i]
            } else {
                green::normal_deriv_target(&pts[i], pts[j].position, torus)? * w[j]
            };
        }
        Ok(())
    })?;
    Ok(op)
}

/// Single-layer operator `S`.
pub fn assemble_s(grid: &QuadratureGrid) -> Result<DenseOperator> {
    Ok(assemble_kstar_and_s(grid)?.1)
}

/// `K*` and `S` from a single pass over node pairs.
pub fn assemble_kstar_and_s(grid: &QuadratureGrid) -> Result<(DenseOperator, DenseOperator)> {
    let torus = grid.torus();
    let pts = grid.points();
    let w = grid.weights();
    let n = grid.len();
    let log_rows: Vec<Vec<f64>> = grid.blocks().iter().map(|b| kress_log_row(b.len())).collect();
    let mut kstar = DenseOperator::zeros(grid, OperatorKind::Kstar);
    let mut s = DenseOperator::zeros(grid, OperatorKind::S);
    kstar
        .data
        .par_chunks_mut(n)
        .zip(s.data.par_chunks_mut(n))
        .enumerate()
        .try_for_each(|(i, (krow, srow))| -> Result<()> {
            let hi = grid.hole_of(i);
            let block = grid.block(hi);
            let local_i = i - block.range.start;
            let nj = block.len();
            let h = 2.0 * PI / nj as f64;
            for j in 0..n {
                if i == j {
                    krow[j] = kernel_diagonal(&pts[i]) * w[i];
                    let rem = green::remainder_diagonal(pts[i].speed, torus);
                    srow[j] = -log_rows[hi][0] * pts[i].speed / (4.0 * PI) + rem * w[j];
                    continue;
                }
                let (g, grad) = green::green_with_gradient(pts[i].position - pts[j].position, torus)?;
                krow[j] = dot(grad, pts[i].normal) * w[j];
                if grid.hole_of(j) == hi {
                    let local_j = j - block.range.start;
                    let k = (local_i + nj - local_j) % nj;
                    let half = 0.5 * h * k as f64;
                    let log_part = (4.0 * half.sin().powi(2)).ln() / (4.0 * PI);
                    srow[j] = -log_rows[hi][k] * pts[j].speed / (4.0 * PI) + (g + log_part) * w[j];
                } else {
                    srow[j] = g * w[j];
                }
            }
            Ok(())
        })?;
    Ok((kstar, s))
}

/// Mean operator `M`: every row is `w^T / sum(w)`.
pub fn assemble_m(grid: &QuadratureGrid) -> DenseOperator {
    let total = grid.total_length();
    let w = grid.weights();
    let mut op = DenseOperator::zeros(grid, OperatorKind::M);
    let n = op.n;
    for row in op.data.chunks_mut(n) {
        for (o, wj) in row.iter_mut().zip(w) {
            *o = wj / total;
        }
    }
    op
}

/// Characteristic operator `X`: integrates over the node's own hole, except the last hole.
pub fn assemble_x(grid: &QuadratureGrid) -> DenseOperator {
    let mut op = DenseOperator::zeros(grid, OperatorKind::X);
    let n = op.n;
    let last = grid.hole_count() - 1;
    for block in grid.blocks().iter().take(last) {
        for i in block.range.clone() {
            for c in block.range.clone() {
                op.data[i * n + c] = grid.weights()[c];
            }
        }
    }
    op
}

/// Modified single layer `S0 = S (I - M) + M`.
pub fn assemble_s0(grid: &QuadratureGrid) -> Result<DenseOperator> {
    let s = assemble_s(grid)?;
    Ok(s0_from_s(&s, grid))
}

/// `S (I - M) + M` from an assembled `S`. Since `M` has identical rows,
/// `(S M)_{ij} = (sum_k S_ik) w_j / |dOmega|`.
pub fn s0_from_s(s: &DenseOperator, grid: &QuadratureGrid) -> DenseOperator {
    let n = s.n;
    let total = grid.total_length();
    let w = grid.weights();
    let mut out = s.clone();
    out.kind = OperatorKind::S0;
    out.data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let rs: f64 = s.row(i).iter().sum();
        for (j, o) in row.iter_mut().enumerate() {
            *o += (1.0 - rs) * w[j] / total;
        }
    });
    out
}
