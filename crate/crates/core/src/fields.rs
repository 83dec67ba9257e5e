//! Layer potentials away from the boundary, fluxes, residuals and convergence studies.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::elliptic::Torus;
use crate::geometry::{build_grid, curve_eval, Hole, QuadratureGrid, Region};
use crate::green::{self, green, normal_deriv_source};
use crate::operators::{self, kress_log_weight, DenseOperator};
use crate::solvers::{self, steklov_flux, DirichletSolution, NeumannConvention, NeumannSolution, SteklovEigenpair};
use crate::{Error, Result};

fn check_density(phi: &[f64], grid: &QuadratureGrid) -> Result<()> {
    if phi.len() != grid.len() {
        return Err(Error::Dimension(format!("density has {} values for {} nodes", phi.len(), grid.len())));
    }
    Ok(())
}

/// `D[phi](z)` by the trapezoid rule.
pub fn eval_double_layer(phi: &[f64], grid: &QuadratureGrid, z: Complex64) -> Result<f64> {
    check_density(phi, grid)?;
    let mut sum = 0.0;
    for (i, p) in grid.points().iter().enumerate() {
        if phi[i] != 0.0 {
            sum += normal_deriv_source(z, p, grid.torus())? * phi[i] * grid.weights()[i];
        }
    }
    Ok(sum)
}

/// `S[phi](z)` by the trapezoid rule.
pub fn eval_single_layer(phi: &[f64], grid: &QuadratureGrid, z: Complex64) -> Result<f64> {
    check_density(phi, grid)?;
    let mut sum = 0.0;
    for (i, p) in grid.points().iter().enumerate() {
        if phi[i] != 0.0 {
            sum += green(z - p.position, grid.torus())? * phi[i] * grid.weights()[i];
        }
    }
    Ok(sum)
}

pub fn eval_dirichlet(sol: &DirichletSolution<'_>, z: Complex64) -> Result<f64> {
    let mut u = eval_double_layer(&sol.phi, sol.grid, z)?;
    for (a, beta) in sol.fluxes.iter().zip(&sol.betas) {
        if *a != 0.0 {
            u += a * green(z - beta, sol.grid.torus())?;
        }
    }
    Ok(u)
}

pub fn eval_neumann(sol: &NeumannSolution<'_>, z: Complex64) -> Result<f64> {
    Ok(eval_single_layer(&sol.phi, sol.grid, z)? + sol.constant)
}

/// `S0[phi](z) = S[phi - mean](z) + mean`.
pub fn eval_steklov(pair: &SteklovEigenpair<'_>, z: Complex64) -> Result<f64> {
    let mean = pair.grid.mean(&pair.phi);
    let centered: Vec<f64> = pair.phi.iter().map(|v| v - mean).collect();
    Ok(eval_single_layer(&centered, pair.grid, z)? + mean)
}

/// A solved problem that can be evaluated off the boundary.
pub trait Potential: Sync {
    fn grid(&self) -> &QuadratureGrid;

    fn eval(&self, z: Complex64) -> Result<f64>;

    /// Flux of the solution across hole `j`.
    fn flux(&self, j: usize) -> f64;

    fn eval_many(&self, zs: &[Complex64]) -> Result<Vec<f64>> {
        zs.par_iter().map(|&z| self.eval(z)).collect()
    }

    fn total_flux(&self) -> f64 {
        (0..self.grid().hole_count()).map(|j| self.flux(j)).sum()
    }
}

impl Potential for DirichletSolution<'_> {
    fn grid(&self) -> &QuadratureGrid {
        self.grid
    }

    fn eval(&self, z: Complex64) -> Result<f64> {
        eval_dirichlet(self, z)
    }

    fn flux(&self, j: usize) -> f64 {
        self.fluxes[j]
    }
}

impl Potential for NeumannSolution<'_> {
    fn grid(&self) -> &QuadratureGrid {
        self.grid
    }

    fn eval(&self, z: Complex64) -> Result<f64> {
        eval_neumann(self, z)
    }

    fn flux(&self, j: usize) -> f64 {
        self.grid.integrate_over_hole(&self.phi, j)
    }
}

impl Potential for SteklovEigenpair<'_> {
    fn grid(&self) -> &QuadratureGrid {
        self.grid
    }

    fn eval(&self, z: Complex64) -> Result<f64> {
        eval_steklov(self, z)
    }

    fn flux(&self, j: usize) -> f64 {
        steklov_flux(self, j)
    }
}

pub fn flux(solution: &dyn Potential, j: usize) -> f64 {
    solution.flux(j)
}

/// Trigonometric interpolant of samples at `t_k = 2 pi k / N`, `N` even.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl TrigInterpolant {
    pub fn new(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n < 2 || n % 2 != 0 {
            return Err(Error::InvalidN(n));
        }
        let half = n / 2;
        let nf = n as f64;
        let mut cos = vec![0.0; half + 1];
        let mut sin = vec![0.0; half + 1];
        for k in 0..=half {
            let (mut a, mut b) = (0.0, 0.0);
            for (j, v) in values.iter().enumerate() {
                let arg = 2.0 * PI * ((k * j) % n) as f64 / nf;
                a += v * arg.cos();
                b += v * arg.sin();
            }
            let scale = if k == 0 || k == half { 1.0 / nf } else { 2.0 / nf };
            cos[k] = a * scale;
            sin[k] = if k == half { 0.0 } else { b * scale };
        }
        Ok(Self { cos, sin })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let step = Complex64::from_polar(1.0, t);
        let mut e = Complex64::new(1.0, 0.0);
        let mut sum = 0.0;
        for (a, b) in self.cos.iter().zip(&self.sin) {
            sum += a * e.re + b * e.im;
            e *= step;
        }
        sum
    }

    /// Values at `m` equispaced parameters.
    pub fn resample(&self, m: usize) -> Vec<f64> {
        (0..m).map(|k| self.eval(2.0 * PI * k as f64 / m as f64)).collect()
    }
}

/// Interpolates a density hole by hole from `from` onto the nodes of `to` (same holes).
pub fn interpolate_density(phi: &[f64], from: &QuadratureGrid, to: &QuadratureGrid) -> Result<Vec<f64>> {
    check_density(phi, from)?;
    if from.hole_count() != to.hole_count() {
        return Err(Error::Dimension("grids have different hole counts".into()));
    }
    let mut out = Vec::with_capacity(to.len());
    for (bf, bt) in from.blocks().iter().zip(to.blocks()) {
        let interp = TrigInterpolant::new(&phi[bf.range.clone()])?;
        out.extend(interp.resample(bt.len()));
    }
    Ok(out)
}

/// Value of the double layer of a constant density `1` at `z` off the boundary.
pub fn gauss_constant(grid: &QuadratureGrid, z: Complex64) -> f64 {
    let ratio = grid.total_hole_area() / grid.torus().b();
    let inside = grid
        .holes()
        .iter()
        .any(|h| h.contains_offset(grid.torus().nearest_image(z - h.center)));
    if inside {
        1.0 - ratio
    } else {
        -ratio
    }
}

/// Nodes per unit distance-to-spacing used by [`NearEvaluator`].
const NEAR_OVERSAMPLING: f64 = 6.0;

/// Layer potentials at points close to the boundary.
///
/// The density is upsampled by trigonometric interpolation until the node spacing
/// is a fraction of the target distance; the double layer additionally subtracts
/// the density value at the closest node and adds it back through the exact
/// integral of the kernel.
pub struct NearEvaluator {
    fine: QuadratureGrid,
    phi: Vec<f64>,
}

impl NearEvaluator {
    /// Prepares evaluation at points no closer than `distance` to the boundary.
    pub fn new(grid: &QuadratureGrid, phi: &[f64], distance: f64) -> Result<Self> {
        if !(distance > 0.0) {
            return Err(Error::InvalidArgument(format!("distance must be positive, got {distance}")));
        }
        let counts: Vec<usize> = grid
            .blocks()
            .iter()
            .map(|b| {
                let need = (NEAR_OVERSAMPLING * b.perimeter / distance).ceil() as usize;
                let need = need.max(b.len());
                need + need % 2
            })
            .collect();
        let fine = grid.with_nodes(&counts)?;
        let phi = interpolate_density(phi, grid, &fine)?;
        Ok(Self { fine, phi })
    }

    pub fn fine_grid(&self) -> &QuadratureGrid {
        &self.fine
    }

    pub fn double_layer(&self, z: Complex64) -> Result<f64> {
        let torus = self.fine.torus();
        let nearest = (0..self.fine.len())
            .min_by(|&a, &b| {
                let da = torus.nearest_image(z - self.fine.point(a).position).norm();
                let db = torus.nearest_image(z - self.fine.point(b).position).norm();
                da.total_cmp(&db)
            })
            .unwrap_or(0);
        let anchor = self.phi[nearest];
        let shifted: Vec<f64> = self.phi.iter().map(|v| v - anchor).collect();
        Ok(eval_double_layer(&shifted, &self.fine, z)? + anchor * gauss_constant(&self.fine, z))
    }

    pub fn single_layer(&self, z: Complex64) -> Result<f64> {
        eval_single_layer(&self.phi, &self.fine, z)
    }
}

/// Single layer of a density given as a function of `(hole, t)`, sampled on a fixed
/// fine grid, and evaluable both off the boundary and at arbitrary boundary points.
pub struct LayerSampler {
    fine: QuadratureGrid,
    density: Vec<f64>,
    /// Trigonometric interpolants of the boundary trace, one per hole.
    trace: Vec<TrigInterpolant>,
}

impl LayerSampler {
    pub fn new<F>(holes: &[Hole], torus: &Torus, nodes_per_hole: usize, density: F) -> Result<Self>
    where
        F: Fn(usize, f64) -> f64,
    {
        let fine = build_grid(holes, &vec![nodes_per_hole; holes.len()], torus)?;
        let density: Vec<f64> = (0..fine.len()).map(|i| density(fine.hole_of(i), fine.param(i))).collect();
        let values = operators::assemble_s(&fine)?.apply(&density)?;
        let trace = fine
            .blocks()
            .iter()
            .map(|b| TrigInterpolant::new(&values[b.range.clone()]))
            .collect::<Result<_>>()?;
        Ok(Self { fine, density, trace })
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.fine
    }

    /// `S[density](z)` for `z` away from the boundary.
    pub fn at(&self, z: Complex64) -> Result<f64> {
        eval_single_layer(&self.density, &self.fine, z)
    }

    /// `S[density]` at the boundary point with parameter `s` on hole `j`, interpolated
    /// from the trace at the fine nodes.
    pub fn on_boundary(&self, j: usize, s: f64) -> f64 {
        self.trace[j].eval(s)
    }

    /// As [`LayerSampler::on_boundary`], integrating directly with the logarithmic
    /// weights centred at `s`.
    pub fn on_boundary_direct(&self, j: usize, s: f64) -> Result<f64> {
        let torus = self.fine.torus();
        let target = curve_eval(&self.fine.holes()[j], s)?;
        let mut sum = 0.0;
        for (k, p) in self.fine.points().iter().enumerate() {
            let w = self.fine.weights()[k];
            let v = if self.fine.hole_of(k) == j {
                let nj = self.fine.block(j).len();
                let d = s - self.fine.param(k);
                let half = (0.5 * d).sin();
                let rem = if half.abs() < 1e-14 {
                    green::remainder_diagonal(p.speed, torus)
                } else {
                    green(target.position - p.position, torus)? + (4.0 * half * half).ln() / (4.0 * PI)
                };
                -kress_log_weight(nj, d) * p.speed / (4.0 * PI) + rem * w
            } else {
                green(target.position - p.position, torus)? * w
            };
            sum += v * self.density[k];
        }
        Ok(sum)
    }

    /// `S[density]` at every node of `grid`, which must carry the same holes.
    pub fn on_grid(&self, grid: &QuadratureGrid) -> Result<Vec<f64>> {
        if grid.hole_count() != self.fine.hole_count() {
            return Err(Error::Dimension("grid carries different holes".into()));
        }
        Ok((0..grid.len())
            .into_par_iter()
            .map(|i| self.on_boundary(grid.hole_of(i), grid.param(i)))
            .collect())
    }
}

/// Refined-grid operators for the a posteriori Steklov residual.
pub struct SteklovResidualEstimator {
    refined: QuadratureGrid,
    kstar_half: DenseOperator,
    s: DenseOperator,
}

/// Node multiplier for the residual sampling.
pub const RESIDUAL_REFINEMENT: usize = 2;

impl SteklovResidualEstimator {
    pub fn new(grid: &QuadratureGrid) -> Result<Self> {
        let refined = grid.refined(RESIDUAL_REFINEMENT)?;
        let (kstar, s) = operators::assemble_kstar_and_s(&refined)?;
        Ok(Self {
            refined,
            kstar_half: kstar.shifted(0.5),
            s,
        })
    }

    /// `max |d_nu u - sigma u|` over the refined nodes.
    pub fn residual(&self, pair: &SteklovEigenpair<'_>) -> Result<f64> {
        let phi = interpolate_density(&pair.phi, pair.grid, &self.refined)?;
        let mean = self.refined.mean(&phi);
        let centered: Vec<f64> = phi.iter().map(|v| v - mean).collect();
        let dn = self.kstar_half.apply(&centered)?;
        let u = self.s.apply(&centered)?;
        Ok(dn
            .iter()
            .zip(&u)
            .map(|(d, v)| (d - pair.sigma * (v + mean)).abs())
            .fold(0.0, f64::max))
    }
}

pub fn steklov_residual(pair: &SteklovEigenpair<'_>) -> Result<f64> {
    SteklovResidualEstimator::new(pair.grid)?.residual(pair)
}

/// Field values on an `n x n` grid of lattice coordinates over the fundamental cell.
#[derive(Debug, Clone)]
pub struct FieldGrid {
    pub n: usize,
    pub points: Vec<Complex64>,
    /// `NaN` where evaluation failed (a point on a node).
    pub values: Vec<f64>,
    pub mask: Vec<Region>,
}

impl FieldGrid {
    /// Samples `(k + 1/2)/n + (l + 1/2)/n tau` for `k, l < n`.
    pub fn sample(potential: &dyn Potential, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("field resolution must be positive".into()));
        }
        let grid = potential.grid();
        let tau = grid.torus().tau();
        let points: Vec<Complex64> = (0..n * n)
            .map(|idx| {
                let (l, k) = (idx / n, idx % n);
                let u = (k as f64 + 0.5) / n as f64;
                let v = (l as f64 + 0.5) / n as f64;
                tau * v + u
            })
            .collect();
        let mask: Vec<Region> = points.par_iter().map(|&z| grid.classify(z)).collect();
        let values = points
            .par_iter()
            .map(|&z| potential.eval(z).unwrap_or(f64::NAN))
            .collect();
        Ok(Self { n, points, values, mask })
    }
}

/// `count` points on the curve `center + rho(t) e^{it}` of `shape`.
pub fn curve_points(hole: &Hole, count: usize) -> Vec<Complex64> {
    (0..count)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / count as f64;
            hole.center + Complex64::from_polar(hole.shape.radius(t), t)
        })
        .collect()
}

/// `max |a - b|`.
pub fn sup_error(values: &[f64], exact: &[f64]) -> f64 {
    values.iter().zip(exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// `max |a - b - c|` with `c` the mean of `a - b`, for solutions defined up to a constant.
pub fn sup_error_up_to_constant(values: &[f64], exact: &[f64]) -> f64 {
    let c = values.iter().zip(exact).map(|(a, b)| a - b).sum::<f64>() / values.len().max(1) as f64;
    values.iter().zip(exact).map(|(a, b)| (a - b - c).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemKind {
    Dirichlet,
    /// Errors are measured after removing the mean offset on the contour.
    Neumann,
}

/// Boundary data as a function of the grid it is sampled on.
pub type DataFn<'a> = dyn Fn(&QuadratureGrid) -> Result<Vec<f64>> + Sync + 'a;

/// What the contour values are compared against.
pub enum Reference<'a> {
    /// A known solution.
    Exact(&'a (dyn Fn(Complex64) -> f64 + Sync + 'a)),
    /// A solve with every node count multiplied by `factor` times the largest `N`.
    SelfRefined { factor: usize },
}

pub struct ConvergenceProblem<'a> {
    pub kind: ProblemKind,
    pub holes: &'a [Hole],
    pub torus: &'a Torus,
    pub data: &'a DataFn<'a>,
    /// Test contour inside the domain.
    pub contour: &'a [Complex64],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    /// Nodes per hole.
    pub n: usize,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log10(error)` against `N`.
    pub slope: f64,
    pub intercept: f64,
    /// Rows with error at or below this were left out of the fit.
    pub floor: f64,
}

/// Errors at or below this are treated as round-off and excluded from slope fits.
pub const DEFAULT_FIT_FLOOR: f64 = 1e-13;

/// Least-squares line through `(n, log10 error)` over rows above `floor`.
pub fn fit_log_slope(rows: &[ConvergenceRow], floor: f64) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.error > floor && r.error.is_finite())
        .map(|r| (r.n as f64, r.error.log10()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidArgument("need at least two errors above the floor to fit a slope".into()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("slope fit needs two distinct node counts".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

fn contour_values(problem: &ConvergenceProblem<'_>, n: usize) -> Result<Vec<f64>> {
    let grid = build_grid(problem.holes, &vec![n; problem.holes.len()], problem.torus)?;
    let g = (problem.data)(&grid)?;
    match problem.kind {
        ProblemKind::Dirichlet => solvers::solve_dirichlet(&grid, &g, None)?.eval_many(problem.contour),
        ProblemKind::Neumann => solvers::solve_neumann(&grid, &g, NeumannConvention::ZeroMeanTrace)?.eval_many(problem.contour),
    }
}

/// Re-solves at each per-hole node count and records the sup error on the contour.
pub fn convergence_study(
    problem: &ConvergenceProblem<'_>,
    ns: &[usize],
    reference: &Reference<'_>,
    floor: f64,
) -> Result<ConvergenceTable> {
    if ns.is_empty() {
        return Err(Error::InvalidArgument("empty node-count list".into()));
    }
    let exact: Vec<f64> = match reference {
        Reference::Exact(f) => problem.contour.par_iter().map(|&z| f(z)).collect(),
        Reference::SelfRefined { factor } => {
            let n_ref = factor * ns.iter().copied().max().unwrap_or(4);
            contour_values(problem, n_ref)?
        }
    };
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let values = contour_values(problem, n)?;
        let error = match problem.kind {
            ProblemKind::Dirichlet => sup_error(&values, &exact),
            ProblemKind::Neumann => sup_error_up_to_constant(&values, &exact),
        };
        rows.push(ConvergenceRow { n, error });
    }
    let (slope, intercept) = fit_log_slope(&rows, floor)?;
    Ok(ConvergenceTable { rows, slope, intercept, floor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{solve_dirichlet, solve_steklov};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn circle_grid(n: usize) -> QuadratureGrid {
        build_grid(&[Hole::circle(c(0.5, 0.5), 0.2).unwrap()], &[n], &Torus::square()).unwrap()
    }

    #[test]
    fn gauss_lemma_branches() {
        let grid = circle_grid(100);
        let ones = vec![1.0; grid.len()];
        let ratio = grid.total_hole_area() / grid.torus().b();
        for z in [c(0.05, 0.1), c(0.9, 0.2), c(0.5, 0.95)] {
            assert!((eval_double_layer(&ones, &grid, z).unwrap() + ratio).abs() < 1e-9);
        }
        for z in [c(0.5, 0.5), c(0.45, 0.52)] {
            assert!((eval_double_layer(&ones, &grid, z).unwrap() - (1.0 - ratio)).abs() < 1e-9);
        }
        assert_eq!(eval_double_layer(&vec![0.0; grid.len()], &grid, c(0.1, 0.1)).unwrap(), 0.0);
    }

    #[test]
    fn single_layer_oracle_off_boundary() {
        let grid = circle_grid(64);
        let phi: Vec<f64> = grid.params().iter().map(|t| (2.0 * t).cos()).collect();
        for (z, v) in [
            (c(0.95, 0.9), 0.0007106563865548047662292648),
            (c(0.1, 0.5), 0.01577862712804401860378299),
        ] {
            let s = eval_single_layer(&phi, &grid, z).unwrap();
            assert!((s - v).abs() < 1e-10, "{z}: {s} vs {v}");
        }
        let z = c(0.13, 0.77);
        let shifted = eval_single_layer(&phi, &grid, z + grid.torus().tau()).unwrap();
        assert!((shifted - eval_single_layer(&phi, &grid, z).unwrap()).abs() < 1e-11);
    }

    #[test]
    fn trig_interpolation_is_exact_on_band_limited_data() {
        let n = 16;
        let vals: Vec<f64> = (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                1.0 + (3.0 * t).sin() - 0.5 * (7.0 * t).cos() + 0.25 * (8.0 * t).cos()
            })
            .collect();
        let interp = TrigInterpolant::new(&vals).unwrap();
        for (k, v) in vals.iter().enumerate() {
            assert!((interp.eval(2.0 * PI * k as f64 / n as f64) - v).abs() < 1e-13);
        }
        let t: f64 = 0.377;
        let exact = 1.0 + (3.0 * t).sin() - 0.5 * (7.0 * t).cos();
        // the Nyquist term is interpolated as cos(8t), which agrees at nodes only
        assert!((interp.eval(t) - exact - 0.25 * (8.0 * t).cos()).abs() < 1e-13);
        assert!(TrigInterpolant::new(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn boundary_sampler_matches_assembled_single_layer() {
        let torus = Torus::equilateral();
        let holes = [Hole::trefoil(c(0.3, 0.3), 0.1).unwrap(), Hole::circle(c(0.7, 0.5), 0.1).unwrap()];
        let density = |j: usize, t: f64| if j == 0 { (3.0 * t).sin() } else { -(t.sin()) };
        let sampler = LayerSampler::new(&holes, &torus, 64, density).unwrap();
        let s = operators::assemble_s(sampler.grid()).unwrap();
        let psi: Vec<f64> = (0..sampler.grid().len())
            .map(|i| density(sampler.grid().hole_of(i), sampler.grid().param(i)))
            .collect();
        let direct = s.apply(&psi).unwrap();
        let sampled = sampler.on_grid(sampler.grid()).unwrap();
        assert!(sup_error(&direct, &sampled) < 1e-13);
        let direct: Vec<f64> = (0..sampler.grid().len())
            .map(|i| sampler.on_boundary_direct(sampler.grid().hole_of(i), sampler.grid().param(i)).unwrap())
            .collect();
        assert!(sup_error(&direct, &sampled) < 1e-13);
        // off-node points: interpolated trace against direct log-weighted integration
        for (j, s) in [(0, 0.1234), (1, 2.5), (0, 5.9)] {
            let a = sampler.on_boundary(j, s);
            let b = sampler.on_boundary_direct(j, s).unwrap();
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
        // off-node boundary points converge with the fine count
        let coarse = build_grid(&holes, &[10, 10], &torus).unwrap();
        let a = LayerSampler::new(&holes, &torus, 128, density).unwrap().on_grid(&coarse).unwrap();
        let b = LayerSampler::new(&holes, &torus, 256, density).unwrap().on_grid(&coarse).unwrap();
        assert!(sup_error(&a, &b) < 1e-10, "{}", sup_error(&a, &b));
    }

    #[test]
    fn near_evaluation_recovers_boundary_limit() {
        let grid = circle_grid(64);
        let phi: Vec<f64> = grid.params().iter().map(|t| 1.0 + 0.5 * t.cos()).collect();
        let k = operators::assemble_k(&grid).unwrap();
        let limit: Vec<f64> = k.apply(&phi).unwrap().iter().zip(&phi).map(|(a, p)| a - 0.5 * p).collect();
        let near = NearEvaluator::new(&grid, &phi, 1e-4).unwrap();
        let i = 9;
        let p = grid.point(i);
        let v = near.double_layer(p.position - p.normal * 1e-4).unwrap();
        // first-order approach to the limit from the domain side
        assert!((v - limit[i]).abs() < 1e-3, "{v} vs {}", limit[i]);
    }

    #[test]
    fn steklov_constant_mode_and_residual() {
        let grid = circle_grid(32);
        let pairs = solve_steklov(&grid, 2).unwrap();
        assert!(pairs[0].residual < 1e-9);
        let u = eval_steklov(&pairs[0], c(0.1, 0.1)).unwrap();
        assert!((u - pairs[0].trace[0]).abs() < 1e-8);
        assert!(pairs[0].total_flux().abs() < 1e-9);
    }

    #[test]
    fn field_grid_masks() {
        let grid = circle_grid(32);
        let sol = solve_dirichlet(&grid, &vec![1.0; 32], None).unwrap();
        let field = FieldGrid::sample(&sol, 8).unwrap();
        assert_eq!(field.values.len(), 64);
        assert!(field.mask.contains(&Region::Hole(0)));
        assert!(field.mask.contains(&Region::Omega));
        for (v, m) in field.values.iter().zip(&field.mask) {
            // the default band is only two node spacings wide
            if *m == Region::Omega {
                assert!((v - 1.0).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn slope_fit() {
        let rows: Vec<ConvergenceRow> = [10, 20, 30, 40]
            .iter()
            .map(|&n| ConvergenceRow { n, error: 10f64.powf(-0.1 * n as f64) })
            .chain([ConvergenceRow { n: 200, error: 1e-16 }])
            .collect();
        let (slope, intercept) = fit_log_slope(&rows, DEFAULT_FIT_FLOOR).unwrap();
        assert!((slope + 0.1).abs() < 1e-12 && intercept.abs() < 1e-10);
        assert!(fit_log_slope(&rows[..1], 0.0).is_err());
    }
}
