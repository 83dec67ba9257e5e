//! Dirichlet, Neumann and Steklov solvers and the Neumann-to-Dirichlet map.

use num_complex::Complex64;

use crate::fields;
use crate::geometry::QuadratureGrid;
use crate::green::green;
use crate::linalg::{self, LuFactor};
use crate::operators::{self, DenseOperator};
use crate::{Error, Result};

/// Dirichlet density, fluxes and the source points they sit on.
#[derive(Debug, Clone)]
pub struct DirichletSolution<'g> {
    pub grid: &'g QuadratureGrid,
    pub phi: Vec<f64>,
    /// Flux `A_j` across each hole boundary.
    pub fluxes: Vec<f64>,
    pub betas: Vec<Complex64>,
    /// Smallest-to-largest pivot ratio of the LU factorization.
    pub pivot_ratio: f64,
}

/// How the free additive constant of a Neumann solution is fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NeumannConvention {
    /// The boundary trace has zero weighted mean.
    ZeroMeanTrace,
    /// `u(point) = value`.
    Pinned { point: Complex64, value: f64 },
}

#[derive(Debug, Clone)]
pub struct NeumannSolution<'g> {
    pub grid: &'g QuadratureGrid,
    /// Zero-mean density.
    pub phi: Vec<f64>,
    /// Additive constant `C` in `u = S[phi] + C`.
    pub constant: f64,
    pub convention: NeumannConvention,
    /// Boundary values of `u` at the nodes.
    pub trace: Vec<f64>,
    pub pivot_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct SteklovEigenpair<'g> {
    pub grid: &'g QuadratureGrid,
    pub sigma: f64,
    /// Density, scaled together with `trace`.
    pub phi: Vec<f64>,
    /// Boundary trace `S0[phi]`, unit norm in the discrete `L^2(dOmega)`.
    pub trace: Vec<f64>,
    /// Normal derivative `(K* + I/2)(I - M) phi` at the nodes.
    pub normal_derivative: Vec<f64>,
    /// A posteriori residual `max |d_nu u - sigma u|` on a refined boundary sampling.
    pub residual: f64,
}

fn check_len(grid: &QuadratureGrid, g: &[f64]) -> Result<()> {
    if g.len() != grid.len() {
        return Err(Error::Dimension(format!(
            "boundary data has {} values for {} nodes",
            g.len(),
            grid.len()
        )));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("boundary data contains non-finite values".into()));
    }
    Ok(())
}

/// Source points default to the hole centers; each must lie inside its hole.
fn resolve_betas(grid: &QuadratureGrid, betas: Option<&[Complex64]>) -> Result<Vec<Complex64>> {
    let holes = grid.holes();
    let betas: Vec<Complex64> = match betas {
        Some(b) => {
            if b.len() != holes.len() {
                return Err(Error::Dimension(format!("{} source points for {} holes", b.len(), holes.len())));
            }
            b.to_vec()
        }
        None => holes.iter().map(|h| h.center).collect(),
    };
    for (j, (beta, hole)) in betas.iter().zip(holes).enumerate() {
        let w = grid.torus().nearest_image(beta - hole.center);
        if !hole.contains_offset(w) {
            return Err(Error::InvalidArgument(format!("source point {beta} is not inside hole {j}")));
        }
    }
    Ok(betas)
}

/// Solves the Dirichlet problem with boundary values `g` at the grid nodes.
pub fn solve_dirichlet<'g>(
    grid: &'g QuadratureGrid,
    g: &[f64],
    betas: Option<&[Complex64]>,
) -> Result<DirichletSolution<'g>> {
    let k = operators::assemble_k(grid)?;
    solve_dirichlet_with(grid, &k, g, betas)
}

/// As [`solve_dirichlet`] with a preassembled `K`.
pub fn solve_dirichlet_with<'g>(
    grid: &'g QuadratureGrid,
    k: &DenseOperator,
    g: &[f64],
    betas: Option<&[Complex64]>,
) -> Result<DirichletSolution<'g>> {
    check_len(grid, g)?;
    k.ensure_matches(grid)?;
    let betas = resolve_betas(grid, betas)?;
    let n = grid.len();
    let holes = grid.hole_count();
    if holes == 1 {
        let lu = LuFactor::new(k.shifted(-0.5).data(), n)?;
        let phi = lu.solve(g)?;
        return Ok(DirichletSolution {
            grid,
            phi,
            fluxes: vec![0.0],
            betas,
            pivot_ratio: lu.pivot_ratio(),
        });
    }
    let size = n + holes;
    let mut a = vec![0.0; size * size];
    for i in 0..n {
        a[i * size..i * size + n].copy_from_slice(k.row(i));
        a[i * size + i] -= 0.5;
        let z = grid.point(i).position;
        for (j, beta) in betas.iter().enumerate() {
            a[i * size + n + j] = green(z - beta, grid.torus())?;
        }
    }
    for j in 0..holes - 1 {
        let row = n + j;
        for c in grid.block(j).range.clone() {
            a[row * size + c] = grid.weights()[c];
        }
    }
    for j in 0..holes {
        a[(size - 1) * size + n + j] = 1.0;
    }
    let mut rhs = g.to_vec();
    rhs.resize(size, 0.0);
    let lu = LuFactor::new(&a, size)?;
    let mut x = lu.solve(&rhs)?;
    let fluxes = x.split_off(n);
    Ok(DirichletSolution {
        grid,
        phi: x,
        fluxes,
        betas,
        pivot_ratio: lu.pivot_ratio(),
    })
}

/// Relative tolerance on the weighted mean of Neumann data.
pub const DEFAULT_MEAN_TOL: f64 = 1e-8;

/// Rejects data whose weighted mean is not small relative to `sum w |g|`.
pub fn check_compatible(grid: &QuadratureGrid, g: &[f64], mean_tol: f64) -> Result<()> {
    let mean = grid.integrate(g);
    let scale: f64 = grid.weights().iter().zip(g).map(|(w, v)| w * v.abs()).sum();
    if mean.abs() > mean_tol * scale.max(f64::MIN_POSITIVE) && mean.abs() > f64::EPSILON * grid.total_length() {
        return Err(Error::NonZeroMeanData {
            mean: mean.abs(),
            tol: mean_tol * scale,
        });
    }
    Ok(())
}

/// Solves the Neumann problem for normal derivative `g` (zero weighted mean).
pub fn solve_neumann<'g>(
    grid: &'g QuadratureGrid,
    g: &[f64],
    convention: NeumannConvention,
) -> Result<NeumannSolution<'g>> {
    solve_neumann_with_tol(grid, g, convention, DEFAULT_MEAN_TOL)
}

pub fn solve_neumann_with_tol<'g>(
    grid: &'g QuadratureGrid,
    g: &[f64],
    convention: NeumannConvention,
    mean_tol: f64,
) -> Result<NeumannSolution<'g>> {
    check_len(grid, g)?;
    check_compatible(grid, g, mean_tol)?;
    let (kstar, s) = operators::assemble_kstar_and_s(grid)?;
    solve_neumann_with(grid, &kstar, &s, g, convention)
}

/// As [`solve_neumann`] with preassembled `K*` and `S`; the data check is left to the caller.
pub fn solve_neumann_with<'g>(
    grid: &'g QuadratureGrid,
    kstar: &DenseOperator,
    s: &DenseOperator,
    g: &[f64],
    convention: NeumannConvention,
) -> Result<NeumannSolution<'g>> {
    check_len(grid, g)?;
    kstar.ensure_matches(grid)?;
    s.ensure_matches(grid)?;
    let lu = LuFactor::new(kstar.shifted(0.5).data(), grid.len())?;
    let mut phi = lu.solve(g)?;
    let mean = grid.mean(&phi);
    phi.iter_mut().for_each(|v| *v -= mean);
    let sphi = s.apply(&phi)?;
    let constant = match convention {
        NeumannConvention::ZeroMeanTrace => -grid.mean(&sphi),
        NeumannConvention::Pinned { point, value } => {
            value - fields::eval_single_layer(&phi, grid, point)?
        }
    };
    let trace = sphi.iter().map(|v| v + constant).collect();
    Ok(NeumannSolution {
        grid,
        phi,
        constant,
        convention,
        trace,
        pivot_ratio: lu.pivot_ratio(),
    })
}

/// Dirichlet trace with zero weighted mean of the harmonic function with normal derivative `g`.
pub fn neumann_to_dirichlet(grid: &QuadratureGrid, g: &[f64]) -> Result<Vec<f64>> {
    Ok(solve_neumann(grid, g, NeumannConvention::ZeroMeanTrace)?.trace)
}

/// Relative size of `Im(sigma)` above which a pair is discarded as spurious.
pub const IMAG_FILTER: f64 = 1e-8;
/// Eigenvalues below `-NEGATIVE_FILTER` are discarded.
pub const NEGATIVE_FILTER: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteklovOptions {
    pub k_max: usize,
    /// Compute the refined a posteriori residual for each returned pair.
    pub residuals: bool,
}

impl SteklovOptions {
    pub fn new(k_max: usize) -> Self {
        Self { k_max, residuals: true }
    }
}

/// The first `k_max` Steklov eigenpairs in ascending order of `sigma`.
pub fn solve_steklov(grid: &QuadratureGrid, k_max: usize) -> Result<Vec<SteklovEigenpair<'_>>> {
    solve_steklov_with(grid, SteklovOptions::new(k_max))
}

pub fn solve_steklov_with(grid: &QuadratureGrid, opts: SteklovOptions) -> Result<Vec<SteklovEigenpair<'_>>> {
    let n = grid.len();
    if opts.k_max == 0 || opts.k_max > n {
        return Err(Error::InvalidArgument(format!("k_max must lie in 1..={n}, got {}", opts.k_max)));
    }
    let (kstar, s) = operators::assemble_kstar_and_s(grid)?;
    let m = operators::assemble_m(grid);
    let projector = m.combine(-1.0, &m, 0.0)?.shifted(1.0);
    let a = kstar.shifted(0.5).compose(&projector)?;
    let b = operators::s0_from_s(&s, grid);
    let (alpha, beta, vectors) = linalg::generalized_eigen(a.data(), b.data(), n)?;

    let mut candidates: Vec<(f64, usize)> = Vec::new();
    for k in 0..n {
        let sigma = alpha[k] / beta[k];
        if !(sigma.re.is_finite() && sigma.im.is_finite()) {
            continue;
        }
        if sigma.im.abs() > IMAG_FILTER * (1.0 + sigma.re.abs()) || sigma.re < -NEGATIVE_FILTER {
            continue;
        }
        candidates.push((sigma.re, k));
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0));
    if candidates.len() < opts.k_max {
        return Err(Error::EigensolverFailure(format!(
            "only {} admissible eigenvalues, {} requested",
            candidates.len(),
            opts.k_max
        )));
    }

    let estimator = if opts.residuals {
        Some(fields::SteklovResidualEstimator::new(grid)?)
    } else {
        None
    };
    let mut pairs = Vec::with_capacity(opts.k_max);
    for &(sigma, k) in candidates.iter().take(opts.k_max) {
        let phi = real_eigenvector(&vectors[k]);
        let trace = b.apply(&phi)?;
        let norm = grid.l2_norm(&trace);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::EigensolverFailure(format!("eigenfunction {k} has a vanishing trace")));
        }
        // deterministic sign: the largest trace entry is positive
        let peak = trace.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
        let scale = peak.signum() / norm;
        let phi: Vec<f64> = phi.iter().map(|v| v * scale).collect();
        let trace: Vec<f64> = trace.iter().map(|v| v * scale).collect();
        let normal_derivative = a.apply(&phi)?;
        let mut pair = SteklovEigenpair {
            grid,
            sigma,
            phi,
            trace,
            normal_derivative,
            residual: f64::NAN,
        };
        if let Some(est) = &estimator {
            pair.residual = est.residual(&pair)?;
        }
        pairs.push(pair);
    }
    Ok(pairs)
}

/// Rotates a complex eigenvector so its largest entry is real and drops the imaginary part.
fn real_eigenvector(v: &[Complex64]) -> Vec<f64> {
    let pivot = v.iter().copied().fold(Complex64::new(0.0, 0.0), |a, x| if x.norm() > a.norm() { x } else { a });
    let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { Complex64::new(1.0, 0.0) };
    v.iter().map(|x| (x * phase).re).collect()
}

/// Flux of a Steklov eigenfunction across hole `j`.
pub fn steklov_flux(pair: &SteklovEigenpair<'_>, j: usize) -> f64 {
    pair.grid.integrate_over_hole(&pair.normal_derivative, j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::Torus;
    use crate::geometry::{build_grid, Hole};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_dirichlet_data() {
        let torus = Torus::square();
        let grid = build_grid(&[Hole::circle(c(0.5, 0.5), 0.2).unwrap()], &[40], &torus).unwrap();
        let sol = solve_dirichlet(&grid, &vec![5.0; 40], None).unwrap();
        assert_eq!(sol.fluxes, vec![0.0]);
        let u = fields::eval_dirichlet(&sol, c(0.05, 0.1)).unwrap();
        assert!((u - 5.0).abs() < 1e-10, "{u}");
    }

    #[test]
    fn dirichlet_fluxes_sum_to_zero() {
        let torus = Torus::equilateral();
        let holes = [Hole::circle(c(0.7, 0.5), 0.1).unwrap(), Hole::circle(c(0.3, 0.3), 0.15).unwrap()];
        let grid = build_grid(&holes, &[30, 30], &torus).unwrap();
        let g: Vec<f64> = (0..grid.len()).map(|i| grid.point(i).position.re).collect();
        let sol = solve_dirichlet(&grid, &g, None).unwrap();
        assert!(sol.fluxes.iter().sum::<f64>().abs() < 1e-14);
        assert!(grid.integrate_over_hole(&sol.phi, 0).abs() < 1e-12);
    }

    #[test]
    fn bad_source_points() {
        let torus = Torus::square();
        let grid = build_grid(&[Hole::circle(c(0.5, 0.5), 0.2).unwrap()], &[20], &torus).unwrap();
        let g = vec![1.0; 20];
        assert!(matches!(solve_dirichlet(&grid, &g, Some(&[c(0.0, 0.0)])), Err(Error::InvalidArgument(_))));
        assert!(matches!(solve_dirichlet(&grid, &g, Some(&[])), Err(Error::Dimension(_))));
        // an image of the center is fine
        assert!(solve_dirichlet(&grid, &g, Some(&[c(1.5, -0.5)])).is_ok());
    }

    #[test]
    fn neumann_rejects_incompatible_data() {
        let torus = Torus::square();
        let grid = build_grid(&[Hole::circle(c(0.5, 0.5), 0.2).unwrap()], &[20], &torus).unwrap();
        let err = solve_neumann(&grid, &vec![1.0; 20], NeumannConvention::ZeroMeanTrace).unwrap_err();
        assert!(matches!(err, Error::NonZeroMeanData { .. }));
        let sol = solve_neumann(&grid, &vec![0.0; 20], NeumannConvention::ZeroMeanTrace).unwrap();
        assert!(sol.phi.iter().all(|&v| v == 0.0));
        assert_eq!(neumann_to_dirichlet(&grid, &vec![0.0; 20]).unwrap(), vec![0.0; 20]);
    }

    #[test]
    fn neumann_pinned_constant() {
        let torus = Torus::square();
        let grid = build_grid(&[Hole::circle(c(0.5, 0.5), 0.2).unwrap()], &[32], &torus).unwrap();
        let g: Vec<f64> = grid.params().iter().map(|t| t.cos()).collect();
        let point = c(0.05, 0.05);
        let sol = solve_neumann(&grid, &g, NeumannConvention::Pinned { point, value: 2.0 }).unwrap();
        assert!((fields::eval_neumann(&sol, point).unwrap() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn steklov_ground_state() {
        let torus = Torus::square();
        let grid = build_grid(&[Hole::circle(c(0.5, 0.5), 0.2).unwrap()], &[24], &torus).unwrap();
        let pairs = solve_steklov_with(&grid, SteklovOptions { k_max: 3, residuals: false }).unwrap();
        assert!(pairs[0].sigma.abs() < 1e-10);
        let mean = grid.mean(&pairs[0].trace);
        assert!(pairs[0].trace.iter().all(|v| (v - mean).abs() < 1e-8 * mean.abs()));
        assert!((grid.l2_norm(&pairs[1].trace) - 1.0).abs() < 1e-12);
        assert!(pairs.windows(2).all(|w| w[0].sigma <= w[1].sigma));
        assert!(solve_steklov(&grid, 0).is_err());
    }
}
