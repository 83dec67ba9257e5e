//! Reference geometries, boundary data and published values used for regression.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::elliptic::Torus;
use crate::fields::{curve_points, LayerSampler};
use crate::geometry::{Hole, HoleShape, QuadratureGrid};
use crate::green::{green, normal_deriv_target};
use crate::{Error, Result};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Nodes per hole of the fine grid that carries manufactured single-layer data.
pub const DATA_NODES: usize = 512;

/// Points per test contour.
pub const CONTOUR_POINTS: usize = 256;

/// `scale S[psi] + sum_j A_j G(z - a_j)`, harmonic when `psi` and the `A_j` have zero sum.
pub struct Manufactured {
    sampler: LayerSampler,
    scale: f64,
    sources: Vec<(Complex64, f64)>,
}

impl Manufactured {
    pub fn new<F>(holes: &[Hole], torus: &Torus, density: F, scale: f64, sources: Vec<(Complex64, f64)>) -> Result<Self>
    where
        F: Fn(usize, f64) -> f64,
    {
        Ok(Self {
            sampler: LayerSampler::new(holes, torus, DATA_NODES, density)?,
            scale,
            sources,
        })
    }

    fn green_part(&self, z: Complex64) -> Result<f64> {
        let torus = self.sampler.grid().torus();
        self.sources.iter().try_fold(0.0, |acc, (a, amp)| Ok(acc + amp * green(z - a, torus)?))
    }

    /// Values at the nodes of `grid`, which must carry the same holes.
    pub fn boundary_data(&self, grid: &QuadratureGrid) -> Result<Vec<f64>> {
        let layer = self.sampler.on_grid(grid)?;
        layer
            .iter()
            .enumerate()
            .map(|(i, s)| Ok(self.scale * s + self.green_part(grid.point(i).position)?))
            .collect()
    }

    pub fn exact(&self, z: Complex64) -> Result<f64> {
        Ok(self.scale * self.sampler.at(z)? + self.green_part(z)?)
    }

    pub fn fluxes(&self) -> Vec<f64> {
        self.sources.iter().map(|s| s.1).collect()
    }
}

/// A Dirichlet problem with a known solution and a test contour.
pub struct DirichletCase {
    pub name: String,
    pub holes: Vec<Hole>,
    pub torus: Torus,
    pub nodes: usize,
    pub contour: Vec<Complex64>,
    pub data: Manufactured,
}

/// One circle `r = 0.2` at `0.5 + 0.5i`.
pub fn example1_holes() -> Vec<Hole> {
    vec![Hole::circle(c(0.5, 0.5), 0.2).expect("valid circle")]
}

/// Data `-S[sin t]`; error measured on the concentric circle of radius `0.35`.
pub fn example1(torus: &Torus) -> Result<DirichletCase> {
    let holes = example1_holes();
    let contour = curve_points(&Hole::circle(c(0.5, 0.5), 0.35)?, CONTOUR_POINTS);
    let data = Manufactured::new(&holes, torus, |_, t| t.sin(), -1.0, Vec::new())?;
    Ok(DirichletCase {
        name: "example1".into(),
        holes,
        torus: torus.clone(),
        nodes: 50,
        contour,
        data,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Example2Shape {
    Circles,
    Trefoils,
}

pub const EXAMPLE2_CENTERS: [(f64, f64); 3] = [(0.7, 0.5), (0.3, 0.3), (0.0, 0.0)];
pub const EXAMPLE2_FLUXES: [f64; 3] = [3.0, -1.0, -2.0];

pub fn example2_holes(shape: Example2Shape) -> Vec<Hole> {
    EXAMPLE2_CENTERS
        .iter()
        .map(|&(x, y)| match shape {
            Example2Shape::Circles => Hole::circle(c(x, y), 0.1),
            Example2Shape::Trefoils => Hole::trefoil(c(x, y), 0.1),
        })
        .collect::<Result<_>>()
        .expect("valid holes")
}

/// The density of the manufactured single layer: `-10 sin t`, `10 sin 3t`, `-10 sin t`.
pub fn example2_density(j: usize, t: f64) -> f64 {
    match j {
        1 => 10.0 * (3.0 * t).sin(),
        _ => -10.0 * t.sin(),
    }
}

/// Data `S[psi] + 3 G(z - a_1) - G(z - a_2) - 2 G(z - a_3)`; contours are the
/// same shapes enlarged to `r = 0.18`.
pub fn example2(torus: &Torus, shape: Example2Shape) -> Result<DirichletCase> {
    let holes = example2_holes(shape);
    let contour = holes
        .iter()
        .flat_map(|h| {
            let shape = match h.shape {
                HoleShape::Trefoil { .. } => HoleShape::Trefoil { r: 0.18 },
                _ => HoleShape::Circle { r: 0.18 },
            };
            curve_points(&Hole { center: h.center, shape }, CONTOUR_POINTS)
        })
        .collect();
    let sources = holes.iter().map(|h| h.center).zip(EXAMPLE2_FLUXES).collect();
    let data = Manufactured::new(&holes, torus, example2_density, 1.0, sources)?;
    Ok(DirichletCase {
        name: match shape {
            Example2Shape::Circles => "example2_circles".into(),
            Example2Shape::Trefoils => "example2_trefoils".into(),
        },
        holes,
        torus: torus.clone(),
        nodes: 50,
        contour,
        data,
    })
}

/// `(omega, r, center)` of the eight oscillatory holes.
pub const EXAMPLE3_HOLES: [(u32, f64, (f64, f64)); 8] = [
    (6, 0.126, (0.720, 0.353)),
    (5, 0.081, (0.320, 0.420)),
    (3, 0.082, (0.540, 0.508)),
    (3, 0.135, (0.749, 0.704)),
    (6, 0.118, (0.408, 0.725)),
    (5, 0.108, (0.130, 0.276)),
    (6, 0.071, (0.133, 0.907)),
    (7, 0.071, (0.369, 0.169)),
];

pub const EXAMPLE3_FLUXES: [f64; 8] = [1.0, 2.0, 3.0, 4.0, -5.0, -2.0, -3.0, 0.0];

pub fn example3_holes() -> Vec<Hole> {
    EXAMPLE3_HOLES
        .iter()
        .map(|&(w, r, (x, y))| Hole::oscillatory(c(x, y), r, w))
        .collect::<Result<_>>()
        .expect("valid holes")
}

/// Neumann data `sum_j A_j d/dnu G(z - a_j)` with solution `sum_j A_j G(z - a_j) + C`.
pub struct SourceField {
    pub sources: Vec<(Complex64, f64)>,
}

impl SourceField {
    pub fn at_holes(holes: &[Hole], amplitudes: &[f64]) -> Self {
        Self {
            sources: holes.iter().map(|h| h.center).zip(amplitudes.iter().copied()).collect(),
        }
    }

    pub fn normal_derivative(&self, grid: &QuadratureGrid) -> Result<Vec<f64>> {
        grid.points()
            .iter()
            .map(|p| {
                self.sources
                    .iter()
                    .try_fold(0.0, |acc, (a, amp)| Ok(acc + amp * normal_deriv_target(p, *a, grid.torus())?))
            })
            .collect()
    }

    pub fn value(&self, z: Complex64, torus: &Torus) -> Result<f64> {
        self.sources.iter().try_fold(0.0, |acc, (a, amp)| Ok(acc + amp * green(z - a, torus)?))
    }
}

/// One circle `r = 0.2` at `0.5 + 0.5i`, the same geometry as the first example.
pub fn example4_holes() -> Vec<Hole> {
    example1_holes()
}

/// Published eigenvalues are tabulated as `sigma / 2` (they were compared against a
/// reference computed on a cell of twice the area).
pub const TABULATED_EIGENVALUE_SCALE: f64 = 0.5;

/// Tabulated `sigma_2 .. sigma_7` at `N = 50`, square torus.
pub const EXAMPLE4_SQUARE_SIGMAS: [f64; 6] = [3.217375, 3.217375, 4.850995, 5.153581, 7.503050, 7.503050];
/// Tabulated `sigma_2 .. sigma_7` at `N = 50`, equilateral torus.
pub const EXAMPLE4_EQUILATERAL_SIGMAS: [f64; 6] = [3.348656, 3.348656, 4.999789, 4.999789, 7.443925, 7.556497];

/// Two circles `r = 0.05` at `0.6 + 0.5i` and `0.4 + 0.6i`.
pub fn example5_holes() -> Vec<Hole> {
    vec![
        Hole::circle(c(0.6, 0.5), 0.05).expect("valid circle"),
        Hole::circle(c(0.4, 0.6), 0.05).expect("valid circle"),
    ]
}

/// Normalized `|A_1(k)|` for `k = 2 .. 7`, square torus.
pub const EXAMPLE5_SQUARE_FLUXES: [f64; 6] = [4.796, 2.216e-14, 0.05758, 1.267e-14, 3.470, 0.01060];
/// Normalized `|A_1(k)|` for `k = 2 .. 7`, equilateral torus.
pub const EXAMPLE5_EQUILATERAL_FLUXES: [f64; 6] = [4.863, 1.412e-14, 0.002723, 1.363e-14, 3.434, 2.309e-14];

/// Two circles used for the null-space remarks: `r = 0.1` at `0.7 + 0.5i`, `r = 0.15` at `0.3 + 0.3i`.
pub fn null_space_holes() -> Vec<Hole> {
    vec![
        Hole::circle(c(0.7, 0.5), 0.1).expect("valid circle"),
        Hole::circle(c(0.3, 0.3), 0.15).expect("valid circle"),
    ]
}

/// Per-hole values of `S[psi]` for the null vector of `K* - I/2`, scaled to nodal
/// root-mean-square `sqrt(2)` and signed so the first value is negative.
pub const NULL_SPACE_LAYER_VALUES: [f64; 2] = [-0.1856, 0.1290];

/// Seed of the shipped random-hole geometry.
pub const RANDOM_HOLES_SEED: u64 = 20240611;

/// Placement of random oscillatory holes.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomHoles {
    pub count: usize,
    pub seed: u64,
    /// Radii are drawn uniformly from `[min_radius, max_radius)`.
    pub min_radius: f64,
    pub max_radius: f64,
    /// Frequencies are drawn uniformly from `min_omega..=max_omega`.
    pub min_omega: u32,
    pub max_omega: u32,
    /// Minimum clearance between the bounding circles of two holes.
    pub gap: f64,
}

impl RandomHoles {
    /// Eight holes with `r` in `[0.03, 0.06)` and frequencies `3..=7`.
    pub fn scaled() -> Self {
        Self {
            count: 8,
            seed: RANDOM_HOLES_SEED,
            min_radius: 0.03,
            max_radius: 0.06,
            min_omega: 3,
            max_omega: 7,
            gap: 0.05,
        }
    }

    /// As [`RandomHoles::scaled`] with 25 holes.
    pub fn full() -> Self {
        Self { count: 25, gap: 0.03, ..Self::scaled() }
    }

    pub fn generate(&self, torus: &Torus) -> Result<Vec<Hole>> {
        if !(self.min_radius > 0.0 && self.min_radius < self.max_radius) || self.min_omega > self.max_omega {
            return Err(Error::InvalidArgument("empty radius or frequency range".into()));
        }
        random_oscillatory_holes(torus, self)
    }
}

/// Holes with random centers, radii and frequencies, separated by at least
/// `params.gap` after lattice reduction.
fn random_oscillatory_holes(torus: &Torus, params: &RandomHoles) -> Result<Vec<Hole>> {
    let count = params.count;
    let gap = params.gap;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut holes: Vec<Hole> = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while holes.len() < count {
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::InvalidArgument(format!("could not place {count} separated holes")));
        }
        let r = rng.random_range(params.min_radius..params.max_radius);
        let omega = rng.random_range(params.min_omega..=params.max_omega);
        let (u, v): (f64, f64) = (rng.random(), rng.random());
        let center = torus.tau() * v + u;
        let hole = Hole::oscillatory(center, r, omega)?;
        let clear = holes.iter().all(|h| {
            let d = torus.nearest_image(h.center - center).norm();
            d > h.shape.max_radius() + hole.shape.max_radius() + gap
        });
        if clear {
            holes.push(hole);
        }
    }
    Ok(holes)
}

/// Total area of `holes` from their polar profiles, `1/2 int rho^2`.
pub fn polar_area(holes: &[Hole]) -> f64 {
    const SAMPLES: usize = 2048;
    holes
        .iter()
        .map(|h| {
            (0..SAMPLES)
                .map(|k| h.shape.radius(2.0 * PI * k as f64 / SAMPLES as f64).powi(2))
                .sum::<f64>()
                * PI
                / SAMPLES as f64
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;

    #[test]
    fn example_geometries_build() {
        for torus in [Torus::square(), Torus::equilateral()] {
            assert!(build_grid(&example3_holes(), &[50; 8], &torus).is_ok());
            assert!(build_grid(&example5_holes(), &[50; 2], &torus).is_ok());
            for shape in [Example2Shape::Circles, Example2Shape::Trefoils] {
                assert!(build_grid(&example2_holes(shape), &[50; 3], &torus).is_ok());
            }
        }
    }

    #[test]
    fn random_holes_are_reproducible_and_separated() {
        let torus = Torus::square();
        let a = RandomHoles::scaled().generate(&torus).unwrap();
        let b = RandomHoles::scaled().generate(&torus).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, RandomHoles { seed: 1, ..RandomHoles::scaled() }.generate(&torus).unwrap());
        assert_eq!(RandomHoles::full().generate(&torus).unwrap().len(), 25);
        assert!(RandomHoles { min_radius: 0.1, max_radius: 0.1, ..RandomHoles::scaled() }.generate(&torus).is_err());
        assert!(build_grid(&a, &[32; 8], &torus).is_ok());
        let grid = build_grid(&a, &[64; 8], &torus).unwrap();
        assert!((grid.total_hole_area() - polar_area(&a)).abs() < 1e-12);
    }

    #[test]
    fn source_field_flux_identity() {
        // flux of sum A_j G(z - a_j) across hole j is A_j when sum A_j = 0
        let torus = Torus::square();
        let holes = example3_holes();
        let grid = build_grid(&holes, &[64; 8], &torus).unwrap();
        let field = SourceField::at_holes(&holes, &EXAMPLE3_FLUXES);
        let g = field.normal_derivative(&grid).unwrap();
        for (j, a) in EXAMPLE3_FLUXES.iter().enumerate() {
            assert!((grid.integrate_over_hole(&g, j) - a).abs() < 1e-8);
        }
    }
}
