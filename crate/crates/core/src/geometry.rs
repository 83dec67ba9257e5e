//! Hole boundaries, quadrature grids and point classification.
//!
//! Every hole is a star-shaped radial curve `z(t) = a + rho(t) e^{it}` traversed
//! counterclockwise about its center `a`. The normal points into the hole, so the
//! boundary is positively oriented with respect to the domain.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;

use crate::elliptic::Torus;
use crate::green::KernelPoint;
use crate::{Error, Result};

/// Radial profile of a hole.
#[derive(Debug, Clone, PartialEq)]
pub enum HoleShape {
    /// `rho = r`
    Circle { r: f64 },
    /// `rho = r (1 + 0.3 cos 3t)`
    Trefoil { r: f64 },
    /// `rho = r / (r + 1) (1 + r cos(omega t))`
    Oscillatory { r: f64, omega: u32 },
    /// `rho = a0 + sum_k (cos[k-1] cos(kt) + sin[k-1] sin(kt))`
    Fourier { a0: f64, cos: Vec<f64>, sin: Vec<f64> },
}

/// Samples used to check positivity of general profiles.
const POSITIVITY_SAMPLES: usize = 4096;

impl HoleShape {
    /// `(rho, rho', rho'')` at angle `t`.
    pub fn profile(&self, t: f64) -> (f64, f64, f64) {
        match *self {
            HoleShape::Circle { r } => (r, 0.0, 0.0),
            HoleShape::Trefoil { r } => {
                let (s, c) = (3.0 * t).sin_cos();
                (r * (1.0 + 0.3 * c), -0.9 * r * s, -2.7 * r * c)
            }
            HoleShape::Oscillatory { r, omega } => {
                let w = omega as f64;
                let scale = r / (r + 1.0);
                let (s, c) = (w * t).sin_cos();
                (scale * (1.0 + r * c), -scale * r * w * s, -scale * r * w * w * c)
            }
            HoleShape::Fourier { a0, ref cos, ref sin } => {
                let mut rho = (a0, 0.0, 0.0);
                for k in 0..cos.len().max(sin.len()) {
                    let a = cos.get(k).copied().unwrap_or(0.0);
                    let b = sin.get(k).copied().unwrap_or(0.0);
                    let kf = (k + 1) as f64;
                    let (s, c) = (kf * t).sin_cos();
                    rho.0 += a * c + b * s;
                    rho.1 += kf * (b * c - a * s);
                    rho.2 -= kf * kf * (a * c + b * s);
                }
                rho
            }
        }
    }

    pub fn radius(&self, t: f64) -> f64 {
        self.profile(t).0
    }

    /// Upper bound on `rho` over a full turn.
    pub fn max_radius(&self) -> f64 {
        match *self {
            HoleShape::Circle { r } => r,
            HoleShape::Trefoil { r } => 1.3 * r,
            HoleShape::Oscillatory { r, .. } => r,
            HoleShape::Fourier { a0, ref cos, ref sin } => {
                a0.abs() + cos.iter().chain(sin).map(|c| c.abs()).sum::<f64>()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            HoleShape::Circle { r } | HoleShape::Trefoil { r } if !(r > 0.0 && r.is_finite()) => {
                Err(Error::InvalidCurve(format!("radius must be positive, got {r}")))
            }
            HoleShape::Oscillatory { r, omega } => {
                if !(r > 0.0 && r < 1.0) {
                    return Err(Error::InvalidCurve(format!(
                        "oscillatory radius must lie in (0, 1), got {r}"
                    )));
                }
                if omega == 0 {
                    return Err(Error::InvalidCurve("oscillation factor must be positive".into()));
                }
                Ok(())
            }
            HoleShape::Fourier { a0, ref cos, ref sin } => {
                if !cos.iter().chain(sin).chain([&a0]).all(|c| c.is_finite()) {
                    return Err(Error::InvalidCurve("non-finite Fourier coefficient".into()));
                }
                let min = (0..POSITIVITY_SAMPLES)
                    .map(|k| self.radius(2.0 * PI * k as f64 / POSITIVITY_SAMPLES as f64))
                    .fold(f64::INFINITY, f64::min);
                if min <= 0.0 {
                    return Err(Error::InvalidCurve(format!(
                        "Fourier profile is not positive (minimum {min})"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hole {
    pub center: Complex64,
    pub shape: HoleShape,
}

impl Hole {
    pub fn new(center: Complex64, shape: HoleShape) -> Result<Self> {
        if !(center.re.is_finite() && center.im.is_finite()) {
            return Err(Error::InvalidCurve(format!("non-finite center {center}")));
        }
        shape.validate()?;
        Ok(Self { center, shape })
    }

    pub fn circle(center: Complex64, r: f64) -> Result<Self> {
        Self::new(center, HoleShape::Circle { r })
    }

    pub fn trefoil(center: Complex64, r: f64) -> Result<Self> {
        Self::new(center, HoleShape::Trefoil { r })
    }

    pub fn oscillatory(center: Complex64, r: f64, omega: u32) -> Result<Self> {
        Self::new(center, HoleShape::Oscillatory { r, omega })
    }

    /// Whether the offset `w` from the center lies strictly inside the profile.
    pub fn contains_offset(&self, w: Complex64) -> bool {
        w.norm() < self.shape.radius(w.arg())
    }
}

/// Position, unit normal (into the hole), speed and signed curvature at parameter `t`.
pub fn curve_eval(hole: &Hole, t: f64) -> Result<KernelPoint> {
    let (rho, d1, d2) = hole.shape.profile(t);
    if rho <= 0.0 {
        return Err(Error::InvalidCurve(format!("rho({t}) = {rho} is not positive")));
    }
    let e = Complex64::from_polar(1.0, t);
    let i = Complex64::new(0.0, 1.0);
    let dz = (i * rho + d1) * e;
    let ddz = (Complex64::new(d2 - rho, 2.0 * d1)) * e;
    let speed = dz.norm();
    // x'y'' - y'x'' is positive on convex arcs of a counterclockwise curve; the
    // domain sees those arcs with the opposite orientation.
    let cross = dz.re * ddz.im - dz.im * ddz.re;
    Ok(KernelPoint {
        position: hole.center + e * rho,
        normal: i * dz / speed,
        speed,
        curvature: -cross / speed.powi(3),
    })
}

/// Node range and geometric totals for one hole.
#[derive(Debug, Clone, PartialEq)]
pub struct HoleBlock {
    pub range: Range<usize>,
    pub area: f64,
    pub perimeter: f64,
}

impl HoleBlock {
    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }
}

/// Trapezoid nodes on every hole boundary.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    torus: Torus,
    holes: Vec<Hole>,
    points: Vec<KernelPoint>,
    params: Vec<f64>,
    weights: Vec<f64>,
    hole_of: Vec<usize>,
    blocks: Vec<HoleBlock>,
}

/// Minimum gap allowed between distinct hole boundaries.
pub const OVERLAP_TOLERANCE: f64 = 1e-6;

/// Builds the quadrature grid with `nodes_per_hole[j]` equispaced parameters on hole `j`.
pub fn build_grid(holes: &[Hole], nodes_per_hole: &[usize], torus: &Torus) -> Result<QuadratureGrid> {
    if holes.is_empty() {
        return Err(Error::InvalidArgument("at least one hole is required".into()));
    }
    if holes.len() != nodes_per_hole.len() {
        return Err(Error::Dimension(format!(
            "{} holes but {} node counts",
            holes.len(),
            nodes_per_hole.len()
        )));
    }
    if let Some(&n) = nodes_per_hole.iter().find(|&&n| n < 4 || n % 2 != 0) {
        return Err(Error::InvalidN(n));
    }
    check_disjoint(holes, torus)?;

    let total: usize = nodes_per_hole.iter().sum();
    let mut grid = QuadratureGrid {
        torus: torus.clone(),
        holes: holes.to_vec(),
        points: Vec::with_capacity(total),
        params: Vec::with_capacity(total),
        weights: Vec::with_capacity(total),
        hole_of: Vec::with_capacity(total),
        blocks: Vec::with_capacity(holes.len()),
    };
    for (j, (hole, &n)) in holes.iter().zip(nodes_per_hole).enumerate() {
        let start = grid.points.len();
        let h = 2.0 * PI / n as f64;
        let mut area = 0.0;
        let mut perimeter = 0.0;
        for k in 0..n {
            let t = h * k as f64;
            let p = curve_eval(hole, t)?;
            let w = h * p.speed;
            // shoelace 1/2 (x dy - y dx) about the center; dz = -i nu |z'| dt
            let offset = p.position - hole.center;
            let dz = -Complex64::new(0.0, 1.0) * p.normal * p.speed;
            area += 0.5 * (offset.re * dz.im - offset.im * dz.re) * h;
            perimeter += w;
            grid.points.push(p);
            grid.params.push(t);
            grid.weights.push(w);
            grid.hole_of.push(j);
        }
        grid.blocks.push(HoleBlock {
            range: start..grid.points.len(),
            area,
            perimeter,
        });
    }
    let area = grid.total_hole_area();
    if area >= torus.b() {
        return Err(Error::Area { area, b: torus.b() });
    }
    Ok(grid)
}

fn check_disjoint(holes: &[Hole], torus: &Torus) -> Result<()> {
    let shortest = [Complex64::new(1.0, 0.0), torus.tau(), torus.tau() - 1.0, torus.tau() + 1.0]
        .iter()
        .map(|v| v.norm())
        .fold(f64::INFINITY, f64::min);
    for (j, h) in holes.iter().enumerate() {
        if 2.0 * h.shape.max_radius() + OVERLAP_TOLERANCE >= shortest {
            return Err(Error::Overlap {
                first: j,
                second: j,
                distance: shortest - 2.0 * h.shape.max_radius(),
            });
        }
    }
    const SAMPLES: usize = 512;
    let sample = |h: &Hole| -> Vec<Complex64> {
        (0..SAMPLES)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / SAMPLES as f64;
                h.center + Complex64::from_polar(h.shape.radius(t), t)
            })
            .collect()
    };
    for j in 0..holes.len() {
        for k in j + 1..holes.len() {
            let (a, b) = (&holes[j], &holes[k]);
            let gap = torus.nearest_image(b.center - a.center).norm();
            let reach = a.shape.max_radius() + b.shape.max_radius();
            if gap > reach + 0.05 {
                continue;
            }
            let offset = torus.nearest_image(b.center - a.center);
            if a.contains_offset(offset) || b.contains_offset(-offset) {
                return Err(Error::Overlap {
                    first: j,
                    second: k,
                    distance: 0.0,
                });
            }
            let (sa, sb) = (sample(a), sample(b));
            let mut min = f64::INFINITY;
            for &p in &sa {
                for &q in &sb {
                    min = min.min(torus.nearest_image(q - p).norm());
                }
            }
            // a sampled gap that small means the curves touch or cross
            let spacing = 2.0 * PI * reach / SAMPLES as f64;
            if min <= OVERLAP_TOLERANCE.max(0.5 * spacing) {
                return Err(Error::Overlap {
                    first: j,
                    second: k,
                    distance: min,
                });
            }
            for (q, hole, other) in sb.iter().map(|q| (q, a, b)).chain(sa.iter().map(|q| (q, b, a))) {
                let _ = other;
                if hole.contains_offset(torus.nearest_image(q - hole.center)) {
                    return Err(Error::Overlap {
                        first: j,
                        second: k,
                        distance: 0.0,
                    });
                }
            }
        }
    }
    Ok(())
}

/// Where a point lies relative to the holes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Omega,
    Hole(usize),
    /// Within the near-boundary band of hole `j`; field values there are unreliable.
    NearBoundary(usize),
}

impl Region {
    pub fn code(&self) -> &'static str {
        match self {
            Region::Omega => "omega",
            Region::Hole(_) => "hole",
            Region::NearBoundary(_) => "near",
        }
    }
}

impl QuadratureGrid {
    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    pub fn holes(&self) -> &[Hole] {
        &self.holes
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn hole_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn points(&self) -> &[KernelPoint] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &KernelPoint {
        &self.points[i]
    }

    /// Curve parameter of node `i` on its own hole.
    pub fn param(&self, i: usize) -> f64 {
        self.params[i]
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Arclength trapezoid weights `(2 pi / N_j) |z'(t_i)|`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn hole_of(&self, i: usize) -> usize {
        self.hole_of[i]
    }

    pub fn blocks(&self) -> &[HoleBlock] {
        &self.blocks
    }

    pub fn block(&self, j: usize) -> &HoleBlock {
        &self.blocks[j]
    }

    pub fn nodes_per_hole(&self) -> Vec<usize> {
        self.blocks.iter().map(HoleBlock::len).collect()
    }

    pub fn total_hole_area(&self) -> f64 {
        self.blocks.iter().map(|b| b.area).sum()
    }

    /// `|dOmega|`
    pub fn total_length(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Largest node spacing; sets the default near-boundary band.
    pub fn max_spacing(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// The same holes with every node count multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Result<QuadratureGrid> {
        let counts: Vec<usize> = self.nodes_per_hole().iter().map(|n| n * factor).collect();
        self.with_nodes(&counts)
    }

    pub fn with_nodes(&self, nodes_per_hole: &[usize]) -> Result<QuadratureGrid> {
        build_grid(&self.holes, nodes_per_hole, &self.torus)
    }

    /// `sum_{i in hole j} w_i v_i`
    pub fn integrate_over_hole(&self, values: &[f64], j: usize) -> f64 {
        self.blocks[j]
            .range
            .clone()
            .map(|i| self.weights[i] * values[i])
            .sum()
    }

    /// `sum_i w_i v_i`
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Weighted mean over the whole boundary.
    pub fn mean(&self, values: &[f64]) -> f64 {
        self.integrate(values) / self.total_length()
    }

    /// Discrete `L^2(dOmega)` norm.
    pub fn l2_norm(&self, values: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Classifies `z` with the default band of twice the largest node spacing.
    pub fn classify(&self, z: Complex64) -> Region {
        classify_point(z, self, 2.0 * self.max_spacing())
    }
}

/// Region of `z` after lattice reduction; `band` is the near-boundary width.
pub fn classify_point(z: Complex64, grid: &QuadratureGrid, band: f64) -> Region {
    let torus = grid.torus();
    let mut inside = None;
    for (j, hole) in grid.holes().iter().enumerate() {
        let w = torus.nearest_image(z - hole.center);
        if w.norm() > hole.shape.max_radius() + band {
            continue;
        }
        let near = grid.blocks()[j]
            .range
            .clone()
            .any(|i| torus.nearest_image(z - grid.point(i).position).norm() <= band);
        if near {
            return Region::NearBoundary(j);
        }
        if inside.is_none() && hole.contains_offset(w) {
            inside = Some(j);
        }
    }
    inside.map_or(Region::Omega, Region::Hole)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn circle_point_data() {
        let hole = Hole::circle(c(0.5, 0.5), 0.2).unwrap();
        let p = curve_eval(&hole, 0.0).unwrap();
        assert!((p.position - c(0.7, 0.5)).norm() < 1e-15);
        assert!((p.speed - 0.2).abs() < 1e-15);
        assert!((p.curvature.abs() - 5.0).abs() < 1e-12);
        // normal points at the center
        assert!((p.normal - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn trefoil_radius_and_curvature() {
        let hole = Hole::trefoil(c(0.0, 0.0), 0.1).unwrap();
        let p = curve_eval(&hole, PI / 3.0).unwrap();
        assert!((p.position.norm() - 0.07).abs() < 1e-15);
        // 50-digit symbolic-derivative oracle
        let p = curve_eval(&hole, 0.4).unwrap();
        assert!((p.curvature - -13.84783340930461518003478).abs() < 1e-11, "{}", p.curvature);
    }

    #[test]
    fn oscillatory_profile_derivatives() {
        let shape = HoleShape::Oscillatory { r: 0.126, omega: 6 };
        let h = 1e-5;
        for t in [0.1, 1.7, 4.0] {
            let (_, d1, d2) = shape.profile(t);
            let fd1 = (shape.radius(t + h) - shape.radius(t - h)) / (2.0 * h);
            let fd2 = (shape.radius(t + h) - 2.0 * shape.radius(t) + shape.radius(t - h)) / (h * h);
            assert!((fd1 - d1).abs() < 1e-9);
            assert!((fd2 - d2).abs() < 1e-5);
        }
    }

    #[test]
    fn fourier_profile_positivity() {
        assert!(Hole::new(c(0.0, 0.0), HoleShape::Fourier { a0: 0.1, cos: vec![0.2], sin: vec![] }).is_err());
        let shape = HoleShape::Fourier { a0: 0.1, cos: vec![0.0, 0.02], sin: vec![0.01] };
        let hole = Hole::new(c(0.0, 0.0), shape.clone()).unwrap();
        let (_, d1, _) = shape.profile(0.3);
        let fd = (shape.radius(0.3 + 1e-6) - shape.radius(0.3 - 1e-6)) / 2e-6;
        assert!((fd - d1).abs() < 1e-9);
        assert!(curve_eval(&hole, 0.3).is_ok());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Hole::circle(c(0.0, 0.0), 0.0).is_err());
        assert!(Hole::circle(c(0.0, 0.0), -1.0).is_err());
        assert!(Hole::oscillatory(c(0.0, 0.0), 1.5, 3).is_err());
        assert!(Hole::oscillatory(c(0.0, 0.0), 0.1, 0).is_err());
    }

    #[test]
    fn circle_grid_totals() {
        let torus = Torus::square();
        let hole = Hole::circle(c(0.5, 0.5), 0.2).unwrap();
        let grid = build_grid(&[hole], &[50], &torus).unwrap();
        assert!((grid.total_length() - 2.0 * PI * 0.2).abs() < 1e-13);
        assert!((grid.block(0).area - PI * 0.04).abs() < 1e-13);
    }

    #[test]
    fn trefoil_perimeter_matches_quadrature_oracle() {
        let torus = Torus::square();
        let hole = Hole::trefoil(c(0.5, 0.5), 0.1).unwrap();
        let grid = build_grid(&[hole], &[128], &torus).unwrap();
        assert!((grid.block(0).perimeter - 0.7426639914630696438079683).abs() < 1e-13);
        // polar area 1/2 int rho^2 = pi r^2 (1 + 0.045)
        assert!((grid.block(0).area - PI * 0.01 * 1.045).abs() < 1e-13);
    }

    #[test]
    fn node_count_validation() {
        let torus = Torus::square();
        let hole = Hole::circle(c(0.5, 0.5), 0.2).unwrap();
        assert!(matches!(build_grid(&[hole.clone()], &[51], &torus), Err(Error::InvalidN(51))));
        assert!(matches!(build_grid(&[hole.clone()], &[2], &torus), Err(Error::InvalidN(2))));
        assert!(matches!(build_grid(&[hole], &[10, 10], &torus), Err(Error::Dimension(_))));
    }

    #[test]
    fn overlap_and_area_errors() {
        let torus = Torus::square();
        let a = Hole::circle(c(0.5, 0.5), 0.2).unwrap();
        let b = Hole::circle(c(0.75, 0.5), 0.1).unwrap();
        assert!(matches!(build_grid(&[a.clone(), b], &[16, 16], &torus), Err(Error::Overlap { .. })));
        // overlap through the periodic identification
        let b = Hole::circle(c(0.05, 0.5), 0.2).unwrap();
        let a2 = Hole::circle(c(0.8, 0.5), 0.2).unwrap();
        assert!(matches!(build_grid(&[a2, b], &[16, 16], &torus), Err(Error::Overlap { .. })));
        // nested
        let inner = Hole::circle(c(0.5, 0.5), 0.05).unwrap();
        assert!(matches!(build_grid(&[a, inner], &[16, 16], &torus), Err(Error::Overlap { .. })));
        // a hole too large for the cell
        let big = Hole::circle(c(0.5, 0.5), 0.55).unwrap();
        assert!(build_grid(&[big], &[16], &torus).is_err());
        // area check on a flat torus with a hole that fits
        let flat = Torus::new(c(0.0, 0.3)).unwrap();
        let wide = Hole::new(c(0.5, 0.15), HoleShape::Fourier { a0: 0.12, cos: vec![0.0], sin: vec![] }).unwrap();
        assert!(build_grid(&[wide], &[16], &flat).is_ok());
    }

    #[test]
    fn example_two_grid_builds() {
        for torus in [Torus::square(), Torus::equilateral()] {
            let holes: Vec<Hole> = [c(0.7, 0.5), c(0.3, 0.3), c(0.0, 0.0)]
                .iter()
                .map(|&a| Hole::trefoil(a, 0.1).unwrap())
                .collect();
            let grid = build_grid(&holes, &[50, 50, 50], &torus).unwrap();
            assert_eq!(grid.hole_count(), 3);
            assert_eq!(grid.len(), 150);
        }
    }

    #[test]
    fn normals_point_into_holes() {
        let torus = Torus::square();
        let holes = vec![
            Hole::trefoil(c(0.3, 0.3), 0.1).unwrap(),
            Hole::oscillatory(c(0.72, 0.353), 0.126, 6).unwrap(),
        ];
        let grid = build_grid(&holes, &[64, 64], &torus).unwrap();
        for i in 0..grid.len() {
            let p = grid.point(i);
            let center = holes[grid.hole_of(i)].center;
            assert!(crate::green::dot(p.position - center, p.normal) < 0.0);
            assert!((p.normal.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn spectral_accuracy_of_geometry() {
        let torus = Torus::square();
        let holes = vec![Hole::trefoil(c(0.3, 0.3), 0.1).unwrap()];
        let coarse = build_grid(&holes, &[64], &torus).unwrap();
        let fine = coarse.refined(2).unwrap();
        assert!((coarse.total_length() - fine.total_length()).abs() < 1e-12);
        assert!((coarse.block(0).area - fine.block(0).area).abs() < 1e-12);
    }

    #[test]
    fn classification() {
        let torus = Torus::square();
        let hole = Hole::circle(c(0.5, 0.5), 0.2).unwrap();
        let grid = build_grid(&[hole], &[64], &torus).unwrap();
        let band = 2.0 * grid.max_spacing();
        assert_eq!(grid.classify(c(0.5, 0.5)), Region::Hole(0));
        assert_eq!(grid.classify(c(0.0, 0.0)), Region::Omega);
        let node = grid.point(5);
        let z = node.position - node.normal * (band / 2.0);
        assert_eq!(grid.classify(z), Region::NearBoundary(0));
        for z in [c(0.5, 0.5), c(0.0, 0.0), z, c(0.62, 0.41)] {
            let r = grid.classify(z);
            assert_eq!(grid.classify(z + 1.0), r);
            assert_eq!(grid.classify(z + torus.tau()), r);
            assert_eq!(grid.classify(z - torus.tau() * 3.0 + 2.0), r);
        }
    }
}
