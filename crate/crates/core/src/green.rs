//! The doubly-periodic Green's function and the layer-potential kernels built on it.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::elliptic::Torus;
use crate::Result;

/// A boundary point with the data the kernels need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPoint {
    pub position: Complex64,
    /// Unit normal pointing out of the domain, into the hole.
    pub normal: Complex64,
    /// `|z'(t)|` of the parametrization.
    pub speed: f64,
    /// Signed curvature; negative on arcs that are convex as seen from the hole.
    pub curvature: f64,
}

/// `z1 o z2 = Re(z1 conj(z2))`, the Euclidean dot product.
#[inline]
pub fn dot(z1: Complex64, z2: Complex64) -> f64 {
    z1.re * z2.re + z1.im * z2.im
}

/// `G(z) = -log|theta1(z)| / (2 pi) + Im(z)^2 / (2 b)`.
pub fn green(z: Complex64, torus: &Torus) -> Result<f64> {
    let red = torus.check_regular(z)?;
    let (theta, _) = torus.series(red.z, &torus.tolerance())?;
    Ok(-theta.norm().ln() / (2.0 * PI) + red.z.im * red.z.im / (2.0 * torus.b()))
}

/// `G_x + i G_y` at `z`.
pub fn green_gradient(z: Complex64, torus: &Torus) -> Result<Complex64> {
    let red = torus.check_regular(z)?;
    let (theta, dtheta) = torus.series(red.z, &torus.tolerance())?;
    let f = dtheta / theta;
    Ok(Complex64::new(
        -f.re / (2.0 * PI),
        f.im / (2.0 * PI) + red.z.im / torus.b(),
    ))
}

/// `G` and `G_x + i G_y` from one series evaluation.
pub fn green_with_gradient(z: Complex64, torus: &Torus) -> Result<(f64, Complex64)> {
    let red = torus.check_regular(z)?;
    let (theta, dtheta) = torus.series(red.z, &torus.tolerance())?;
    let f = dtheta / theta;
    let g = -theta.norm().ln() / (2.0 * PI) + red.z.im * red.z.im / (2.0 * torus.b());
    let grad = Complex64::new(-f.re / (2.0 * PI), f.im / (2.0 * PI) + red.z.im / torus.b());
    Ok((g, grad))
}

/// Double-layer kernel `d/d nu_xi G(z - xi)`.
pub fn normal_deriv_source(z: Complex64, xi: &KernelPoint, torus: &Torus) -> Result<f64> {
    Ok(-dot(green_gradient(z - xi.position, torus)?, xi.normal))
}

/// Adjoint kernel `d/d nu_z G(z - xi)` with the normal taken at `z`.
pub fn normal_deriv_target(z: &KernelPoint, xi: Complex64, torus: &Torus) -> Result<f64> {
    Ok(dot(green_gradient(z.position - xi, torus)?, z.normal))
}

/// Limit of either normal-derivative kernel on the diagonal.
#[inline]
pub fn kernel_diagonal(p: &KernelPoint) -> f64 {
    -p.curvature / (4.0 * PI)
}

/// Smooth part of the single-layer kernel after removing the periodic log singularity:
///
/// ```text
/// G(z(s) - z(t)) + log(4 sin^2((s - t)/2)) / (4 pi)
/// ```
///
/// At `s == t` the analytic limit `-(log speed + log|theta1'(0)|) / (2 pi)` is used.
pub fn single_layer_remainder(
    s: f64,
    t: f64,
    at_s: &KernelPoint,
    at_t: &KernelPoint,
    torus: &Torus,
) -> Result<f64> {
    if s == t {
        return Ok(remainder_diagonal(at_t.speed, torus));
    }
    let half = (s - t) / 2.0;
    let log_part = (4.0 * half.sin().powi(2)).ln() / (4.0 * PI);
    Ok(green(at_s.position - at_t.position, torus)? + log_part)
}

#[inline]
pub(crate) fn remainder_diagonal(speed: f64, torus: &Torus) -> f64 {
    -(speed.ln() + torus.theta1_prime0().norm().ln()) / (2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn circle_point(center: Complex64, r: f64, t: f64) -> KernelPoint {
        let e = Complex64::from_polar(1.0, t);
        KernelPoint {
            position: center + e * r,
            normal: -e,
            speed: r,
            curvature: -1.0 / r,
        }
    }

    #[test]
    fn even_and_periodic() {
        let t = Torus::new(c(1.0 / 3.0, 2.0 / 3.0)).unwrap();
        let z = c(0.37, 0.21);
        assert!((green(z, &t).unwrap() - green(-z, &t).unwrap()).abs() < 1e-14);
        let z = c(0.3, 0.1);
        assert!((green(z + t.tau(), &t).unwrap() - green(z, &t).unwrap()).abs() < 1e-13);
        assert!((green(z - 1.0, &t).unwrap() - green(z, &t).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn frozen_saddle_value() {
        let t = Torus::new(c(1.0 / 3.0, 2.0 / 3.0)).unwrap();
        let v = green((t.tau() + 1.0) / 2.0, &t).unwrap();
        assert!((v - -0.02126065872861213911727356).abs() < 1e-14, "{v}");
    }

    #[test]
    fn singular_at_lattice_points() {
        let t = Torus::square();
        assert!(matches!(green(c(0.0, 0.0), &t), Err(Error::SingularArgument { .. })));
        assert!(matches!(green_gradient(c(2.0, -1.0), &t), Err(Error::SingularArgument { .. })));
    }

    #[test]
    fn gradient_odd_and_matches_differences() {
        let t = Torus::equilateral();
        let h = 1e-6;
        for z in [c(0.21, 0.13), c(-0.4, 0.35), c(0.05, -0.2)] {
            let g = green_gradient(z, &t).unwrap();
            assert!((g + green_gradient(-z, &t).unwrap()).norm() < 1e-13);
            let gx = (green(z + h, &t).unwrap() - green(z - h, &t).unwrap()) / (2.0 * h);
            let gy = (green(z + c(0.0, h), &t).unwrap() - green(z - c(0.0, h), &t).unwrap()) / (2.0 * h);
            assert!((gx - g.re).abs() < 1e-8 && (gy - g.im).abs() < 1e-8, "{z}: {g} vs ({gx},{gy})");
        }
    }

    #[test]
    fn laplacian_is_inverse_area() {
        let t = Torus::square();
        let z = c(0.4, 0.3);
        let h = 1e-3;
        let g = |w| green(w, &t).unwrap();
        let lap = (g(z + h) + g(z - h) + g(z + c(0.0, h)) + g(z - c(0.0, h)) - 4.0 * g(z)) / (h * h);
        assert!((lap - 1.0 / t.b()).abs() < 1e-5, "{lap}");
    }

    #[test]
    fn source_kernel_near_diagonal_asymptotics() {
        let t = Torus::square();
        let xi = circle_point(c(0.5, 0.5), 0.2, 0.7);
        let dir = c(0.6, 0.8);
        let mut prev = f64::INFINITY;
        for k in 1..6 {
            let d = 10f64.powi(-k);
            let z = xi.position + dir * d;
            let diff = z - xi.position;
            let lead = dot(diff, xi.normal) / (2.0 * PI * diff.norm_sqr());
            let rem = (normal_deriv_source(z, &xi, &t).unwrap() - lead).abs();
            assert!(rem < 2.0 * d, "d = {d}: {rem}");
            assert!(rem <= prev);
            prev = rem;
        }
    }

    #[test]
    fn source_kernel_matches_directional_difference() {
        let t = Torus::square();
        let xi = circle_point(c(0.1, 0.2), 0.15, 2.0);
        let z = c(0.6, 0.75);
        let h = 1e-6;
        let fd = (green(z - (xi.position + xi.normal * h), &t).unwrap()
            - green(z - (xi.position - xi.normal * h), &t).unwrap())
            / (2.0 * h);
        assert!((fd - normal_deriv_source(z, &xi, &t).unwrap()).abs() < 1e-7);
    }

    #[test]
    fn target_kernel_reciprocity_and_difference() {
        let t = Torus::equilateral();
        let p = circle_point(c(0.3, 0.4), 0.1, 1.1);
        let xi = c(0.9, 0.1);
        let target = normal_deriv_target(&p, xi, &t).unwrap();
        let swapped = KernelPoint { position: p.position, ..p };
        // d/dnu_z G(z - xi) = d/dnu_xi' G(xi - z) with xi' = z
        let source = normal_deriv_source(xi, &swapped, &t).unwrap();
        assert!((target - source).abs() < 1e-14);
        let h = 1e-6;
        let fd = (green(p.position + p.normal * h - xi, &t).unwrap()
            - green(p.position - p.normal * h - xi, &t).unwrap())
            / (2.0 * h);
        assert!((fd - target).abs() < 1e-7);
    }

    #[test]
    fn target_kernel_diagonal_limit_on_circle() {
        let t = Torus::square();
        let r = 0.2;
        let center = c(0.5, 0.5);
        let p = circle_point(center, r, 0.3);
        let expected = kernel_diagonal(&p);
        assert!((expected - 1.0 / (4.0 * PI * r)).abs() < 1e-15);
        let q = circle_point(center, r, 0.3 + 1e-5);
        let v = normal_deriv_target(&p, q.position, &t).unwrap();
        assert!((v - expected).abs() < 1e-5, "{v} vs {expected}");
        let v = normal_deriv_source(p.position, &q, &t).unwrap();
        assert!((v - expected).abs() < 1e-5, "{v} vs {expected}");
    }

    #[test]
    fn remainder_diagonal_on_circle() {
        let t = Torus::square();
        let r = 0.2;
        let center = c(0.5, 0.5);
        let s = 1.3;
        let p = circle_point(center, r, s);
        let diag = single_layer_remainder(s, s, &p, &p, &t).unwrap();
        let expected = -(r.ln()) / (2.0 * PI) - t.theta1_prime0().norm().ln() / (2.0 * PI);
        assert!((diag - expected).abs() < 1e-15);
        let q = circle_point(center, r, s + 1e-6);
        let near = single_layer_remainder(s, s + 1e-6, &p, &q, &t).unwrap();
        assert!((near - diag).abs() < 1e-8, "{near} vs {diag}");
        let back = single_layer_remainder(s + 1e-6, s, &q, &p, &t).unwrap();
        assert!((near - back).abs() < 1e-14);
    }
}
