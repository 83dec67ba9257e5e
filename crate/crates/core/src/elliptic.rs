//! Jacobi `theta1` on the lattice `Z + Z tau`.
//!
//! With the nome `q = exp(i pi tau)`,
//!
//! ```text
//! theta1(z) = 2 sum_{n >= 0} (-1)^n q^{(n + 1/2)^2} sin((2n + 1) pi z)
//! ```
//!
//! Every evaluation first reduces `z` modulo the lattice so that
//! `|Im z| <= b / 2`, then reapplies the exact quasi-period factors
//! `theta1(z + 1) = -theta1(z)` and `theta1(z + tau) = -q^-1 e^{-2 pi i z} theta1(z)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::{Error, Result};

/// Tori with `Im tau` below this are rejected: the series converges too slowly.
pub const MIN_IMAG_TAU: f64 = 0.05;

/// Default radius (in reduced coordinates) inside which an argument counts as a lattice point.
pub const DEFAULT_EXCLUSION_RADIUS: f64 = 1e-12;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Truncation control for the theta series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTolerance {
    rtol: f64,
    n_max: usize,
}

impl SeriesTolerance {
    pub fn new(rtol: f64, n_max: usize) -> Result<Self> {
        if !(rtol > 0.0 && rtol.is_finite()) {
            return Err(Error::InvalidTolerance(format!("rtol must be positive, got {rtol}")));
        }
        if n_max < 1 {
            return Err(Error::InvalidTolerance("n_max must be at least 1".into()));
        }
        Ok(Self { rtol, n_max })
    }

    pub fn rtol(&self) -> f64 {
        self.rtol
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }
}

impl Default for SeriesTolerance {
    fn default() -> Self {
        Self {
            rtol: 1e-15,
            n_max: 64,
        }
    }
}

/// A point written as `reduced + n + m tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reduced {
    pub z: Complex64,
    /// Number of unit shifts removed.
    pub n: i64,
    /// Number of `tau` shifts removed.
    pub m: i64,
}

/// The flat torus `C / (Z + Z tau)` together with its cached theta data.
#[derive(Debug, Clone)]
pub struct Torus {
    tau: Complex64,
    b: f64,
    q: Complex64,
    /// `(-1)^n q^{(n+1/2)^2}` for `n < coeffs.len()`.
    coeffs: Vec<Complex64>,
    tol: SeriesTolerance,
    exclusion_radius: f64,
    theta1_prime0: Complex64,
}

impl Torus {
    /// Builds the torus for lattice parameter `tau` with the default series tolerance.
    pub fn new(tau: Complex64) -> Result<Self> {
        Self::with_tolerance(tau, SeriesTolerance::default())
    }

    pub fn with_tolerance(tau: Complex64, tol: SeriesTolerance) -> Result<Self> {
        if !(tau.re.is_finite() && tau.im.is_finite()) {
            return Err(Error::InvalidTorus(format!("tau must be finite, got {tau}")));
        }
        if tau.im <= 0.0 {
            return Err(Error::InvalidTorus(format!("Im(tau) must be positive, got {}", tau.im)));
        }
        if tau.im < MIN_IMAG_TAU {
            return Err(Error::InvalidTorus(format!(
                "Im(tau) = {} is below the thin-torus limit {MIN_IMAG_TAU}",
                tau.im
            )));
        }
        let q = (I * PI * tau).exp();
        let n_cache = tol.n_max.max(SeriesTolerance::default().n_max);
        let coeffs = (0..n_cache).map(|n| coefficient(tau, n)).collect();
        let mut torus = Self {
            tau,
            b: tau.im,
            q,
            coeffs,
            tol,
            exclusion_radius: DEFAULT_EXCLUSION_RADIUS,
            theta1_prime0: Complex64::new(0.0, 0.0),
        };
        torus.theta1_prime0 = torus.prime_at_zero(&tol)?;
        Ok(torus)
    }

    /// The square torus `tau = i`.
    pub fn square() -> Self {
        Self::new(I).expect("square torus is valid")
    }

    /// The equilateral torus `tau = 1/2 + i sqrt(3)/2`.
    pub fn equilateral() -> Self {
        Self::new(Complex64::new(0.5, 3f64.sqrt() / 2.0)).expect("equilateral torus is valid")
    }

    pub fn with_exclusion_radius(mut self, radius: f64) -> Self {
        self.exclusion_radius = radius;
        self
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    /// Torus area, `Im tau`.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// The nome `exp(i pi tau)`.
    pub fn q(&self) -> Complex64 {
        self.q
    }

    pub fn tolerance(&self) -> SeriesTolerance {
        self.tol
    }

    pub fn exclusion_radius(&self) -> f64 {
        self.exclusion_radius
    }

    /// Cached `theta1'(0)` at the torus' default tolerance.
    pub fn theta1_prime0(&self) -> Complex64 {
        self.theta1_prime0
    }

    /// Reduces `z` modulo the lattice so that `|Im| <= b/2` and `|Re| <= 1/2`.
    pub fn reduce(&self, z: Complex64) -> Reduced {
        let m = (z.im / self.b).round();
        let z1 = z - self.tau * m;
        let n = z1.re.round();
        Reduced {
            z: z1 - n,
            n: n as i64,
            m: m as i64,
        }
    }

    /// The lattice image of `z` closest to the origin.
    pub fn nearest_image(&self, z: Complex64) -> Complex64 {
        let w = self.reduce(z).z;
        let mut best = w;
        for k in -1..=1 {
            for l in -1..=1 {
                let cand = w - self.tau * l as f64 - k as f64;
                if cand.norm_sqr() < best.norm_sqr() {
                    best = cand;
                }
            }
        }
        best
    }

    /// Distance from `z` to the nearest lattice point.
    pub fn lattice_distance(&self, z: Complex64) -> f64 {
        self.nearest_image(z).norm()
    }

    pub(crate) fn check_regular(&self, z: Complex64) -> Result<Reduced> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite argument {z}")));
        }
        let red = self.reduce(z);
        if self.lattice_distance(red.z) < self.exclusion_radius {
            return Err(Error::SingularArgument {
                z,
                radius: self.exclusion_radius,
            });
        }
        Ok(red)
    }

    fn coeff(&self, n: usize) -> Complex64 {
        match self.coeffs.get(n) {
            Some(c) => *c,
            None => coefficient(self.tau, n),
        }
    }

    /// `(theta1(w), theta1'(w))` for an already reduced `w`.
    pub(crate) fn series(&self, w: Complex64, tol: &SeriesTolerance) -> Result<(Complex64, Complex64)> {
        if w.re == 0.0 && w.im == 0.0 {
            return Ok((Complex64::new(0.0, 0.0), self.prime_at_zero(tol)?));
        }
        let abs_q = self.q.norm();
        let growth = (PI * w.im.abs()).exp();

        // sin/cos((2n+1) pi w) by the angle-addition recurrence, which keeps full
        // relative accuracy for tiny |w|.
        let arg = w * PI;
        let (s1, c1) = (arg.sin(), arg.cos());
        let s2 = s1 * c1 * 2.0;
        let c2 = Complex64::new(1.0, 0.0) - s1 * s1 * 2.0;
        let (mut s, mut c) = (s1, c1);

        let mut theta = Complex64::new(0.0, 0.0);
        let mut dtheta = Complex64::new(0.0, 0.0);
        for n in 0..tol.n_max {
            let cn = self.coeff(n) * 2.0;
            let k = (2 * n + 1) as f64;
            theta += cn * s;
            dtheta += cn * c * (k * PI);

            let next = n as f64 + 1.5;
            let bound = abs_q.powf(next * next) * growth.powf(2.0 * next);
            let scale = theta.norm();
            let dscale = dtheta.norm().max(scale);
            if bound <= tol.rtol * scale && bound * (2.0 * next) * PI <= tol.rtol * dscale {
                return Ok((theta, dtheta));
            }
            let s_next = s * c2 + c * s2;
            c = c * c2 - s * s2;
            s = s_next;
        }
        Err(Error::NonConvergent { n_max: tol.n_max })
    }

    fn prime_at_zero(&self, tol: &SeriesTolerance) -> Result<Complex64> {
        let abs_q = self.q.norm();
        let mut sum = Complex64::new(0.0, 0.0);
        for n in 0..tol.n_max {
            sum += self.coeff(n) * (2.0 * (2 * n + 1) as f64 * PI);
            let next = n as f64 + 1.5;
            let bound = abs_q.powf(next * next) * 2.0 * next * PI;
            if bound <= tol.rtol * sum.norm() {
                return Ok(sum);
            }
        }
        Err(Error::NonConvergent { n_max: tol.n_max })
    }
}

fn coefficient(tau: Complex64, n: usize) -> Complex64 {
    let h = n as f64 + 0.5;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    (I * PI * tau * (h * h)).exp() * sign
}

/// `theta1(z)` with lattice reduction and exact quasi-period factors.
pub fn theta1(z: Complex64, torus: &Torus, tol: &SeriesTolerance) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite argument {z}")));
    }
    let red = torus.reduce(z);
    let (theta, _) = torus.series(red.z, tol)?;
    if red.m == 0 && red.n == 0 {
        return Ok(theta);
    }
    let m = red.m as f64;
    // theta1(w + n + m tau) = (-1)^{n+m} q^{-m^2} e^{-2 pi i m w} theta1(w)
    let factor = (-(I * PI * torus.tau * (m * m)) - I * (2.0 * PI * m) * red.z).exp();
    let sign = if (red.n + red.m).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    Ok(theta * factor * sign)
}

/// `theta1'(z) / theta1(z)`.
///
/// Fails with [`Error::SingularArgument`] within the torus' exclusion radius of a
/// lattice point.
pub fn theta1_log_deriv(z: Complex64, torus: &Torus, tol: &SeriesTolerance) -> Result<Complex64> {
    let red = torus.check_regular(z)?;
    let (theta, dtheta) = torus.series(red.z, tol)?;
    Ok(dtheta / theta - I * (2.0 * PI * red.m as f64))
}

/// `theta1'(0)` from the differentiated series.
pub fn theta1_prime_at_zero(torus: &Torus, tol: &SeriesTolerance) -> Result<Complex64> {
    torus.prime_at_zero(tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_bad_tau() {
        assert!(matches!(Torus::new(c(0.0, -1.0)), Err(Error::InvalidTorus(_))));
        assert!(matches!(Torus::new(c(0.3, 0.0)), Err(Error::InvalidTorus(_))));
        assert!(matches!(Torus::new(c(0.0, 0.01)), Err(Error::InvalidTorus(_))));
        assert!(matches!(Torus::new(c(f64::NAN, 1.0)), Err(Error::InvalidTorus(_))));
    }

    #[test]
    fn nome_and_area() {
        let t = Torus::equilateral();
        assert_eq!(t.b(), t.tau().im);
        assert!((t.q().norm() - (-PI * t.b()).exp()).abs() < 1e-16);
    }

    #[test]
    fn tolerance_validation() {
        assert!(SeriesTolerance::new(0.0, 10).is_err());
        assert!(SeriesTolerance::new(1e-10, 0).is_err());
        assert!(SeriesTolerance::new(1e-10, 1).is_ok());
    }

    #[test]
    fn zero_at_origin() {
        let t = Torus::square();
        let v = theta1(c(0.0, 0.0), &t, &t.tolerance()).unwrap();
        assert!(v.norm() <= 1e-15 * t.theta1_prime0().norm());
        let v = theta1(c(1.0, 1.0), &t, &t.tolerance()).unwrap();
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn frozen_value_quarter() {
        // 50-digit series oracle, n in [-50, 50]
        let t = Torus::square();
        let v = theta1(c(0.25, 0.0), &t, &t.tolerance()).unwrap();
        assert!((v - c(0.6435897640385858840903268, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn frozen_prime_at_zero() {
        let t = Torus::square();
        let v = theta1_prime_at_zero(&t, &t.tolerance()).unwrap();
        assert!((v - c(2.848694603987787316079985, 0.0)).norm() < 1e-14);
        let t = Torus::equilateral();
        let v = theta1_prime_at_zero(&t, &t.tolerance()).unwrap();
        assert!((v - c(2.978574393761961210357136, 1.23376591043342389184794)).norm() < 1e-14);
        // c = log|theta1'(0)| / (2 pi) is real by construction
        let cst = v.norm().ln() / (2.0 * PI);
        assert!(cst.is_finite());
    }

    #[test]
    fn frozen_log_derivative() {
        let t = Torus::square();
        let v = theta1_log_deriv(c(0.3, 0.3), &t, &t.tolerance()).unwrap();
        assert!((v - c(0.8871245547548841353639201, -2.772080146908760078441506)).norm() < 1e-13);
    }

    #[test]
    fn shift_by_one_flips_sign() {
        let t = Torus::square();
        let z = c(0.3, 0.2);
        let tol = t.tolerance();
        let s = theta1(z + 1.0, &t, &tol).unwrap() + theta1(z, &t, &tol).unwrap();
        assert!(s.norm() < 1e-14);
        let d = theta1_log_deriv(z + 1.0, &t, &tol).unwrap() - theta1_log_deriv(z, &t, &tol).unwrap();
        assert!(d.norm() < 1e-13);
    }

    #[test]
    fn log_derivative_is_odd() {
        let t = Torus::square();
        let z = c(0.2, 0.1);
        let tol = t.tolerance();
        let s = theta1_log_deriv(-z, &t, &tol).unwrap() + theta1_log_deriv(z, &t, &tol).unwrap();
        assert!(s.norm() < 1e-13);
    }

    #[test]
    fn tau_shift_of_log_derivative() {
        let t = Torus::equilateral();
        let z = c(0.1, 0.2);
        let tol = t.tolerance();
        let d = theta1_log_deriv(z + t.tau(), &t, &tol).unwrap() - theta1_log_deriv(z, &t, &tol).unwrap();
        assert!((d + I * (2.0 * PI)).norm() < 1e-12);
    }

    #[test]
    fn singular_argument_near_lattice() {
        let t = Torus::square();
        let tol = t.tolerance();
        for z in [c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0 + 1e-14), c(-2.0, 3.0)] {
            assert!(matches!(theta1_log_deriv(z, &t, &tol), Err(Error::SingularArgument { .. })));
        }
        assert!(theta1_log_deriv(c(1e-9, 0.0), &t, &tol).is_ok());
    }

    #[test]
    fn non_convergent_when_capped() {
        let t = Torus::square();
        let tol = SeriesTolerance::new(1e-15, 1).unwrap();
        assert!(matches!(theta1(c(0.25, 0.3), &t, &tol), Err(Error::NonConvergent { n_max: 1 })));
    }

    #[test]
    fn log_derivative_matches_finite_difference() {
        let t = Torus::new(c(1.0 / 3.0, 2.0 / 3.0)).unwrap();
        let tol = t.tolerance();
        let h = 1e-5;
        for z in [c(0.3, 0.1), c(-0.2, 0.25), c(0.45, -0.3)] {
            let f = |w: Complex64| theta1(w, &t, &tol).unwrap().ln();
            let fd = (f(z + h) - f(z - h)) / (2.0 * h);
            let exact = theta1_log_deriv(z, &t, &tol).unwrap();
            assert!((fd - exact).norm() < 1e-7, "{z}: {fd} vs {exact}");
        }
    }
}
