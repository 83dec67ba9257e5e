//! Boundary integral solvers for the Laplace equation on flat tori with holes.
//!
//! The torus is `C / (Z + Z tau)`. Layer potentials are built from the
//! doubly-periodic Green's function
//!
//! ```text
//! G(z) = -log|theta1(z)| / (2 pi) + Im(z)^2 / (2 b),   b = Im(tau)
//! ```
//!
//! which satisfies `Laplace G = 1/b - delta`. Boundaries are discretized with the
//! trapezoid rule (Nyström), with a logarithmic split for the single layer.
//!
//! Module map:
//!
//! - [`elliptic`]: theta function series with lattice reduction
//! - [`green`]: the Green's function, its gradient and the layer kernels
//! - [`geometry`]: hole shapes, quadrature grids, point classification
//! - [`operators`]: dense Nyström matrices `K`, `K*`, `S`, `S0`, `M`, `X`
//! - [`solvers`]: Dirichlet, Neumann, Steklov and Neumann-to-Dirichlet
//! - [`fields`]: off-boundary evaluation, fluxes, residuals, convergence studies
//! - [`cases`]: the reference geometries and data used for regression
//! - [`checks`]: property suites shared by the CLI self-test and the test-suite

pub mod cases;
pub mod checks;
pub mod elliptic;
pub mod fields;
pub mod geometry;
pub mod green;
pub mod linalg;
pub mod operators;
pub mod solvers;

pub use num_complex::Complex64;

pub use elliptic::{SeriesTolerance, Torus};
pub use fields::{FieldGrid, Potential};
pub use geometry::{Hole, HoleShape, QuadratureGrid, Region};
pub use green::KernelPoint;
pub use operators::{DenseOperator, OperatorKind};
pub use solvers::{DirichletSolution, NeumannConvention, NeumannSolution, SteklovEigenpair};

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid torus: {0}")]
    InvalidTorus(String),
    #[error("invalid series tolerance: {0}")]
    InvalidTolerance(String),
    #[error("theta series did not converge within {n_max} terms")]
    NonConvergent { n_max: usize },
    #[error("argument {z} lies within {radius:e} of a lattice point")]
    SingularArgument { z: Complex64, radius: f64 },
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("holes {first} and {second} overlap (minimum distance {distance:e})")]
    Overlap {
        first: usize,
        second: usize,
        distance: f64,
    },
    #[error("total hole area {area} is not smaller than the torus area {b}")]
    Area { area: f64, b: f64 },
    #[error("invalid node count {0}: must be even and at least 4")]
    InvalidN(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("linear system is numerically singular (pivot ratio {pivot_ratio:e})")]
    SingularSystem { pivot_ratio: f64 },
    #[error("Neumann data has nonzero mean: |sum w g| = {mean:e} > {tol:e}")]
    NonZeroMeanData { mean: f64, tol: f64 },
    #[error("eigensolver failure: {0}")]
    EigensolverFailure(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergent { .. }
                | Error::SingularSystem { .. }
                | Error::EigensolverFailure(_)
                | Error::SingularArgument { .. }
        )
    }
}
