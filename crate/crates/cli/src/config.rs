//! JSON problem configuration.
//!
//! Unknown keys are rejected everywhere. Deserialization errors carry the path of
//! the offending key (`holes[1].r`), and [`Config::validate`] checks everything
//! that does not need a solve before any numerics run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use torus_bie::elliptic::MIN_IMAG_TAU;
use torus_bie::fields::DEFAULT_FIT_FLOOR;

use crate::expr::{parse_expr, Expr};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config error at {path}: {message}")]
pub struct ConfigError {
    /// Dotted key path, `.` for the document root.
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub torus: TorusConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub holes: Vec<HoleConfig>,
    /// Seeded oscillatory holes, used instead of `holes`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_holes: Option<RandomHolesConfig>,
    pub problem: ProblemType,
    /// Dirichlet values or Neumann normal derivatives; unused for Steklov.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_data: Option<BoundaryData>,
    /// Known solution in `x`, `y` for error reporting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    pub nodes_per_hole: NodeCount,
    /// Dirichlet source points, one per hole; hole centers by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<[f64; 2]>>,
    /// Fixes the Neumann constant by a point value instead of a zero-mean trace.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neumann_pin: Option<PinConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    /// Reported eigenvalues are `eigenvalue_scale * sigma`.
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub eigenvalue_scale: f64,
    /// Steklov mode (from 1) sampled into `field.csv`; the first non-constant mode by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_mode: Option<usize>,
    /// Field samples per cell side; 0 skips `field.csv`.
    #[serde(default = "default_field_resolution")]
    pub field_resolution: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contour: Option<ContourConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceConfig>,
    #[serde(default, skip_serializing_if = "Tolerances::is_default")]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Marks configurations that take minutes rather than seconds.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub slow: bool,
}

fn one() -> f64 {
    1.0
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

fn default_field_resolution() -> usize {
    40
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TorusConfig {
    /// Real and imaginary part of the lattice parameter.
    pub tau: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum HoleConfig {
    Circle {
        center: [f64; 2],
        r: f64,
    },
    Trefoil {
        center: [f64; 2],
        r: f64,
    },
    Oscillatory {
        center: [f64; 2],
        r: f64,
        omega: u32,
    },
    Fourier {
        center: [f64; 2],
        a0: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RandomHolesConfig {
    pub count: usize,
    pub seed: u64,
    pub min_radius: f64,
    pub max_radius: f64,
    pub min_omega: u32,
    pub max_omega: u32,
    /// Minimum clearance between holes.
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ProblemType {
    Dirichlet,
    Neumann,
    Steklov,
}

impl ProblemType {
    pub fn name(self) -> &'static str {
        match self {
            ProblemType::Dirichlet => "dirichlet",
            ProblemType::Neumann => "neumann",
            ProblemType::Steklov => "steklov",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum NodeCount {
    Uniform(usize),
    PerHole(Vec<usize>),
}

/// One expression for every hole or one per hole.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum PerHole {
    All(String),
    Each(Vec<String>),
}

impl PerHole {
    pub fn sources(&self) -> Vec<&str> {
        match self {
            PerHole::All(s) => vec![s.as_str()],
            PerHole::Each(v) => v.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub at: [f64; 2],
    pub amplitude: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryData {
    /// Node values from expressions in `x`, `y`, `j`, `t`.
    Expression(PerHole),
    /// One value per node in node order; the last column of each row is used.
    Csv(PathBuf),
    /// Dirichlet data of `scale S[density] + sum A G(z - a)`, with `density` in `j`, `t`.
    SingleLayer {
        density: PerHole,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        sources: Vec<SourceConfig>,
    },
    /// `sum A G(z - a)`: its values for Dirichlet, its normal derivative for Neumann.
    Sources(Vec<SourceConfig>),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PinConfig {
    pub point: [f64; 2],
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ContourConfig {
    /// Each hole's outline redrawn at `radius`; circles and trefoils keep their shape,
    /// other profiles become circles.
    Offset { radius: f64, points: usize },
    /// Uniform random points at least `clearance` from every boundary.
    Random { count: usize, seed: u64, clearance: f64 },
    Points(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    /// Nodes per hole of each solve.
    pub nodes: Vec<usize>,
    #[serde(default)]
    pub reference: ReferenceConfig,
    #[serde(default = "default_fit_floor")]
    pub fit_floor: f64,
}

fn default_fit_floor() -> f64 {
    DEFAULT_FIT_FLOOR
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Default)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceConfig {
    /// The known solution from the boundary-data preset or `exact`.
    #[default]
    Exact,
    /// A solve at `factor` times the largest node count.
    SelfRefined { factor: usize },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series_rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series_n_max: Option<usize>,
    /// Bound on the weighted mean of Neumann data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neumann_mean: Option<f64>,
}

impl Tolerances {
    fn is_default(&self) -> bool {
        *self == Tolerances::default()
    }
}

/// Parses a configuration document.
pub fn parse(text: &str) -> Result<Config, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::new(path, e.into_inner().to_string())
    })
}

/// Reads and parses a configuration file.
pub fn load(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new(".", format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

fn finite(path: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(path, "must be finite"))
    }
}

fn positive(path: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(path, format!("must be positive, got {v}")))
    }
}

fn point(path: &str, p: &[f64; 2]) -> Result<(), ConfigError> {
    finite(&format!("{path}[0]"), p[0])?;
    finite(&format!("{path}[1]"), p[1])
}

pub fn parse_at(path: &str, src: &str) -> Result<Expr, ConfigError> {
    parse_expr(src).map_err(|e| ConfigError::new(path, format!("expression {src:?}: {e}")))
}

impl Config {
    /// Number of holes, known before any geometry is built.
    pub fn hole_count(&self) -> usize {
        match &self.random_holes {
            Some(r) => r.count,
            None => self.holes.len(),
        }
    }

    /// Per-hole node counts, with `override_n` replacing the configured ones.
    pub fn nodes(&self, override_n: Option<usize>) -> Vec<usize> {
        let m = self.hole_count();
        match (override_n, &self.nodes_per_hole) {
            (Some(n), _) | (None, &NodeCount::Uniform(n)) => vec![n; m],
            (None, NodeCount::PerHole(v)) => v.clone(),
        }
    }

    /// Checks everything that can be checked without solving.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let [re, im] = self.torus.tau;
        finite("torus.tau[0]", re)?;
        if !(im >= MIN_IMAG_TAU && im.is_finite()) {
            return Err(ConfigError::new(
                "torus.tau[1]",
                format!("imaginary part must be at least {MIN_IMAG_TAU}, got {im}"),
            ));
        }

        match (&self.random_holes, self.holes.is_empty()) {
            (Some(_), false) => {
                return Err(ConfigError::new(".", "give either holes or random_holes, not both"));
            }
            (None, true) => return Err(ConfigError::new("holes", "at least one hole is required")),
            _ => {}
        }
        for (k, hole) in self.holes.iter().enumerate() {
            let path = format!("holes[{k}]");
            match hole {
                HoleConfig::Circle { center, r } | HoleConfig::Trefoil { center, r } => {
                    point(&format!("{path}.center"), center)?;
                    positive(&format!("{path}.r"), *r)?;
                }
                HoleConfig::Oscillatory { center, r, omega } => {
                    point(&format!("{path}.center"), center)?;
                    positive(&format!("{path}.r"), *r)?;
                    if *omega == 0 {
                        return Err(ConfigError::new(format!("{path}.omega"), "must be at least 1"));
                    }
                }
                HoleConfig::Fourier { center, a0, cos, sin } => {
                    point(&format!("{path}.center"), center)?;
                    positive(&format!("{path}.a0"), *a0)?;
                    for (name, coeffs) in [("cos", cos), ("sin", sin)] {
                        for (i, v) in coeffs.iter().enumerate() {
                            finite(&format!("{path}.{name}[{i}]"), *v)?;
                        }
                    }
                }
            }
        }
        if let Some(r) = &self.random_holes {
            if r.count == 0 {
                return Err(ConfigError::new("random_holes.count", "must be at least 1"));
            }
            positive("random_holes.min_radius", r.min_radius)?;
            if !(r.max_radius > r.min_radius && r.max_radius.is_finite()) {
                return Err(ConfigError::new("random_holes.max_radius", "must exceed min_radius"));
            }
            if r.min_omega == 0 || r.max_omega < r.min_omega {
                return Err(ConfigError::new("random_holes", "need 1 <= min_omega <= max_omega"));
            }
            if !(r.gap >= 0.0 && r.gap.is_finite()) {
                return Err(ConfigError::new("random_holes.gap", "must be non-negative"));
            }
        }
        let m = self.hole_count();

        if let NodeCount::PerHole(v) = &self.nodes_per_hole {
            if v.len() != m {
                return Err(ConfigError::new(
                    "nodes_per_hole",
                    format!("{} entries for {m} holes", v.len()),
                ));
            }
        }
        for n in self.nodes(None) {
            check_nodes("nodes_per_hole", n)?;
        }

        if let Some(betas) = &self.betas {
            if betas.len() != m {
                return Err(ConfigError::new("betas", format!("{} points for {m} holes", betas.len())));
            }
            for (k, b) in betas.iter().enumerate() {
                point(&format!("betas[{k}]"), b)?;
            }
        }
        if let Some(pin) = &self.neumann_pin {
            point("neumann_pin.point", &pin.point)?;
            finite("neumann_pin.value", pin.value)?;
        }
        positive("eigenvalue_scale", self.eigenvalue_scale)?;

        match self.problem {
            ProblemType::Steklov => {
                if self.boundary_data.is_some() {
                    return Err(ConfigError::new("boundary_data", "not used by steklov problems"));
                }
                if self.k_max == Some(0) {
                    return Err(ConfigError::new("k_max", "must be at least 1"));
                }
                if self.field_mode == Some(0) {
                    return Err(ConfigError::new("field_mode", "modes are numbered from 1"));
                }
                if let (Some(mode), Some(k)) = (self.field_mode, self.k_max) {
                    if mode > k {
                        return Err(ConfigError::new("field_mode", format!("exceeds k_max = {k}")));
                    }
                }
            }
            ProblemType::Dirichlet | ProblemType::Neumann => {
                let data = self
                    .boundary_data
                    .as_ref()
                    .ok_or_else(|| ConfigError::new("boundary_data", "required for dirichlet and neumann problems"))?;
                self.validate_data(data, m)?;
            }
        }
        if let Some(src) = &self.exact {
            if !parse_at("exact", src)?.is_pointwise() {
                return Err(ConfigError::new("exact", "may only use x, y and absG"));
            }
        }

        if let Some(contour) = &self.contour {
            match contour {
                ContourConfig::Offset { radius, points } => {
                    positive("contour.offset.radius", *radius)?;
                    if *points == 0 {
                        return Err(ConfigError::new("contour.offset.points", "must be at least 1"));
                    }
                }
                ContourConfig::Random { count, clearance, .. } => {
                    if *count == 0 {
                        return Err(ConfigError::new("contour.random.count", "must be at least 1"));
                    }
                    positive("contour.random.clearance", *clearance)?;
                }
                ContourConfig::Points(points) => {
                    if points.is_empty() {
                        return Err(ConfigError::new("contour.points", "must not be empty"));
                    }
                    for (k, p) in points.iter().enumerate() {
                        point(&format!("contour.points[{k}]"), p)?;
                    }
                }
            }
        }
        if let Some(conv) = &self.convergence {
            if conv.nodes.is_empty() {
                return Err(ConfigError::new("convergence.nodes", "must not be empty"));
            }
            for (k, n) in conv.nodes.iter().enumerate() {
                check_nodes(&format!("convergence.nodes[{k}]"), *n)?;
            }
            if let ReferenceConfig::SelfRefined { factor } = conv.reference {
                if factor < 2 {
                    return Err(ConfigError::new("convergence.reference.self_refined.factor", "must be at least 2"));
                }
            }
            if !(conv.fit_floor >= 0.0) {
                return Err(ConfigError::new("convergence.fit_floor", "must be non-negative"));
            }
        }

        let tol = &self.tolerances;
        if let Some(v) = tol.series_rtol {
            positive("tolerances.series_rtol", v)?;
        }
        if tol.series_n_max == Some(0) {
            return Err(ConfigError::new("tolerances.series_n_max", "must be at least 1"));
        }
        if let Some(v) = tol.neumann_mean {
            positive("tolerances.neumann_mean", v)?;
        }
        Ok(())
    }

    fn validate_data(&self, data: &BoundaryData, m: usize) -> Result<(), ConfigError> {
        let per_hole = |path: &str, exprs: &PerHole| -> Result<(), ConfigError> {
            let sources = exprs.sources();
            if let PerHole::Each(v) = exprs {
                if v.len() != m {
                    return Err(ConfigError::new(path, format!("{} expressions for {m} holes", v.len())));
                }
            }
            for (k, src) in sources.iter().enumerate() {
                let p = match exprs {
                    PerHole::All(_) => path.to_string(),
                    PerHole::Each(_) => format!("{path}[{k}]"),
                };
                parse_at(&p, src)?;
            }
            Ok(())
        };
        let sources = |path: &str, list: &[SourceConfig]| -> Result<(), ConfigError> {
            for (k, s) in list.iter().enumerate() {
                point(&format!("{path}[{k}].at"), &s.at)?;
                finite(&format!("{path}[{k}].amplitude"), s.amplitude)?;
            }
            let total: f64 = list.iter().map(|s| s.amplitude).sum();
            let scale: f64 = list.iter().map(|s| s.amplitude.abs()).sum::<f64>().max(1.0);
            if total.abs() > 1e-12 * scale {
                return Err(ConfigError::new(
                    path,
                    format!("amplitudes must sum to zero for a harmonic field, got {total}"),
                ));
            }
            Ok(())
        };
        match data {
            BoundaryData::Expression(exprs) => per_hole("boundary_data.expression", exprs),
            BoundaryData::Csv(_) => Ok(()),
            BoundaryData::SingleLayer { density, scale, sources: list } => {
                if self.problem == ProblemType::Neumann {
                    return Err(ConfigError::new(
                        "boundary_data.single_layer",
                        "single-layer data is only available for dirichlet problems",
                    ));
                }
                finite("boundary_data.single_layer.scale", *scale)?;
                per_hole("boundary_data.single_layer.density", density)?;
                sources("boundary_data.single_layer.sources", list)
            }
            BoundaryData::Sources(list) => {
                if list.is_empty() {
                    return Err(ConfigError::new("boundary_data.sources", "must not be empty"));
                }
                sources("boundary_data.sources", list)
            }
        }
    }
}

fn check_nodes(path: &str, n: usize) -> Result<(), ConfigError> {
    if n < 4 || n % 2 != 0 {
        return Err(ConfigError::new(path, format!("node counts must be even and at least 4, got {n}")));
    }
    Ok(())
}
