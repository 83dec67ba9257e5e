//! Turns a validated configuration into geometry, boundary data and error points.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use torus_bie::cases::{Manufactured, RandomHoles, SourceField};
use torus_bie::elliptic::SeriesTolerance;
use torus_bie::fields::curve_points;
use torus_bie::geometry::{classify_point, curve_eval, QuadratureGrid};
use torus_bie::{Complex64, Hole, HoleShape, Region, Torus};

use crate::config::{parse_at, BoundaryData, Config, ConfigError, ContourConfig, HoleConfig, PerHole, ProblemType};
use crate::expr::{Env, Expr};
use crate::CliError;

fn c(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

pub fn build_torus(cfg: &Config) -> Result<Torus, CliError> {
    let default = SeriesTolerance::default();
    let tol = SeriesTolerance::new(
        cfg.tolerances.series_rtol.unwrap_or(default.rtol()),
        cfg.tolerances.series_n_max.unwrap_or(default.n_max()),
    )?;
    Ok(Torus::with_tolerance(c(cfg.torus.tau), tol)?)
}

pub fn build_holes(cfg: &Config, torus: &Torus) -> Result<Vec<Hole>, CliError> {
    if let Some(r) = &cfg.random_holes {
        let generator = RandomHoles {
            count: r.count,
            seed: r.seed,
            min_radius: r.min_radius,
            max_radius: r.max_radius,
            min_omega: r.min_omega,
            max_omega: r.max_omega,
            gap: r.gap,
        };
        return Ok(generator.generate(torus)?);
    }
    cfg.holes
        .iter()
        .map(|h| {
            Ok(match h {
                HoleConfig::Circle { center, r } => Hole::circle(c(*center), *r)?,
                HoleConfig::Trefoil { center, r } => Hole::trefoil(c(*center), *r)?,
                HoleConfig::Oscillatory { center, r, omega } => Hole::oscillatory(c(*center), *r, *omega)?,
                HoleConfig::Fourier { center, a0, cos, sin } => Hole::new(
                    c(*center),
                    HoleShape::Fourier {
                        a0: *a0,
                        cos: cos.clone(),
                        sin: sin.clone(),
                    },
                )?,
            })
        })
        .collect()
}

fn parse_per_hole(path: &str, exprs: &PerHole) -> Result<Vec<Expr>, ConfigError> {
    match exprs {
        PerHole::All(src) => Ok(vec![parse_at(path, src)?]),
        PerHole::Each(v) => v
            .iter()
            .enumerate()
            .map(|(k, src)| parse_at(&format!("{path}[{k}]"), src))
            .collect(),
    }
}

/// The expression for hole `j`; a single expression serves every hole.
fn for_hole(exprs: &[Expr], j: usize) -> &Expr {
    &exprs[j.min(exprs.len() - 1)]
}

/// Boundary data in any of the configured forms.
pub enum Data {
    Expressions(Vec<Expr>),
    Values(Vec<f64>),
    Layer(Box<Manufactured>),
    Sources(SourceField),
}

impl Data {
    pub fn new(cfg: &Config, base: &Path, holes: &[Hole], torus: &Torus) -> Result<Self, CliError> {
        let data = cfg
            .boundary_data
            .as_ref()
            .ok_or_else(|| ConfigError::new("boundary_data", "required for dirichlet and neumann problems"))?;
        Ok(match data {
            BoundaryData::Expression(exprs) => {
                Data::Expressions(parse_per_hole("boundary_data.expression", exprs)?)
            }
            BoundaryData::Csv(path) => Data::Values(read_values(&base.join(path))?),
            BoundaryData::SingleLayer { density, scale, sources } => {
                let exprs = parse_per_hole("boundary_data.single_layer.density", density)?;
                let density = |j: usize, t: f64| -> f64 {
                    let Ok(p) = curve_eval(&holes[j], t) else {
                        return f64::NAN;
                    };
                    let env = Env {
                        point: p.position,
                        hole: j,
                        t,
                        normal: Some(p.normal),
                        torus,
                    };
                    for_hole(&exprs, j).eval(&env).unwrap_or(f64::NAN)
                };
                let sources = sources.iter().map(|s| (c(s.at), s.amplitude)).collect();
                Data::Layer(Box::new(Manufactured::new(holes, torus, density, *scale, sources)?))
            }
            BoundaryData::Sources(list) => Data::Sources(SourceField {
                sources: list.iter().map(|s| (c(s.at), s.amplitude)).collect(),
            }),
        })
    }

    /// Values (Dirichlet) or normal derivatives (Neumann) at the nodes of `grid`.
    pub fn sample(&self, grid: &QuadratureGrid, problem: ProblemType) -> Result<Vec<f64>, CliError> {
        let values = match self {
            Data::Expressions(exprs) => (0..grid.len())
                .map(|i| {
                    let p = grid.point(i);
                    let env = Env {
                        point: p.position,
                        hole: grid.hole_of(i),
                        t: grid.param(i),
                        normal: Some(p.normal),
                        torus: grid.torus(),
                    };
                    for_hole(exprs, grid.hole_of(i)).eval(&env)
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Data(format!("evaluating boundary_data.expression: {e}")))?,
            Data::Values(v) => {
                if v.len() != grid.len() {
                    return Err(ConfigError::new(
                        "boundary_data.csv",
                        format!("{} values for {} nodes", v.len(), grid.len()),
                    )
                    .into());
                }
                v.clone()
            }
            Data::Layer(m) => m.boundary_data(grid)?,
            Data::Sources(field) => match problem {
                ProblemType::Neumann => field.normal_derivative(grid)?,
                _ => grid
                    .points()
                    .iter()
                    .map(|p| field.value(p.position, grid.torus()))
                    .collect::<Result<_, _>>()?,
            },
        };
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(CliError::Data(format!("boundary value at node {i} is not finite")));
        }
        Ok(values)
    }
}

/// Reads one number per line, taking the last comma-separated field; a header is skipped.
fn read_values(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("boundary_data.csv", format!("cannot read {}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let field = line.rsplit(',').next().unwrap_or("").trim();
        match field.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if k == 0 => {}
            Err(_) => {
                return Err(ConfigError::new(
                    "boundary_data.csv",
                    format!("{} line {}: {field:?} is not a number", path.display(), k + 1),
                )
                .into())
            }
        }
    }
    Ok(values)
}

/// A known solution to measure errors against.
pub enum Exact<'a> {
    Expression(Expr, &'a Torus),
    Data(&'a Data, &'a Torus),
}

impl Exact<'_> {
    pub fn eval(&self, z: Complex64) -> f64 {
        match self {
            Exact::Expression(expr, torus) => {
                let env = Env {
                    point: z,
                    hole: 0,
                    t: 0.0,
                    normal: None,
                    torus,
                };
                expr.eval(&env).unwrap_or(f64::NAN)
            }
            Exact::Data(Data::Layer(m), _) => m.exact(z).unwrap_or(f64::NAN),
            Exact::Data(Data::Sources(field), torus) => field.value(z, torus).unwrap_or(f64::NAN),
            Exact::Data(..) => f64::NAN,
        }
    }
}

/// The `exact` expression if given, else the solution carried by a data preset.
pub fn exact<'a>(cfg: &Config, data: &'a Data, torus: &'a Torus) -> Result<Option<Exact<'a>>, ConfigError> {
    if let Some(src) = &cfg.exact {
        return Ok(Some(Exact::Expression(parse_at("exact", src)?, torus)));
    }
    Ok(match data {
        Data::Layer(_) | Data::Sources(_) => Some(Exact::Data(data, torus)),
        _ => None,
    })
}

/// Points where errors are measured.
pub fn contour(cfg: &ContourConfig, grid: &QuadratureGrid) -> Result<Vec<Complex64>, CliError> {
    Ok(match cfg {
        ContourConfig::Offset { radius, points } => grid
            .holes()
            .iter()
            .flat_map(|h| {
                let shape = match h.shape {
                    HoleShape::Trefoil { .. } => HoleShape::Trefoil { r: *radius },
                    _ => HoleShape::Circle { r: *radius },
                };
                curve_points(&Hole { center: h.center, shape }, *points)
            })
            .collect(),
        ContourConfig::Random { count, seed, clearance } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let tau = grid.torus().tau();
            let mut out = Vec::with_capacity(*count);
            let mut attempts = 0usize;
            while out.len() < *count {
                attempts += 1;
                if attempts > 1000 * count {
                    return Err(ConfigError::new(
                        "contour.random",
                        format!("found only {} of {count} points with clearance {clearance}", out.len()),
                    )
                    .into());
                }
                let z = tau * rng.random::<f64>() + rng.random::<f64>();
                if classify_point(z, grid, *clearance) == Region::Omega {
                    out.push(z);
                }
            }
            out
        }
        ContourConfig::Points(points) => points.iter().map(|p| c(*p)).collect(),
    })
}
