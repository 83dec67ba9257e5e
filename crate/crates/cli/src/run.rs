//! The subcommands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};
use torus_bie::checks;
use torus_bie::fields::{
    convergence_study, sup_error, sup_error_up_to_constant, ConvergenceProblem, FieldGrid, Potential, ProblemKind,
    Reference,
};
use torus_bie::geometry::{build_grid, QuadratureGrid};
use torus_bie::solvers::{
    solve_dirichlet, solve_neumann_with_tol, solve_steklov_with, steklov_flux, NeumannConvention, SteklovOptions,
    DEFAULT_MEAN_TOL,
};
use torus_bie::{Complex64, DirichletSolution, NeumannSolution};

use crate::config::{self, Config, ConfigError, ProblemType, ReferenceConfig};
use crate::examples;
use crate::output::{self, OutDir};
use crate::setup::{self, Data};
use crate::CliError;

/// Overrides the default output directory.
pub const OUT_ENV: &str = "TORUS_BIE_OUT";
pub const DEFAULT_OUT: &str = "torus-bie-out";

/// Steklov pairs computed when `k_max` is not configured.
const DEFAULT_K_MAX: usize = 7;

#[derive(Debug, Clone, Default)]
pub struct Options {
    pub out: Option<PathBuf>,
    pub nodes: Option<usize>,
    pub quiet: bool,
}

impl Options {
    /// `--out`, then the config's `output`, then `$TORUS_BIE_OUT`, then the default.
    fn out_dir(&self, cfg: Option<&Config>) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.and_then(|c| c.output.clone()))
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }
}

fn load(path: &Path, opts: &Options) -> Result<(Config, PathBuf), CliError> {
    let cfg = config::load(path)?;
    cfg.validate()?;
    if let Some(n) = opts.nodes {
        if n < 4 || n % 2 != 0 {
            return Err(ConfigError::new("--nodes", format!("node counts must be even and at least 4, got {n}")).into());
        }
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

fn c(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn seconds(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

fn echo(cfg: &Config) -> Value {
    serde_json::to_value(cfg).expect("configs always serialize")
}

enum Solved<'g> {
    Dirichlet(DirichletSolution<'g>),
    Neumann(NeumannSolution<'g>),
}

impl Solved<'_> {
    fn potential(&self) -> &dyn Potential {
        match self {
            Solved::Dirichlet(s) => s,
            Solved::Neumann(s) => s,
        }
    }

    fn phi(&self) -> &[f64] {
        match self {
            Solved::Dirichlet(s) => &s.phi,
            Solved::Neumann(s) => &s.phi,
        }
    }

    fn pivot_ratio(&self) -> f64 {
        match self {
            Solved::Dirichlet(s) => s.pivot_ratio,
            Solved::Neumann(s) => s.pivot_ratio,
        }
    }
}

fn sample_field(opts: &Options, potential: &dyn Potential, resolution: usize, out: &mut OutDir) -> Result<f64, CliError> {
    if resolution == 0 {
        return Ok(0.0);
    }
    let start = Instant::now();
    let field = FieldGrid::sample(potential, resolution)?;
    out.write("field.csv", &output::field_csv(&field))?;
    opts.say(format!("field: {0} x {0} samples", resolution));
    Ok(seconds(start))
}

/// Dirichlet or Neumann solve.
pub fn solve(path: &Path, opts: &Options) -> Result<(), CliError> {
    let start = Instant::now();
    let (cfg, base) = load(path, opts)?;
    if cfg.problem == ProblemType::Steklov {
        return Err(ConfigError::new("problem", "steklov problems run with the steklov subcommand").into());
    }
    let mut out = OutDir::create(opts.out_dir(Some(&cfg)))?;
    let torus = setup::build_torus(&cfg)?;
    let holes = setup::build_holes(&cfg, &torus)?;
    let nodes = cfg.nodes(opts.nodes);
    let grid = build_grid(&holes, &nodes, &torus)?;
    let data = Data::new(&cfg, &base, &holes, &torus)?;
    let g = data.sample(&grid, cfg.problem)?;
    let exact = setup::exact(&cfg, &data, &torus)?;
    let contour = cfg.contour.as_ref().map(|cc| setup::contour(cc, &grid)).transpose()?;
    let setup_time = seconds(start);

    let t = Instant::now();
    let solved = match cfg.problem {
        ProblemType::Neumann => {
            let convention = match &cfg.neumann_pin {
                Some(pin) => NeumannConvention::Pinned {
                    point: c(pin.point),
                    value: pin.value,
                },
                None => NeumannConvention::ZeroMeanTrace,
            };
            let tol = cfg.tolerances.neumann_mean.unwrap_or(DEFAULT_MEAN_TOL);
            Solved::Neumann(solve_neumann_with_tol(&grid, &g, convention, tol)?)
        }
        _ => {
            let betas: Option<Vec<Complex64>> = cfg.betas.as_ref().map(|b| b.iter().copied().map(c).collect());
            Solved::Dirichlet(solve_dirichlet(&grid, &g, betas.as_deref())?)
        }
    };
    let solve_time = seconds(t);
    let potential = solved.potential();
    let fluxes: Vec<f64> = (0..grid.hole_count()).map(|j| potential.flux(j)).collect();
    let total_flux: f64 = fluxes.iter().sum();
    opts.say(format!(
        "{} solve: {} holes, {} nodes, {solve_time:.2} s",
        cfg.problem.name(),
        grid.hole_count(),
        grid.len()
    ));
    opts.say(format!("fluxes: {}", join(&fluxes)));

    let t = Instant::now();
    let (sup_error, error_points) = match (&contour, &exact) {
        (Some(points), Some(exact)) => {
            let values = potential.eval_many(points)?;
            let reference: Vec<f64> = points.iter().map(|&z| exact.eval(z)).collect();
            let err = match cfg.problem {
                ProblemType::Neumann => sup_error_up_to_constant(&values, &reference),
                _ => sup_error(&values, &reference),
            };
            opts.say(format!("sup error on {} points: {err:.3e}", points.len()));
            (Some(err), points.len())
        }
        _ => (None, 0),
    };
    let error_time = seconds(t);

    out.write("boundary.csv", &output::boundary_csv(&grid, solved.phi(), &g))?;
    let field_time = sample_field(opts, potential, cfg.field_resolution, &mut out)?;

    let mut summary = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": "solve",
        "name": cfg.name,
        "problem": cfg.problem.name(),
        "holes": grid.hole_count(),
        "nodes_per_hole": grid.nodes_per_hole(),
        "total_nodes": grid.len(),
        "fluxes": fluxes,
        "total_flux": total_flux,
        "condition": { "pivot_ratio": solved.pivot_ratio() },
        "sup_error": sup_error,
        "error_points": error_points,
        "threads": rayon::current_num_threads(),
    });
    if let Solved::Neumann(s) = &solved {
        summary["neumann_constant"] = json!(s.constant);
    }
    finish(
        &mut out,
        summary,
        &cfg,
        opts,
        json!({
            "setup_s": setup_time,
            "solve_s": solve_time,
            "error_s": error_time,
            "field_s": field_time,
            "total_s": seconds(start),
        }),
    )
}

/// Adds timings, the file list and the config echo, then writes `summary.json`.
fn finish(out: &mut OutDir, mut summary: Value, cfg: &Config, opts: &Options, timings: Value) -> Result<(), CliError> {
    summary["timings"] = timings;
    summary["overrides"] = json!({ "nodes": opts.nodes });
    let mut files = out.written().to_vec();
    files.push("summary.json".into());
    summary["files"] = json!(files);
    summary["config"] = echo(cfg);
    out.write("summary.json", &output::json(&summary))?;
    opts.say(format!("wrote {}", out.root().display()));
    Ok(())
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.6e}")).collect::<Vec<_>>().join(", ")
}

/// Steklov eigenpairs.
pub fn steklov(path: &Path, opts: &Options) -> Result<(), CliError> {
    let start = Instant::now();
    let (cfg, _) = load(path, opts)?;
    if cfg.problem != ProblemType::Steklov {
        return Err(ConfigError::new("problem", "the steklov subcommand needs problem = steklov").into());
    }
    let mut out = OutDir::create(opts.out_dir(Some(&cfg)))?;
    let torus = setup::build_torus(&cfg)?;
    let holes = setup::build_holes(&cfg, &torus)?;
    let grid = build_grid(&holes, &cfg.nodes(opts.nodes), &torus)?;
    let k_max = match cfg.k_max {
        Some(k) if k > grid.len() => {
            return Err(ConfigError::new("k_max", format!("exceeds the {} boundary nodes", grid.len())).into())
        }
        Some(k) => k,
        None => DEFAULT_K_MAX.min(grid.len()),
    };
    let setup_time = seconds(start);

    let t = Instant::now();
    let pairs = solve_steklov_with(&grid, SteklovOptions::new(k_max))?;
    let solve_time = seconds(t);
    let sigma: Vec<f64> = pairs.iter().map(|p| p.sigma).collect();
    let eigenvalues: Vec<f64> = sigma.iter().map(|s| cfg.eigenvalue_scale * s).collect();
    let residuals: Vec<f64> = pairs.iter().map(|p| p.residual).collect();
    let fluxes: Vec<Vec<f64>> = pairs
        .iter()
        .map(|p| (0..grid.hole_count()).map(|j| steklov_flux(p, j)).collect())
        .collect();
    let total_flux: Vec<f64> = fluxes.iter().map(|f| f.iter().sum()).collect();
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    opts.say(format!(
        "steklov solve: {} holes, {} nodes, {k_max} pairs, {solve_time:.2} s",
        grid.hole_count(),
        grid.len()
    ));
    opts.say(format!("eigenvalues: {}", join(&eigenvalues)));
    opts.say(format!("max residual: {max_residual:.3e}"));

    out.write("boundary.csv", &output::steklov_boundary_csv(&grid, &pairs))?;
    let mode = cfg.field_mode.unwrap_or(if k_max >= 2 { 2 } else { 1 });
    if mode > pairs.len() {
        return Err(ConfigError::new("field_mode", format!("exceeds the {} computed pairs", pairs.len())).into());
    }
    let field_time = sample_field(opts, &pairs[mode - 1], cfg.field_resolution, &mut out)?;

    let summary = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": "steklov",
        "name": cfg.name,
        "problem": "steklov",
        "holes": grid.hole_count(),
        "nodes_per_hole": grid.nodes_per_hole(),
        "total_nodes": grid.len(),
        "eigenvalue_scale": cfg.eigenvalue_scale,
        "eigenvalues": eigenvalues,
        "sigma": sigma,
        "residuals": residuals,
        "fluxes": fluxes,
        "total_flux": total_flux,
        "field_mode": mode,
        "condition": { "max_residual": max_residual },
        "threads": rayon::current_num_threads(),
    });
    finish(
        &mut out,
        summary,
        &cfg,
        opts,
        json!({
            "setup_s": setup_time,
            "solve_s": solve_time,
            "field_s": field_time,
            "total_s": seconds(start),
        }),
    )
}

/// Error against node count.
pub fn converge(path: &Path, opts: &Options) -> Result<(), CliError> {
    let start = Instant::now();
    let (cfg, base) = load(path, opts)?;
    let conv = cfg
        .convergence
        .as_ref()
        .ok_or_else(|| ConfigError::new("convergence", "required by the converge subcommand"))?;
    let kind = match cfg.problem {
        ProblemType::Dirichlet => ProblemKind::Dirichlet,
        ProblemType::Neumann => ProblemKind::Neumann,
        ProblemType::Steklov => {
            return Err(ConfigError::new("problem", "convergence studies need a dirichlet or neumann problem").into())
        }
    };
    let contour_cfg = cfg
        .contour
        .as_ref()
        .ok_or_else(|| ConfigError::new("contour", "required by the converge subcommand"))?;
    let mut out = OutDir::create(opts.out_dir(Some(&cfg)))?;
    let torus = setup::build_torus(&cfg)?;
    let holes = setup::build_holes(&cfg, &torus)?;
    let n_max = conv.nodes.iter().copied().max().unwrap_or(4);
    let grid = build_grid(&holes, &vec![n_max; holes.len()], &torus)?;
    let contour = setup::contour(contour_cfg, &grid)?;
    let data = Data::new(&cfg, &base, &holes, &torus)?;
    let exact = setup::exact(&cfg, &data, &torus)?;

    let sample = |g: &QuadratureGrid| data.sample(g, cfg.problem).map_err(CliError::into_core);
    let problem = ConvergenceProblem {
        kind,
        holes: &holes,
        torus: &torus,
        data: &sample,
        contour: &contour,
    };
    let exact_fn;
    let reference = match conv.reference {
        ReferenceConfig::Exact => {
            let exact = exact.as_ref().ok_or_else(|| {
                ConfigError::new(
                    "convergence.reference",
                    "exact reference needs a single_layer or sources preset, or an exact expression",
                )
            })?;
            exact_fn = move |z: Complex64| exact.eval(z);
            Reference::Exact(&exact_fn)
        }
        ReferenceConfig::SelfRefined { factor } => Reference::SelfRefined { factor },
    };
    let table = convergence_study(&problem, &conv.nodes, &reference, conv.fit_floor)?;
    for row in &table.rows {
        opts.say(format!("N = {:4}  error = {:.3e}", row.n, row.error));
    }
    opts.say(format!("slope of log10(error): {:.4}", table.slope));
    out.write("convergence.csv", &output::convergence_csv(&table))?;

    let summary = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": "converge",
        "name": cfg.name,
        "problem": cfg.problem.name(),
        "holes": holes.len(),
        "nodes": conv.nodes,
        "errors": table.rows.iter().map(|r| r.error).collect::<Vec<_>>(),
        "slope": table.slope,
        "intercept": table.intercept,
        "fit_floor": table.floor,
        "error_points": contour.len(),
        "threads": rayon::current_num_threads(),
    });
    finish(&mut out, summary, &cfg, opts, json!({ "total_s": seconds(start) }))
}

/// Runs the property suite; `Ok(false)` when a check fails.
pub fn selftest(opts: &Options) -> Result<bool, CliError> {
    let start = Instant::now();
    let outcomes = checks::property_suite()?;
    for o in &outcomes {
        if !o.passed || !opts.quiet {
            println!("{o}");
        }
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!(
        "selftest: {passed}/{} checks passed in {:.1} s",
        outcomes.len(),
        seconds(start)
    );
    Ok(checks::all_passed(&outcomes))
}

/// Writes the example configurations.
pub fn write_examples(opts: &Options) -> Result<(), CliError> {
    let mut out = OutDir::create(opts.out_dir(None))?;
    for (file, cfg) in examples::all() {
        let text = serde_json::to_string_pretty(&cfg).expect("configs always serialize") + "\n";
        out.write(&file, &text)?;
        let tag = if cfg.slow { "  (slow)" } else { "" };
        opts.say(format!("{}{tag}", out.root().join(&file).display()));
    }
    Ok(())
}
