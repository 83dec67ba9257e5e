//! The shipped example configurations.

use torus_bie::cases::{
    example1_holes, example2_holes, example3_holes, example4_holes, example5_holes, Example2Shape, RandomHoles,
    EXAMPLE2_FLUXES, EXAMPLE3_FLUXES, TABULATED_EIGENVALUE_SCALE,
};
use torus_bie::{Hole, HoleShape, Torus};

use crate::config::{
    BoundaryData, Config, ContourConfig, ConvergenceConfig, HoleConfig, NodeCount, PerHole, ProblemType,
    RandomHolesConfig, ReferenceConfig, SourceConfig, Tolerances,
};

fn tori() -> [(&'static str, Torus); 2] {
    [("square", Torus::square()), ("equilateral", Torus::equilateral())]
}

fn hole_config(h: &Hole) -> HoleConfig {
    let center = [h.center.re, h.center.im];
    match &h.shape {
        HoleShape::Circle { r } => HoleConfig::Circle { center, r: *r },
        HoleShape::Trefoil { r } => HoleConfig::Trefoil { center, r: *r },
        HoleShape::Oscillatory { r, omega } => HoleConfig::Oscillatory {
            center,
            r: *r,
            omega: *omega,
        },
        HoleShape::Fourier { a0, cos, sin } => HoleConfig::Fourier {
            center,
            a0: *a0,
            cos: cos.clone(),
            sin: sin.clone(),
        },
    }
}

fn sources_at_centers(holes: &[Hole], amplitudes: &[f64]) -> Vec<SourceConfig> {
    holes
        .iter()
        .zip(amplitudes)
        .map(|(h, a)| SourceConfig {
            at: [h.center.re, h.center.im],
            amplitude: *a,
        })
        .collect()
}

fn base(name: String, torus: &Torus, holes: &[Hole], problem: ProblemType, nodes: usize) -> Config {
    Config {
        name: Some(name),
        torus: crate::config::TorusConfig {
            tau: [torus.tau().re, torus.tau().im],
        },
        holes: holes.iter().map(hole_config).collect(),
        random_holes: None,
        problem,
        boundary_data: None,
        exact: None,
        nodes_per_hole: NodeCount::Uniform(nodes),
        betas: None,
        neumann_pin: None,
        k_max: None,
        eigenvalue_scale: 1.0,
        field_mode: None,
        field_resolution: 40,
        contour: None,
        convergence: None,
        tolerances: Tolerances::default(),
        output: None,
        slow: false,
    }
}

fn convergence_nodes() -> ConvergenceConfig {
    ConvergenceConfig {
        nodes: vec![4, 10, 20, 30, 40, 50, 60, 80, 100],
        reference: ReferenceConfig::Exact,
        fit_floor: torus_bie::fields::DEFAULT_FIT_FLOOR,
    }
}

/// `(file name, config)` for every example on both tori; the many-hole case only on the square torus.
pub fn all() -> Vec<(String, Config)> {
    let mut out = Vec::new();
    for (label, torus) in tori() {
        // one circle, data -S[sin t]
        let mut cfg = base(format!("example1_{label}"), &torus, &example1_holes(), ProblemType::Dirichlet, 50);
        cfg.boundary_data = Some(BoundaryData::SingleLayer {
            density: PerHole::All("sin(t)".into()),
            scale: -1.0,
            sources: Vec::new(),
        });
        cfg.contour = Some(ContourConfig::Offset {
            radius: 0.35,
            points: 256,
        });
        cfg.convergence = Some(convergence_nodes());
        out.push(cfg);

        for (shape, tag) in [(Example2Shape::Circles, "circles"), (Example2Shape::Trefoils, "trefoils")] {
            let holes = example2_holes(shape);
            let mut cfg = base(format!("example2_{tag}_{label}"), &torus, &holes, ProblemType::Dirichlet, 50);
            cfg.boundary_data = Some(BoundaryData::SingleLayer {
                density: PerHole::Each(vec!["-10*sin(t)".into(), "10*sin(3*t)".into(), "-10*sin(t)".into()]),
                scale: 1.0,
                sources: sources_at_centers(&holes, &EXAMPLE2_FLUXES),
            });
            cfg.contour = Some(ContourConfig::Offset {
                radius: 0.18,
                points: 256,
            });
            cfg.convergence = Some(convergence_nodes());
            out.push(cfg);
        }

        let holes = example3_holes();
        let mut cfg = base(format!("example3_{label}"), &torus, &holes, ProblemType::Neumann, 50);
        cfg.boundary_data = Some(BoundaryData::Sources(sources_at_centers(&holes, &EXAMPLE3_FLUXES)));
        cfg.contour = Some(ContourConfig::Random {
            count: 250,
            seed: 3,
            clearance: 0.05,
        });
        out.push(cfg);

        let mut cfg = base(format!("example4_{label}"), &torus, &example4_holes(), ProblemType::Steklov, 50);
        cfg.k_max = Some(7);
        cfg.eigenvalue_scale = TABULATED_EIGENVALUE_SCALE;
        out.push(cfg);

        let mut cfg = base(format!("example5_{label}"), &torus, &example5_holes(), ProblemType::Steklov, 50);
        cfg.k_max = Some(7);
        cfg.eigenvalue_scale = TABULATED_EIGENVALUE_SCALE;
        out.push(cfg);
    }

    let full = RandomHoles::full();
    let mut cfg = base("example6_square".into(), &Torus::square(), &[], ProblemType::Steklov, 200);
    cfg.random_holes = Some(RandomHolesConfig {
        count: full.count,
        seed: full.seed,
        min_radius: full.min_radius,
        max_radius: full.max_radius,
        min_omega: full.min_omega,
        max_omega: full.max_omega,
        gap: full.gap,
    });
    cfg.k_max = Some(20);
    cfg.field_resolution = 0;
    cfg.slow = true;
    out.push(cfg);

    out.into_iter()
        .map(|cfg| (format!("{}.json", cfg.name.as_deref().unwrap_or("example")), cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_example_validates() {
        let all = all();
        assert_eq!(all.len(), 13);
        for (file, cfg) in &all {
            cfg.validate().unwrap_or_else(|e| panic!("{file}: {e}"));
            let text = serde_json::to_string(cfg).unwrap();
            assert_eq!(&crate::config::parse(&text).unwrap(), cfg, "{file}");
        }
        assert!(all.iter().any(|(f, c)| f == "example6_square.json" && c.slow));
        assert!(all.iter().any(|(f, _)| f == "example1_square.json"));
        assert!(all.iter().any(|(f, _)| f == "example4_square.json"));
    }
}
