//! Randomized invariants of the numerical core.

use std::f64::consts::PI;

use proptest::prelude::*;
use torus_bie::cases::{example1_holes, example2_holes, example4_holes, null_space_holes, Example2Shape, SourceField};
use torus_bie::elliptic::{theta1, SeriesTolerance};
use torus_bie::fields::{eval_dirichlet, eval_neumann, Potential};
use torus_bie::geometry::{build_grid, classify_point, QuadratureGrid};
use torus_bie::green::{green, green_gradient};
use torus_bie::linalg::singular_values;
use torus_bie::operators::{assemble_k, assemble_x};
use torus_bie::solvers::{
    neumann_to_dirichlet, solve_dirichlet, solve_neumann, solve_steklov_with, NeumannConvention, SteklovOptions,
};
use torus_bie::{Complex64, Hole, Region, Torus};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn tori() -> [Torus; 2] {
    [Torus::square(), Torus::equilateral()]
}

/// `u + v tau` for lattice coordinates `u, v`.
fn cell_point(torus: &Torus, u: f64, v: f64) -> Complex64 {
    torus.tau() * v + u
}

/// Two circles whose centers and radii move within a range that keeps them apart.
fn two_circles() -> impl Strategy<Value = Vec<Hole>> {
    (-0.05..0.05f64, -0.05..0.05f64, 0.05..0.15f64, -0.05..0.05f64, -0.05..0.05f64, 0.05..0.15f64).prop_map(
        |(x1, y1, r1, x2, y2, r2)| {
            vec![
                Hole::circle(c(0.3 + x1, 0.3 + y1), r1).unwrap(),
                Hole::circle(c(0.7 + x2, 0.65 + y2), r2).unwrap(),
            ]
        },
    )
}

/// `u = G(z - a_1) - G(z - a_2)`, harmonic in the domain, with the sources at the first two centers.
fn dipole(holes: &[Hole]) -> SourceField {
    SourceField::at_holes(holes, &[1.0, -1.0])
}

fn laplacian(f: impl Fn(Complex64) -> f64, z: Complex64, h: f64) -> f64 {
    (f(z + h) + f(z - h) + f(z + c(0.0, h)) + f(z - c(0.0, h)) - 4.0 * f(z)) / (h * h)
}

/// Points of a regular sample that lie at least `clearance` from every boundary.
fn interior_points(grid: &QuadratureGrid, per_side: usize, clearance: f64) -> Vec<Complex64> {
    let torus = grid.torus();
    (0..per_side * per_side)
        .map(|k| {
            let u = ((k % per_side) as f64 + 0.5) / per_side as f64;
            let v = ((k / per_side) as f64 + 0.5) / per_side as f64;
            cell_point(torus, u, v)
        })
        .filter(|&z| classify_point(z, grid, clearance) == Region::Omega)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn theta_quasi_periodicity_and_oddness(u in -0.5..0.5f64, v in -0.5..0.5f64, which in 0usize..2) {
        let torus = &tori()[which];
        let z = cell_point(torus, u, v);
        prop_assume!(torus.lattice_distance(z) > 1e-3);
        let tol = SeriesTolerance::default();
        let t0 = theta1(z, torus, &tol).unwrap();
        let scale = t0.norm().max(1.0);
        let t1 = theta1(z + 1.0, torus, &tol).unwrap();
        let tt = theta1(z + torus.tau(), torus, &tol).unwrap();
        let factor = (c(0.0, -PI) * (torus.tau() + 2.0 * z)).exp();
        prop_assert!((t1 + t0).norm() <= 1e-13 * scale, "z + 1: {:e}", (t1 + t0).norm() / scale);
        prop_assert!((tt + factor * t0).norm() <= 1e-12 * scale, "z + tau: {:e}", (tt + factor * t0).norm() / scale);
        let odd = theta1(-z, torus, &tol).unwrap();
        prop_assert!((odd + t0).norm() <= 1e-13 * t0.norm());
    }

    #[test]
    fn green_is_periodic_and_even(u in 0.0..1.0f64, v in 0.0..1.0f64, which in 0usize..2) {
        let torus = &tori()[which];
        let z = cell_point(torus, u, v);
        prop_assume!(torus.lattice_distance(z) > 1e-2);
        let g = green(z, torus).unwrap();
        let grad = green_gradient(z, torus).unwrap();
        for shift in [c(1.0, 0.0), torus.tau(), -torus.tau() - 1.0] {
            prop_assert!((green(z + shift, torus).unwrap() - g).abs() <= 1e-12);
            prop_assert!((green_gradient(z + shift, torus).unwrap() - grad).norm() <= 1e-12 * grad.norm().max(1.0));
        }
        prop_assert!((green(-z, torus).unwrap() - g).abs() <= 1e-13 * g.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn geometric_totals_are_spectrally_accurate(r in 0.05..0.12f64, omega in 3u32..8, which in 0usize..2) {
        let torus = &tori()[which];
        let holes = vec![
            Hole::oscillatory(c(0.3, 0.3), r, omega).unwrap(),
            Hole::trefoil(c(0.75, 0.7), r).unwrap(),
        ];
        let coarse = build_grid(&holes, &[128, 128], torus).unwrap();
        let fine = coarse.refined(2).unwrap();
        prop_assert!((coarse.total_length() - fine.total_length()).abs() <= 1e-12);
        prop_assert!((coarse.total_hole_area() - fine.total_hole_area()).abs() <= 1e-12);
    }

    #[test]
    fn classification_is_lattice_invariant(u in 0.0..1.0f64, v in 0.0..1.0f64, m in -3i32..4, n in -3i32..4) {
        let torus = Torus::equilateral();
        let grid = build_grid(&example2_holes(Example2Shape::Trefoils), &[64; 3], &torus).unwrap();
        let z = cell_point(&torus, u, v);
        let region = grid.classify(z);
        prop_assert_eq!(grid.classify(z + 1.0), region);
        prop_assert_eq!(grid.classify(z + torus.tau()), region);
        prop_assert_eq!(grid.classify(z + torus.tau() * m as f64 + n as f64), region);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn double_layer_of_one_on_the_boundary(holes in two_circles(), which in 0usize..2) {
        let torus = &tori()[which];
        let grid = build_grid(&holes, &[64, 64], torus).unwrap();
        let k = assemble_k(&grid).unwrap();
        let expected = 0.5 - grid.total_hole_area() / torus.b();
        let row_sums = k.apply(&vec![1.0; grid.len()]).unwrap();
        for s in row_sums {
            prop_assert!((s - expected).abs() <= 1e-12, "row sum {s} against {expected}");
        }
    }

    #[test]
    fn dirichlet_field_is_harmonic_and_periodic(holes in two_circles(), which in 0usize..2) {
        let torus = &tori()[which];
        let grid = build_grid(&holes, &[64, 64], torus).unwrap();
        let data = boundary_values(&grid, &dipole(&holes));
        let sol = solve_dirichlet(&grid, &data, None).unwrap();
        prop_assert!(sol.fluxes.iter().sum::<f64>().abs() <= 1e-12);
        let u = |z: Complex64| eval_dirichlet(&sol, z).unwrap();
        for z in interior_points(&grid, 6, 0.15) {
            prop_assert!(laplacian(u, z, 1e-3).abs() <= 1e-4);
            let value = u(z);
            prop_assert!((u(z + 1.0) - value).abs() <= 1e-10);
            prop_assert!((u(z + torus.tau()) - value).abs() <= 1e-10);
        }
    }

    #[test]
    fn dirichlet_solution_does_not_depend_on_source_points(
        holes in two_circles(),
        a1 in 0.0..(2.0 * PI),
        a2 in 0.0..(2.0 * PI),
        f1 in 0.0..0.6f64,
        f2 in 0.0..0.6f64,
    ) {
        let torus = Torus::square();
        let grid = build_grid(&holes, &[64, 64], &torus).unwrap();
        let data = boundary_values(&grid, &dipole(&holes));
        let offset = |h: &Hole, a: f64, f: f64| h.center + Complex64::from_polar(f * h.shape.max_radius(), a);
        let betas = [offset(&holes[0], a1, f1), offset(&holes[1], a2, f2)];
        let centered = solve_dirichlet(&grid, &data, None).unwrap();
        let moved = solve_dirichlet(&grid, &data, Some(&betas)).unwrap();
        for (x, y) in centered.fluxes.iter().zip(&moved.fluxes) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
        for z in interior_points(&grid, 6, 0.1) {
            let diff = eval_dirichlet(&centered, z).unwrap() - eval_dirichlet(&moved, z).unwrap();
            prop_assert!(diff.abs() <= 1e-9, "difference {diff:e} at {z}");
        }
    }

    #[test]
    fn neumann_to_dirichlet_recovers_the_trace(holes in two_circles(), which in 0usize..2) {
        let torus = &tori()[which];
        let grid = build_grid(&holes, &[64, 64], torus).unwrap();
        let field = dipole(&holes);
        let g = field.normal_derivative(&grid).unwrap();
        let trace = neumann_to_dirichlet(&grid, &g).unwrap();
        let exact = boundary_values(&grid, &field);
        let mean = grid.mean(&exact);
        for (t, e) in trace.iter().zip(&exact) {
            prop_assert!((t - (e - mean)).abs() <= 1e-9, "trace {t} against {}", e - mean);
        }
    }

    #[test]
    fn neumann_field_is_harmonic_and_periodic(holes in two_circles()) {
        let torus = Torus::equilateral();
        let grid = build_grid(&holes, &[64, 64], &torus).unwrap();
        let g = dipole(&holes).normal_derivative(&grid).unwrap();
        let sol = solve_neumann(&grid, &g, NeumannConvention::ZeroMeanTrace).unwrap();
        let u = |z: Complex64| eval_neumann(&sol, z).unwrap();
        for z in interior_points(&grid, 6, 0.15) {
            prop_assert!(laplacian(u, z, 1e-3).abs() <= 1e-4);
            prop_assert!((u(z + torus.tau() + 1.0) - u(z)).abs() <= 1e-10);
        }
    }

    #[test]
    fn steklov_traces_are_orthogonal(holes in two_circles(), which in 0usize..2) {
        let torus = &tori()[which];
        let grid = build_grid(&holes, &[48, 48], torus).unwrap();
        let pairs = solve_steklov_with(&grid, SteklovOptions { k_max: 8, residuals: false }).unwrap();
        for (k, p) in pairs.iter().enumerate() {
            for q in &pairs[..k] {
                if (p.sigma - q.sigma).abs() <= 1e-6 * (1.0 + p.sigma.abs()) {
                    continue;
                }
                let inner: Vec<f64> = p.trace.iter().zip(&q.trace).map(|(a, b)| a * b).collect();
                let dot = grid.integrate(&inner);
                prop_assert!(dot.abs() <= 1e-8, "<u, v> = {dot:e} for sigma {} and {}", p.sigma, q.sigma);
            }
        }
    }
}

fn boundary_values(grid: &QuadratureGrid, field: &SourceField) -> Vec<f64> {
    grid.points()
        .iter()
        .map(|p| field.value(p.position, grid.torus()).unwrap())
        .collect()
}

#[test]
fn double_layer_plus_characteristic_operator_is_injective() {
    let geometries = [
        example1_holes(),
        null_space_holes(),
        example2_holes(Example2Shape::Circles),
    ];
    for torus in tori() {
        for holes in &geometries {
            let grid = build_grid(holes, &vec![64; holes.len()], &torus).unwrap();
            let k = assemble_k(&grid).unwrap();
            let op = k.combine(1.0, &assemble_x(&grid), 1.0).unwrap().shifted(-0.5);
            let sv = singular_values(op.data(), grid.len(), grid.len()).unwrap();
            let smallest = sv.iter().copied().fold(f64::INFINITY, f64::min);
            assert!(smallest > 1e-6, "{} holes: smallest singular value {smallest:e}", holes.len());
        }
    }
}

#[test]
fn eigenvalue_count_is_stable_under_refinement() {
    const THRESHOLD: f64 = 10.0;
    for torus in tori() {
        let counts: Vec<usize> = [50, 100]
            .iter()
            .map(|&n| {
                let grid = build_grid(&example4_holes(), &[n], &torus).unwrap();
                let pairs = solve_steklov_with(&grid, SteklovOptions { k_max: 20, residuals: false }).unwrap();
                assert!(pairs.last().unwrap().sigma > THRESHOLD);
                pairs.iter().filter(|p| p.sigma < THRESHOLD).count()
            })
            .collect();
        assert_eq!(counts[0], counts[1]);
        assert!(counts[0] >= 2);
    }
}

#[test]
fn solves_agree_across_thread_counts() {
    let torus = Torus::equilateral();
    let holes = null_space_holes();
    let grid = build_grid(&holes, &[64, 64], &torus).unwrap();
    let field = dipole(&holes);
    let dirichlet_data = boundary_values(&grid, &field);
    let neumann_data = field.normal_derivative(&grid).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let d = solve_dirichlet(&grid, &dirichlet_data, None).unwrap();
            let n = solve_neumann(&grid, &neumann_data, NeumannConvention::ZeroMeanTrace).unwrap();
            let fluxes: Vec<f64> = (0..grid.hole_count()).map(|j| d.flux(j)).collect();
            (d.phi, fluxes, n.trace)
        })
    };
    let (phi1, flux1, trace1) = run(1);
    let (phi4, flux4, trace4) = run(4);
    for (a, b) in phi1.iter().chain(&flux1).chain(&trace1).zip(phi4.iter().chain(&flux4).chain(&trace4)) {
        assert!((a - b).abs() <= 1e-12);
    }
}
