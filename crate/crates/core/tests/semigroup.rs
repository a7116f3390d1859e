mod common;

use std::f64::consts::PI;

use osgoodlab_core::domain::Domain;
use osgoodlab_core::problem::{EllipticProblem, Field, ProblemSpec};
use osgoodlab_core::semigroup::{build_semigroup, Stepper};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn laplacian_0pi(n: usize, beta: f64) -> EllipticProblem {
    ProblemSpec::laplacian(Domain::interval(0.0, PI, n).unwrap())
        .with_beta(beta)
        .build()
        .unwrap()
}

fn variable_coefficients(n: usize, beta: f64) -> EllipticProblem {
    let mut spec = ProblemSpec::laplacian(Domain::interval(-1.0, 1.0, n).unwrap()).with_beta(beta);
    spec.a11 = Field::Polynomial(vec![1.0, 0.0, 0.5]);
    spec.b1 = Field::Polynomial(vec![0.0, 0.5]);
    spec.c = Field::Constant(-1.0);
    spec.build().unwrap()
}

fn eigen_error(n: usize) -> f64 {
    let p = laplacian_0pi(n, 0.0);
    let sg = build_semigroup(&p, Stepper::MatrixExponential).unwrap();
    let psi: Vec<f64> = p.domain().points().iter().map(|x| x[0].sin()).collect();
    let out = sg.apply(1.0, &psi).unwrap();
    let exact: Vec<f64> = psi.iter().map(|v| v * (-1.0f64).exp()).collect();
    max_abs_diff(&out, &exact)
}

#[test]
fn first_eigenfunction_decays_at_second_order() {
    let coarse = eigen_error(101);
    let fine = eigen_error(201);
    let finer = eigen_error(401);
    assert!(fine <= 1e-4, "{fine}");
    for ratio in [coarse / fine, fine / finer] {
        assert!((3.5..=4.5).contains(&ratio), "{ratio}");
    }
}

#[test]
fn neumann_preserves_constants() {
    let p = laplacian_0pi(201, 1.0);
    let sg = build_semigroup(&p, Stepper::MatrixExponential).unwrap();
    let ones = vec![1.0; 201];
    for t in [1e-3, 0.1, 1.0, 5.0] {
        let out = sg.apply(t, &ones).unwrap();
        assert!(out.iter().all(|v| (v - 1.0).abs() <= 1e-10), "t = {t}");
    }
}

#[test]
fn dirichlet_flow_of_ones_matches_sine_series() {
    let p = laplacian_0pi(201, 0.0);
    let sg = build_semigroup(&p, Stepper::MatrixExponential).unwrap();
    let out = sg.apply(0.1, &vec![1.0; 201]).unwrap();
    let oracle = dirichlet_flow_of_ones(PI / 2.0, 0.1);
    assert!((out[100] - oracle).abs() < 1e-4, "{} vs {oracle}", out[100]);
    for (i, x) in p.domain().points().iter().enumerate() {
        assert!((out[i] - dirichlet_flow_of_ones(x[0], 0.1)).abs() < 1e-3);
    }
}

#[test]
fn dirichlet_kernel_matches_sine_series() {
    let p = laplacian_0pi(401, 0.0);
    let sg = build_semigroup(&p, Stepper::MatrixExponential).unwrap();
    let k = sg.kernel_matrix(0.1).unwrap();
    let pts = p.domain().points();
    let mut err: f64 = 0.0;
    for i in (0..401).step_by(8) {
        for j in (0..401).step_by(8) {
            let oracle = dirichlet_kernel(pts[i][0], pts[j][0], 0.1, 200);
            err = err.max((k.get(i, j) - oracle).abs());
        }
    }
    assert!(err <= 1e-4, "{err}");
}

#[test]
fn neumann_kernel_matches_cosine_series() {
    let p = laplacian_0pi(201, 1.0);
    let sg = build_semigroup(&p, Stepper::MatrixExponential).unwrap();
    let k = sg.kernel_matrix(0.1).unwrap();
    let pts = p.domain().points();
    let mut err: f64 = 0.0;
    for i in (0..201).step_by(5) {
        for j in (5..196).step_by(5) {
            let oracle = neumann_kernel(pts[i][0], pts[j][0], 0.1, 200);
            err = err.max((k.get(i, j) - oracle).abs());
        }
    }
    assert!(err <= 1e-3, "{err}");
}

#[test]
fn self_adjoint_kernels_are_symmetric() {
    let k = build_semigroup(&laplacian_0pi(101, 0.0), Stepper::MatrixExponential)
        .unwrap()
        .kernel_matrix(0.1)
        .unwrap();
    assert!(k.symmetry_defect() <= 1e-8 * k.max().max(1.0));
    let mut spec = ProblemSpec::laplacian(Domain::rectangle((0.0, 1.0), (0.0, 1.0), 21).unwrap());
    spec.a11 = Field::Constant(2.0);
    spec.c = Field::Constant(-0.5);
    let k = build_semigroup(&spec.build().unwrap(), Stepper::MatrixExponential)
        .unwrap()
        .kernel_matrix(0.05)
        .unwrap();
    assert!(k.symmetry_defect() <= 1e-8 * k.max().max(1.0));
}

#[test]
fn neumann_kernel_conserves_mass() {
    let p = laplacian_0pi(101, 1.0);
    let k = build_semigroup(&p, Stepper::MatrixExponential)
        .unwrap()
        .kernel_matrix(0.3)
        .unwrap();
    assert!(k.row_masses().iter().all(|m| (m - 1.0).abs() <= 1e-6));
}

#[test]
fn kernel_reproduces_the_stepper() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (p, stepper) in [
        (laplacian_0pi(81, 0.5), Stepper::MatrixExponential),
        (variable_coefficients(81, 1.0), Stepper::MatrixExponential),
        (
            variable_coefficients(61, 0.0),
            Stepper::ImplicitEuler { dt: 1e-3 },
        ),
        (laplacian_0pi(61, 1.0), Stepper::CrankNicolson { dt: 1e-3 }),
    ] {
        let sg = build_semigroup(&p, stepper).unwrap();
        for t in [0.01, 0.2] {
            let k = sg.kernel_matrix(t).unwrap();
            for _ in 0..5 {
                let psi: Vec<f64> = (0..k.len()).map(|_| rng.random::<f64>()).collect();
                let a = sg.apply(t, &psi).unwrap();
                let b = k.apply(&psi);
                let scale = a.iter().copied().fold(0.0, f64::max);
                assert!(max_abs_diff(&a, &b) <= 1e-8 * scale);
            }
        }
    }
}

#[test]
fn semigroup_property_and_contraction() {
    let p = variable_coefficients(101, 0.5);
    let sg = build_semigroup(&p, Stepper::MatrixExponential).unwrap();
    let psi: Vec<f64> = p.domain().points().iter().map(|x| 1.0 + x[0]).collect();
    let once = sg.apply(0.3, &psi).unwrap();
    let twice = sg.apply(0.2, &sg.apply(0.1, &psi).unwrap()).unwrap();
    assert!(max_abs_diff(&once, &twice) < 1e-10);
    let sup = psi.iter().copied().fold(0.0, f64::max);
    assert!(once.iter().all(|v| *v <= sup + 1e-12 && *v >= -1e-12 * sup));
}

#[test]
fn implicit_steppers_converge_to_the_exponential() {
    let p = laplacian_0pi(101, 0.0);
    let psi: Vec<f64> = p.domain().points().iter().map(|x| x[0].sin()).collect();
    let exact = build_semigroup(&p, Stepper::MatrixExponential)
        .unwrap()
        .apply(0.5, &psi)
        .unwrap();
    let err = |s| {
        let out = build_semigroup(&p, s).unwrap().apply(0.5, &psi).unwrap();
        max_abs_diff(&out, &exact)
    };
    let ie = [
        err(Stepper::ImplicitEuler { dt: 1e-2 }),
        err(Stepper::ImplicitEuler { dt: 5e-3 }),
    ];
    assert!((1.8..2.2).contains(&(ie[0] / ie[1])), "{ie:?}");
    // positivity halving brings both requests down to the same step
    let cn = [
        err(Stepper::CrankNicolson { dt: 1e-2 }),
        err(Stepper::CrankNicolson { dt: 5e-3 }),
    ];
    assert!(cn.iter().all(|e| *e < 1e-6), "{cn:?}");
}

#[test]
fn generator_sees_reaction_on_constants() {
    let p = variable_coefficients(101, 0.0);
    let sg = build_semigroup(&p, Stepper::MatrixExponential).unwrap();
    let a1 = sg.generator().mul(&vec![1.0; sg.generator().num_free()]);
    assert!(a1[5..a1.len() - 5].iter().all(|v| (v + 1.0).abs() < 1e-9));
}
