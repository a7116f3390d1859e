use osgoodlab_core::domain::Domain;
use osgoodlab_core::field::SpaceTimeField;
use osgoodlab_core::nonlinearity::Nonlinearity;
use osgoodlab_core::nonuniqueness::*;
use osgoodlab_core::ode::OdeProfile;
use osgoodlab_core::problem::{EllipticProblem, Field, ProblemSpec};
use osgoodlab_core::semigroup::{build_semigroup, Stepper};

fn line(n: usize, beta: f64) -> EllipticProblem {
    ProblemSpec::laplacian(Domain::interval(-1.0, 1.0, n).unwrap())
        .with_beta(beta)
        .build()
        .unwrap()
}

fn sqrt() -> Nonlinearity {
    Nonlinearity::power_law(0.5, 1.0).unwrap()
}

fn opts() -> CertifyOptions {
    CertifyOptions::default()
}

#[test]
fn reference_dirichlet_certificate() {
    let c = certify_nonuniqueness(&line(201, 0.0), &sqrt(), &opts()).unwrap();
    assert!(c.is_valid(), "{:?}", c.checks);
    assert!(c.duhamel_residual <= 1e-6 * c.u_sup);
    assert!(c.chain_margins.lower >= -1e-8 && c.chain_margins.upper >= -1e-8);
    assert!(c.u_final_sup >= c.mu_final - 1e-8 && c.mu_final > 1e-8);
    assert_eq!(c.zero_residual, 0.0);
    assert!(c.positivity_margin > 0.0);
    // the up-iteration never decreases
    assert!(c.trace.iter().all(|r| r.ordering_margin >= -c.tol_chain));
    assert!((c.osgood_integral - 2.0).abs() < 1e-8);
}

#[test]
fn params_for_constant_q() {
    let (p, _) = derive_params(&line(201, 0.0), &sqrt(), &opts()).unwrap();
    assert_eq!(p.x0, [0.0, 0.0]);
    assert_eq!(p.gamma, 1.0);
    assert!((p.rho - 0.99 / 3.0).abs() < 1e-12);
    assert_eq!(p.big_r, p.rho);
    // f(1)·‖q‖ = 1 is the equality case
    assert!((p.tau - 1.0).abs() < 1e-12);
    assert!(p.t_final <= p.tau.min(p.t_prime) + 1e-15);
    assert!(p.kappa > 0.0 && p.kappa <= 1.0);
    assert!((p.rate - p.kappa * p.gamma).abs() < 1e-15);
}

#[test]
fn params_for_tent_q() {
    let problem = ProblemSpec::laplacian(Domain::interval(-1.0, 1.0, 201).unwrap())
        .with_q(Field::Tent {
            center: [0.0, 0.0],
            peak: 1.0,
            slope: 4.0,
        })
        .build()
        .unwrap();
    // R²/8 = 2e-4 is below the default step
    assert!(matches!(
        derive_params(&problem, &sqrt(), &opts()),
        Err(NuError::TooCoarse { .. })
    ));
    let fine = CertifyOptions { dt: 2e-5, ..opts() };
    let (p, _) = derive_params(&problem, &sqrt(), &fine).unwrap();
    assert!(p.gamma >= 0.5);
    assert!(3.0 * p.rho <= 0.125 + 1e-12);

    let wide = ProblemSpec::laplacian(Domain::interval(-1.0, 1.0, 201).unwrap())
        .with_q(Field::Tent {
            center: [0.0, 0.0],
            peak: 1.0,
            slope: 1.0,
        })
        .build()
        .unwrap();
    let c = certify_nonuniqueness(&wide, &sqrt(), &opts()).unwrap();
    assert!(3.0 * c.params.rho <= 0.5 + 1e-12);
    assert!(c.is_valid(), "{:?}", c.checks);
}

#[test]
fn subsolution_with_unit_rate_is_closed_form() {
    let problem = line(201, 0.0);
    let (mut p, _) = derive_params(&problem, &sqrt(), &opts()).unwrap();
    p.rate = 1.0;
    let profile = OdeProfile::new(&sqrt(), 1.0).unwrap();
    let v = build_subsolution(&p, problem.domain(), &profile).unwrap();
    let chi = problem.domain().ball_indicator(p.x0, p.big_r);
    for (m, &t) in v.times().iter().enumerate() {
        for (i, &c) in chi.iter().enumerate() {
            assert!((v.get(m, i) - t * t / 4.0 * c).abs() <= 1e-12 * t * t);
        }
    }
    assert_eq!(v.sup_at(0), 0.0);
    // zero outside the ball
    assert_eq!(v.get(p.steps, 0), 0.0);
    assert!(v
        .slice(p.steps)
        .iter()
        .zip(&chi)
        .all(|(a, c)| *c > 0.0 || *a == 0.0));
}

#[test]
fn supersolution_is_the_time_coordinate() {
    let problem = line(41, 0.0);
    let (mut p, _) = derive_params(&problem, &sqrt(), &opts()).unwrap();
    p.dt = 0.1;
    p.steps = 3;
    let w = build_supersolution(&p, problem.domain());
    assert!(w.slice(3).iter().all(|v| (v - 0.3).abs() < 1e-15));
}

#[test]
fn inequality_chain_on_the_reference_case() {
    let problem = line(201, 0.0);
    let (p, profile) = derive_params(&problem, &sqrt(), &opts()).unwrap();
    let sg = build_semigroup(&problem, Stepper::MatrixExponential).unwrap();
    let op = DuhamelOperator::new(&sg, &sqrt(), p.dt, p.steps).unwrap();
    let v = build_subsolution(&p, problem.domain(), &profile).unwrap();
    let w = build_supersolution(&p, problem.domain());
    let tol = TOL_CHAIN_REL * (1.0 + w.sup_norm());
    assert!(duhamel(&op, &v).unwrap().min_diff(&v) >= -tol);
    assert!(w.min_diff(&duhamel(&op, &w).unwrap()) >= 0.0);
    assert!(w.min_diff(&v) >= 0.0);
}

#[test]
fn two_sided_iteration_is_ordered() {
    let problem = line(201, 0.0);
    let (p, profile) = derive_params(&problem, &sqrt(), &opts()).unwrap();
    let sg = build_semigroup(&problem, Stepper::MatrixExponential).unwrap();
    let op = DuhamelOperator::new(&sg, &sqrt(), p.dt, p.steps).unwrap();
    let v = build_subsolution(&p, problem.domain(), &profile).unwrap();
    let w = build_supersolution(&p, problem.domain());
    let up = monotone_iterate(&op, &v, Direction::Up, 500, TOL_FIX, 1e-8).unwrap();
    let down = monotone_iterate(&op, &w, Direction::Down, 500, TOL_FIX, 1e-8).unwrap();
    assert!(down.field.min_diff(&up.field) >= -1e-8);
    assert!(down.trace.iter().all(|r| r.ordering_margin >= -1e-8));
    assert!(up.field.sup_at(p.steps) >= profile.mu_at(p.t_final).unwrap());
    // a supersolution cannot start an upward iteration
    assert!(matches!(
        monotone_iterate(&op, &w, Direction::Up, 5, TOL_FIX, 1e-8),
        Err(NuError::NotSubsolution { .. })
    ));
    assert!(matches!(
        monotone_iterate(&op, &v, Direction::Up, 2, TOL_FIX, 1e-8),
        Err(NuError::NonConvergence { .. })
    ));
}

#[test]
fn neumann_flat_solution() {
    let c = certify_nonuniqueness(&line(201, 1.0), &sqrt(), &opts()).unwrap();
    assert!(c.is_valid(), "{:?}", c.checks);
    let t = c.params.t_final;
    let top = c.maximal.as_ref().expect("maximal diagnostic");
    for (m, &tm) in top.field.times().iter().enumerate() {
        assert!(top
            .field
            .slice(m)
            .iter()
            .all(|u| (u - tm * tm / 4.0).abs() <= 1e-6));
    }
    assert!(top.residual <= 1e-6 * top.sup_norm);
    assert!((top.sup_norm - t * t / 4.0).abs() <= 1e-6);
}

#[test]
fn non_concave_nonlinearity_is_certified() {
    let f = Nonlinearity::log_perturbed_power(0.5, 0.5, 1.0, 1.0).unwrap();
    let c = certify_nonuniqueness(&line(201, 0.0), &f, &opts()).unwrap();
    assert!(c.is_valid(), "{:?}", c.checks);
    assert!(c.duhamel_residual <= 1e-6 * c.u_sup);
    assert!(c.chain_margins.lower >= -1e-8 && c.chain_margins.upper >= -1e-8);
}

#[test]
fn osgood_nonlinearities_are_refused() {
    for p in [1.0, 1.5] {
        let f = Nonlinearity::power_law(p, 1.0).unwrap();
        assert_eq!(
            certify_nonuniqueness(&line(101, 0.0), &f, &opts()).unwrap_err(),
            NuError::OsgoodHolds
        );
    }
}

#[test]
fn neumann_solution_dominates_dirichlet_from_the_same_seed() {
    let dir = line(201, 0.0);
    let neu = line(201, 1.0);
    let (p, profile) = derive_params(&dir, &sqrt(), &opts()).unwrap();
    let v = build_subsolution(&p, dir.domain(), &profile).unwrap();
    let w = build_supersolution(&p, dir.domain());
    let tol = TOL_CHAIN_REL * (1.0 + w.sup_norm());
    let solve = |problem: &EllipticProblem| {
        let sg = build_semigroup(problem, Stepper::MatrixExponential).unwrap();
        let op = DuhamelOperator::new(&sg, &sqrt(), p.dt, p.steps).unwrap();
        monotone_iterate(&op, &v, Direction::Up, 500, TOL_FIX, tol)
            .unwrap()
            .field
    };
    let (ud, un) = (solve(&dir), solve(&neu));
    assert!(un.min_diff(&ud) >= -tol);
}

#[test]
fn refinement_is_stable() {
    let coarse = certify_nonuniqueness(&line(201, 0.0), &sqrt(), &opts()).unwrap();
    let fine_opts = CertifyOptions {
        dt: 5e-4,
        max_time: Some(coarse.params.t_final),
        maximal_diagnostic: false,
        ..opts()
    };
    let fine = certify_nonuniqueness(&line(401, 0.0), &sqrt(), &fine_opts).unwrap();
    assert!(fine.is_valid());
    assert!((fine.params.t_final - coarse.params.t_final).abs() < 1e-12);
    let change = (fine.u_sup - coarse.u_sup).abs() / coarse.u_sup;
    assert!(change < 0.05, "{change}");
}

#[test]
fn indefinite_reaction_reduces_consistently() {
    let problem = ProblemSpec::laplacian(Domain::interval(-1.0, 1.0, 201).unwrap())
        .with_c(Field::SinPi { amplitude: 1.0 })
        .build()
        .unwrap();
    let red = reduce_indefinite_c(&problem, &sqrt()).unwrap();
    assert!(red.sigma <= 1.0 && red.sigma > 0.999);
    assert!(red.problem.c_nonpositive());
    let (c, check) = certify_indefinite(&problem, &sqrt(), &opts()).unwrap();
    assert!(c.is_valid(), "{:?}", c.checks);
    assert!(check.pass);
    assert!((check.residual_original - check.residual_reduced).abs() <= 1e-6);
}

#[test]
fn implicit_euler_pipeline() {
    let o = CertifyOptions {
        stepper: Stepper::ImplicitEuler { dt: 1e-4 },
        ..opts()
    };
    let c = certify_nonuniqueness(&line(101, 0.0), &sqrt(), &o).unwrap();
    assert!(c.is_valid(), "{:?}", c.checks);
}

#[test]
fn rectangle_pipeline() {
    let d = Domain::rectangle((-1.0, 1.0), (-1.0, 1.0), 33).unwrap();
    let problem = ProblemSpec::laplacian(d).build().unwrap();
    let o = CertifyOptions { dt: 2e-3, ..opts() };
    let c = certify_nonuniqueness(&problem, &sqrt(), &o).unwrap();
    assert!(c.is_valid(), "{:?}", c.checks);
}

#[test]
fn fields_share_one_grid() {
    let c = certify_nonuniqueness(&line(101, 0.0), &sqrt(), &opts()).unwrap();
    let same =
        |a: &SpaceTimeField, b: &SpaceTimeField| a.times() == b.times() && a.points() == b.points();
    assert!(same(&c.u, &c.v) && same(&c.u, &c.w));
    assert_eq!(c.u.times().len(), c.params.steps + 1);
}
