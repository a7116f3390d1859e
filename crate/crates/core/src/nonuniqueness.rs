//! Construction of a non-trivial bounded solution of
//! `u_t = Lu + q(x) f(u)`, `Bu = 0`, `u(·, 0) = 0` when `∫_0 du/f(u) < ∞`.
//!
//! A subsolution `v = μ(t) χ_R` and the supersolution `w = t` bracket the
//! monotone iteration `u ↦ Φ(u)` of the Duhamel operator
//! `Φ(u)(t) = ∫_0^t S(t − s)[q f(u(s))] ds`; its limit `U` and the zero field
//! are two solutions of the same problem.
//!
//! The time integral uses the composite trapezoid rule on a uniform grid,
//! which keeps `Φ` monotone (non-negative weights, positive propagator) and is
//! exact on flat Neumann solutions.

use log::{info, warn};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::domain::{Domain, DomainError, Point};
use crate::field::SpaceTimeField;
use crate::lemmas::{kappa_over_times, kappa_window, LemmaError};
use crate::nonlinearity::{shift_nonlinearity, Nonlinearity, NonlinearityError};
use crate::ode::{OdeError, OdeProfile};
use crate::osgood::{check_osgood, Classification, OsgoodError};
use crate::problem::EllipticProblem;
use crate::semigroup::{build_semigroup, DiscreteSemigroup, SemigroupError, Stepper};

/// `tol_chain = TOL_CHAIN_REL · (1 + ‖w‖∞)`.
pub const TOL_CHAIN_REL: f64 = 1e-8;
/// `tol_res = TOL_RES_REL · ‖U‖∞`.
pub const TOL_RES_REL: f64 = 1e-6;
/// Absolute cap on the fixed-point step.
pub const TOL_FIX: f64 = 1e-9;
/// Fixed-point steps must also fall below this fraction of the iterate norm.
pub const TOL_FIX_REL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NuError {
    #[error("the Osgood integral diverges: the zero solution is unique and no certificate exists")]
    OsgoodHolds,
    #[error("the Osgood classification is inconclusive")]
    Inconclusive,
    #[error(transparent)]
    Osgood(#[from] OsgoodError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Lemma(#[from] LemmaError),
    #[error(transparent)]
    Semigroup(#[from] SemigroupError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
    #[error("reaction coefficient takes the positive value {0}; reduce the problem first")]
    PositiveReaction(f64),
    #[error("no interior ball on which q stays positive")]
    NoInteriorBall,
    #[error("time step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("time step {dt} leaves no grid time below the admissible horizon {limit}")]
    TooCoarse { dt: f64, limit: f64 },
    #[error("f evaluated at {u} beyond its domain cap {cap}")]
    DomainCapExceeded { u: f64, cap: f64 },
    #[error("field does not live on the operator's space-time grid")]
    FieldMismatch,
    #[error("start field is not a subsolution: min(Φ(u) − u) = {margin}")]
    NotSubsolution { margin: f64 },
    #[error("start field is not a supersolution: min(u − Φ(u)) = {margin}")]
    NotSupersolution { margin: f64 },
    #[error("iterate {iteration} breaks monotonicity by {margin}")]
    MonotonicityViolation { iteration: usize, margin: f64 },
    #[error("no fixed point after {iterations} iterations (last step {step})")]
    NonConvergence { iterations: usize, step: f64 },
}

/// Discrete Duhamel operator on the grid `t_m = m·dt`, `m = 0..=steps`.
///
/// The forcing is `q(x) f(u) + linear_forcing · u`; the second term is only
/// used by the indefinite-`c` reduction.
#[derive(Debug, Clone)]
pub struct DuhamelOperator {
    sg: DiscreteSemigroup,
    propagator: DMatrix<f64>,
    q: Vec<f64>,
    f: Nonlinearity,
    linear_forcing: f64,
    dt: f64,
    times: Vec<f64>,
    points: Vec<Point>,
}

impl DuhamelOperator {
    pub fn new(
        sg: &DiscreteSemigroup,
        f: &Nonlinearity,
        dt: f64,
        steps: usize,
    ) -> Result<Self, NuError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(NuError::BadStep(dt));
        }
        let propagator = sg.operator(dt)?;
        let q = sg.generator().restrict(sg.problem().q());
        Ok(Self {
            sg: sg.clone(),
            propagator,
            q,
            f: f.clone(),
            linear_forcing: 0.0,
            dt,
            times: time_grid(dt, steps),
            points: sg.domain().points(),
        })
    }

    pub fn with_linear_forcing(mut self, sigma: f64) -> Self {
        self.linear_forcing = sigma;
        self
    }

    pub fn semigroup(&self) -> &DiscreteSemigroup {
        &self.sg
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn zero_field(&self) -> SpaceTimeField {
        SpaceTimeField::zeros(self.points.clone(), self.times.clone())
    }

    fn forcing(&self, slice: &[f64]) -> Result<DVector<f64>, NuError> {
        let free = self.sg.generator().restrict(slice);
        let cap = self.f.domain_cap();
        free.iter()
            .zip(&self.q)
            .map(|(&u, &q)| {
                if u > cap {
                    Err(NuError::DomainCapExceeded { u, cap })
                } else {
                    Ok(q * self.f.eval(u) + self.linear_forcing * u.max(0.0))
                }
            })
            .collect::<Result<Vec<_>, _>>()
            .map(DVector::from_vec)
    }

    /// `Φ(u)` with `Φ(u)(0) = 0`.
    pub fn apply(&self, u: &SpaceTimeField) -> Result<SpaceTimeField, NuError> {
        if u.times().len() != self.times.len() || u.points().len() != self.points.len() {
            return Err(NuError::FieldMismatch);
        }
        let half = 0.5 * self.dt;
        let n = self.q.len();
        let mut slices = Vec::with_capacity(self.times.len());
        let mut phi = DVector::zeros(n);
        let mut g_prev = self.forcing(u.slice(0))?;
        slices.push(self.sg.generator().extend(phi.as_slice()));
        for m in 1..self.times.len() {
            let g = self.forcing(u.slice(m))?;
            phi = &self.propagator * (phi + &g_prev * half) + &g * half;
            slices.push(self.sg.generator().extend(phi.as_slice()));
            g_prev = g;
        }
        Ok(SpaceTimeField::new(
            self.points.clone(),
            self.times.clone(),
            slices,
        ))
    }
}

fn time_grid(dt: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|m| m as f64 * dt).collect()
}

/// `Φ(u)` for the operator's semigroup, forcing and time grid.
pub fn duhamel(op: &DuhamelOperator, u: &SpaceTimeField) -> Result<SpaceTimeField, NuError> {
    op.apply(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterateRecord {
    pub iteration: usize,
    /// `‖u_{n+1} − u_n‖∞`.
    pub step: f64,
    /// `min(u_{n+1} − u_n)` going up, `min(u_n − u_{n+1})` going down.
    pub ordering_margin: f64,
    pub sup_norm: f64,
}

#[derive(Debug, Clone)]
pub struct IterationOutcome {
    pub field: SpaceTimeField,
    pub trace: Vec<IterateRecord>,
    /// `min(Φ(start) − start)` going up, `min(start − Φ(start))` going down.
    pub start_margin: f64,
    /// `‖U − Φ(U)‖∞` of the returned field.
    pub residual: f64,
}

/// Iterate `u_{n+1} = Φ(u_n)` from a sub- (`Up`) or supersolution (`Down`).
///
/// Stops once `‖u_{n+1} − u_n‖∞ ≤ min(tol_fix, TOL_FIX_REL · ‖u_{n+1}‖∞)`.
pub fn monotone_iterate(
    op: &DuhamelOperator,
    start: &SpaceTimeField,
    direction: Direction,
    max_iter: usize,
    tol_fix: f64,
    tol_chain: f64,
) -> Result<IterationOutcome, NuError> {
    let signed = |next: &SpaceTimeField, prev: &SpaceTimeField| match direction {
        Direction::Up => next.min_diff(prev),
        Direction::Down => prev.min_diff(next),
    };
    let mut current = start.clone();
    let mut next = op.apply(&current)?;
    let start_margin = signed(&next, &current);
    if start_margin < -tol_chain {
        return Err(match direction {
            Direction::Up => NuError::NotSubsolution {
                margin: start_margin,
            },
            Direction::Down => NuError::NotSupersolution {
                margin: start_margin,
            },
        });
    }
    let mut trace = Vec::new();
    let mut step = f64::INFINITY;
    for iteration in 1..=max_iter {
        step = next.dist(&current);
        let ordering_margin = signed(&next, &current);
        trace.push(IterateRecord {
            iteration,
            step,
            ordering_margin,
            sup_norm: next.sup_norm(),
        });
        if ordering_margin < -tol_chain {
            return Err(NuError::MonotonicityViolation {
                iteration,
                margin: ordering_margin,
            });
        }
        if step <= tol_fix.min(TOL_FIX_REL * next.sup_norm()) {
            let residual = op.apply(&next)?.dist(&next);
            return Ok(IterationOutcome {
                field: next,
                trace,
                start_margin,
                residual,
            });
        }
        current = next;
        next = op.apply(&current)?;
    }
    Err(NuError::NonConvergence {
        iterations: max_iter,
        step,
    })
}

/// Knobs of the certification pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertifyOptions {
    /// Duhamel time step.
    pub dt: f64,
    pub stepper: Stepper,
    /// Optional cap on the final time `T`.
    pub max_time: Option<f64>,
    /// Geometric samples of the `κ` window, on top of the Duhamel grid times.
    pub kappa_samples: usize,
    pub max_iter: usize,
    pub osgood_tol: f64,
    /// Also iterate down from `w` and report the gap to `U`.
    pub maximal_diagnostic: bool,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            stepper: Stepper::MatrixExponential,
            max_time: None,
            kappa_samples: 65,
            max_iter: 1000,
            osgood_tol: 1e-12,
            maximal_diagnostic: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstructionParams {
    pub x0: Point,
    pub rho: f64,
    /// `min q` over `B_{3ρ}(x0)`.
    pub gamma: f64,
    pub r: f64,
    /// `R = min(r, ρ)`.
    pub big_r: f64,
    pub kappa: f64,
    /// Sampled `κ` window `[t_min, t_max]`.
    pub kappa_window: (f64, f64),
    /// `κγ`, the rate of the `μ` equation.
    pub rate: f64,
    /// Time at which `μ` reaches the domain cap of `f`.
    pub t_star: f64,
    /// `min(T*, R²/8)`.
    pub t_prime: f64,
    pub tau: f64,
    /// Final time `T = min(τ, T')` on the grid.
    pub t_final: f64,
    pub dt: f64,
    pub steps: usize,
    pub q_sup: f64,
    /// Linear forcing from the indefinite-`c` reduction (0 otherwise).
    pub sigma: f64,
}

impl ConstructionParams {
    pub fn times(&self) -> Vec<f64> {
        time_grid(self.dt, self.steps)
    }
}

fn grid_steps(limit: f64, dt: f64) -> usize {
    (limit / dt + 1e-9).floor().max(0.0) as usize
}

/// Centre, radius and lower bound of `q` for the ball `B_{3ρ}(x0)`.
fn choose_ball(problem: &EllipticProblem) -> Result<(Point, f64, f64), NuError> {
    let domain = problem.domain();
    let q = problem.q();
    let interior = domain.interior_indices();
    let q_max = interior.iter().map(|&i| q[i]).fold(0.0, f64::max);
    if q_max <= 0.0 {
        return Err(NuError::NoInteriorBall);
    }
    // among maximisers prefer room for the largest ball, then the smallest index
    let mut best = None;
    for &i in &interior {
        if q[i] != q_max {
            continue;
        }
        let room = domain.distance_to_boundary(domain.point(i));
        if best.is_none_or(|(_, r)| room > r) {
            best = Some((i, room));
        }
    }
    let (i0, room) = best.expect("a maximiser exists");
    let x0 = domain.point(i0);
    let h = domain.spacing()[0];
    let mut k = ((room / h) - 1e-9).ceil() as isize - 1;
    while k >= 1 {
        let radius = k as f64 * h;
        if domain.check_ball_inside(x0, radius).is_ok() {
            let gamma = (0..domain.num_points())
                .filter(|&j| domain.in_ball(j, x0, radius))
                .map(|j| q[j])
                .fold(f64::INFINITY, f64::min);
            if gamma >= 0.5 * q_max {
                return Ok((x0, radius / 3.0, gamma));
            }
        }
        k -= 1;
    }
    Err(NuError::NoInteriorBall)
}

/// Largest `u ∈ [0, cap]` with `q_sup f(u) + sigma u ≤ 1`.
fn supersolution_level(f: &Nonlinearity, q_sup: f64, sigma: f64) -> f64 {
    let g = |u: f64| q_sup * f.eval(u) + sigma * u;
    let cap = f.domain_cap();
    if g(cap) <= 1.0 {
        return cap;
    }
    let (mut lo, mut hi) = (0.0, cap);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Everything the construction needs before iterating, plus the `μ` profile.
pub fn derive_params(
    problem: &EllipticProblem,
    f: &Nonlinearity,
    opts: &CertifyOptions,
) -> Result<(ConstructionParams, OdeProfile), NuError> {
    derive_params_with_forcing(problem, f, 0.0, opts)
}

fn derive_params_with_forcing(
    problem: &EllipticProblem,
    f: &Nonlinearity,
    sigma: f64,
    opts: &CertifyOptions,
) -> Result<(ConstructionParams, OdeProfile), NuError> {
    let dt = opts.dt;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(NuError::BadStep(dt));
    }
    if let Some(&c) = problem.coefficients().c.iter().find(|&&c| c > 0.0) {
        return Err(NuError::PositiveReaction(c));
    }
    let (x0, rho, gamma) = choose_ball(problem)?;
    let r = rho;
    let big_r = r.min(rho);
    let window_end = big_r * big_r / 8.0;
    let window_steps = grid_steps(window_end, dt);
    if window_steps == 0 {
        return Err(NuError::TooCoarse {
            dt,
            limit: window_end,
        });
    }

    let mut times = kappa_window(big_r, opts.kappa_samples.max(2));
    times.extend((1..=window_steps).map(|m| m as f64 * dt));
    let estimate = kappa_over_times(problem, x0, big_r, &times, opts.stepper)?;
    let kappa = estimate.kappa;
    let rate = kappa * gamma;
    let profile = OdeProfile::new(f, rate)?;

    let q_sup = problem.q_sup();
    let t_star = profile.horizon;
    let t_prime = t_star.min(window_end);

    let level = supersolution_level(f, q_sup, sigma);
    let mut tau_steps = grid_steps(level, dt);
    while tau_steps > 0 {
        let t = tau_steps as f64 * dt;
        if q_sup * f.eval(t) + sigma * t <= 1.0 {
            break;
        }
        tau_steps -= 1;
    }
    let mut steps = tau_steps.min(grid_steps(t_prime, dt));
    if let Some(cap) = opts.max_time {
        steps = steps.min(grid_steps(cap, dt));
    }
    // keep v ≤ w on the grid
    for m in 1..=steps {
        let t = m as f64 * dt;
        if profile.mu_at(t)? > t {
            steps = m - 1;
            break;
        }
    }
    let tau = tau_steps as f64 * dt;
    if steps == 0 {
        return Err(NuError::TooCoarse {
            dt,
            limit: tau.min(t_prime),
        });
    }
    let t_final = steps as f64 * dt;
    let params = ConstructionParams {
        x0,
        rho,
        gamma,
        r,
        big_r,
        kappa,
        kappa_window: estimate.window,
        rate,
        t_star,
        t_prime,
        tau,
        t_final,
        dt,
        steps,
        q_sup,
        sigma,
    };
    info!("construction parameters: {params:?}");
    Ok((params, profile))
}

/// `v(x, t) = μ(t) χ_R(x)`.
pub fn build_subsolution(
    params: &ConstructionParams,
    domain: &Domain,
    profile: &OdeProfile,
) -> Result<SpaceTimeField, NuError> {
    let times = params.times();
    let mu = times
        .iter()
        .map(|&t| profile.mu_at(t))
        .collect::<Result<Vec<_>, _>>()?;
    let chi = domain.ball_indicator(params.x0, params.big_r);
    Ok(SpaceTimeField::from_fn(domain.points(), times, |m, i| {
        mu[m] * chi[i]
    }))
}

/// `w(x, t) = t`.
pub fn build_supersolution(params: &ConstructionParams, domain: &Domain) -> SpaceTimeField {
    let times = params.times();
    let t = times.clone();
    SpaceTimeField::from_fn(domain.points(), times, |m, _| t[m])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainMargins {
    /// `min(U − v)`.
    pub lower: f64,
    /// `min(w − U)`.
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertificateChecks {
    pub sandwich: bool,
    pub residual: bool,
    pub positivity: bool,
    pub nontrivial: bool,
    pub zero_solution: bool,
}

impl CertificateChecks {
    pub fn all(&self) -> bool {
        self.sandwich && self.residual && self.positivity && self.nontrivial && self.zero_solution
    }
}

/// Down-iteration from `w`, reported but not certified.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximalDiagnostic {
    #[serde(skip)]
    pub field: SpaceTimeField,
    pub iterations: usize,
    pub sup_norm: f64,
    /// `min(Ū − U)`.
    pub gap_to_minimal: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NonUniquenessCertificate {
    pub params: ConstructionParams,
    pub osgood_integral: f64,
    #[serde(skip)]
    pub v: SpaceTimeField,
    #[serde(skip)]
    pub u: SpaceTimeField,
    #[serde(skip)]
    pub w: SpaceTimeField,
    pub chain_margins: ChainMargins,
    /// `min(Φ(v) − v)`.
    pub subsolution_margin: f64,
    /// `min(w − Φ(w))`.
    pub supersolution_margin: f64,
    pub duhamel_residual: f64,
    /// `‖0 − Φ(0)‖∞`.
    pub zero_residual: f64,
    /// `min U` over interior points and `t ∈ [T/2, T]`.
    pub positivity_margin: f64,
    pub u_sup: f64,
    /// `‖U(·, T)‖∞`.
    pub u_final_sup: f64,
    /// `μ(T)`.
    pub mu_final: f64,
    pub tol_chain: f64,
    pub tol_res: f64,
    pub iterations: usize,
    pub trace: Vec<IterateRecord>,
    pub maximal: Option<MaximalDiagnostic>,
    pub checks: CertificateChecks,
}

impl NonUniquenessCertificate {
    pub fn is_valid(&self) -> bool {
        self.checks.all()
    }
}

fn osgood_gate(f: &Nonlinearity, tol: f64) -> Result<f64, NuError> {
    let verdict = check_osgood(f, f.domain_cap(), tol)?;
    match verdict.classification {
        Classification::Convergent => Ok(verdict.integral_estimate),
        Classification::Divergent => Err(NuError::OsgoodHolds),
        Classification::Inconclusive => Err(NuError::Inconclusive),
    }
}

/// Full pipeline for `c ≤ 0`: parameters, `κ`, `μ`, `v`, `w`, up-iteration
/// from `v`, and the certificate checks.
pub fn certify_nonuniqueness(
    problem: &EllipticProblem,
    f: &Nonlinearity,
    opts: &CertifyOptions,
) -> Result<NonUniquenessCertificate, NuError> {
    let integral = osgood_gate(f, opts.osgood_tol)?;
    construct(problem, f, 0.0, integral, opts)
}

fn construct(
    problem: &EllipticProblem,
    f: &Nonlinearity,
    sigma: f64,
    osgood_integral: f64,
    opts: &CertifyOptions,
) -> Result<NonUniquenessCertificate, NuError> {
    let (params, profile) = derive_params_with_forcing(problem, f, sigma, opts)?;
    let domain = problem.domain();
    let sg = build_semigroup(problem, opts.stepper)?;
    let op = DuhamelOperator::new(&sg, f, params.dt, params.steps)?.with_linear_forcing(sigma);

    let v = build_subsolution(&params, domain, &profile)?;
    let w = build_supersolution(&params, domain);
    let tol_chain = TOL_CHAIN_REL * (1.0 + w.sup_norm());

    let up = monotone_iterate(&op, &v, Direction::Up, opts.max_iter, TOL_FIX, tol_chain)?;
    let supersolution_margin = w.min_diff(&op.apply(&w)?);
    let u = up.field;
    let tol_res = TOL_RES_REL * u.sup_norm();
    let zero_residual = op.apply(&op.zero_field())?.sup_norm();

    let half = 0.5 * params.t_final - 1e-12;
    let mut positivity_margin = f64::INFINITY;
    for (m, &t) in u.times().iter().enumerate() {
        if t < half {
            continue;
        }
        for i in domain.interior_indices() {
            positivity_margin = positivity_margin.min(u.get(m, i));
        }
    }

    let maximal = if opts.maximal_diagnostic {
        match monotone_iterate(&op, &w, Direction::Down, opts.max_iter, TOL_FIX, tol_chain) {
            Ok(down) => Some(MaximalDiagnostic {
                gap_to_minimal: down.field.min_diff(&u),
                iterations: down.trace.len(),
                sup_norm: down.field.sup_norm(),
                residual: down.residual,
                field: down.field,
            }),
            Err(e) => {
                warn!("down-iteration from w failed: {e}");
                None
            }
        }
    } else {
        None
    };

    let chain_margins = ChainMargins {
        lower: u.min_diff(&v),
        upper: w.min_diff(&u),
    };
    let u_final_sup = u.sup_at(params.steps);
    let mu_final = profile.mu_at(params.t_final)?;
    let checks = CertificateChecks {
        sandwich: chain_margins.lower >= -tol_chain && chain_margins.upper >= -tol_chain,
        residual: up.residual <= tol_res,
        positivity: positivity_margin > 0.0,
        nontrivial: u_final_sup >= mu_final - tol_chain && mu_final - tol_chain > 0.0,
        zero_solution: zero_residual == 0.0,
    };
    Ok(NonUniquenessCertificate {
        params,
        osgood_integral,
        v,
        w,
        chain_margins,
        subsolution_margin: up.start_margin,
        supersolution_margin,
        duhamel_residual: up.residual,
        zero_residual,
        positivity_margin,
        u_sup: u.sup_norm(),
        u_final_sup,
        mu_final,
        tol_chain,
        tol_res,
        iterations: up.trace.len(),
        trace: up.trace,
        maximal,
        checks,
        u,
    })
}

/// `c̃ = c − σ ≤ 0` and `f̃ = f + σu` with `σ = ‖c‖∞`.
#[derive(Debug, Clone)]
pub struct ReducedProblem {
    pub problem: EllipticProblem,
    pub f_tilde: Nonlinearity,
    pub sigma: f64,
}

pub fn reduce_indefinite_c(
    problem: &EllipticProblem,
    f: &Nonlinearity,
) -> Result<ReducedProblem, NuError> {
    let sigma = problem.c_sup();
    Ok(ReducedProblem {
        problem: problem.with_reaction_shift(sigma),
        f_tilde: shift_nonlinearity(f, sigma)?,
        sigma,
    })
}

/// Bound on `‖Φ_original(U) − Φ_reduced(U)‖∞`. The two discrete operators
/// agree only up to the O(dt²) quadrature error, so this is absolute.
pub const REDUCTION_TOL: f64 = 1e-6;

/// Duhamel residuals of one field under the original and the reduced problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReductionCheck {
    pub sigma: f64,
    pub residual_original: f64,
    pub residual_reduced: f64,
    /// `‖Φ_original(U) − Φ_reduced(U)‖∞`.
    pub operator_gap: f64,
    pub pass: bool,
}

/// Compare `U − Φ(U)` under `(L, f)` and under `(L − σ, f + σu)`.
pub fn compare_reduction(
    problem: &EllipticProblem,
    f: &Nonlinearity,
    reduced: &ReducedProblem,
    u: &SpaceTimeField,
    dt: f64,
    stepper: Stepper,
) -> Result<ReductionCheck, NuError> {
    let steps = u.times().len() - 1;
    let original = DuhamelOperator::new(&build_semigroup(problem, stepper)?, f, dt, steps)?;
    let shifted = DuhamelOperator::new(&build_semigroup(&reduced.problem, stepper)?, f, dt, steps)?
        .with_linear_forcing(reduced.sigma);
    let a = original.apply(u)?;
    let b = shifted.apply(u)?;
    let operator_gap = a.dist(&b);
    Ok(ReductionCheck {
        sigma: reduced.sigma,
        residual_original: a.dist(u),
        residual_reduced: b.dist(u),
        operator_gap,
        pass: operator_gap <= REDUCTION_TOL,
    })
}

/// Certify through the reduction and check the residual equivalence on `U`.
///
/// The reduced forcing is `q f(u) + σu`, which is `q f̃(u)` when `q ≡ 1`.
pub fn certify_indefinite(
    problem: &EllipticProblem,
    f: &Nonlinearity,
    opts: &CertifyOptions,
) -> Result<(NonUniquenessCertificate, ReductionCheck), NuError> {
    let reduced = reduce_indefinite_c(problem, f)?;
    let integral = osgood_gate(&reduced.f_tilde, opts.osgood_tol)?;
    let cert = construct(&reduced.problem, f, reduced.sigma, integral, opts)?;
    let check = compare_reduction(problem, f, &reduced, &cert.u, cert.params.dt, opts.stepper)?;
    Ok((cert, check))
}
