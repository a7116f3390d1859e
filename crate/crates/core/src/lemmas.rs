//! Grid-level checks of the two linear facts the construction rests on:
//! Robin/Neumann kernels dominate the Dirichlet kernel, and the Dirichlet
//! flow of a ball indicator stays uniformly positive on the ball for short times.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::domain::{DomainError, Point};
use crate::problem::EllipticProblem;
use crate::semigroup::{build_semigroup, DiscreteSemigroup, SemigroupError, Stepper};

/// Relative tolerance of the ordering check, `tol_order = 1e-6 · max K_D`.
pub const ORDERING_REL_TOL: f64 = 1e-6;
/// Random non-negative test vectors for `S_β(t)ψ ≥ S_D(t)ψ`.
pub const ORDERING_PROBES: usize = 5;
/// Seed for those probes; fixed so reports are reproducible.
pub const ORDERING_SEED: u64 = 0x05C0_0D1A;
/// `t_min = (r²/8) · 2^-KAPPA_WINDOW_OCTAVES`.
pub const KAPPA_WINDOW_OCTAVES: i32 = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LemmaError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Semigroup(#[from] SemigroupError),
    #[error("times must be positive and finite")]
    BadTimes,
    #[error("need at least 2 time samples, got {0}")]
    TooFewSamples(usize),
    #[error("reaction coefficient must be non-positive, found c = {0}")]
    PositiveReaction(f64),
    #[error("kappa = {kappa} is not positive; refine the grid for radius {r}")]
    KappaNotPositive { kappa: f64, r: f64 },
}

/// Ordering check at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingSample {
    pub t: f64,
    /// `min (K_β − K_D)` over all grid pairs.
    pub min_gap: f64,
    pub x: Point,
    pub y: Point,
    pub max_kd: f64,
    pub tol: f64,
    /// `min (S_β(t)ψ − S_D(t)ψ)` over the random probes, relative to `‖S_D(t)ψ‖∞`.
    pub probe_min: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingReport {
    pub samples: Vec<OrderingSample>,
    /// Worst gap relative to its tolerance scale, `min_gap / max K_D`.
    pub min_relative_gap: f64,
    /// `(x, y, t)` of the worst relative gap.
    pub worst: (Point, Point, f64),
    pub pass: bool,
}

/// Compare `K_β` from `problem` with `K_D` from the same operator under
/// Dirichlet conditions at each of `times`.
pub fn verify_kernel_ordering(
    problem: &EllipticProblem,
    times: &[f64],
    stepper: Stepper,
) -> Result<OrderingReport, LemmaError> {
    if times.is_empty() || times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(LemmaError::BadTimes);
    }
    let robin = build_semigroup(problem, stepper)?;
    let dirichlet = build_semigroup(&problem.dirichlet(), stepper)?;
    let np = problem.domain().num_points();

    let mut rng = ChaCha8Rng::seed_from_u64(ORDERING_SEED);
    let probes: Vec<Vec<f64>> = (0..ORDERING_PROBES)
        .map(|_| (0..np).map(|_| rng.random::<f64>()).collect())
        .collect();

    let mut samples = Vec::with_capacity(times.len());
    for &t in times {
        let kb = robin.kernel_matrix(t)?;
        let kd = dirichlet.kernel_matrix(t)?;
        let gap = &kb.values - &kd.values;
        let (mut i0, mut j0, mut min_gap) = (0, 0, f64::INFINITY);
        for j in 0..np {
            for i in (0..np).filter(|&i| kb.unknown[i]) {
                if gap[(i, j)] < min_gap {
                    (i0, j0, min_gap) = (i, j, gap[(i, j)]);
                }
            }
        }
        let max_kd = kd.max();
        let tol = ORDERING_REL_TOL * max_kd;

        let mut probe_min = f64::INFINITY;
        for psi in &probes {
            let sb = robin.apply(t, psi)?;
            let sd = dirichlet.apply(t, psi)?;
            let scale = sd
                .iter()
                .copied()
                .fold(0.0, f64::max)
                .max(f64::MIN_POSITIVE);
            let m = sb
                .iter()
                .zip(&sd)
                .zip(&kb.unknown)
                .filter(|(_, &inside)| inside)
                .map(|((a, b), _)| (a - b) / scale)
                .fold(f64::INFINITY, f64::min);
            probe_min = probe_min.min(m);
        }
        let pass = min_gap >= -tol && probe_min >= -ORDERING_REL_TOL;
        samples.push(OrderingSample {
            t,
            min_gap,
            x: kb.points[i0],
            y: kb.points[j0],
            max_kd,
            tol,
            probe_min,
            pass,
        });
    }

    let worst = samples
        .iter()
        .min_by(|a, b| {
            (a.min_gap / a.max_kd)
                .partial_cmp(&(b.min_gap / b.max_kd))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("non-empty");
    Ok(OrderingReport {
        min_relative_gap: worst.min_gap / worst.max_kd,
        worst: (worst.x, worst.y, worst.t),
        pass: samples.iter().all(|s| s.pass),
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaSample {
    pub t: f64,
    /// `min over B_r of S_D(t)χ_r`.
    pub min_value: f64,
    pub argmin: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaEstimate {
    pub center: Point,
    pub r: f64,
    /// Sampled window `[t_min, t_max]`; `t_max = r²/8` for [`estimate_kappa`].
    pub window: (f64, f64),
    pub kappa: f64,
    pub argmin: Point,
    pub argmin_t: f64,
    /// `|argmin − center|`.
    pub argmin_distance: f64,
    pub samples: Vec<KappaSample>,
}

/// `t_samples` geometric times from `(r²/8)·2^-10` to `r²/8`.
pub fn kappa_window(r: f64, t_samples: usize) -> Vec<f64> {
    let t_max = r * r / 8.0;
    let t_min = t_max * 2f64.powi(-KAPPA_WINDOW_OCTAVES);
    let n = t_samples.max(2);
    let ratio = (t_max / t_min).ln() / (n - 1) as f64;
    (0..n)
        .map(|k| {
            if k == n - 1 {
                t_max
            } else {
                t_min * (ratio * k as f64).exp()
            }
        })
        .collect()
}

/// Estimate `κ` with `S_D(t)χ_r ≥ κ χ_r` on the window `(t_min, r²/8]`.
pub fn estimate_kappa(
    problem: &EllipticProblem,
    center: Point,
    r: f64,
    t_samples: usize,
    stepper: Stepper,
) -> Result<KappaEstimate, LemmaError> {
    if t_samples < 2 {
        return Err(LemmaError::TooFewSamples(t_samples));
    }
    problem.domain().check_ball_inside(center, r)?;
    kappa_over_times(problem, center, r, &kappa_window(r, t_samples), stepper)
}

/// Minimum of `S_D(t)χ_r` over the ball and the given times.
pub fn kappa_over_times(
    problem: &EllipticProblem,
    center: Point,
    r: f64,
    times: &[f64],
    stepper: Stepper,
) -> Result<KappaEstimate, LemmaError> {
    let domain = problem.domain();
    domain.check_ball_inside(center, 3.0 * r)?;
    if let Some(&c) = problem.coefficients().c.iter().find(|&&c| c > 0.0) {
        return Err(LemmaError::PositiveReaction(c));
    }
    if times.is_empty() || times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(LemmaError::BadTimes);
    }
    let sg = build_semigroup(&problem.dirichlet(), stepper)?;
    let chi = domain.ball_indicator(center, r);
    let ball: Vec<usize> = (0..domain.num_points()).filter(|&i| chi[i] > 0.0).collect();

    let samples: Vec<KappaSample> = times
        .par_iter()
        .map(|&t| sample(&sg, &chi, &ball, t))
        .collect::<Result<_, _>>()?;

    let best = samples
        .iter()
        .min_by(|a, b| a.min_value.total_cmp(&b.min_value))
        .expect("non-empty");
    let kappa = best.min_value;
    if kappa.is_nan() || kappa <= 0.0 {
        return Err(LemmaError::KappaNotPositive { kappa, r });
    }
    let window = (
        times.iter().copied().fold(f64::INFINITY, f64::min),
        times.iter().copied().fold(0.0, f64::max),
    );
    Ok(KappaEstimate {
        center,
        r,
        window,
        kappa,
        argmin: best.argmin,
        argmin_t: best.t,
        argmin_distance: domain.distance(best.argmin, center),
        samples,
    })
}

fn sample(
    sg: &DiscreteSemigroup,
    chi: &[f64],
    ball: &[usize],
    t: f64,
) -> Result<KappaSample, SemigroupError> {
    let u = sg.apply(t, chi)?;
    let &i = ball
        .iter()
        .min_by(|&&a, &&b| u[a].total_cmp(&u[b]))
        .expect("ball contains its center");
    Ok(KappaSample {
        t,
        min_value: u[i],
        argmin: sg.domain().point(i),
    })
}
