//! Monotone nonlinearities `f` with `f(0) = 0` and `f > 0` on `(0, M]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NonlinearityError {
    #[error("exponent p must be positive and finite, got {0}")]
    BadExponent(f64),
    #[error("domain cap must be positive and finite, got {0}")]
    BadDomainCap(f64),
    #[error("log-perturbed power with amplitude {amplitude}, rate {rate}, p {p} violates |a|*sqrt(1+(rate/p)^2) < 2")]
    PerturbationTooLarge { p: f64, amplitude: f64, rate: f64 },
    #[error("tabulated nonlinearity: {0}")]
    BadTable(String),
    #[error("linear shift must be non-negative and finite, got {0}")]
    BadShift(f64),
    #[error("f is not positive at u = {u} (f = {value})")]
    NotPositive { u: f64, value: f64 },
    #[error("f decreases between u = {lo} and u = {hi}")]
    NotMonotone { lo: f64, hi: f64 },
}

/// Shape of the nonlinearity before the optional linear shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum NonlinearityKind {
    /// `f(u) = u^p`.
    PowerLaw { p: f64 },
    /// `f(u) = u^p (2 + amplitude sin(rate ln u))`.
    LogPerturbedPower { p: f64, amplitude: f64, rate: f64 },
    /// `f(u) = u (1 + ln(1/u))` on `(0, 1]`, `f(u) = u` above 1.
    LogOsgood,
    /// Piecewise-linear through `(u, f(u))` nodes starting at `(0, 0)`.
    Tabulated { nodes: Vec<(f64, f64)> },
}

/// A validated nonlinearity `u ↦ kind(u) + linear_shift · u` used on `[0, domain_cap]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    kind: NonlinearityKind,
    linear_shift: f64,
    domain_cap: f64,
}

const MONOTONE_SAMPLES: usize = 1000;

impl Nonlinearity {
    pub fn new(kind: NonlinearityKind, domain_cap: f64) -> Result<Self, NonlinearityError> {
        Self::with_shift(kind, 0.0, domain_cap)
    }

    pub fn power_law(p: f64, domain_cap: f64) -> Result<Self, NonlinearityError> {
        Self::new(NonlinearityKind::PowerLaw { p }, domain_cap)
    }

    pub fn log_perturbed_power(
        p: f64,
        amplitude: f64,
        rate: f64,
        domain_cap: f64,
    ) -> Result<Self, NonlinearityError> {
        Self::new(
            NonlinearityKind::LogPerturbedPower { p, amplitude, rate },
            domain_cap,
        )
    }

    pub fn log_osgood(domain_cap: f64) -> Result<Self, NonlinearityError> {
        Self::new(NonlinearityKind::LogOsgood, domain_cap)
    }

    pub fn tabulated(nodes: Vec<(f64, f64)>, domain_cap: f64) -> Result<Self, NonlinearityError> {
        Self::new(NonlinearityKind::Tabulated { nodes }, domain_cap)
    }

    fn with_shift(
        kind: NonlinearityKind,
        linear_shift: f64,
        domain_cap: f64,
    ) -> Result<Self, NonlinearityError> {
        if !(domain_cap.is_finite() && domain_cap > 0.0) {
            return Err(NonlinearityError::BadDomainCap(domain_cap));
        }
        if !(linear_shift.is_finite() && linear_shift >= 0.0) {
            return Err(NonlinearityError::BadShift(linear_shift));
        }
        validate_kind(&kind, domain_cap)?;
        let f = Self {
            kind,
            linear_shift,
            domain_cap,
        };
        f.check_monotone_samples()?;
        Ok(f)
    }

    pub fn kind(&self) -> &NonlinearityKind {
        &self.kind
    }

    pub fn linear_shift(&self) -> f64 {
        self.linear_shift
    }

    pub fn domain_cap(&self) -> f64 {
        self.domain_cap
    }

    /// Evaluate `f(u)`. Non-positive arguments map to `f(0) = 0`.
    pub fn eval(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        self.eval_kind(u) + self.linear_shift * u
    }

    fn eval_kind(&self, u: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::PowerLaw { p } => u.powf(*p),
            NonlinearityKind::LogPerturbedPower { p, amplitude, rate } => {
                u.powf(*p) * (2.0 + amplitude * (rate * u.ln()).sin())
            }
            NonlinearityKind::LogOsgood => {
                if u <= 1.0 {
                    u * (1.0 - u.ln())
                } else {
                    u
                }
            }
            NonlinearityKind::Tabulated { nodes } => interpolate(nodes, u),
        }
    }

    /// Dense sampling check on a uniform 10³-point grid of `(0, M]` plus a
    /// geometric grid reaching down to `1e-12 M`.
    fn check_monotone_samples(&self) -> Result<(), NonlinearityError> {
        let m = self.domain_cap;
        let uniform = (1..=MONOTONE_SAMPLES).map(|i| m * i as f64 / MONOTONE_SAMPLES as f64);
        let geometric = (0..=MONOTONE_SAMPLES)
            .rev()
            .map(|i| m * 10f64.powf(-12.0 * i as f64 / MONOTONE_SAMPLES as f64));
        for grid in [geometric.collect::<Vec<_>>(), uniform.collect()] {
            let mut prev: Option<(f64, f64)> = None;
            for u in grid {
                let value = self.eval(u);
                if !(value.is_finite() && value > 0.0) {
                    return Err(NonlinearityError::NotPositive { u, value });
                }
                if let Some((pu, pv)) = prev {
                    // relative slack for round-off in flat tabulated segments
                    if value < pv * (1.0 - 4.0 * f64::EPSILON) {
                        return Err(NonlinearityError::NotMonotone { lo: pu, hi: u });
                    }
                }
                prev = Some((u, value));
            }
        }
        Ok(())
    }
}

fn validate_kind(kind: &NonlinearityKind, domain_cap: f64) -> Result<(), NonlinearityError> {
    match kind {
        NonlinearityKind::PowerLaw { p } => check_exponent(*p),
        NonlinearityKind::LogPerturbedPower { p, amplitude, rate } => {
            check_exponent(*p)?;
            let bound = amplitude.abs() * (1.0 + (rate / p).powi(2)).sqrt();
            if !(amplitude.is_finite() && rate.is_finite() && bound < 2.0) {
                return Err(NonlinearityError::PerturbationTooLarge {
                    p: *p,
                    amplitude: *amplitude,
                    rate: *rate,
                });
            }
            Ok(())
        }
        NonlinearityKind::LogOsgood => Ok(()),
        NonlinearityKind::Tabulated { nodes } => validate_table(nodes, domain_cap),
    }
}

fn check_exponent(p: f64) -> Result<(), NonlinearityError> {
    if p.is_finite() && p > 0.0 {
        Ok(())
    } else {
        Err(NonlinearityError::BadExponent(p))
    }
}

fn validate_table(nodes: &[(f64, f64)], domain_cap: f64) -> Result<(), NonlinearityError> {
    let bad = |msg: &str| Err(NonlinearityError::BadTable(msg.to_string()));
    if nodes.len() < 2 {
        return bad("need at least two nodes");
    }
    if nodes[0] != (0.0, 0.0) {
        return bad("first node must be (0, 0)");
    }
    for w in nodes.windows(2) {
        let ((u0, f0), (u1, f1)) = (w[0], w[1]);
        if !(u1.is_finite() && f1.is_finite()) {
            return bad("non-finite node");
        }
        if u1 <= u0 {
            return bad("u nodes must be strictly increasing");
        }
        if f1 < f0 {
            return bad("f values must be non-decreasing");
        }
        if f1 <= 0.0 {
            return bad("f must be positive for u > 0");
        }
    }
    if nodes[nodes.len() - 1].0 < domain_cap {
        return bad("last node must reach the domain cap");
    }
    Ok(())
}

fn interpolate(nodes: &[(f64, f64)], u: f64) -> f64 {
    let k = nodes.partition_point(|&(x, _)| x <= u);
    if k == 0 {
        return nodes[0].1;
    }
    if k >= nodes.len() {
        return nodes[nodes.len() - 1].1;
    }
    let (u0, f0) = nodes[k - 1];
    let (u1, f1) = nodes[k];
    f0 + (f1 - f0) * (u - u0) / (u1 - u0)
}

/// `f̃(u) = f(u) + σu`, the nonlinearity paired with the shifted coefficient `c − σ`.
pub fn shift_nonlinearity(f: &Nonlinearity, sigma: f64) -> Result<Nonlinearity, NonlinearityError> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(NonlinearityError::BadShift(sigma));
    }
    Nonlinearity::with_shift(f.kind.clone(), f.linear_shift + sigma, f.domain_cap)
}
