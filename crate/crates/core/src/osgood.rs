//! Numerical classification of the Osgood integral `∫_0^ε du / f(u)`.
//!
//! The integral is probed on dyadic shells `[ε 2^-k, ε 2^-(k-1)]`. Each shell
//! is integrated in the variable `s = ln u`, where the integrand `e^s / f(e^s)`
//! stays bounded even for `f` close to linear. Convergence is declared from
//! the shell increments; divergence only from a fitted harmonic lower bound,
//! which is the best a finite probe can offer.

use serde::Serialize;
use thiserror::Error;

use crate::nonlinearity::Nonlinearity;
use crate::quadrature::{log_scale_inverse_integral, GaussLegendre};

/// Gauss–Legendre order per panel on a dyadic shell.
pub(crate) const SHELL_RULE_ORDER: usize = 8;
/// Panels per dyadic shell (8 × 8 = 64 nodes).
pub(crate) const SHELL_PANELS: usize = 8;
/// Deepest shell boundary, in `ln u`. Keeps every probe point a normal float.
pub(crate) const MIN_LOG_U: f64 = -700.0;
pub(crate) const MAX_SHELLS: usize = 1000;
/// Fewest shells the divergence fit may use.
pub const MIN_FIT_SHELLS: usize = 8;
/// Allowed negative slope of `ln(k I_k)` against `ln k` for a divergence verdict.
const DIVERGENCE_SLOPE_SLACK: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OsgoodError {
    #[error("epsilon {epsilon} must lie in (0, domain cap {cap}]")]
    EpsilonOutOfRange { epsilon: f64, cap: f64 },
    #[error("tolerance must be positive and finite, got {0}")]
    BadTolerance(f64),
    #[error("non-finite evaluation f({u}) = {value}")]
    NonFinite { u: f64, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    /// The integral diverges: the Osgood condition holds and the zero solution is unique.
    Divergent,
    /// The integral converges: the Osgood condition fails.
    Convergent,
    Inconclusive,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Divergent => "Divergent",
            Classification::Convergent => "Convergent",
            Classification::Inconclusive => "Inconclusive",
        }
    }
}

/// Partial integral `∫_δ^ε du/f(u)` at one probe depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbePoint {
    pub delta: f64,
    pub partial: f64,
}

/// Harmonic lower-bound fit over the tail of the probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceFit {
    /// Number of shells in the fitted window.
    pub shells: usize,
    /// Least-squares slope of `ln(k I_k)` against `ln k`.
    pub slope: f64,
    /// `min k I_k` over the window.
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OsgoodVerdict {
    pub classification: Classification,
    /// `f64::INFINITY` for a divergent integral.
    pub integral_estimate: f64,
    pub probe_trace: Vec<ProbePoint>,
    pub fit: Option<DivergenceFit>,
}

/// Classify `∫_0^ε du/f(u)` as convergent, divergent or inconclusive.
pub fn check_osgood(
    f: &Nonlinearity,
    epsilon: f64,
    tol: f64,
) -> Result<OsgoodVerdict, OsgoodError> {
    if !(epsilon.is_finite() && epsilon > 0.0 && epsilon <= f.domain_cap()) {
        return Err(OsgoodError::EpsilonOutOfRange {
            epsilon,
            cap: f.domain_cap(),
        });
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(OsgoodError::BadTolerance(tol));
    }
    let rule = GaussLegendre::new(SHELL_RULE_ORDER);
    let top = epsilon.ln();
    let ln2 = std::f64::consts::LN_2;

    let mut trace = Vec::new();
    let mut increments = Vec::new();
    let mut partial = 0.0;
    let mut small_run = 0;
    for k in 1..=MAX_SHELLS {
        let hi = top - ln2 * (k - 1) as f64;
        let lo = top - ln2 * k as f64;
        if lo < MIN_LOG_U {
            break;
        }
        let inc = match log_scale_inverse_integral(&rule, |u| f.eval(u), lo, hi, SHELL_PANELS) {
            Ok(v) => v,
            // f underflowed to zero: the probe cannot go deeper.
            Err((_, 0.0)) => break,
            Err((u, value)) => return Err(OsgoodError::NonFinite { u, value }),
        };
        partial += inc;
        increments.push(inc);
        trace.push(ProbePoint {
            delta: lo.exp(),
            partial,
        });
        if !partial.is_finite() {
            break;
        }
        small_run = if inc < tol { small_run + 1 } else { 0 };
        if small_run >= 2 {
            return Ok(OsgoodVerdict {
                classification: Classification::Convergent,
                integral_estimate: partial,
                probe_trace: trace,
                fit: None,
            });
        }
    }

    if !partial.is_finite() {
        return Ok(OsgoodVerdict {
            classification: Classification::Divergent,
            integral_estimate: f64::INFINITY,
            probe_trace: trace,
            fit: None,
        });
    }

    let fit = harmonic_fit(&increments);
    let divergent = fit
        .map(|fit| fit.floor > 0.0 && fit.slope >= -DIVERGENCE_SLOPE_SLACK)
        .unwrap_or(false);
    let (classification, integral_estimate) = if divergent {
        (Classification::Divergent, f64::INFINITY)
    } else {
        (Classification::Inconclusive, partial)
    };
    Ok(OsgoodVerdict {
        classification,
        integral_estimate,
        probe_trace: trace,
        fit,
    })
}

fn harmonic_fit(increments: &[f64]) -> Option<DivergenceFit> {
    let total = increments.len();
    let shells = (total / 4).max(MIN_FIT_SHELLS);
    if total < shells {
        return None;
    }
    let window: Vec<(f64, f64)> = (total - shells + 1..=total)
        .map(|k| (k as f64, k as f64 * increments[k - 1]))
        .collect();
    let floor = window.iter().map(|&(_, w)| w).fold(f64::INFINITY, f64::min);
    if floor <= 0.0 {
        return Some(DivergenceFit {
            shells,
            slope: f64::NEG_INFINITY,
            floor,
        });
    }
    let n = shells as f64;
    let xs: Vec<f64> = window.iter().map(|&(k, _)| k.ln()).collect();
    let ys: Vec<f64> = window.iter().map(|&(_, w)| w.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Some(DivergenceFit {
        shells,
        slope: sxy / sxx,
        floor,
    })
}
