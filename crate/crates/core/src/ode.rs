//! The comparison ODE `μ' = rate · f(μ)`, `μ(0) = 0`, on its non-trivial branch.
//!
//! When the Osgood integral converges, `F(μ) = ∫_0^μ du/f(u)` is finite and
//! strictly increasing, and the non-trivial solution is `μ(t) = F⁻¹(rate · t)`.

use serde::Serialize;
use thiserror::Error;

use crate::nonlinearity::Nonlinearity;
use crate::osgood::{check_osgood, Classification, OsgoodError, MAX_SHELLS, MIN_LOG_U};
use crate::quadrature::{log_scale_inverse_integral, GaussLegendre};

/// Table nodes per dyadic shell.
pub const NODES_PER_SHELL: usize = 64;
const NODE_RULE_ORDER: usize = 8;
/// Tolerance handed to the Osgood classifier before building a profile.
pub const PROFILE_OSGOOD_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("rate must be positive and finite, got {0}")]
    BadRate(f64),
    #[error("time grid must be non-negative, finite and increasing")]
    BadTimeGrid,
    #[error("f satisfies the Osgood condition: the zero solution is the only one")]
    OsgoodHolds,
    #[error("the Osgood integral could not be classified as convergent")]
    Inconclusive,
    #[error(
        "requested time {requested} exceeds the horizon {horizon} where mu reaches the domain cap"
    )]
    HorizonExceeded { requested: f64, horizon: f64 },
    #[error(transparent)]
    Osgood(#[from] OsgoodError),
    #[error("f evaluation failed at u = {u}: {value}")]
    BadEvaluation { u: f64, value: f64 },
}

/// Tabulated `F(μ) = ∫_0^μ du/f(u)` and its inverse scaled by `rate`.
#[derive(Debug, Clone, Serialize)]
pub struct OdeProfile {
    pub rate: f64,
    /// `(μ, F(μ))`, ascending in `μ`, geometric spacing.
    pub table: Vec<(f64, f64)>,
    /// `T* = F(M) / rate`: `μ(T*)` equals the domain cap.
    pub horizon: f64,
    /// Local exponent `1 − p` of `F ~ μ^(1−p)` below the first table node.
    tail_exponent: f64,
    #[serde(skip)]
    f: Nonlinearity,
}

/// Sampled `μ(t_i)` together with the profile that produced them.
#[derive(Debug, Clone, Serialize)]
pub struct OdeSolution {
    pub profile: OdeProfile,
    pub times: Vec<f64>,
    pub mu: Vec<f64>,
}

impl OdeProfile {
    /// Build the `F` table for `f` on `(0, domain_cap]`.
    pub fn new(f: &Nonlinearity, rate: f64) -> Result<Self, OdeError> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(OdeError::BadRate(rate));
        }
        let cap = f.domain_cap();
        let verdict = check_osgood(f, cap, PROFILE_OSGOOD_TOL)?;
        match verdict.classification {
            Classification::Convergent => {}
            Classification::Divergent => return Err(OdeError::OsgoodHolds),
            Classification::Inconclusive => return Err(OdeError::Inconclusive),
        }

        let rule = GaussLegendre::new(NODE_RULE_ORDER);
        let step = std::f64::consts::LN_2 / NODES_PER_SHELL as f64;
        let top = cap.ln();
        let max_nodes = MAX_SHELLS * NODES_PER_SHELL;
        // Node j sits at ln u = top − j·step; pieces[j] = ∫ over [node j+1, node j].
        let mut pieces = Vec::with_capacity(max_nodes);
        for j in 0..max_nodes {
            let hi = top - step * j as f64;
            let lo = top - step * (j + 1) as f64;
            if lo < MIN_LOG_U {
                break;
            }
            match log_scale_inverse_integral(&rule, |u| f.eval(u), lo, hi, 1) {
                Ok(v) => pieces.push(v),
                Err((_, 0.0)) => break,
                Err((u, value)) => return Err(OdeError::BadEvaluation { u, value }),
            }
        }
        if pieces.len() < 2 * NODES_PER_SHELL {
            return Err(OdeError::Inconclusive);
        }

        // Geometric tail below the deepest node from the last two shells.
        let n = pieces.len();
        let last: f64 = pieces[n - NODES_PER_SHELL..].iter().sum();
        let prev: f64 = pieces[n - 2 * NODES_PER_SHELL..n - NODES_PER_SHELL]
            .iter()
            .sum();
        let ratio = last / prev;
        if !(ratio < 1.0 && ratio > 0.0) {
            return Err(OdeError::Inconclusive);
        }
        let tail = last * ratio / (1.0 - ratio);
        let tail_exponent = -ratio.log2();

        // Accumulate from the bottom so small F values keep full relative precision.
        let mut table = Vec::with_capacity(n + 1);
        let mut acc = tail;
        table.push(((top - step * n as f64).exp(), acc));
        for j in (0..n).rev() {
            acc += pieces[j];
            let u = if j == 0 {
                cap
            } else {
                (top - step * j as f64).exp()
            };
            table.push((u, acc));
        }
        let horizon = acc / rate;
        Ok(Self {
            rate,
            table,
            horizon,
            tail_exponent,
            f: f.clone(),
        })
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.f
    }

    /// `F(μ) = ∫_0^μ du/f(u)` for `μ ∈ [0, domain_cap]`.
    pub fn integral_to(&self, mu: f64) -> f64 {
        if mu <= 0.0 {
            return 0.0;
        }
        let (u0, f0) = self.table[0];
        if mu <= u0 {
            return f0 * (mu / u0).powf(self.tail_exponent);
        }
        let k = self
            .table
            .partition_point(|&(u, _)| u <= mu)
            .min(self.table.len() - 1);
        let (ua, fa) = self.table[k - 1];
        fa + self.segment(ua.ln(), mu.ln())
    }

    fn segment(&self, lo: f64, hi: f64) -> f64 {
        let rule = GaussLegendre::new(NODE_RULE_ORDER);
        rule.integrate(lo, hi, |s| {
            let u = s.exp();
            u / self.f.eval(u)
        })
    }

    /// `μ(t) = F⁻¹(rate · t)`.
    pub fn mu_at(&self, t: f64) -> Result<f64, OdeError> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(OdeError::BadTimeGrid);
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let target = self.rate * t;
        let (top_u, top_f) = self.table[self.table.len() - 1];
        if target > top_f {
            return Err(OdeError::HorizonExceeded {
                requested: t,
                horizon: self.horizon,
            });
        }
        if target == top_f {
            return Ok(top_u);
        }
        let (u0, f0) = self.table[0];
        if target <= f0 {
            return Ok(u0 * (target / f0).powf(1.0 / self.tail_exponent));
        }
        // Bisection on the table, then Newton in ln μ inside the bracket.
        let k = self.table.partition_point(|&(_, big_f)| big_f <= target);
        let (ua, fa) = self.table[k - 1];
        let (ub, fb) = self.table[k];
        let (sa, sb) = (ua.ln(), ub.ln());
        let mut lo = sa;
        let mut hi = sb;
        let mut s = sa + (sb - sa) * (target - fa) / (fb - fa);
        for _ in 0..60 {
            let residual = fa + self.segment(sa, s) - target;
            if residual > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let u = s.exp();
            let slope = u / self.f.eval(u);
            let mut next = s - residual / slope;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - s).abs() <= 1e-15 * s.abs().max(1.0) {
                s = next;
                break;
            }
            s = next;
        }
        Ok(s.exp())
    }

    /// Backward check `|μ_i − μ_{i−1} − rate ∫ f(μ)|` on consecutive grid
    /// times, with the integral by the midpoint rule on a `refine`-times finer grid.
    pub fn residuals(
        &self,
        times: &[f64],
        mu: &[f64],
        refine: usize,
    ) -> Result<Vec<f64>, OdeError> {
        let mut out = Vec::with_capacity(times.len().saturating_sub(1));
        for i in 1..times.len() {
            let (t0, t1) = (times[i - 1], times[i]);
            let h = (t1 - t0) / refine as f64;
            let mut integral = 0.0;
            for k in 0..refine {
                let mid = t0 + h * (k as f64 + 0.5);
                integral += self.f.eval(self.mu_at(mid)?) * h;
            }
            out.push((mu[i] - mu[i - 1] - self.rate * integral).abs());
        }
        Ok(out)
    }
}

/// Solve `μ' = rate · f(μ)`, `μ(0) = 0` on the non-trivial branch at the given times.
pub fn solve_mu(f: &Nonlinearity, rate: f64, t_grid: &[f64]) -> Result<OdeSolution, OdeError> {
    let increasing = t_grid.windows(2).all(|w| w[0] < w[1]);
    if !increasing || t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(OdeError::BadTimeGrid);
    }
    let profile = OdeProfile::new(f, rate)?;
    if let Some(&t_max) = t_grid.last() {
        if t_max > profile.horizon {
            return Err(OdeError::HorizonExceeded {
                requested: t_max,
                horizon: profile.horizon,
            });
        }
    }
    let mu = t_grid
        .iter()
        .map(|&t| profile.mu_at(t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(OdeSolution {
        profile,
        times: t_grid.to_vec(),
        mu,
    })
}
