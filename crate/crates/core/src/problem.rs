//! Data of the linear part: `L u = Σ a_ij u_ij + Σ b_j u_j + c u` with the
//! boundary operator `β ∂u/∂ν + (1 − β) u` and the forcing weight `q`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::domain::{Domain, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("expected {expected} boundary weights, got {got}")]
    BetaCount { expected: usize, got: usize },
    #[error("boundary weight {0} outside [0, 1]")]
    BetaRange(f64),
    #[error("uniform ellipticity fails at {point:?} for k = {k}")]
    Ellipticity { point: Point, k: f64 },
    #[error("coefficient {name} is not finite at {point:?}")]
    NonFinite { name: &'static str, point: Point },
    #[error("forcing weight q is negative at {point:?}")]
    NegativeForcing { point: Point },
    #[error("forcing weight q vanishes on the grid")]
    ZeroForcing,
    #[error("mixed coefficient a12 must vanish next to the boundary, nonzero at {point:?}")]
    MixedTermAtBoundary { point: Point },
}

/// A scalar coefficient field on the domain.
#[derive(Clone)]
pub enum Field {
    Constant(f64),
    /// `Σ_k coeffs[k] x^k` in the first coordinate.
    Polynomial(Vec<f64>),
    /// `amplitude · sin(π x)`.
    SinPi {
        amplitude: f64,
    },
    /// `max(0, peak − slope |p − center|)`.
    Tent {
        center: Point,
        peak: f64,
        slope: f64,
    },
    Custom(Arc<dyn Fn(Point) -> f64 + Send + Sync>),
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Constant(v) => write!(f, "Constant({v})"),
            Field::Polynomial(c) => write!(f, "Polynomial({c:?})"),
            Field::SinPi { amplitude } => write!(f, "SinPi({amplitude})"),
            Field::Tent {
                center,
                peak,
                slope,
            } => {
                write!(
                    f,
                    "Tent {{ center: {center:?}, peak: {peak}, slope: {slope} }}"
                )
            }
            Field::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Field {
    pub fn eval(&self, p: Point) -> f64 {
        match self {
            Field::Constant(v) => *v,
            Field::Polynomial(coeffs) => coeffs.iter().rev().fold(0.0, |acc, c| acc * p[0] + c),
            Field::SinPi { amplitude } => amplitude * (std::f64::consts::PI * p[0]).sin(),
            Field::Tent {
                center,
                peak,
                slope,
            } => {
                let r = ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt();
                (peak - slope * r).max(0.0)
            }
            Field::Custom(g) => g(p),
        }
    }

    pub fn custom<G: Fn(Point) -> f64 + Send + Sync + 'static>(g: G) -> Self {
        Field::Custom(Arc::new(g))
    }
}

/// Everything needed to build an [`EllipticProblem`].
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub domain: Domain,
    pub a11: Field,
    pub a12: Field,
    pub a22: Field,
    pub b1: Field,
    pub b2: Field,
    pub c: Field,
    /// One weight per side: `[left, right]` or `[left, right, bottom, top]`.
    pub beta: Vec<f64>,
    pub q: Field,
    /// Ellipticity constant; the best constant on the grid is used when `None`.
    pub ellipticity_k: Option<f64>,
}

impl ProblemSpec {
    /// `L = Δ`, Dirichlet boundary, `q ≡ 1`.
    pub fn laplacian(domain: Domain) -> Self {
        let sides = 2 * domain.dim();
        Self {
            domain,
            a11: Field::Constant(1.0),
            a12: Field::Constant(0.0),
            a22: Field::Constant(1.0),
            b1: Field::Constant(0.0),
            b2: Field::Constant(0.0),
            c: Field::Constant(0.0),
            beta: vec![0.0; sides],
            q: Field::Constant(1.0),
            ellipticity_k: None,
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = vec![beta; 2 * self.domain.dim()];
        self
    }

    pub fn with_q(mut self, q: Field) -> Self {
        self.q = q;
        self
    }

    pub fn with_c(mut self, c: Field) -> Self {
        self.c = c;
        self
    }

    pub fn build(self) -> Result<EllipticProblem, ProblemError> {
        EllipticProblem::new(self)
    }
}

/// Coefficients sampled on every grid point.
#[derive(Debug, Clone)]
pub struct GridCoefficients {
    pub a11: Vec<f64>,
    pub a12: Vec<f64>,
    pub a22: Vec<f64>,
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub c: Vec<f64>,
    pub q: Vec<f64>,
}

/// A validated problem with its coefficients sampled on the grid.
#[derive(Debug, Clone)]
pub struct EllipticProblem {
    spec: ProblemSpec,
    coeffs: GridCoefficients,
    ellipticity_k: f64,
}

impl EllipticProblem {
    pub fn new(spec: ProblemSpec) -> Result<Self, ProblemError> {
        let domain = &spec.domain;
        let sides = 2 * domain.dim();
        if spec.beta.len() != sides {
            return Err(ProblemError::BetaCount {
                expected: sides,
                got: spec.beta.len(),
            });
        }
        if let Some(&b) = spec.beta.iter().find(|b| !(0.0..=1.0).contains(*b)) {
            return Err(ProblemError::BetaRange(b));
        }

        let points = domain.points();
        let sample = |name: &'static str, field: &Field| -> Result<Vec<f64>, ProblemError> {
            points
                .iter()
                .map(|&p| {
                    let v = field.eval(p);
                    if v.is_finite() {
                        Ok(v)
                    } else {
                        Err(ProblemError::NonFinite { name, point: p })
                    }
                })
                .collect()
        };
        let two_d = domain.dim() == 2;
        let zeros = vec![0.0; points.len()];
        let coeffs = GridCoefficients {
            a11: sample("a11", &spec.a11)?,
            a12: if two_d {
                sample("a12", &spec.a12)?
            } else {
                zeros.clone()
            },
            a22: if two_d {
                sample("a22", &spec.a22)?
            } else {
                zeros.clone()
            },
            b1: sample("b1", &spec.b1)?,
            b2: if two_d {
                sample("b2", &spec.b2)?
            } else {
                zeros
            },
            c: sample("c", &spec.c)?,
            q: sample("q", &spec.q)?,
        };

        if let Some(i) = coeffs.q.iter().position(|&q| q < 0.0) {
            return Err(ProblemError::NegativeForcing { point: points[i] });
        }
        if !coeffs.q.iter().any(|&q| q > 0.0) {
            return Err(ProblemError::ZeroForcing);
        }
        if two_d {
            let n = domain.grid_n();
            for (i, &p) in points.iter().enumerate() {
                let (ix, iy) = domain.coords(i);
                let near_edge = ix <= 1 || iy <= 1 || ix >= n - 2 || iy >= n - 2;
                if near_edge && coeffs.a12[i] != 0.0 {
                    return Err(ProblemError::MixedTermAtBoundary { point: p });
                }
            }
        }

        let best_k = best_ellipticity(&coeffs, two_d);
        let k = spec.ellipticity_k.unwrap_or(best_k);
        if k.is_nan() || k <= 0.0 {
            return Err(ProblemError::Ellipticity {
                point: points[0],
                k,
            });
        }
        for (i, &p) in points.iter().enumerate() {
            for form in test_forms(&coeffs, i, two_d) {
                // test vectors have |y|² = 1
                if form < k * (1.0 - 1e-12) || form > (1.0 / k) * (1.0 + 1e-12) {
                    return Err(ProblemError::Ellipticity { point: p, k });
                }
            }
        }

        Ok(Self {
            spec,
            coeffs,
            ellipticity_k: k,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn domain(&self) -> &Domain {
        &self.spec.domain
    }

    pub fn coefficients(&self) -> &GridCoefficients {
        &self.coeffs
    }

    pub fn beta(&self) -> &[f64] {
        &self.spec.beta
    }

    pub fn ellipticity_k(&self) -> f64 {
        self.ellipticity_k
    }

    pub fn q(&self) -> &[f64] {
        &self.coeffs.q
    }

    pub fn q_sup(&self) -> f64 {
        self.coeffs.q.iter().copied().fold(0.0, f64::max)
    }

    pub fn c_sup(&self) -> f64 {
        self.coeffs.c.iter().map(|c| c.abs()).fold(0.0, f64::max)
    }

    pub fn c_nonpositive(&self) -> bool {
        self.coeffs.c.iter().all(|&c| c <= 0.0)
    }

    /// Same operator and forcing with Dirichlet conditions on every side.
    pub fn dirichlet(&self) -> Self {
        self.with_beta_values(vec![0.0; self.spec.beta.len()])
    }

    /// Same operator and forcing with other boundary weights.
    pub fn with_beta_values(&self, beta: Vec<f64>) -> Self {
        assert_eq!(beta.len(), self.spec.beta.len());
        assert!(beta.iter().all(|b| (0.0..=1.0).contains(b)));
        let mut out = self.clone();
        out.spec.beta = beta;
        out
    }

    /// The problem with `c` replaced by `c − sigma`.
    pub fn with_reaction_shift(&self, sigma: f64) -> Self {
        let mut out = self.clone();
        let base = self.spec.c.clone();
        out.spec.c = Field::custom(move |p| base.eval(p) - sigma);
        for c in &mut out.coeffs.c {
            *c -= sigma;
        }
        out
    }
}

fn test_forms(c: &GridCoefficients, i: usize, two_d: bool) -> Vec<f64> {
    if !two_d {
        return vec![c.a11[i]];
    }
    let (a, b, d) = (c.a11[i], c.a12[i], c.a22[i]);
    // axis vectors and the two unit diagonals
    vec![a, d, 0.5 * (a + 2.0 * b + d), 0.5 * (a - 2.0 * b + d)]
}

fn best_ellipticity(c: &GridCoefficients, two_d: bool) -> f64 {
    let mut k = f64::INFINITY;
    for i in 0..c.a11.len() {
        for form in test_forms(c, i, two_d) {
            k = k.min(form).min(1.0 / form);
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Domain {
        Domain::interval(-1.0, 1.0, 41).unwrap()
    }

    #[test]
    fn laplacian_defaults() {
        let p = ProblemSpec::laplacian(line()).build().unwrap();
        assert_eq!(p.beta(), &[0.0, 0.0]);
        assert_eq!(p.ellipticity_k(), 1.0);
        assert_eq!(p.q_sup(), 1.0);
        assert!(p.c_nonpositive());
    }

    #[test]
    fn variable_coefficients_get_grid_ellipticity() {
        let mut spec = ProblemSpec::laplacian(line());
        spec.a11 = Field::Polynomial(vec![1.0, 0.0, 0.5]);
        let p = spec.build().unwrap();
        // a ∈ [1, 1.5] ⇒ k = 1/1.5
        assert!((p.ellipticity_k() - 1.0 / 1.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_data() {
        let bad_beta = ProblemSpec::laplacian(line()).with_beta(1.5).build();
        assert_eq!(bad_beta.unwrap_err(), ProblemError::BetaRange(1.5));
        let zero_q = ProblemSpec::laplacian(line())
            .with_q(Field::Constant(0.0))
            .build();
        assert_eq!(zero_q.unwrap_err(), ProblemError::ZeroForcing);
        let neg_q = ProblemSpec::laplacian(line())
            .with_q(Field::Polynomial(vec![0.0, 1.0]))
            .build();
        assert!(matches!(neg_q, Err(ProblemError::NegativeForcing { .. })));
        let mut spec = ProblemSpec::laplacian(line());
        spec.ellipticity_k = Some(2.0);
        assert!(matches!(
            spec.build(),
            Err(ProblemError::Ellipticity { .. })
        ));
        let mut spec = ProblemSpec::laplacian(line());
        spec.beta = vec![0.0; 4];
        assert!(matches!(spec.build(), Err(ProblemError::BetaCount { .. })));
    }

    #[test]
    fn tent_forcing() {
        let q = Field::Tent {
            center: [0.0, 0.0],
            peak: 1.0,
            slope: 4.0,
        };
        assert_eq!(q.eval([0.0, 0.0]), 1.0);
        assert_eq!(q.eval([0.125, 0.0]), 0.5);
        assert_eq!(q.eval([0.5, 0.0]), 0.0);
    }

    #[test]
    fn mixed_term_must_vanish_near_boundary() {
        let d = Domain::rectangle((0.0, 1.0), (0.0, 1.0), 9).unwrap();
        let mut spec = ProblemSpec::laplacian(d);
        spec.a12 = Field::Constant(0.1);
        assert!(matches!(
            spec.build(),
            Err(ProblemError::MixedTermAtBoundary { .. })
        ));
    }

    #[test]
    fn reaction_shift() {
        let p = ProblemSpec::laplacian(line())
            .with_c(Field::SinPi { amplitude: 1.0 })
            .build()
            .unwrap();
        let s = p.c_sup();
        let shifted = p.with_reaction_shift(s);
        assert!(shifted.c_nonpositive());
        assert!((shifted.coefficients().c[10] - (p.coefficients().c[10] - s)).abs() < 1e-15);
    }
}
