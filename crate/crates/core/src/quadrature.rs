//! Fixed-order Gauss–Legendre rules and a log-scale integrator for `1/f`.

use std::f64::consts::PI;

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate `g` over `[a, b]` with a single panel.
    pub fn integrate<G: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut g: G) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * g(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Integrate `g` over `[a, b]` split into `panels` equal panels.
    pub fn integrate_panels<G: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut g: G,
    ) -> f64 {
        let width = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + width * k as f64;
                self.integrate(lo, lo + width, &mut g)
            })
            .sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrate `∫_{e^lo}^{e^hi} du / f(u)` through the substitution `u = e^s`,
/// so the integrand becomes `e^s / f(e^s)` on `[lo, hi]`.
///
/// On failure returns the first offending `(u, f(u))` pair: `f(u)` was zero
/// (underflow) or non-finite.
pub(crate) fn log_scale_inverse_integral<F: Fn(f64) -> f64>(
    rule: &GaussLegendre,
    f: F,
    lo: f64,
    hi: f64,
    panels: usize,
) -> Result<f64, (f64, f64)> {
    let mut bad: Option<(f64, f64)> = None;
    let value = rule.integrate_panels(lo, hi, panels, |s| {
        let u = s.exp();
        let fu = f(u);
        if !(fu.is_finite() && fu > 0.0) {
            bad.get_or_insert((u, fu));
            return 0.0;
        }
        u / fu
    });
    match bad {
        Some(pair) => Err(pair),
        None => Ok(value),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 8, 16, 33] {
            let rule = GaussLegendre::new(n);
            let total: f64 = rule.weights.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "n = {n}: {total}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let rule = GaussLegendre::new(8);
        // ∫_0^1 x^15 dx = 1/16
        let v = rule.integrate(0.0, 1.0, |x| x.powi(15));
        assert!((v - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn log_scale_integral_of_inverse_sqrt() {
        let rule = GaussLegendre::new(8);
        // ∫_{1/4}^{1} u^{-1/2} du = 2 - 1 = 1
        let v = log_scale_inverse_integral(&rule, f64::sqrt, 0.25f64.ln(), 0.0, 4).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn log_scale_integral_rejects_zero_f() {
        let rule = GaussLegendre::new(4);
        assert!(log_scale_inverse_integral(&rule, |_| 0.0, -1.0, 0.0, 1).is_err());
    }
}
