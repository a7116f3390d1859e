//! Closed-form heat-equation oracles, independent of the crate.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Dirichlet heat flow of `ψ ≡ 1` on `(0, π)`.
pub fn dirichlet_flow_of_ones(x: f64, t: f64) -> f64 {
    let mut sum = 0.0;
    let mut n = 1;
    loop {
        let nf = n as f64;
        let decay = (-nf * nf * t).exp();
        if decay < 1e-18 {
            break;
        }
        sum += decay * (nf * x).sin() / nf;
        n += 2;
    }
    4.0 / PI * sum
}

/// Dirichlet heat kernel on `(0, π)`, first `terms` modes.
pub fn dirichlet_kernel(x: f64, y: f64, t: f64, terms: usize) -> f64 {
    (1..=terms)
        .map(|n| {
            let nf = n as f64;
            (-nf * nf * t).exp() * (nf * x).sin() * (nf * y).sin()
        })
        .sum::<f64>()
        * 2.0
        / PI
}

/// Neumann heat kernel on `(0, π)`, first `terms` modes.
pub fn neumann_kernel(x: f64, y: f64, t: f64, terms: usize) -> f64 {
    1.0 / PI
        + (1..=terms)
            .map(|n| {
                let nf = n as f64;
                (-nf * nf * t).exp() * (nf * x).cos() * (nf * y).cos()
            })
            .sum::<f64>()
            * 2.0
            / PI
}

/// Dirichlet heat flow on `(−1, 1)` of the indicator of `[−r, r]`.
pub fn dirichlet_flow_of_ball(x: f64, t: f64, r: f64) -> f64 {
    let mut sum = 0.0;
    for n in 1..=20_000 {
        let k = n as f64 * PI / 2.0;
        let decay = (-k * k * t).exp();
        if decay < 1e-18 {
            break;
        }
        let coef = ((k * (1.0 - r)).cos() - (k * (1.0 + r)).cos()) / k;
        sum += coef * decay * (k * (x + 1.0)).sin();
    }
    sum
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
