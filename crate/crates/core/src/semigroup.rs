//! Finite-difference generator of `L` with `Bu = 0` and the semigroup it generates.
//!
//! All rows use centered second-order differences. Points on a side with
//! `β = 0` are held at zero and are not unknowns. On a side with `β > 0` the
//! boundary point is an unknown and its outside neighbour is a ghost value
//! eliminated through the discrete boundary relation
//!
//! ```text
//! β · a_nn (u_ghost − u_mirror) / (2h) + (1 − β) · u_b = 0,
//! ```
//!
//! the centered conormal difference blended with the identity. The Dirichlet
//! generator is then exactly the restriction of any Robin generator to the
//! interior points, and both are Metzler matrices (non-negative off the
//! diagonal), so `0 ≤ e^{tA_D} ≤ e^{tA_β}` on the interior for every `t`.
//!
//! The exact exponential is evaluated by uniformization: with
//! `λ ≥ max_i |A_ii|`, `e^{tA} = e^{−λt} Σ_k (λt)^k/k! (I + A/λ)^k` is a sum of
//! non-negative matrices, so positivity holds in floating point too.

use log::warn;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::domain::{Domain, Point, Side};
use crate::problem::EllipticProblem;

/// Largest grid size per axis accepted by the dense exponential.
pub const MAX_EXPONENTIAL_GRID_N: usize = 512;
/// Largest number of unknowns for dense operators.
pub const MAX_DENSE_UNKNOWNS: usize = 4096;
/// Relative positivity tolerance `tol_pos`.
pub const POSITIVITY_TOL: f64 = 1e-12;
/// Poisson mean per uniformization piece; keeps `e^{-mean}` a normal float.
const MAX_POISSON_MEAN: f64 = 500.0;
/// Poisson mean per column when building a dense exponential before squaring.
const DENSE_COLUMN_MEAN: f64 = 64.0;
const MAX_CN_HALVINGS: usize = 60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemigroupError {
    #[error("time step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("time must be non-negative and finite, got {0}")]
    BadTime(f64),
    #[error("matrix exponential supports at most {max} points per axis, got {got}")]
    GridTooLarge { got: usize, max: usize },
    #[error("{got} unknowns exceed the dense limit {max}")]
    SystemTooLarge { got: usize, max: usize },
    #[error("generator is not monotone: entry ({row:?}, {col:?}) = {value}; refine the grid")]
    NotMonotone { row: Point, col: Point, value: f64 },
    #[error("Crank-Nicolson could not reach positivity after {0} halvings")]
    CrankNicolsonPositivity(usize),
    #[error("vector has length {got}, expected {expected}")]
    BadLength { got: usize, expected: usize },
    #[error("singular implicit system")]
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Stepper {
    MatrixExponential,
    CrankNicolson { dt: f64 },
    ImplicitEuler { dt: f64 },
}

/// Sparse generator on the unknowns. Grid points held at zero by a
/// Dirichlet condition are not unknowns.
#[derive(Debug, Clone)]
pub struct Generator {
    free_to_grid: Vec<usize>,
    rows: Vec<Vec<(usize, f64)>>,
    num_points: usize,
    lambda: f64,
}

/// Boundary sides a grid point lies on (two at a corner).
fn sides_of(domain: &Domain, g: usize) -> Vec<Side> {
    let (ix, iy) = domain.coords(g);
    let last = domain.grid_n() - 1;
    let mut out = Vec::with_capacity(2);
    if ix == 0 {
        out.push(Side::Left);
    } else if ix == last {
        out.push(Side::Right);
    }
    if domain.dim() == 2 {
        if iy == 0 {
            out.push(Side::Bottom);
        } else if iy == last {
            out.push(Side::Top);
        }
    }
    out
}

impl Generator {
    pub fn assemble(problem: &EllipticProblem) -> Result<Self, SemigroupError> {
        let domain = problem.domain();
        let np = domain.num_points();
        let beta = problem.beta();
        let free_to_grid: Vec<usize> = (0..np)
            .filter(|&g| sides_of(domain, g).iter().all(|s| beta[s.index()] > 0.0))
            .collect();
        let mut grid_to_free = vec![None; np];
        for (k, &g) in free_to_grid.iter().enumerate() {
            grid_to_free[g] = Some(k);
        }

        let mut rows = Vec::with_capacity(free_to_grid.len());
        for &g in &free_to_grid {
            let entries = stencil(problem, g)
                .into_iter()
                .filter_map(|(col, v)| grid_to_free[col].map(|k| (k, v)))
                .collect();
            rows.push(merge(entries));
        }

        // Metzler check; rounding-level negatives are zeroed.
        let mut lambda: f64 = 0.0;
        for (r, row) in rows.iter_mut().enumerate() {
            let scale = row.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
            for (c, v) in row.iter_mut() {
                if *c == r {
                    lambda = lambda.max(-*v);
                } else if *v < 0.0 {
                    if *v < -1e-12 * scale {
                        return Err(SemigroupError::NotMonotone {
                            row: domain.point(free_to_grid[r]),
                            col: domain.point(free_to_grid[*c]),
                            value: *v,
                        });
                    }
                    *v = 0.0;
                }
            }
        }

        Ok(Self {
            free_to_grid,
            rows,
            num_points: np,
            lambda: lambda.max(f64::MIN_POSITIVE),
        })
    }

    pub fn num_free(&self) -> usize {
        self.free_to_grid.len()
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn free_to_grid(&self) -> &[usize] {
        &self.free_to_grid
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    /// Uniformization rate `λ ≥ max |A_ii|`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mul(&self, v: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(c, a)| a * v[c]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.num_free();
        let mut m = DMatrix::zeros(n, n);
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, a) in row {
                m[(r, c)] = a;
            }
        }
        m
    }

    /// Restrict a full-grid vector to the unknowns.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free_to_grid.iter().map(|&g| full[g]).collect()
    }

    /// Full-grid vector, zero on Dirichlet points.
    pub fn extend(&self, free: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.num_points];
        for (k, &g) in self.free_to_grid.iter().enumerate() {
            full[g] = free[k];
        }
        full
    }

    fn poisson_step(&self, mean: f64, v: &[f64]) -> Vec<f64> {
        let kmax = (mean + 10.0 * mean.sqrt() + 40.0).ceil() as usize;
        let inv = 1.0 / self.lambda;
        let mut weight = (-mean).exp();
        let mut term = v.to_vec();
        let mut acc: Vec<f64> = term.iter().map(|x| weight * x).collect();
        let mut next = vec![0.0; term.len()];
        for k in 1..=kmax {
            for (r, row) in self.rows.iter().enumerate() {
                let av: f64 = row.iter().map(|&(c, a)| a * term[c]).sum();
                next[r] = term[r] + inv * av;
            }
            std::mem::swap(&mut term, &mut next);
            weight *= mean / k as f64;
            for (a, x) in acc.iter_mut().zip(&term) {
                *a += weight * x;
            }
        }
        acc
    }

    /// `e^{tA} v` by uniformization.
    pub fn exp_action(&self, t: f64, v: &[f64]) -> Vec<f64> {
        if t == 0.0 {
            return v.to_vec();
        }
        let total = self.lambda * t;
        let pieces = (total / MAX_POISSON_MEAN).ceil().max(1.0) as usize;
        let mean = total / pieces as f64;
        let mut x = v.to_vec();
        for _ in 0..pieces {
            x = self.poisson_step(mean, &x);
        }
        x
    }

    /// Dense `e^{tA}`: columns by uniformization at `t / 2^s`, then `s` squarings.
    pub fn exp_dense(&self, t: f64) -> DMatrix<f64> {
        let n = self.num_free();
        let total = self.lambda * t;
        let squarings = if total > DENSE_COLUMN_MEAN {
            (total / DENSE_COLUMN_MEAN).log2().ceil() as u32
        } else {
            0
        };
        let tau = t / 2f64.powi(squarings as i32);
        let columns: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                self.exp_action(tau, &e)
            })
            .collect();
        let mut m = DMatrix::from_fn(n, n, |i, j| columns[j][i]);
        for _ in 0..squarings {
            m = &m * &m;
        }
        m
    }
}

fn merge(mut entries: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    entries.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
    for (c, v) in entries {
        match out.last_mut() {
            Some(last) if last.0 == c => last.1 += v,
            _ => out.push((c, v)),
        }
    }
    out
}

/// Stencil of `L` at grid point `g`, over grid indices. On a boundary side
/// with weight `β > 0` the outside neighbour is a ghost eliminated through
/// `β ∂u/∂ν + (1 − β) u = 0` with the centered conormal difference:
/// `u_ghost = u_mirror − 2h (1 − β)/(β a_nn) · u_g`.
fn stencil(problem: &EllipticProblem, g: usize) -> Vec<(usize, f64)> {
    let domain = problem.domain();
    let co = problem.coefficients();
    let beta = problem.beta();
    let [hx, hy] = domain.spacing();
    let (ix, iy) = domain.coords(g);
    let last = (domain.grid_n() - 1) as isize;
    let at = |dx: isize, dy: isize| {
        domain.index((ix as isize + dx) as usize, (iy as isize + dy) as usize)
    };
    let mut out = Vec::with_capacity(9);
    let mut diag = co.c[g];

    let mut axis =
        |a: f64, b: f64, h: f64, pos: isize, low: Side, high: Side, step: (isize, isize)| {
            let lo = a / (h * h) - b / (2.0 * h);
            let up = a / (h * h) + b / (2.0 * h);
            diag -= 2.0 * a / (h * h);
            let absorb = |side: Side| {
                let bt = beta[side.index()];
                2.0 * h * (1.0 - bt) / (bt * a)
            };
            if pos == 0 {
                out.push((at(step.0, step.1), lo + up));
                diag -= lo * absorb(low);
            } else if pos == last {
                out.push((at(-step.0, -step.1), lo + up));
                diag -= up * absorb(high);
            } else {
                out.push((at(-step.0, -step.1), lo));
                out.push((at(step.0, step.1), up));
            }
        };
    axis(
        co.a11[g],
        co.b1[g],
        hx,
        ix as isize,
        Side::Left,
        Side::Right,
        (1, 0),
    );
    if domain.dim() == 2 {
        axis(
            co.a22[g],
            co.b2[g],
            hy,
            iy as isize,
            Side::Bottom,
            Side::Top,
            (0, 1),
        );
        let m = co.a12[g];
        if m != 0.0 {
            // positive-type stencil for 2 a12 u_xy
            let s = m.abs() / (hx * hy);
            let (p, q) = if m > 0.0 {
                ((1, 1), (-1, -1))
            } else {
                ((1, -1), (-1, 1))
            };
            out.push((at(p.0, p.1), s));
            out.push((at(q.0, q.1), s));
            for (dx, dy) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                out.push((at(dx, dy), -s));
            }
            diag += 2.0 * s;
        }
    }
    out.push((g, diag));
    out
}

/// Discrete solution operator `S_β(t)` of `u_t = Lu`, `Bu = 0`.
#[derive(Debug, Clone)]
pub struct DiscreteSemigroup {
    problem: EllipticProblem,
    generator: Generator,
    stepper: Stepper,
}

pub fn build_semigroup(
    problem: &EllipticProblem,
    stepper: Stepper,
) -> Result<DiscreteSemigroup, SemigroupError> {
    let domain = problem.domain();
    match stepper {
        Stepper::MatrixExponential => {
            if domain.grid_n() > MAX_EXPONENTIAL_GRID_N {
                return Err(SemigroupError::GridTooLarge {
                    got: domain.grid_n(),
                    max: MAX_EXPONENTIAL_GRID_N,
                });
            }
        }
        Stepper::CrankNicolson { dt } | Stepper::ImplicitEuler { dt } => {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(SemigroupError::BadStep(dt));
            }
        }
    }
    let generator = Generator::assemble(problem)?;
    if generator.num_free() > MAX_DENSE_UNKNOWNS {
        return Err(SemigroupError::SystemTooLarge {
            got: generator.num_free(),
            max: MAX_DENSE_UNKNOWNS,
        });
    }
    let mut sg = DiscreteSemigroup {
        problem: problem.clone(),
        generator,
        stepper,
    };
    if let Stepper::CrankNicolson { mut dt } = stepper {
        let probe = half_domain_indicator(domain);
        let probe = sg.generator.restrict(&probe);
        let mut halvings = 0;
        loop {
            let step = sg.rational_step(dt, 1, &probe, true)?;
            let min = step.iter().copied().fold(f64::INFINITY, f64::min);
            if min >= -POSITIVITY_TOL {
                break;
            }
            if halvings == MAX_CN_HALVINGS {
                return Err(SemigroupError::CrankNicolsonPositivity(halvings));
            }
            warn!("Crank-Nicolson step {dt} loses positivity (min {min:e}); halving");
            dt *= 0.5;
            halvings += 1;
        }
        sg.stepper = Stepper::CrankNicolson { dt };
    }
    Ok(sg)
}

fn half_domain_indicator(domain: &Domain) -> Vec<f64> {
    let mid = match domain.bounds() {
        crate::domain::Bounds::Interval { lo, hi } => 0.5 * (lo + hi),
        crate::domain::Bounds::Rectangle { x, .. } => 0.5 * (x.0 + x.1),
    };
    domain
        .points()
        .iter()
        .map(|p| if p[0] <= mid { 1.0 } else { 0.0 })
        .collect()
}

impl DiscreteSemigroup {
    pub fn problem(&self) -> &EllipticProblem {
        &self.problem
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    /// The stepper actually in use (Crank–Nicolson may have halved its step).
    pub fn stepper(&self) -> Stepper {
        self.stepper
    }

    pub fn domain(&self) -> &Domain {
        self.problem.domain()
    }

    fn check_time(t: f64) -> Result<(), SemigroupError> {
        if t.is_finite() && t >= 0.0 {
            Ok(())
        } else {
            Err(SemigroupError::BadTime(t))
        }
    }

    fn substeps(t: f64, dt: f64) -> (usize, f64) {
        let n = ((t / dt) - 1e-9).ceil().max(1.0) as usize;
        (n, t / n as f64)
    }

    /// `n` steps of implicit Euler (`crank = false`) or Crank–Nicolson of size `dt`.
    fn rational_step(
        &self,
        dt: f64,
        n: usize,
        v: &[f64],
        crank: bool,
    ) -> Result<Vec<f64>, SemigroupError> {
        let a = self.generator.to_dense();
        let theta = if crank { 0.5 } else { 1.0 };
        let lhs = DMatrix::identity(a.nrows(), a.ncols()) - &a * (theta * dt);
        let lu = lhs.lu();
        let mut x = DVector::from_column_slice(v);
        for _ in 0..n {
            let rhs = if crank {
                let ax = DVector::from_vec(self.generator.mul(x.as_slice()));
                &x + ax * (0.5 * dt)
            } else {
                x.clone()
            };
            x = lu.solve(&rhs).ok_or(SemigroupError::Singular)?;
        }
        Ok(x.as_slice().to_vec())
    }

    /// `S(t)` on the unknowns.
    pub fn apply_free(&self, t: f64, v: &[f64]) -> Result<Vec<f64>, SemigroupError> {
        Self::check_time(t)?;
        if v.len() != self.generator.num_free() {
            return Err(SemigroupError::BadLength {
                got: v.len(),
                expected: self.generator.num_free(),
            });
        }
        if t == 0.0 {
            return Ok(v.to_vec());
        }
        match self.stepper {
            Stepper::MatrixExponential => Ok(self.generator.exp_action(t, v)),
            Stepper::ImplicitEuler { dt } => {
                let (n, h) = Self::substeps(t, dt);
                self.rational_step(h, n, v, false)
            }
            Stepper::CrankNicolson { dt } => {
                let (n, h) = Self::substeps(t, dt);
                self.rational_step(h, n, v, true)
            }
        }
    }

    /// `S(t)ψ` for a full-grid `ψ`; entries at Dirichlet points are ignored
    /// and come back as zero.
    pub fn apply(&self, t: f64, psi: &[f64]) -> Result<Vec<f64>, SemigroupError> {
        if psi.len() != self.generator.num_points() {
            return Err(SemigroupError::BadLength {
                got: psi.len(),
                expected: self.generator.num_points(),
            });
        }
        let free = self.apply_free(t, &self.generator.restrict(psi))?;
        Ok(self.generator.extend(&free))
    }

    /// Dense `S(t)` on the unknowns.
    pub fn operator(&self, t: f64) -> Result<DMatrix<f64>, SemigroupError> {
        Self::check_time(t)?;
        let n = self.generator.num_free();
        if t == 0.0 {
            return Ok(DMatrix::identity(n, n));
        }
        let rational = |dt: f64, crank: bool| -> Result<DMatrix<f64>, SemigroupError> {
            let (steps, h) = Self::substeps(t, dt);
            let a = self.generator.to_dense();
            let theta = if crank { 0.5 } else { 1.0 };
            let lhs = DMatrix::identity(n, n) - &a * (theta * h);
            let rhs = if crank {
                DMatrix::identity(n, n) + &a * (0.5 * h)
            } else {
                DMatrix::identity(n, n)
            };
            let one = lhs.lu().solve(&rhs).ok_or(SemigroupError::Singular)?;
            Ok(matrix_power(one, steps))
        };
        match self.stepper {
            Stepper::MatrixExponential => Ok(self.generator.exp_dense(t)),
            Stepper::ImplicitEuler { dt } => rational(dt, false),
            Stepper::CrankNicolson { dt } => rational(dt, true),
        }
    }

    /// Kernel `K(x_i, y_j; t)` with `[S(t)ψ](x_i) = Σ_j K_ij ψ_j h^d`.
    pub fn kernel_matrix(&self, t: f64) -> Result<KernelMatrix, SemigroupError> {
        if !(t.is_finite() && t > 0.0) {
            return Err(SemigroupError::BadTime(t));
        }
        let op = self.operator(t)?;
        let vol = self.domain().cell_volume();
        let np = self.generator.num_points();
        let mut values = DMatrix::zeros(np, np);
        let f2g = &self.generator.free_to_grid;
        for (r, &gi) in f2g.iter().enumerate() {
            for (c, &gj) in f2g.iter().enumerate() {
                values[(gi, gj)] = op[(r, c)] / vol;
            }
        }
        let mut unknown = vec![false; np];
        for &g in f2g {
            unknown[g] = true;
        }
        Ok(KernelMatrix {
            t,
            cell_volume: vol,
            points: self.domain().points(),
            unknown,
            values,
        })
    }
}

fn matrix_power(mut base: DMatrix<f64>, mut exp: usize) -> DMatrix<f64> {
    let n = base.nrows();
    let mut acc = DMatrix::identity(n, n);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = &acc * &base;
        }
        exp >>= 1;
        if exp > 0 {
            base = &base * &base;
        }
    }
    acc
}

/// Grid kernel of the semigroup at one time, indexed by full-grid points.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub t: f64,
    pub cell_volume: f64,
    pub points: Vec<Point>,
    /// Rows that are unknowns; the others are Dirichlet points and vanish.
    pub unknown: Vec<bool>,
    pub values: DMatrix<f64>,
}

impl KernelMatrix {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// `Σ_j K_ij ψ_j h^d`.
    pub fn apply(&self, psi: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(psi);
        (&self.values * v * self.cell_volume).as_slice().to_vec()
    }

    pub fn max(&self) -> f64 {
        self.values.max()
    }

    /// Smallest entry in a row of an unknown and its `(row, column)`.
    pub fn min_entry(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::INFINITY);
        for j in 0..self.values.ncols() {
            for i in (0..self.values.nrows()).filter(|&i| self.unknown[i]) {
                let v = self.values[(i, j)];
                if v < best.2 {
                    best = (i, j, v);
                }
            }
        }
        best
    }

    /// `max |K − Kᵀ|`.
    pub fn symmetry_defect(&self) -> f64 {
        (&self.values - self.values.transpose()).amax()
    }

    /// `h^d Σ_j K_ij` per row.
    pub fn row_masses(&self) -> Vec<f64> {
        self.values
            .row_iter()
            .map(|r| r.sum() * self.cell_volume)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Field, ProblemSpec};
    use std::f64::consts::PI;

    fn laplacian(lo: f64, hi: f64, n: usize, beta: f64) -> EllipticProblem {
        ProblemSpec::laplacian(Domain::interval(lo, hi, n).unwrap())
            .with_beta(beta)
            .build()
            .unwrap()
    }

    #[test]
    fn dirichlet_rows_have_no_boundary_coupling() {
        let p = laplacian(0.0, 1.0, 11, 0.0);
        let g = Generator::assemble(&p).unwrap();
        assert_eq!(g.num_free(), 9);
        let h2 = 0.01;
        assert_eq!(g.rows()[0].len(), 2);
        assert!((g.rows()[0][0].1 + 2.0 / h2).abs() < 1e-9);
        let full = g.extend(&[1.0; 9]);
        assert_eq!(full[0], 0.0);
        assert_eq!(full[10], 0.0);
    }

    #[test]
    fn neumann_annihilates_constants() {
        let p = laplacian(0.0, 1.0, 21, 1.0);
        let g = Generator::assemble(&p).unwrap();
        let a1 = g.mul(&vec![1.0; g.num_free()]);
        assert!(a1.iter().all(|v| v.abs() < 1e-9));
        let full = g.extend(&vec![1.0; g.num_free()]);
        assert!(full.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn robin_rows_are_exact_on_admissible_linears() {
        // u = 1 + x has -u'(0) + u(0) = 0, i.e. the β = 1/2 condition on the left
        let p = laplacian(0.0, 1.0, 21, 0.5);
        let g = Generator::assemble(&p).unwrap();
        assert_eq!(g.num_free(), 21);
        let u: Vec<f64> = p.domain().points().iter().map(|x| 1.0 + x[0]).collect();
        let au = g.mul(&u);
        assert!(au[..20].iter().all(|v| v.abs() < 1e-9), "{au:?}");
        // the right side is not admissible for this u and must absorb
        assert!(au[20] < 0.0);
    }

    #[test]
    fn dirichlet_is_the_interior_restriction_of_robin() {
        let robin = Generator::assemble(&laplacian(0.0, 1.0, 11, 0.3))
            .unwrap()
            .to_dense();
        let dir = Generator::assemble(&laplacian(0.0, 1.0, 11, 0.0))
            .unwrap()
            .to_dense();
        assert_eq!(robin.view((1, 1), (9, 9)), dir);
    }

    #[test]
    fn generator_consistency_on_constants_with_reaction() {
        let mut spec = ProblemSpec::laplacian(Domain::interval(-1.0, 1.0, 41).unwrap());
        spec.a11 = Field::Polynomial(vec![1.0, 0.0, 0.5]);
        spec.b1 = Field::Polynomial(vec![0.0, 0.5]);
        spec.c = Field::Constant(-1.0);
        let p = spec.build().unwrap();
        let g = Generator::assemble(&p).unwrap();
        let a1 = g.mul(&vec![1.0; g.num_free()]);
        // rows away from the boundary see L1 = c exactly
        for v in &a1[2..a1.len() - 2] {
            assert!((v + 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn strong_drift_is_rejected() {
        let mut spec = ProblemSpec::laplacian(Domain::interval(0.0, 1.0, 11).unwrap());
        spec.b1 = Field::Constant(100.0);
        let p = spec.build().unwrap();
        assert!(matches!(
            Generator::assemble(&p),
            Err(SemigroupError::NotMonotone { .. })
        ));
    }

    #[test]
    fn rejects_bad_steppers() {
        let p = laplacian(0.0, 1.0, 11, 0.0);
        assert_eq!(
            build_semigroup(&p, Stepper::ImplicitEuler { dt: 0.0 }).unwrap_err(),
            SemigroupError::BadStep(0.0)
        );
        let big = laplacian(0.0, 1.0, 600, 0.0);
        assert!(matches!(
            build_semigroup(&big, Stepper::MatrixExponential),
            Err(SemigroupError::GridTooLarge { .. })
        ));
    }

    #[test]
    fn crank_nicolson_halves_until_positive() {
        let p = laplacian(0.0, 1.0, 41, 0.0);
        let sg = build_semigroup(&p, Stepper::CrankNicolson { dt: 0.1 }).unwrap();
        match sg.stepper() {
            Stepper::CrankNicolson { dt } => assert!(dt < 0.1),
            _ => unreachable!(),
        }
    }

    #[test]
    fn eigenfunction_decay_all_steppers() {
        let p = laplacian(0.0, PI, 101, 0.0);
        let psi: Vec<f64> = p.domain().points().iter().map(|x| x[0].sin()).collect();
        let exact: Vec<f64> = psi.iter().map(|v| v * (-0.5f64).exp()).collect();
        for (stepper, tol) in [
            (Stepper::MatrixExponential, 1e-4),
            (Stepper::CrankNicolson { dt: 1e-3 }, 1e-4),
            (Stepper::ImplicitEuler { dt: 1e-4 }, 1e-4),
        ] {
            let sg = build_semigroup(&p, stepper).unwrap();
            let out = sg.apply(0.5, &psi).unwrap();
            let err = out
                .iter()
                .zip(&exact)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err < tol, "{stepper:?}: {err}");
        }
    }

    #[test]
    fn dense_and_action_agree() {
        let p = laplacian(0.0, PI, 61, 0.5);
        let sg = build_semigroup(&p, Stepper::MatrixExponential).unwrap();
        let v: Vec<f64> = (0..sg.generator().num_free())
            .map(|i| (i % 7) as f64)
            .collect();
        for t in [1e-4, 0.05, 0.7] {
            let a = sg.apply_free(t, &v).unwrap();
            let m = sg.operator(t).unwrap() * DVector::from_vec(v.clone());
            let err = a
                .iter()
                .zip(m.iter())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-10, "t = {t}: {err}");
        }
    }

    #[test]
    fn rectangle_dirichlet_eigenfunction() {
        let d = Domain::rectangle((0.0, PI), (0.0, PI), 41).unwrap();
        let p = ProblemSpec::laplacian(d).build().unwrap();
        let sg = build_semigroup(&p, Stepper::MatrixExponential).unwrap();
        let psi: Vec<f64> = p
            .domain()
            .points()
            .iter()
            .map(|x| x[0].sin() * x[1].sin())
            .collect();
        let out = sg.apply(0.25, &psi).unwrap();
        let err = out
            .iter()
            .zip(&psi)
            .map(|(a, b)| (a - b * (-0.5f64).exp()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn rectangle_neumann_preserves_constants() {
        let d = Domain::rectangle((0.0, 1.0), (0.0, 2.0), 21).unwrap();
        let mut spec = ProblemSpec::laplacian(d).with_beta(1.0);
        spec.a11 = Field::Constant(2.0);
        spec.a12 = Field::custom(|p| {
            if (p[0] - 0.5).abs() < 0.3 && (p[1] - 1.0).abs() < 0.5 {
                0.3
            } else {
                0.0
            }
        });
        let p = spec.build().unwrap();
        let sg = build_semigroup(&p, Stepper::MatrixExponential).unwrap();
        let out = sg.apply(0.1, &vec![1.0; p.domain().num_points()]).unwrap();
        assert!(out.iter().all(|v| (v - 1.0).abs() < 1e-10));
    }
}
