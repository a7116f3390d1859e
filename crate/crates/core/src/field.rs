//! Grid functions on space × a uniform time grid.

use serde::Serialize;

use crate::domain::Point;

/// `u(x_i, t_m)` stored as one full-grid slice per time level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceTimeField {
    points: Vec<Point>,
    times: Vec<f64>,
    slices: Vec<Vec<f64>>,
    sup_norm: f64,
}

impl SpaceTimeField {
    /// Panics if a slice length does not match `points` or the slice count
    /// does not match `times`.
    pub fn new(points: Vec<Point>, times: Vec<f64>, slices: Vec<Vec<f64>>) -> Self {
        assert_eq!(times.len(), slices.len(), "one slice per time level");
        assert!(
            slices.iter().all(|s| s.len() == points.len()),
            "slice length"
        );
        let sup_norm = slices.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
        Self {
            points,
            times,
            slices,
            sup_norm,
        }
    }

    pub fn zeros(points: Vec<Point>, times: Vec<f64>) -> Self {
        let slices = vec![vec![0.0; points.len()]; times.len()];
        Self::new(points, times, slices)
    }

    pub fn from_fn(points: Vec<Point>, times: Vec<f64>, g: impl Fn(usize, usize) -> f64) -> Self {
        let slices = (0..times.len())
            .map(|m| (0..points.len()).map(|i| g(m, i)).collect())
            .collect();
        Self::new(points, times, slices)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn slices(&self) -> &[Vec<f64>] {
        &self.slices
    }

    pub fn slice(&self, m: usize) -> &[f64] {
        &self.slices[m]
    }

    pub fn get(&self, m: usize, i: usize) -> f64 {
        self.slices[m][i]
    }

    /// `‖u‖∞` over the whole space-time grid.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn sup_at(&self, m: usize) -> f64 {
        self.slices[m].iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.slices
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// `min (self − other)` over the grid.
    pub fn min_diff(&self, other: &Self) -> f64 {
        self.zip_fold(other, f64::INFINITY, |acc, a, b| acc.min(a - b))
    }

    /// `‖self − other‖∞`.
    pub fn dist(&self, other: &Self) -> f64 {
        self.zip_fold(other, 0.0, |acc, a, b| acc.max((a - b).abs()))
    }

    fn zip_fold(&self, other: &Self, init: f64, g: impl Fn(f64, f64, f64) -> f64) -> f64 {
        assert_eq!(self.times.len(), other.times.len());
        self.slices
            .iter()
            .flatten()
            .zip(other.slices.iter().flatten())
            .fold(init, |acc, (&a, &b)| g(acc, a, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_and_differences() {
        let pts = vec![[0.0, 0.0], [1.0, 0.0]];
        let t = vec![0.0, 0.5];
        let a = SpaceTimeField::from_fn(pts.clone(), t.clone(), |m, i| (m + i) as f64);
        let b = SpaceTimeField::zeros(pts, t);
        assert_eq!(a.sup_norm(), 2.0);
        assert_eq!(a.sup_at(0), 1.0);
        assert_eq!(a.min_diff(&b), 0.0);
        assert_eq!(b.min_diff(&a), -2.0);
        assert_eq!(a.dist(&b), 2.0);
    }
}
