//! Uniform grids on an interval or a rectangle, and grid balls.

use serde::Serialize;
use thiserror::Error;

pub type Point = [f64; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("bounds must be finite with lo < hi, got [{lo}, {hi}]")]
    BadBounds { lo: f64, hi: f64 },
    #[error("need at least 3 grid points per axis, got {0}")]
    TooFewPoints(usize),
    #[error("ball of radius {radius} around {center:?} is not strictly inside the domain")]
    BallOutside { center: Point, radius: f64 },
    #[error("ball radius must be positive and finite, got {0}")]
    BadRadius(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Bounds {
    Interval { lo: f64, hi: f64 },
    Rectangle { x: (f64, f64), y: (f64, f64) },
}

/// Which part of the boundary a grid point lies on. Corners report the
/// x-side (`Left`/`Right`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    /// Index into per-side arrays: `[left, right, bottom, top]`.
    pub fn index(self) -> usize {
        self as usize
    }
}

/// A uniform tensor grid with `grid_n` points per axis, boundary points included.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Domain {
    bounds: Bounds,
    grid_n: usize,
}

impl Domain {
    pub fn interval(lo: f64, hi: f64, grid_n: usize) -> Result<Self, DomainError> {
        check_axis(lo, hi)?;
        Self::checked(Bounds::Interval { lo, hi }, grid_n)
    }

    pub fn rectangle(x: (f64, f64), y: (f64, f64), grid_n: usize) -> Result<Self, DomainError> {
        check_axis(x.0, x.1)?;
        check_axis(y.0, y.1)?;
        Self::checked(Bounds::Rectangle { x, y }, grid_n)
    }

    fn checked(bounds: Bounds, grid_n: usize) -> Result<Self, DomainError> {
        if grid_n < 3 {
            return Err(DomainError::TooFewPoints(grid_n));
        }
        Ok(Self { bounds, grid_n })
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn dim(&self) -> usize {
        match self.bounds {
            Bounds::Interval { .. } => 1,
            Bounds::Rectangle { .. } => 2,
        }
    }

    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    pub fn num_points(&self) -> usize {
        self.grid_n.pow(self.dim() as u32)
    }

    fn axes(&self) -> [(f64, f64); 2] {
        match self.bounds {
            Bounds::Interval { lo, hi } => [(lo, hi), (0.0, 0.0)],
            Bounds::Rectangle { x, y } => [x, y],
        }
    }

    /// Grid spacing per axis; the second entry is 0 in one dimension.
    pub fn spacing(&self) -> [f64; 2] {
        let m = (self.grid_n - 1) as f64;
        let [x, y] = self.axes();
        [(x.1 - x.0) / m, (y.1 - y.0) / m]
    }

    /// `h^d`, the quadrature weight attached to each grid point.
    pub fn cell_volume(&self) -> f64 {
        let [hx, hy] = self.spacing();
        match self.dim() {
            1 => hx,
            _ => hx * hy,
        }
    }

    /// `(ix, iy)` for a flat index; `iy = 0` in one dimension.
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.grid_n, index / self.grid_n)
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.grid_n + ix
    }

    pub fn point(&self, index: usize) -> Point {
        let (ix, iy) = self.coords(index);
        let [x, y] = self.axes();
        let [hx, hy] = self.spacing();
        // hit the upper bound exactly on the last node
        let along = |lo: f64, hi: f64, h: f64, i: usize| {
            if i == self.grid_n - 1 {
                hi
            } else {
                lo + h * i as f64
            }
        };
        match self.dim() {
            1 => [along(x.0, x.1, hx, ix), 0.0],
            _ => [along(x.0, x.1, hx, ix), along(y.0, y.1, hy, iy)],
        }
    }

    pub fn points(&self) -> Vec<Point> {
        (0..self.num_points()).map(|i| self.point(i)).collect()
    }

    pub fn boundary_side(&self, index: usize) -> Option<Side> {
        let (ix, iy) = self.coords(index);
        let last = self.grid_n - 1;
        if ix == 0 {
            Some(Side::Left)
        } else if ix == last {
            Some(Side::Right)
        } else if self.dim() == 2 && iy == 0 {
            Some(Side::Bottom)
        } else if self.dim() == 2 && iy == last {
            Some(Side::Top)
        } else {
            None
        }
    }

    pub fn is_boundary(&self, index: usize) -> bool {
        self.boundary_side(index).is_some()
    }

    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.num_points())
            .filter(|&i| !self.is_boundary(i))
            .collect()
    }

    /// Euclidean distance between two points of this domain.
    pub fn distance(&self, a: Point, b: Point) -> f64 {
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }

    fn ball_slack(&self) -> f64 {
        1e-9 * self.spacing()[0]
    }

    /// Whether grid point `index` lies in the closed ball `|x − center| ≤ radius`.
    pub fn in_ball(&self, index: usize, center: Point, radius: f64) -> bool {
        self.distance(self.point(index), center) <= radius + self.ball_slack()
    }

    /// Grid indicator `χ` of the closed ball, 1 on member points and 0 elsewhere.
    pub fn ball_indicator(&self, center: Point, radius: f64) -> Vec<f64> {
        (0..self.num_points())
            .map(|i| {
                if self.in_ball(i, center, radius) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Distance from `center` to the boundary of the domain.
    pub fn distance_to_boundary(&self, center: Point) -> f64 {
        let [x, y] = self.axes();
        let dx = (center[0] - x.0).min(x.1 - center[0]);
        match self.dim() {
            1 => dx,
            _ => dx.min((center[1] - y.0).min(y.1 - center[1])),
        }
    }

    /// Fails unless the ball of `radius` around `center` is non-empty and lies
    /// strictly inside the domain, with every member grid point interior.
    pub fn check_ball_inside(&self, center: Point, radius: f64) -> Result<(), DomainError> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(DomainError::BadRadius(radius));
        }
        let inside = radius < self.distance_to_boundary(center)
            && (0..self.num_points())
                .filter(|&i| self.in_ball(i, center, radius))
                .all(|i| !self.is_boundary(i));
        if inside {
            Ok(())
        } else {
            Err(DomainError::BallOutside { center, radius })
        }
    }
}

fn check_axis(lo: f64, hi: f64) -> Result<(), DomainError> {
    if lo.is_finite() && hi.is_finite() && lo < hi {
        Ok(())
    } else {
        Err(DomainError::BadBounds { lo, hi })
    }
}
