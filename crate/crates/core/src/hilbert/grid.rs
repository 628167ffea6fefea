use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::TWO_PI;
use crate::error::{invalid, Result};

/// Uniform grid of `n` points on `[x_min, x_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max {
            return invalid(format!("grid bounds [{x_min}, {x_max}] are not increasing"));
        }
        if n < 2 {
            return invalid("grid needs at least two points");
        }
        Ok(Grid { x_min, x_max, n })
    }

    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n)
    }

    /// [-20.48, 20.48] with 8193 points: dx = 0.005, so ±1/2 fall on nodes.
    pub fn default_line() -> Self {
        Grid { x_min: -20.48, x_max: 20.48, n: 8193 }
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    fn center_index(&self) -> f64 {
        (self.n - 1) as f64 / 2.0
    }

    pub fn point(&self, i: usize) -> f64 {
        let mid = 0.5 * (self.x_min + self.x_max);
        mid + (i as f64 - self.center_index()) * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Length of the period seen by the DFT: n·dx.
    pub fn period(&self) -> f64 {
        self.n as f64 * self.dx()
    }

    pub fn is_centered(&self) -> bool {
        (self.x_min + self.x_max).abs() <= 1e-12 * self.x_max.abs().max(1.0)
    }

    /// Frequency grid of the DFT: centered, spacing 2π/(n·dx).
    pub fn conjugate(&self) -> Grid {
        let dp = TWO_PI / self.period();
        let half = self.center_index() * dp;
        Grid { x_min: -half, x_max: half, n: self.n }
    }

    /// Index of the nearest node, clamped to the grid.
    pub fn nearest_index(&self, x: f64) -> usize {
        let t = (x - self.point(0)) / self.dx();
        t.round().clamp(0.0, (self.n - 1) as f64) as usize
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_max
    }

    /// Same grid with `factor` times fewer intervals.
    pub fn coarsened(&self, factor: usize) -> Grid {
        let n = (self.n - 1) / factor.max(1) + 1;
        Grid { n, ..*self }
    }
}

/// Complex samples on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(crate::Error::LengthMismatch(values.len(), grid.n));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.points().into_iter().map(f).collect();
        GridFunction { grid, values }
    }

    pub fn from_real(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn norm(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v.norm_sqr()).collect();
        super::trapezoid(&sq, self.grid.dx()).sqrt()
    }

    /// ⟨self, other⟩, antilinear in the first slot.
    pub fn inner(&self, other: &GridFunction) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(crate::Error::GridMismatch);
        }
        let prod: Vec<Complex64> =
            self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).collect();
        Ok(super::quadrature::trapezoid_complex(&prod, self.grid.dx()))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn edge_magnitude(&self) -> f64 {
        self.values[0].norm().max(self.values[self.grid.n - 1].norm())
    }

    /// Sup-norm distance on a shared grid.
    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64> {
        if self.grid != other.grid {
            return Err(crate::Error::GridMismatch);
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// Linear interpolation, zero outside the grid.
    pub fn interpolate(&self, x: f64) -> Complex64 {
        if !self.grid.contains(x) {
            return Complex64::new(0.0, 0.0);
        }
        let t = (x - self.grid.point(0)) / self.grid.dx();
        let i = (t.floor() as usize).min(self.grid.n - 2);
        let f = t - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }
}
