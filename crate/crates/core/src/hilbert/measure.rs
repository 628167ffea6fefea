use serde::{Deserialize, Serialize};

use super::{Grid, GridFunction};
use crate::error::{Error, Result};

/// How grid samples relate to the density on the line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Line density restricted to the grid; mass beyond it is `outside_mass`.
    Truncated,
    /// Density wrapped onto the DFT period n·dx (sum over all images), so the
    /// DFT of the samples equals the characteristic function on the
    /// conjugate grid.
    Periodic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measure1D {
    pub grid: Grid,
    pub density: Vec<f64>,
    pub boundary: Boundary,
    pub outside_mass: f64,
}

impl Measure1D {
    pub fn new(grid: Grid, density: Vec<f64>, boundary: Boundary) -> Result<Self> {
        if density.len() != grid.n {
            return Err(Error::LengthMismatch(density.len(), grid.n));
        }
        let mut m = Measure1D { grid, density, boundary, outside_mass: 0.0 };
        if boundary == Boundary::Truncated {
            m.outside_mass = (1.0 - m.mass()).max(0.0);
        }
        Ok(m)
    }

    /// Quadrature weights: rectangle rule on the period for periodic data,
    /// trapezoid otherwise.
    pub fn weight(&self, i: usize) -> f64 {
        let dx = self.grid.dx();
        match self.boundary {
            Boundary::Periodic => dx,
            Boundary::Truncated if i == 0 || i + 1 == self.grid.n => 0.5 * dx,
            Boundary::Truncated => dx,
        }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        (0..self.grid.n)
            .map(|i| self.weight(i) * self.density[i] * f(self.grid.point(i)))
            .sum()
    }

    pub fn mass(&self) -> f64 {
        (0..self.grid.n).map(|i| self.weight(i) * self.density[i]).sum()
    }

    pub fn min(&self) -> f64 {
        self.density.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn normalized(mut self) -> Self {
        let m = self.mass();
        if m > 0.0 {
            self.density.iter_mut().for_each(|v| *v /= m);
        }
        self.outside_mass = 0.0;
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn to_grid_function(&self) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.density.iter().map(|&v| v.into()).collect(),
        }
    }

    pub fn sup_distance(&self, other: &Measure1D) -> Result<f64> {
        if self.grid.n != other.grid.n {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .density
            .iter()
            .zip(&other.density)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_and_truncated_weights() {
        let g = Grid::new(0.0, 1.0, 5).unwrap();
        let t = Measure1D::new(g, vec![1.0; 5], Boundary::Truncated).unwrap();
        let p = Measure1D::new(g, vec![1.0; 5], Boundary::Periodic).unwrap();
        assert!((t.mass() - 1.0).abs() < 1e-15);
        assert!((p.mass() - 1.25).abs() < 1e-15);
        assert!((p.normalized().mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn length_checked() {
        let g = Grid::new(0.0, 1.0, 5).unwrap();
        assert!(Measure1D::new(g, vec![1.0; 4], Boundary::Truncated).is_err());
    }
}
