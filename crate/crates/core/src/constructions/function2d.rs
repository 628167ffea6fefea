use std::path::Path;

use rayon::prelude::*;

use crate::error::Result;
use crate::hilbert::Grid;

/// Real samples on a 2D grid, x as the slow index.
#[derive(Clone, Debug, PartialEq)]
pub struct Function2D {
    pub x_grid: Grid,
    pub y_grid: Grid,
    pub values: Vec<f64>,
}

impl Function2D {
    pub fn tabulate(x_grid: Grid, y_grid: Grid, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        let values = (0..x_grid.n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let x = x_grid.point(i);
                (0..y_grid.n).map(move |j| (x, y_grid.point(j)))
            })
            .map(|(x, y)| f(x, y))
            .collect();
        Function2D { x_grid, y_grid, values }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.y_grid.n + j]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Trapezoid integral over the tabulated rectangle.
    pub fn integral(&self) -> f64 {
        let (nx, ny) = (self.x_grid.n, self.y_grid.n);
        let w = |i: usize, n: usize| if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        let mut s = 0.0;
        for i in 0..nx {
            for j in 0..ny {
                s += w(i, nx) * w(j, ny) * self.at(i, j);
            }
        }
        s * self.x_grid.dx() * self.y_grid.dx()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "y", "value"])?;
        for i in 0..self.x_grid.n {
            for j in 0..self.y_grid.n {
                w.write_record(&[
                    self.x_grid.point(i).to_string(),
                    self.y_grid.point(j).to_string(),
                    self.at(i, j).to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
