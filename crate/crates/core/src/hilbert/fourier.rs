use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{Grid, GridFunction};
use crate::constants::{INV_SQRT_2PI, TWO_PI};

/// Transform plus a flag set when the input does not decay below 1e-10 at
/// the grid edges.
#[derive(Clone, Debug)]
pub struct FourierResult {
    pub function: GridFunction,
    pub edge_warning: bool,
}

const EDGE_TOLERANCE: f64 = 1e-10;

/// f̂(p_k) = (2π)^{-1/2} Σ_j f(x_j) e^{-i p_k x_j} dx on the centered
/// conjugate grid; the DFT runs between two phase ramps.
pub fn fourier_transform(f: &GridFunction) -> FourierResult {
    let grid = f.grid;
    let target = grid.conjugate();
    let values = transform(&f.values, grid, target, -1.0);
    FourierResult {
        function: GridFunction { grid: target, values },
        edge_warning: f.edge_magnitude() > EDGE_TOLERANCE,
    }
}

/// Inverse of [`fourier_transform`]; the result lives on the centered grid
/// conjugate to `f.grid`.
pub fn inverse_fourier_transform(f: &GridFunction) -> GridFunction {
    let grid = f.grid;
    let target = grid.conjugate();
    let values = transform(&f.values, grid, target, 1.0);
    GridFunction { grid: target, values }
}

/// Σ_j v_j e^{sign·i k_m x_j} · dx/√(2π) for the centered target grid k_m.
fn transform(v: &[Complex64], source: Grid, target: Grid, sign: f64) -> Vec<Complex64> {
    let n = source.n;
    let c = (n - 1) as f64 / 2.0;
    let x0 = source.point(0);
    let dx = source.dx();
    // k_m x_j = k_m x0 + (m − c) j · 2π/n
    let mut buf: Vec<Complex64> = v
        .iter()
        .enumerate()
        .map(|(j, &val)| val * Complex64::from_polar(1.0, -sign * TWO_PI * c * j as f64 / n as f64))
        .collect();
    let mut planner = FftPlanner::new();
    if sign < 0.0 {
        planner.plan_fft_forward(n).process(&mut buf);
    } else {
        planner.plan_fft_inverse(n).process(&mut buf);
    }
    buf.iter()
        .enumerate()
        .map(|(m, &val)| {
            let k = target.point(m);
            val * Complex64::from_polar(dx * INV_SQRT_2PI, sign * k * x0)
        })
        .collect()
}
