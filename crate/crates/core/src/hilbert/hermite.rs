use num_complex::Complex64;

use super::{Grid, GridFunction};
use crate::constants::PI_POW_MINUS_QUARTER;
use crate::error::{Error, Result};

pub const MAX_HERMITE_DEGREE: usize = 200;

/// h_0(x), …, h_m(x) by the normalized three-term recurrence
/// h_{k+1} = √(2/(k+1)) x h_k − √(k/(k+1)) h_{k−1}.
pub fn hermite_values(m: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(m + 1);
    out.push(PI_POW_MINUS_QUARTER * (-0.5 * x * x).exp());
    if m >= 1 {
        out.push(std::f64::consts::SQRT_2 * x * out[0]);
    }
    for k in 1..m {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

pub fn hermite_function(n: usize, grid: Grid) -> Result<GridFunction> {
    if n > MAX_HERMITE_DEGREE {
        return Err(Error::DegreeTooLarge(n, MAX_HERMITE_DEGREE));
    }
    Ok(GridFunction::from_fn(grid, |x| Complex64::new(hermite_values(n, x)[n], 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h0_at_origin() {
        let g = Grid::symmetric(1.0, 3).unwrap();
        let h = hermite_function(0, g).unwrap();
        assert!((h.values[1].re - 0.751126).abs() < 1e-6);
    }

    #[test]
    fn h1_is_odd() {
        let g = Grid::symmetric(1.0, 3).unwrap();
        let h = hermite_function(1, g).unwrap();
        assert_eq!(h.values[1].re, 0.0);
        assert!((h.values[0].re + h.values[2].re).abs() < 1e-15);
    }

    #[test]
    fn orthonormal_on_default_grid() {
        let g = Grid::default_line();
        let h2 = hermite_function(2, g).unwrap();
        let h3 = hermite_function(3, g).unwrap();
        assert!(h2.inner(&h3).unwrap().norm() < 1e-10);
        assert!((h3.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn high_degree_stays_normalized() {
        let g = Grid::default_line();
        let h = hermite_function(120, g).unwrap();
        assert!((h.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn degree_bound_enforced() {
        assert!(matches!(
            hermite_function(201, Grid::default_line()),
            Err(Error::DegreeTooLarge(201, 200))
        ));
    }

    #[test]
    fn h2_matches_closed_form() {
        // h_2(x) = π^{-1/4} (2x² − 1)/√2 · e^{−x²/2}
        for &x in &[-1.3, 0.0, 0.4, 2.2] {
            let closed = PI_POW_MINUS_QUARTER * (2.0 * x * x - 1.0) / 2f64.sqrt() * (-x * x / 2.0).exp();
            assert!((hermite_values(2, x)[2] - closed).abs() < 1e-15);
        }
    }
}
