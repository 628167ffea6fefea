//! Every 2π factor in the crate goes through this module.

use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;

/// (2π)^{-1/2}, the prefactor of the unitary Fourier transform.
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// π^{-1/4} = h_0(0).
pub const PI_POW_MINUS_QUARTER: f64 = 0.751_125_544_464_942_5;

/// Prefactor of the phase-space density: (1/2π) |⟨W(q,p)φ, ψ⟩|².
pub const PHASE_SPACE_DENSITY: f64 = 1.0 / TWO_PI;

/// Converts tr[T W(0,p)] into the characteristic function μ̂(p) of a
/// convolving measure.
pub fn characteristic_from_trace(tr: num_complex::Complex64) -> num_complex::Complex64 {
    tr * INV_SQRT_2PI
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_match_their_definitions() {
        assert!((INV_SQRT_2PI - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-16);
        assert!((PI_POW_MINUS_QUARTER - PI.powf(-0.25)).abs() < 1e-16);
        assert!((PHASE_SPACE_DENSITY * TWO_PI - 1.0).abs() < 1e-16);
    }

    #[test]
    fn gaussian_characteristic_function_at_origin() {
        // The FT of any probability density at 0 is (2π)^{-1/2}.
        let v = characteristic_from_trace(num_complex::Complex64::new(1.0, 0.0));
        assert!((v.re - 0.398942).abs() < 1e-6);
    }
}
