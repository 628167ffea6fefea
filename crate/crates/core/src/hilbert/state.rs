use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::hermite::hermite_values;
use super::{Boundary, Grid, GridFunction, Measure1D, MAX_HERMITE_DEGREE};
use crate::error::{invalid, Error, Result};

/// Finite expansion Σ c_k h_k, normalized on construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermiteState {
    coeffs: Vec<Complex64>,
}

/// (−i)^n
fn minus_i_pow(n: usize) -> Complex64 {
    [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, -1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, 1.0),
    ][n % 4]
}

impl HermiteState {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return invalid("empty coefficient vector");
        }
        if coeffs.len() - 1 > MAX_HERMITE_DEGREE {
            return Err(Error::DegreeTooLarge(coeffs.len() - 1, MAX_HERMITE_DEGREE));
        }
        let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return invalid("coefficient vector has zero or non-finite norm");
        }
        Ok(HermiteState { coeffs: coeffs.into_iter().map(|c| c / norm).collect() })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| c.into()).collect())
    }

    pub fn basis(n: usize) -> Self {
        let mut c = vec![Complex64::new(0.0, 0.0); n + 1];
        c[n] = 1.0.into();
        HermiteState { coeffs: c }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn max_degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        hermite_values(self.max_degree(), x)
            .iter()
            .zip(&self.coeffs)
            .map(|(h, c)| c * h)
            .sum()
    }

    pub fn density_at(&self, x: f64) -> f64 {
        self.eval(x).norm_sqr()
    }

    /// F h_n = (−i)^n h_n.
    pub fn fourier(&self) -> HermiteState {
        let coeffs = self.coeffs.iter().enumerate().map(|(n, c)| c * minus_i_pow(n)).collect();
        HermiteState { coeffs }
    }

    pub fn inverse_fourier(&self) -> HermiteState {
        let coeffs =
            self.coeffs.iter().enumerate().map(|(n, c)| c * minus_i_pow(n).conj()).collect();
        HermiteState { coeffs }
    }

    /// Classical turning point √(2m+1) of the highest component.
    pub fn bandwidth(&self) -> f64 {
        (2.0 * self.max_degree() as f64 + 1.0).sqrt()
    }

    /// Radius outside which every component is below ~1e-17.
    pub fn support_radius(&self) -> f64 {
        self.bandwidth() + 9.0
    }
}

/// Convex mixture of pure Hermite-span states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedState {
    pub weights: Vec<f64>,
    pub pures: Vec<HermiteState>,
}

impl MixedState {
    pub fn new(weights: Vec<f64>, pures: Vec<HermiteState>) -> Result<Self> {
        if weights.len() != pures.len() {
            return Err(Error::LengthMismatch(weights.len(), pures.len()));
        }
        if weights.is_empty() || weights.iter().any(|&w| !(w >= 0.0)) {
            return invalid("mixture weights must be nonnegative and nonempty");
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("mixture weights sum to {total}, not 1"));
        }
        Ok(MixedState { weights, pures })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum State {
    Pure(HermiteState),
    Mixed(MixedState),
}

impl State {
    pub fn components(&self) -> Vec<(f64, &HermiteState)> {
        match self {
            State::Pure(s) => vec![(1.0, s)],
            State::Mixed(m) => m.weights.iter().cloned().zip(m.pures.iter()).collect(),
        }
    }

    pub fn position_density_at(&self, x: f64) -> f64 {
        self.components().iter().map(|(w, s)| w * s.density_at(x)).sum()
    }

    pub fn fourier(&self) -> State {
        match self {
            State::Pure(s) => State::Pure(s.fourier()),
            State::Mixed(m) => State::Mixed(MixedState {
                weights: m.weights.clone(),
                pures: m.pures.iter().map(HermiteState::fourier).collect(),
            }),
        }
    }

    pub fn support_radius(&self) -> f64 {
        self.components().iter().map(|(_, s)| s.support_radius()).fold(0.0, f64::max)
    }
}

impl From<HermiteState> for State {
    fn from(s: HermiteState) -> Self {
        State::Pure(s)
    }
}

impl From<MixedState> for State {
    fn from(m: MixedState) -> Self {
        State::Mixed(m)
    }
}

pub fn state_wavefunction(s: &HermiteState, grid: Grid) -> GridFunction {
    GridFunction::from_fn(grid, |x| s.eval(x))
}

pub fn position_density(s: &State, grid: Grid) -> Measure1D {
    let density = grid.points().iter().map(|&x| s.position_density_at(x)).collect();
    Measure1D::new(grid, density, Boundary::Truncated).expect("length matches grid")
}

/// |ψ̂(p)|², evaluated from the rotated Hermite coefficients.
pub fn momentum_density(s: &State, grid: Grid) -> Measure1D {
    position_density(&s.fourier(), grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::PI_POW_MINUS_QUARTER;
    use std::f64::consts::PI;

    #[test]
    fn single_basis_element() {
        let g = Grid::symmetric(4.0, 9).unwrap();
        let w = state_wavefunction(&HermiteState::from_real(&[1.0]).unwrap(), g);
        let h = crate::hilbert::hermite_function(0, g).unwrap();
        assert_eq!(w.values, h.values);
    }

    #[test]
    fn superposition_norm() {
        let s = HermiteState::from_real(&[0.5f64.sqrt(), 0.5f64.sqrt()]).unwrap();
        let w = state_wavefunction(&s, Grid::default_line());
        assert!((w.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn value_at_origin() {
        let s = HermiteState::new(vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]).unwrap();
        assert!((s.eval(0.0) - Complex64::new(0.6 * PI_POW_MINUS_QUARTER, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn vacuum_densities() {
        let g = Grid::default_line();
        let s = State::Pure(HermiteState::basis(0));
        let pd = position_density(&s, g);
        let md = momentum_density(&s, g);
        for i in (0..g.n).step_by(97) {
            let x = g.point(i);
            let exact = (-x * x).exp() / PI.sqrt();
            assert!((pd.density[i] - exact).abs() < 1e-15);
            assert!((md.density[i] - exact).abs() < 1e-15);
        }
        assert!((pd.mass() - 1.0).abs() < 1e-9);
        assert!((pd.integrate(|x| x * x) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn momentum_density_of_basis_state_equals_position_density() {
        let g = Grid::default_line();
        let s = State::Pure(HermiteState::basis(3));
        assert!(position_density(&s, g).sup_distance(&momentum_density(&s, g)).unwrap() < 1e-15);
    }

    #[test]
    fn mixture_validation() {
        let a = HermiteState::basis(0);
        let b = HermiteState::basis(1);
        assert!(MixedState::new(vec![0.5, 0.6], vec![a.clone(), b.clone()]).is_err());
        let m = MixedState::new(vec![0.25, 0.75], vec![a, b]).unwrap();
        let d = position_density(&m.into(), Grid::default_line());
        assert!((d.mass() - 1.0).abs() < 1e-9);
        assert!(d.integrate(|x| x).abs() < 1e-12);
    }
}
