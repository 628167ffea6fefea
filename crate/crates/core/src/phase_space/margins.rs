use num_complex::Complex64;
use rayon::prelude::*;

use super::{weyl_transform, Axis, GeneratingOperator};
use crate::constants::{INV_SQRT_2PI, PHASE_SPACE_DENSITY};
use crate::error::{Error, Result};
use crate::hilbert::{
    momentum_density, position_density, trapezoid, Boundary, Grid, Measure1D, State, Wavefunction,
};

/// Outcome density (1/2π) Σ_j w_j Σ_k t_k |⟨W(q,p)φ_k, ψ_j⟩|² of the
/// phase-space observable.
pub fn gt_density(t: &GeneratingOperator, rho: &State, q: f64, p: f64) -> Result<f64> {
    let mut acc = 0.0;
    for (tk, phi) in t.components()? {
        for (wj, psi) in rho.components() {
            acc += tk * wj * phi.cross_weyl(q, p, psi)?.norm_sqr();
        }
    }
    Ok(PHASE_SPACE_DENSITY * acc)
}

fn probe_density(phi: &Wavefunction, x: f64, grid: &Grid, boundary: Boundary) -> f64 {
    match boundary {
        Boundary::Truncated => phi.density_at(x),
        Boundary::Periodic => phi.folded_density_at(x, grid.period()),
    }
}

fn kernel_probes(t: &GeneratingOperator, axis: Axis) -> Result<Vec<(f64, Wavefunction)>> {
    Ok(t.components()?
        .into_iter()
        .map(|(w, phi)| match axis {
            Axis::Position => (w, phi.clone()),
            Axis::Momentum => (w, phi.fourier()),
        })
        .collect())
}

fn kernel_at(probes: &[(f64, Wavefunction)], x: f64, grid: &Grid, boundary: Boundary) -> f64 {
    probes.iter().map(|(w, phi)| w * probe_density(phi, -x, grid, boundary)).sum()
}

/// μ^T(x) = Σ t_k |φ_k(−x)|² and ν^T(p) = Σ t_k |φ̂_k(−p)|², both sampled on
/// `grid`.
pub fn convolving_measures(t: &GeneratingOperator, grid: Grid, boundary: Boundary) -> Result<(Measure1D, Measure1D)> {
    let build = |axis| -> Result<Measure1D> {
        let probes = kernel_probes(t, axis)?;
        let density = grid.points().iter().map(|&x| kernel_at(&probes, x, &grid, boundary)).collect();
        Measure1D::new(grid, density, boundary)
    };
    Ok((build(Axis::Position)?, build(Axis::Momentum)?))
}

/// out[i] = Σ_j a[j] kernel[i − j + offset]; every term is nonnegative for
/// densities, so direct summation keeps full relative accuracy in the tails
/// where FFT rounding would leave an absolute noise floor.
fn direct_convolve(a: &[f64], kernel: impl Fn(usize, usize) -> f64 + Sync) -> Vec<f64> {
    (0..a.len())
        .into_par_iter()
        .map(|i| a.iter().enumerate().map(|(j, &v)| v * kernel(i, j)).sum())
        .collect()
}

/// Margin of a state with the given position (or momentum) density:
/// μ^T * p_ρ (resp. ν^T * p_ρ) by direct summation on the density's grid.
///
/// `Truncated` returns the line margin restricted to the grid with the
/// kernel sampled at every lag; `Periodic` wraps the kernel onto the DFT
/// period and convolves circularly.
pub fn margin_from_density(t: &GeneratingOperator, density: &Measure1D, axis: Axis, boundary: Boundary) -> Result<Measure1D> {
    let probes = kernel_probes(t, axis)?;
    let grid = density.grid;
    let n = grid.n;
    let dx = grid.dx();
    let weighted: Vec<f64> = (0..n).map(|i| density.density[i] * density.weight(i)).collect();
    let out = match boundary {
        Boundary::Truncated => {
            // lags −(n−1)..(n−1) stored from index 0
            let kernel: Vec<f64> = (0..2 * n - 1)
                .into_par_iter()
                .map(|l| kernel_at(&probes, (l as f64 - (n - 1) as f64) * dx, &grid, boundary))
                .collect();
            direct_convolve(&weighted, |i, j| kernel[i + n - 1 - j])
        }
        Boundary::Periodic => {
            let kernel: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|l| {
                    let lag = if 2 * l <= n { l as f64 } else { l as f64 - n as f64 };
                    kernel_at(&probes, lag * dx, &grid, boundary)
                })
                .collect();
            // circular index of x_i − x_j is (i − j) mod n
            direct_convolve(&weighted, |i, j| kernel[(i + n - j) % n])
        }
    };
    Measure1D::new(grid, out, boundary)
}

/// Margin of G^T in state ρ along one axis.
pub fn margin_density(t: &GeneratingOperator, rho: &State, axis: Axis, grid: Grid, boundary: Boundary) -> Result<Measure1D> {
    let density = match axis {
        Axis::Position => position_density(rho, grid),
        Axis::Momentum => momentum_density(rho, grid),
    };
    margin_from_density(t, &density, axis, boundary)
}

/// μ̂^T(p) = (2π)^{-1/2} tr[T W(0,p)] or ν̂^T(q) = (2π)^{-1/2} tr[T W(−q,0)].
pub fn ft_convolver(t: &GeneratingOperator, axis: Axis, k: f64) -> Result<Complex64> {
    let tr = match axis {
        Axis::Position => weyl_transform(t, 0.0, k)?,
        Axis::Momentum => weyl_transform(t, -k, 0.0)?,
    };
    Ok(tr * INV_SQRT_2PI)
}

/// Quadrature settings for [`integrated_margin`].
#[derive(Clone, Copy, Debug)]
pub struct IntegrationOptions {
    /// Integration runs over [−half_width, half_width]; indicator probes add
    /// the analytic p^{-2} tail beyond it.
    pub half_width: f64,
    pub step: f64,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions { half_width: 64.0, step: 0.05 }
    }
}

/// Margin obtained by integrating [`gt_density`] over the other phase-space
/// variable, at each requested point. Independent of the convolution route.
pub fn integrated_margin(t: &GeneratingOperator, rho: &State, axis: Axis, points: &[f64], opts: IntegrationOptions) -> Result<Vec<f64>> {
    let probes = t.components()?;
    // ⟨W(q,p)φ, ψ⟩ = ⟨W(−p,q) F^{-1}φ, F^{-1}ψ⟩ turns the momentum margin
    // into a row integral of the same kind as the position margin.
    let (probes, states): (Vec<(f64, Wavefunction)>, Vec<(f64, crate::hilbert::HermiteState)>) = match axis {
        Axis::Position => (
            probes.iter().map(|(w, p)| (*w, (*p).clone())).collect(),
            rho.components().iter().map(|(w, s)| (*w, (*s).clone())).collect(),
        ),
        Axis::Momentum => (
            probes.iter().map(|(w, p)| (*w, p.inverse_fourier())).collect(),
            rho.components().iter().map(|(w, s)| (*w, s.inverse_fourier())).collect(),
        ),
    };
    points
        .par_iter()
        .map(|&x| {
            let fixed = match axis {
                Axis::Position => x,
                Axis::Momentum => -x,
            };
            let mut acc = 0.0;
            for (tk, phi) in &probes {
                for (wj, psi) in &states {
                    let reach = match phi {
                        Wavefunction::Indicator { .. } | Wavefunction::Sampled(_) => opts.half_width,
                        Wavefunction::Hermite(h) => h.support_radius() + psi.support_radius(),
                        Wavefunction::IndicatorFt { center, width } => {
                            center.abs() + 0.5 * width + psi.support_radius()
                        }
                    }
                    .min(opts.half_width);
                    let m = (reach / opts.step).ceil() as usize;
                    let free: Vec<f64> = (0..=2 * m).map(|k| (k as f64 - m as f64) * opts.step).collect();
                    let row = phi.cross_weyl_row(fixed, &free, psi)?;
                    let sq: Vec<f64> = row.iter().map(|v| v.norm_sqr()).collect();
                    let body = trapezoid(&sq, opts.step);
                    let tail = phi.row_tail(fixed, m as f64 * opts.step, psi);
                    acc += tk * wj * (body + tail);
                }
            }
            Ok(PHASE_SPACE_DENSITY * acc)
        })
        .collect::<Result<Vec<f64>>>()
        .map_err(|e: Error| e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::HermiteState;
    use std::f64::consts::PI;

    fn husimi() -> GeneratingOperator {
        GeneratingOperator::pure(Wavefunction::Hermite(HermiteState::basis(0))).unwrap()
    }

    fn prop1() -> GeneratingOperator {
        let chi = Wavefunction::indicator(0.0, 1.0);
        GeneratingOperator::mixture(vec![0.5, 0.5], vec![chi.clone(), chi.fourier()]).unwrap()
    }

    #[test]
    fn vacuum_husimi_density() {
        let rho = State::Pure(HermiteState::basis(0));
        let v = gt_density(&husimi(), &rho, 0.0, 0.0).unwrap();
        assert!((v - 1.0 / (2.0 * PI)).abs() < 1e-14);
        assert!(gt_density(&husimi(), &rho, 30.0, -30.0).unwrap() < 1e-300);
    }

    #[test]
    fn field_operator_has_no_density() {
        let t = GeneratingOperator::field(super::super::WeylField::new("g", |_, _| Complex64::new(1.0, 0.0))).unwrap();
        let rho = State::Pure(HermiteState::basis(0));
        assert!(matches!(gt_density(&t, &rho, 0.0, 0.0), Err(Error::DensityRequiresPureDecomposition)));
    }

    #[test]
    fn husimi_convolving_measures() {
        let g = Grid::default_line();
        let (mu, nu) = convolving_measures(&husimi(), g, Boundary::Truncated).unwrap();
        for i in (0..g.n).step_by(101) {
            let x = g.point(i);
            let e = (-x * x).exp() / PI.sqrt();
            assert!((mu.density[i] - e).abs() < 1e-15 && (nu.density[i] - e).abs() < 1e-15);
        }
        assert!((mu.mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn prop1_measures_are_identical_and_normalized() {
        let g = Grid::default_line();
        for b in [Boundary::Truncated, Boundary::Periodic] {
            let (mu, nu) = convolving_measures(&prop1(), g, b).unwrap();
            assert!(mu.sup_distance(&nu).unwrap() < 1e-15);
            if b == Boundary::Periodic {
                assert!((mu.mass() - 1.0).abs() < 1e-9);
            } else {
                // line measure: the sinc² tails carry ~1/(π·20) beyond the grid
                assert!((mu.mass() + mu.outside_mass - 1.0).abs() < 1e-12);
                assert!(mu.outside_mass > 1e-3);
            }
        }
    }

    #[test]
    fn gaussian_margin_of_vacuum() {
        let g = Grid::default_line();
        let rho = State::Pure(HermiteState::basis(0));
        for b in [Boundary::Truncated, Boundary::Periodic] {
            let m = margin_density(&husimi(), &rho, Axis::Position, g, b).unwrap();
            for i in (0..g.n).step_by(53) {
                let x = g.point(i);
                let e = (-x * x / 2.0).exp() / (2.0 * PI).sqrt();
                assert!((m.density[i] - e).abs() < 1e-13);
            }
            assert!((m.mass() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ft_convolver_values() {
        for t in [husimi(), prop1()] {
            assert!((ft_convolver(&t, Axis::Position, 0.0).unwrap().re - INV_SQRT_2PI).abs() < 1e-14);
        }
        let v = ft_convolver(&husimi(), Axis::Momentum, 1.7).unwrap();
        assert!((v.re - INV_SQRT_2PI * (-1.7f64 * 1.7 / 4.0).exp()).abs() < 1e-13);
        assert!(ft_convolver(&prop1(), Axis::Position, 2.0 * PI).unwrap().norm() < 1e-8);
    }

    #[test]
    fn narrow_probe_margin_approaches_state_density() {
        let g = Grid::default_line();
        let sigma = 0.02;
        // narrow Gaussian probe: h_0 sampled with scale σ
        let probe = crate::hilbert::GridFunction::from_real(g, |x| {
            (-(x * x) / (2.0 * sigma * sigma)).exp() / (PI * sigma * sigma).sqrt().sqrt()
        });
        let t = GeneratingOperator::pure(Wavefunction::Sampled(probe)).unwrap();
        let rho = State::Pure(HermiteState::from_real(&[0.6, 0.8]).unwrap());
        let m = margin_density(&t, &rho, Axis::Position, g, Boundary::Truncated).unwrap();
        let p = position_density(&rho, g);
        assert!(m.sup_distance(&p).unwrap() < 3.0 * sigma * sigma);
    }

    #[test]
    fn integrated_husimi_margin() {
        let rho = State::Pure(HermiteState::basis(0));
        let pts = [0.0, 0.8, -2.1];
        let m = integrated_margin(&husimi(), &rho, Axis::Position, &pts, IntegrationOptions::default()).unwrap();
        for (x, v) in pts.iter().zip(m) {
            assert!((v - (-x * x / 2.0).exp() / (2.0 * PI).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn prop1_marginal_consistency_both_axes() {
        let g = Grid::default_line();
        let rho = State::Pure(HermiteState::new(vec![Complex64::new(0.6, 0.0), Complex64::new(0.3, 0.5), Complex64::new(0.0, -0.2)]).unwrap());
        for axis in [Axis::Position, Axis::Momentum] {
            let conv = margin_density(&prop1(), &rho, axis, g, Boundary::Truncated).unwrap();
            let idx: Vec<usize> = (0..9).map(|k| g.nearest_index(-4.0 + k as f64)).collect();
            let pts: Vec<f64> = idx.iter().map(|&i| g.point(i)).collect();
            let direct = integrated_margin(&prop1(), &rho, axis, &pts, IntegrationOptions::default()).unwrap();
            for (i, d) in idx.iter().zip(direct) {
                assert!((conv.density[*i] - d).abs() < 1e-5, "{axis:?} x = {} {} {}", g.point(*i), conv.density[*i], d);
            }
        }
    }
}
