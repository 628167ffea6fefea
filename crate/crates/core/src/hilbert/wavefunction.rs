use num_complex::Complex64;
use std::f64::consts::PI;

use super::quadrature::{gl_nodes, gl_panels, trapezoid_complex};
use super::{fourier_transform, inverse_fourier_transform, Grid, GridFunction, HermiteState};
use crate::constants::TWO_PI;
use crate::error::Result;

/// Pure wavefunction used as a probe in a generating operator.
///
/// Closed-form variants keep support statements exact: the indicator of an
/// interval and its Fourier transform never pass through an FFT.
#[derive(Clone, Debug, PartialEq)]
pub enum Wavefunction {
    Hermite(HermiteState),
    /// w^{-1/2} on [center − w/2, center + w/2].
    Indicator { center: f64, width: f64 },
    /// Fourier transform of `Indicator { center, width }`.
    IndicatorFt { center: f64, width: f64 },
    Sampled(GridFunction),
}

const EDGE_TOL: f64 = 1e-9;

/// sin(u)/u with the removable point.
pub fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        1.0 - u * u / 6.0
    } else {
        u.sin() / u
    }
}

/// (1 − cos(w z))/z², continuous at 0.
fn one_minus_cos_over_sq(w: f64, z: f64) -> f64 {
    let u = w * z;
    if u.abs() < 1e-4 {
        0.5 * w * w * (1.0 - u * u / 12.0)
    } else {
        let s = (0.5 * u).sin();
        2.0 * s * s / (z * z)
    }
}

/// Σ_{n≠0} 1/(z + nP)² for |z| ≤ P/2.
fn inverse_square_images(z: f64, period: f64) -> f64 {
    let k = PI / period;
    let u = k * z;
    if u.abs() < 1e-2 {
        let u2 = u * u;
        k * k * (1.0 / 3.0 + u2 / 15.0 + 2.0 * u2 * u2 / 189.0)
    } else {
        k * k / (u.sin() * u.sin()) - 1.0 / (z * z)
    }
}

/// Reduces x to [−P/2, P/2).
fn wrap(x: f64, period: f64) -> f64 {
    x - period * (x / period).round()
}

/// ∫_P^∞ cos(w p)/p² dp.
fn cos_over_sq_tail(w: f64, big_p: f64) -> f64 {
    let z = w * big_p;
    let si: f64 = gl_nodes(0.0, z, gl_panels(z, 1.0)).iter().map(|(t, wt)| wt * sinc(*t)).sum();
    (w * big_p).cos() / big_p - w * (0.5 * PI - si)
}

/// Σ_i g_i e^{−i p x_i} for every p; uses a phase recurrence on uniform rows.
fn phase_sums(nodes: &[(f64, Complex64)], ps: &[f64]) -> Vec<Complex64> {
    let uniform = ps.len() > 2 && {
        let d = ps[1] - ps[0];
        ps.iter().enumerate().all(|(k, p)| (p - (ps[0] + k as f64 * d)).abs() < 1e-9 * d.abs().max(1e-300) * (k as f64 + 1.0) + 1e-12)
    };
    if !uniform {
        return ps
            .iter()
            .map(|&p| nodes.iter().map(|(x, g)| g * Complex64::from_polar(1.0, -p * x)).sum())
            .collect();
    }
    let d = ps[1] - ps[0];
    let mut out = vec![Complex64::new(0.0, 0.0); ps.len()];
    // re-anchor the recurrence every 64 steps to keep the phase error at ~1e-14
    for (x, g) in nodes {
        let step = Complex64::from_polar(1.0, -d * x);
        let mut k = 0;
        while k < ps.len() {
            let mut ph = g * Complex64::from_polar(1.0, -ps[k] * x);
            let end = (k + 64).min(ps.len());
            for slot in out.iter_mut().take(end).skip(k) {
                *slot += ph;
                ph *= step;
            }
            k = end;
        }
    }
    out
}

impl Wavefunction {
    pub fn indicator(center: f64, width: f64) -> Self {
        Wavefunction::Indicator { center, width }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        match self {
            Wavefunction::Hermite(s) => s.eval(x),
            Wavefunction::Indicator { center, width } => {
                let d = (x - center).abs() - 0.5 * width;
                let amp = 1.0 / width.sqrt();
                if d.abs() <= EDGE_TOL * (1.0 + x.abs()) {
                    (0.5 * amp).into()
                } else if d < 0.0 {
                    amp.into()
                } else {
                    0.0.into()
                }
            }
            Wavefunction::IndicatorFt { center, width } => {
                Complex64::from_polar((width / TWO_PI).sqrt() * sinc(0.5 * x * width), -x * center)
            }
            Wavefunction::Sampled(g) => g.interpolate(x),
        }
    }

    pub fn sample(&self, grid: Grid) -> GridFunction {
        GridFunction::from_fn(grid, |x| self.eval(x))
    }

    /// |φ(x)|², taking the mean of the one-sided limits at jumps.
    pub fn density_at(&self, x: f64) -> f64 {
        match self {
            Wavefunction::Indicator { center, width } => {
                let d = (x - center).abs() - 0.5 * width;
                if d.abs() <= EDGE_TOL * (1.0 + x.abs()) {
                    0.5 / width
                } else if d < 0.0 {
                    1.0 / width
                } else {
                    0.0
                }
            }
            Wavefunction::IndicatorFt { width, .. } => {
                one_minus_cos_over_sq(*width, x) / (PI * width)
            }
            _ => self.eval(x).norm_sqr(),
        }
    }

    /// Σ_n |φ(x + nP)|²: the density wrapped onto a circle of length P.
    pub fn folded_density_at(&self, x: f64, period: f64) -> f64 {
        match self {
            Wavefunction::Hermite(_) | Wavefunction::Indicator { .. } => {
                (-2..=2).map(|n| self.density_at(x + n as f64 * period)).sum()
            }
            Wavefunction::IndicatorFt { width, .. } => {
                let w = *width;
                let z = wrap(x, period);
                let direct = one_minus_cos_over_sq(w, z);
                let flat = inverse_square_images(z, period);
                // Σ_{n≠0} cos(w(z + nP))/(z + nP)²; the alternating phases make
                // the neglected remainder beyond |n| = 2000 far below 1e-12.
                let base = Complex64::from_polar(1.0, w * z);
                let step = Complex64::from_polar(1.0, w * period);
                let (mut up, mut down) = (base, base);
                let mut osc = 0.0;
                for n in 1..=2000 {
                    up *= step;
                    down /= step;
                    let a = z + n as f64 * period;
                    let b = z - n as f64 * period;
                    osc += up.re / (a * a) + down.re / (b * b);
                }
                (direct + flat - osc) / (PI * w)
            }
            Wavefunction::Sampled(g) => g.interpolate(wrap(x, period)).norm_sqr(),
        }
    }

    pub fn fourier(&self) -> Wavefunction {
        match self {
            Wavefunction::Hermite(s) => Wavefunction::Hermite(s.fourier()),
            Wavefunction::Indicator { center, width } => {
                Wavefunction::IndicatorFt { center: *center, width: *width }
            }
            Wavefunction::IndicatorFt { center, width } => {
                Wavefunction::Indicator { center: -center, width: *width }
            }
            Wavefunction::Sampled(g) => Wavefunction::Sampled(fourier_transform(g).function),
        }
    }

    pub fn inverse_fourier(&self) -> Wavefunction {
        match self {
            Wavefunction::Hermite(s) => Wavefunction::Hermite(s.inverse_fourier()),
            Wavefunction::Indicator { center, width } => {
                Wavefunction::IndicatorFt { center: -center, width: *width }
            }
            Wavefunction::IndicatorFt { center, width } => {
                Wavefunction::Indicator { center: *center, width: *width }
            }
            Wavefunction::Sampled(g) => Wavefunction::Sampled(inverse_fourier_transform(g)),
        }
    }

    pub fn norm(&self) -> f64 {
        match self {
            Wavefunction::Sampled(g) => g.norm(),
            Wavefunction::Hermite(s) => s.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt(),
            _ => 1.0,
        }
    }

    /// ⟨φ, W(q,p) φ⟩ with W(q,p)φ(x) = e^{−iqp/2} e^{ipx} φ(x − q).
    pub fn self_weyl(&self, q: f64, p: f64) -> Result<Complex64> {
        let pre = Complex64::from_polar(1.0, -0.5 * q * p);
        match self {
            Wavefunction::Hermite(s) => {
                let r = s.support_radius();
                let (a, b) = ((-r).max(q - r), r.min(q + r));
                if b <= a {
                    return Ok(0.0.into());
                }
                let h = TWO_PI / (p.abs() + 2.0 * s.bandwidth() + 24.0);
                let n = ((b - a) / h).ceil() as usize + 1;
                let dx = (b - a) / (n - 1) as f64;
                let vals: Vec<Complex64> = (0..n)
                    .map(|i| {
                        let x = a + i as f64 * dx;
                        s.eval(x).conj() * Complex64::from_polar(1.0, p * x) * s.eval(x - q)
                    })
                    .collect();
                Ok(pre * trapezoid_complex(&vals, dx))
            }
            Wavefunction::Indicator { center, width } => {
                let lo = center - 0.5 * width;
                let hi = center + 0.5 * width;
                let (a, b) = (lo.max(lo + q), hi.min(hi + q));
                if b <= a {
                    return Ok(0.0.into());
                }
                let s: Complex64 = gl_nodes(a, b, gl_panels(b - a, p.abs()))
                    .iter()
                    .map(|(x, w)| w * Complex64::from_polar(1.0, p * x))
                    .sum();
                Ok(pre * s / *width)
            }
            Wavefunction::IndicatorFt { center, width } => {
                Wavefunction::Indicator { center: *center, width: *width }.self_weyl(-p, q)
            }
            Wavefunction::Sampled(g) => {
                let shifted = crate::phase_space::weyl_apply(q, p, g)?;
                g.inner(&shifted)
            }
        }
    }

    /// ⟨W(q,p) φ, ψ⟩.
    pub fn cross_weyl(&self, q: f64, p: f64, psi: &HermiteState) -> Result<Complex64> {
        Ok(self.cross_weyl_row(q, &[p], psi)?[0])
    }

    /// ⟨W(q,p) φ, ψ⟩ for fixed q and every p in `ps`.
    pub fn cross_weyl_row(&self, q: f64, ps: &[f64], psi: &HermiteState) -> Result<Vec<Complex64>> {
        let pmax = ps.iter().fold(0.0f64, |m, p| m.max(p.abs()));
        let nodes: Vec<(f64, Complex64)> = match self {
            Wavefunction::Hermite(phi) => {
                let (rp, rs) = (phi.support_radius(), psi.support_radius());
                let (a, b) = ((-rs).max(q - rp), rs.min(q + rp));
                if b <= a {
                    return Ok(vec![0.0.into(); ps.len()]);
                }
                let h = TWO_PI / (pmax + phi.bandwidth() + psi.bandwidth() + 24.0);
                let n = ((b - a) / h).ceil() as usize + 1;
                let dx = (b - a) / (n - 1) as f64;
                (0..n)
                    .map(|i| {
                        let x = a + i as f64 * dx;
                        let w = if i == 0 || i + 1 == n { 0.5 * dx } else { dx };
                        (x, w * phi.eval(x - q).conj() * psi.eval(x))
                    })
                    .collect()
            }
            Wavefunction::Indicator { center, width } => {
                let r = psi.support_radius();
                let (a, b) = (center + q - 0.5 * width, center + q + 0.5 * width);
                if b <= -r || a >= r {
                    return Ok(vec![0.0.into(); ps.len()]);
                }
                let amp = 1.0 / width.sqrt();
                gl_nodes(a, b, gl_panels(b - a, pmax + psi.bandwidth() + 6.0))
                    .into_iter()
                    .map(|(x, w)| (x, w * amp * psi.eval(x)))
                    .collect()
            }
            Wavefunction::IndicatorFt { center, width } => {
                let base = Wavefunction::Indicator { center: *center, width: *width };
                let psi_inv = psi.inverse_fourier();
                return ps.iter().map(|&p| base.cross_weyl(-p, q, &psi_inv)).collect();
            }
            Wavefunction::Sampled(g) => {
                let target = super::state_wavefunction(psi, g.grid);
                return ps
                    .iter()
                    .map(|&p| crate::phase_space::weyl_apply(q, p, g)?.inner(&target))
                    .collect();
            }
        };
        let sums = phase_sums(&nodes, ps);
        Ok(ps
            .iter()
            .zip(sums)
            .map(|(&p, s)| Complex64::from_polar(1.0, 0.5 * q * p) * s)
            .collect())
    }

    /// Asymptotic ∫_{|p|>P} |⟨W(q,p)φ, ψ⟩|² dp for an indicator probe, whose
    /// row decays like p^{-2}. Zero for probes with rapidly decaying rows.
    pub fn row_tail(&self, q: f64, big_p: f64, psi: &HermiteState) -> f64 {
        match self {
            Wavefunction::Indicator { center, width } => {
                let (a, b) = (center + q - 0.5 * width, center + q + 0.5 * width);
                let (pa, pb) = (psi.eval(a), psi.eval(b));
                let flat = 2.0 * (pa.norm_sqr() + pb.norm_sqr()) / big_p;
                let osc = 4.0 * (pb * pa.conj()).re * cos_over_sq_tail(*width, big_p);
                (flat - osc) / width
            }
            _ => 0.0,
        }
    }

    /// Coarse radius of the region carrying the probe's mass (used to size
    /// quadrature windows); `None` for heavy-tailed or sampled probes.
    pub fn support_radius(&self) -> Option<f64> {
        match self {
            Wavefunction::Hermite(s) => Some(s.support_radius()),
            Wavefunction::Indicator { center, width } => Some(center.abs() + 0.5 * width),
            _ => None,
        }
    }
}
