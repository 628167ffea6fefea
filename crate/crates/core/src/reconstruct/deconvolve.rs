use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{INV_SQRT_2PI, TWO_PI};
use crate::error::{invalid, Error, Result};
use crate::hilbert::{fourier_transform, inverse_fourier_transform, Boundary, GridFunction, Measure1D};

/// Settings of [`fourier_deconvolve`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeconvolveConfig {
    /// A sample of μ̂ is a dip when its modulus falls below this fraction of
    /// the smaller of the largest moduli within `DIP_WINDOW` samples on
    /// either side.
    pub eps_floor: f64,
    /// |μ̂| ≤ vanish_rel·max|μ̂| ends the working band.
    pub vanish_rel: f64,
    /// The band also ends once the estimate drops below snr_min times its
    /// propagated noise over `NOISE_WINDOW` consecutive samples.
    pub snr_min: f64,
    /// Absolute noise level of the margin's transform; `None` uses
    /// double-precision rounding of exact data.
    pub noise: Option<f64>,
    /// Longest run of dips bridged by interpolation.
    pub max_fill: usize,
}

impl Default for DeconvolveConfig {
    fn default() -> Self {
        DeconvolveConfig { eps_floor: 0.05, vanish_rel: 1e-14, snr_min: 2.0, noise: None, max_fill: 5 }
    }
}

impl DeconvolveConfig {
    /// Noise of an empirical characteristic function from n samples.
    pub fn sampled(n: usize) -> Self {
        DeconvolveConfig { noise: Some(INV_SQRT_2PI / (n.max(1) as f64).sqrt()), ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandLimit {
    /// μ̂ vanished to working precision.
    Vanishing,
    /// The estimate sank into its propagated noise.
    Noise,
    GridEdge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeconvolveDiagnostics {
    pub band: [f64; 2],
    pub band_limits: [BandLimit; 2],
    /// Closed momentum intervals where p̂ was interpolated.
    pub interpolated_bands: Vec<[f64; 2]>,
    pub interpolated_samples: usize,
    pub noise: f64,
    /// Negative values below this are reported as lobes.
    pub clip_threshold: f64,
    pub clipped_lobe_samples: usize,
    pub clipped_mass: f64,
    pub min_value: f64,
    pub mass_before_normalization: f64,
}

const DIP_WINDOW: usize = 8;
const NOISE_WINDOW: usize = 5;
const CLIP_THRESHOLD: f64 = -1e-6;
/// Relative rounding level of an FFT of exact data on grids of ~10⁴ points.
const ROUNDING_NOISE: f64 = 4e-15;
/// Band cut by vanishing μ̂ is tolerated only where p̂ has already decayed.
const EDGE_RESIDUAL: f64 = 1e-3;

/// Position density from one margin: p̂ = M̂ / (√(2π) μ̂) on the band where
/// it can be resolved, cubic interpolation across isolated zeros of μ̂,
/// then inverse transform, clipping and renormalization.
///
/// The margin is read as periodic data, so its DFT is its characteristic
/// function on the conjugate grid.
pub fn fourier_deconvolve(
    margin: &Measure1D,
    mu_hat: impl Fn(f64) -> Complex64,
    cfg: &DeconvolveConfig,
) -> Result<(Measure1D, DeconvolveDiagnostics)> {
    let grid = margin.grid;
    if !grid.is_centered() {
        return invalid("deconvolution needs a grid centered on 0");
    }
    if !(cfg.eps_floor > 0.0 && cfg.eps_floor < 1.0) {
        return invalid(format!("eps_floor = {} outside (0, 1)", cfg.eps_floor));
    }
    let n = grid.n;
    let periodic = margin.clone().with_boundary(Boundary::Periodic);
    let mass = periodic.mass();
    if (mass - 1.0).abs() > 1e-6 {
        return invalid(format!("margin mass {mass} differs from 1"));
    }
    let big_m = fourier_transform(&periodic.to_grid_function()).function;
    let pg = big_m.grid;
    let c = n / 2;
    let mu: Vec<Complex64> = pg.points().iter().map(|&p| mu_hat(p)).collect();
    let mu_abs: Vec<f64> = mu.iter().map(|z| z.norm()).collect();
    let mu_max = mu_abs.iter().cloned().fold(0.0, f64::max);
    if mu_abs[c] == 0.0 {
        return invalid("convolver transform vanishes at the origin");
    }
    let noise = cfg.noise.unwrap_or(ROUNDING_NOISE * periodic.density.iter().cloned().fold(0.0, f64::max));
    let est: Vec<Complex64> =
        (0..n).map(|k| if mu_abs[k] > 0.0 { big_m.values[k] / (mu[k] * TWO_PI.sqrt()) } else { 0.0.into() }).collect();
    let sigma: Vec<f64> = (0..n).map(|k| noise / (TWO_PI.sqrt() * mu_abs[k].max(f64::MIN_POSITIVE))).collect();
    let dip = dip_flags(&mu, &mu_abs, cfg.eps_floor);

    let walk = |dir: isize| -> (usize, BandLimit) {
        let step = |k: usize| (k as isize + dir) as usize;
        let in_range = |k: isize| k >= 0 && (k as usize) < n;
        let mut k = c;
        loop {
            let next = k as isize + dir;
            if !in_range(next) {
                return (k, BandLimit::GridEdge);
            }
            let nk = step(k);
            if mu_abs[nk] <= cfg.vanish_rel * mu_max {
                return (k, BandLimit::Vanishing);
            }
            // next NOISE_WINDOW usable samples from nk outward
            let mut window = Vec::with_capacity(NOISE_WINDOW);
            let mut j = nk as isize;
            while in_range(j) && window.len() < NOISE_WINDOW {
                let ju = j as usize;
                if mu_abs[ju] <= cfg.vanish_rel * mu_max {
                    break;
                }
                if !dip[ju] {
                    window.push(ju);
                }
                j += dir;
            }
            if window.len() == NOISE_WINDOW {
                let signal: f64 = window.iter().map(|&i| est[i].norm()).sum();
                let spread: f64 = window.iter().map(|&i| sigma[i]).sum();
                if signal < cfg.snr_min * spread {
                    return (k, BandLimit::Noise);
                }
            }
            k = nk;
        }
    };
    let (lo, lo_limit) = walk(-1);
    let (hi, hi_limit) = walk(1);

    let p0 = est[c].norm();
    for (edge, limit) in [(lo, lo_limit), (hi, hi_limit)] {
        if limit == BandLimit::Vanishing && est[edge].norm() > EDGE_RESIDUAL * p0 {
            return Err(Error::SupportDeficient(format!(
                "convolver transform vanishes beyond p = {:.4} where the state transform estimate is still {:.3e}",
                pg.point(edge),
                est[edge].norm()
            )));
        }
    }

    let mut p_hat = vec![Complex64::new(0.0, 0.0); n];
    p_hat[lo..=hi].copy_from_slice(&est[lo..=hi]);
    let mut bands = Vec::new();
    let mut filled = 0;
    let mut k = lo;
    while k <= hi {
        if !dip[k] {
            k += 1;
            continue;
        }
        let start = k;
        while k <= hi && dip[k] {
            k += 1;
        }
        let end = k - 1;
        let len = end - start + 1;
        if len > cfg.max_fill {
            return Err(Error::SupportDeficient(format!(
                "convolver transform below floor on [{:.4}, {:.4}] ({len} samples)",
                pg.point(start),
                pg.point(end)
            )));
        }
        let nodes = flanking_nodes(&dip, start, end, lo, hi);
        if nodes.len() < 2 {
            return Err(Error::SupportDeficient(format!("no valid samples around p = {:.4}", pg.point(start))));
        }
        for i in start..=end {
            p_hat[i] = lagrange(&nodes, &est, i);
        }
        bands.push([pg.point(start), pg.point(end)]);
        filled += len;
    }

    let back = inverse_fourier_transform(&GridFunction::new(pg, p_hat)?);
    let raw: Vec<f64> = back.values.iter().map(|z| z.re).collect();
    let dx = grid.dx();
    let min_value = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    let clipped_mass: f64 = raw.iter().filter(|v| **v < 0.0).map(|v| -v * dx).sum();
    let lobes = raw.iter().filter(|v| **v < CLIP_THRESHOLD).count();
    let clipped: Vec<f64> = raw.iter().map(|v| v.max(0.0)).collect();
    let out = Measure1D::new(grid, clipped, Boundary::Periodic)?;
    let before = out.mass();
    let out = out.normalized();
    let diag = DeconvolveDiagnostics {
        band: [pg.point(lo), pg.point(hi)],
        band_limits: [lo_limit, hi_limit],
        interpolated_bands: bands,
        interpolated_samples: filled,
        noise,
        clip_threshold: CLIP_THRESHOLD,
        clipped_lobe_samples: lobes,
        clipped_mass,
        min_value,
        mass_before_normalization: before,
    };
    Ok((out, diag))
}

/// Samples of μ̂ too close to one of its zeros to divide by: local dips
/// below eps_floor and the smaller side of every phase reversal.
fn dip_flags(mu: &[Complex64], mu_abs: &[f64], eps_floor: f64) -> Vec<bool> {
    let n = mu.len();
    let mut dip = vec![false; n];
    for k in 0..n {
        let left = mu_abs[k.saturating_sub(DIP_WINDOW)..k].iter().cloned().fold(0.0, f64::max);
        let right = mu_abs[(k + 1).min(n)..(k + 1 + DIP_WINDOW).min(n)].iter().cloned().fold(0.0, f64::max);
        if k > 0 && k + 1 < n && mu_abs[k] < eps_floor * left.min(right) {
            dip[k] = true;
        }
    }
    for k in 0..n.saturating_sub(1) {
        if (mu[k] * mu[k + 1].conj()).re < 0.0 {
            let j = if mu_abs[k] <= mu_abs[k + 1] { k } else { k + 1 };
            dip[j] = true;
        }
    }
    dip
}

/// Two valid samples on each side of a dip run, within the band.
fn flanking_nodes(dip: &[bool], start: usize, end: usize, lo: usize, hi: usize) -> Vec<usize> {
    let mut nodes = Vec::with_capacity(4);
    let mut j = start;
    while j > lo && nodes.len() < 2 {
        j -= 1;
        if !dip[j] {
            nodes.push(j);
        }
    }
    let left = nodes.len();
    let mut j = end;
    while j < hi && nodes.len() < left + 2 {
        j += 1;
        if !dip[j] {
            nodes.push(j);
        }
    }
    nodes
}

fn lagrange(nodes: &[usize], values: &[Complex64], at: usize) -> Complex64 {
    let x = at as f64;
    nodes
        .iter()
        .map(|&i| {
            let w: f64 = nodes.iter().filter(|&&j| j != i).map(|&j| (x - j as f64) / (i as f64 - j as f64)).product();
            values[i] * w
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{convolved_operator, husimi_operator, prop1_mu_hat, prop1_operator, StripSeries};
    use crate::hilbert::{position_density, Grid, HermiteState, State};
    use crate::phase_space::{ft_convolver, margin_density, Axis};
    use crate::reconstruct::l1_distance;

    fn husimi_mu(p: f64) -> Complex64 {
        (INV_SQRT_2PI * (-0.25 * p * p).exp()).into()
    }

    #[test]
    fn gaussian_deconvolution() {
        let g = Grid::default_line();
        let margin = Measure1D::new(g, g.points().iter().map(|x| INV_SQRT_2PI * (-0.5 * x * x).exp()).collect(), Boundary::Periodic).unwrap();
        let (rec, diag) = fourier_deconvolve(&margin, husimi_mu, &DeconvolveConfig::default()).unwrap();
        let truth = Measure1D::new(g, g.points().iter().map(|x| (-x * x).exp() / std::f64::consts::PI.sqrt()).collect(), Boundary::Periodic).unwrap();
        let err = l1_distance(&rec, &truth).unwrap();
        assert!(err < 1e-6, "{err}");
        assert!(diag.interpolated_bands.is_empty());
        assert_eq!(diag.band_limits, [BandLimit::Noise, BandLimit::Noise]);
    }

    #[test]
    fn flat_transform_is_identity() {
        let g = Grid::symmetric(10.0, 1001).unwrap();
        let d: Vec<f64> = g.points().iter().map(|x| (-(x - 1.0).powi(2)).exp() / std::f64::consts::PI.sqrt()).collect();
        let margin = Measure1D::new(g, d, Boundary::Periodic).unwrap();
        let (rec, diag) = fourier_deconvolve(&margin, |_| INV_SQRT_2PI.into(), &DeconvolveConfig::default()).unwrap();
        assert!(rec.sup_distance(&margin).unwrap() < 1e-12);
        assert!(diag.interpolated_bands.is_empty() && !diag.band_limits.contains(&BandLimit::Vanishing));
    }

    #[test]
    fn prop1_round_trip_interpolates_at_zeros() {
        let g = Grid::default_line();
        let state: State = HermiteState::from_real(&[1.0, 1.0]).unwrap().into();
        let margin = margin_density(&prop1_operator(), &state, Axis::Position, g, Boundary::Periodic).unwrap();
        let (rec, diag) = fourier_deconvolve(&margin, |p| prop1_mu_hat(p).into(), &DeconvolveConfig::default()).unwrap();
        let truth = position_density(&state, g);
        let err = l1_distance(&rec, &truth).unwrap();
        assert!(err < 1e-3, "{err}");
        assert!(!diag.interpolated_bands.is_empty());
        for b in &diag.interpolated_bands {
            let n = (0.5 * (b[0] + b[1]) / TWO_PI).round();
            assert!(n != 0.0 && (0.5 * (b[0] + b[1]) - TWO_PI * n).abs() < 0.5, "{b:?}");
        }
    }

    #[test]
    fn bounded_support_is_refused() {
        let g = Grid::default_line();
        let check = Grid::symmetric(3.0, 13).unwrap();
        let t = convolved_operator(&StripSeries::dyadic(2).unwrap(), &husimi_operator(), (check, check)).unwrap();
        let state: State = HermiteState::basis(0).into();
        // any margin whose transform is not yet negligible at |p| = 1 will do
        let margin = margin_density(&husimi_operator(), &state, Axis::Position, g, Boundary::Periodic).unwrap();
        let err = fourier_deconvolve(&margin, |p| ft_convolver(&t, Axis::Position, p).unwrap(), &DeconvolveConfig::default())
            .unwrap_err();
        assert!(err.to_string().contains("convolver support deficient — deconvolution ill-posed"), "{err}");
    }

    #[test]
    fn rejects_bad_input() {
        let g = Grid::new(0.0, 1.0, 11).unwrap();
        let m = Measure1D::new(g, vec![1.0; 11], Boundary::Periodic).unwrap();
        assert!(fourier_deconvolve(&m, husimi_mu, &DeconvolveConfig::default()).is_err());
        let g = Grid::symmetric(1.0, 11).unwrap();
        let m = Measure1D::new(g, vec![3.0; 11], Boundary::Periodic).unwrap();
        assert!(fourier_deconvolve(&m, husimi_mu, &DeconvolveConfig::default()).is_err());
    }
}
