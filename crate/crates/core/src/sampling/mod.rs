//! Seeded Monte Carlo outcomes from one-dimensional measures, their
//! empirical summaries and CSV persistence.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::constants::TWO_PI;
use crate::error::{invalid, Result};
use crate::hilbert::{Boundary, Grid, Measure1D};
use crate::reconstruct::MomentSequence;

/// Number of independent generator streams; results are reproducible for a
/// fixed (seed, worker count).
pub const WORKERS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub values: Vec<f64>,
    pub seed: u64,
    pub source_label: String,
    pub workers: usize,
    /// Mass of the source beyond its grid, which sampling cannot reach.
    pub truncation_mass: f64,
}

#[derive(Serialize, Deserialize)]
struct SampleMeta {
    seed: u64,
    source_label: String,
    n: usize,
    workers: usize,
    truncation_mass: f64,
}

/// Inverse-CDF sampling of the piecewise-linear density through the grid
/// nodes. Worker w draws from ChaCha8 stream w of `seed`.
pub fn sample_measure(mu: &Measure1D, n: usize, seed: u64, source_label: impl Into<String>) -> Result<SampleSet> {
    let g = mu.grid;
    let dx = g.dx();
    let rho = &mu.density;
    if rho.iter().any(|v| !(*v >= 0.0)) {
        return invalid("density must be nonnegative and finite");
    }
    let mut cdf = Vec::with_capacity(g.n);
    cdf.push(0.0);
    for i in 0..g.n - 1 {
        cdf.push(cdf[i] + 0.5 * dx * (rho[i] + rho[i + 1]));
    }
    let total = *cdf.last().unwrap();
    if n > 0 && total <= 0.0 {
        return invalid("measure has no mass on its grid");
    }
    let draw = |u: f64| -> f64 {
        let target = u * total;
        let cell = cdf.partition_point(|&c| c <= target).clamp(1, g.n - 1) - 1;
        let (a, b) = (rho[cell], rho[cell + 1]);
        let mass = cdf[cell + 1] - cdf[cell];
        let frac = if mass > 0.0 { ((target - cdf[cell]) / mass).clamp(0.0, 1.0) } else { 0.5 };
        // solve a t + (b − a) t²/2 = frac (a + b)/2 for t ∈ [0, 1]
        let t = if (b - a).abs() <= 1e-12 * (a + b) {
            frac
        } else {
            let disc = a * a + frac * (b * b - a * a);
            (disc.max(0.0).sqrt() - a) / (b - a)
        };
        g.point(cell) + t.clamp(0.0, 1.0) * dx
    };
    let chunk = n.div_ceil(WORKERS);
    let values: Vec<f64> = (0..WORKERS)
        .into_par_iter()
        .flat_map_iter(|w| {
            let start = (w * chunk).min(n);
            let end = ((w + 1) * chunk).min(n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(w as u64);
            (start..end).map(|_| draw(rng.random::<f64>())).collect::<Vec<_>>()
        })
        .collect();
    let truncation_mass = match mu.boundary {
        Boundary::Truncated => mu.outside_mass,
        Boundary::Periodic => 0.0,
    };
    Ok(SampleSet { values, seed, source_label: source_label.into(), workers: WORKERS, truncation_mass })
}

/// Histogram on the nodes of `grid` (nearest node, wrapped onto the grid
/// period), optionally smoothed with a Gaussian kernel of standard
/// deviation `bandwidth`. Returned as periodic data.
pub fn empirical_measure(s: &SampleSet, grid: Grid, bandwidth: f64) -> Result<Measure1D> {
    if s.values.is_empty() {
        return invalid("empty sample set");
    }
    if !(bandwidth >= 0.0) {
        return invalid(format!("bandwidth {bandwidth} is negative"));
    }
    let n = grid.n;
    let dx = grid.dx();
    let mut counts = vec![0u64; n];
    for &x in &s.values {
        let k = ((x - grid.x_min) / dx).round() as i64;
        counts[k.rem_euclid(n as i64) as usize] += 1;
    }
    let scale = 1.0 / (s.values.len() as f64 * dx);
    let mut density: Vec<f64> = counts.iter().map(|&c| c as f64 * scale).collect();
    if bandwidth > 0.0 {
        let mut buf: Vec<Complex64> = density.iter().map(|&v| v.into()).collect();
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(n).process(&mut buf);
        for (j, v) in buf.iter_mut().enumerate() {
            let freq = if 2 * j <= n { j as f64 } else { j as f64 - n as f64 };
            let k = TWO_PI * freq / (n as f64 * dx);
            *v *= (-0.5 * k * k * bandwidth * bandwidth).exp() / n as f64;
        }
        planner.plan_fft_inverse(n).process(&mut buf);
        density = buf.iter().map(|v| v.re.max(0.0)).collect();
    }
    Ok(Measure1D::new(grid, density, Boundary::Periodic)?.normalized())
}

/// Sample moments m[k] = (1/n) Σ x_i^k with standard errors
/// sd(x^k)/√n.
pub fn empirical_moments(s: &SampleSet, order: usize) -> Result<MomentSequence> {
    let n = s.values.len();
    if n == 0 {
        return invalid("empty sample set");
    }
    let (sums, squares) = power_sums(&s.values, order);
    let nf = n as f64;
    let values: Vec<f64> = sums.iter().map(|v| v / nf).collect();
    let se = (0..=order)
        .map(|k| {
            if n < 2 {
                return 0.0;
            }
            let var = (squares[k] - nf * values[k] * values[k]) / (nf - 1.0);
            (var.max(0.0) / nf).sqrt()
        })
        .collect();
    Ok(MomentSequence { values, standard_errors: Some(se), heavy_tail: false })
}

/// Σ x^k and Σ x^{2k} for k ≤ order, in parallel chunks.
fn power_sums(x: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    let zero = || (vec![0.0; order + 1], vec![0.0; order + 1]);
    x.par_chunks(4096)
        .map(|chunk| {
            let (mut s, mut q) = zero();
            for &v in chunk {
                let mut p = 1.0;
                for k in 0..=order {
                    s[k] += p;
                    q[k] += p * p;
                    p *= v;
                }
            }
            (s, q)
        })
        .reduce(zero, |(mut a, mut b), (c, d)| {
            a.iter_mut().zip(&c).for_each(|(x, y)| *x += y);
            b.iter_mut().zip(&d).for_each(|(x, y)| *x += y);
            (a, b)
        })
}

/// Covariance of the estimates m[0..=order]: (m[a+b] − m[a]m[b])/n.
pub fn empirical_moment_covariance(s: &SampleSet, order: usize) -> Result<DMatrix<f64>> {
    let n = s.values.len();
    if n == 0 {
        return invalid("empty sample set");
    }
    let (sums, _) = power_sums(&s.values, 2 * order);
    let m: Vec<f64> = sums.iter().map(|v| v / n as f64).collect();
    Ok(DMatrix::from_fn(order + 1, order + 1, |a, b| (m[a + b] - m[a] * m[b]) / n as f64))
}

/// `samples.csv` → `samples.meta.json`.
pub fn metadata_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

pub fn write_samples(s: &SampleSet, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["value"])?;
    for v in &s.values {
        w.write_record([v.to_string()])?;
    }
    w.flush()?;
    let meta = SampleMeta {
        seed: s.seed,
        source_label: s.source_label.clone(),
        n: s.values.len(),
        workers: s.workers,
        truncation_mass: s.truncation_mass,
    };
    fs::write(metadata_path(path), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

pub fn read_samples(path: &Path) -> Result<SampleSet> {
    let meta: SampleMeta = serde_json::from_str(&fs::read_to_string(metadata_path(path))?)?;
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?.iter().collect::<Vec<_>>() != ["value"] {
        return invalid(format!("{} lacks the single `value` column", path.display()));
    }
    let values = r
        .records()
        .map(|rec| {
            let rec = rec?;
            rec[0].parse::<f64>().map_err(|e| crate::Error::InvalidArgument(format!("bad sample `{}`: {e}", &rec[0])))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.len() != meta.n {
        return Err(crate::Error::LengthMismatch(values.len(), meta.n));
    }
    Ok(SampleSet {
        values,
        seed: meta.seed,
        source_label: meta.source_label,
        workers: meta.workers,
        truncation_mass: meta.truncation_mass,
    })
}
