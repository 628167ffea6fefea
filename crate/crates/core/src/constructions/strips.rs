use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use super::Function2D;
use crate::constants::TWO_PI;
use crate::error::{invalid, Result};
use crate::hilbert::Grid;

/// Largest supported truncation depth (2^8 − 1 directions at the finest level).
pub const MAX_N: usize = 8;

/// Levels beyond the truncation depth consulted when attributing a zero of
/// f̂ to the omitted part of the series.
const EXPLAIN_LEVELS: usize = 12;

fn rotate(theta: f64, a: f64, b: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (a * c + b * s, -a * s + b * c)
}

/// g_{θ,r}(x, y): a probability density whose transform is supported in a
/// strip of half-width r around the line at angle θ.
pub fn strip_g(theta: f64, r: f64, x: f64, y: f64) -> f64 {
    let (xr, yr) = rotate(theta, x, y);
    let profile = if yr.abs() < 1e-4 {
        let u = r * yr;
        0.5 * r * r * (1.0 - u * u / 12.0)
    } else {
        let s = (0.5 * r * yr).sin();
        2.0 * s * s / (yr * yr)
    };
    profile * (-0.25 * xr * xr).exp() / (2.0 * r * PI.powf(1.5))
}

/// ĝ_{θ,r}(q, p) = (2πr)^{-1} e^{−q'²} (r − |p'|)_+ in rotated coordinates.
pub fn strip_g_hat(theta: f64, r: f64, q: f64, p: f64) -> f64 {
    let (qr, pr) = rotate(theta, q, p);
    let tri = r - pr.abs();
    if tri <= 1e-12 * r {
        return 0.0;
    }
    (-qr * qr).exp() * tri / (TWO_PI * r)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StripTerm {
    pub n: usize,
    pub k: usize,
    pub theta: f64,
    pub r: f64,
    pub weight: f64,
}

/// Weighted sum of strip functions, optionally symmetrized in x:
/// f = C (g(x,y) + g(−x,y)) or f = C g.
#[derive(Clone, Debug)]
pub struct StripSeries {
    pub terms: Vec<StripTerm>,
    pub c: f64,
    reflect: bool,
    depth: Option<usize>,
    label: String,
}

impl StripSeries {
    /// Dyadic series Σ_{n ≤ N} Σ_{k < 2^n} 2^{−(n+k)} g_{kθ_n, r_n} with
    /// θ_n = π/2^{n+1} and r_n = sin θ_n/(2^n − 1), reflected in x.
    pub fn dyadic(n_max: usize) -> Result<Self> {
        if !(1..=MAX_N).contains(&n_max) {
            return invalid(format!("N_max = {n_max} outside 1..={MAX_N}"));
        }
        let mut terms = Vec::new();
        for n in 1..=n_max {
            let theta_n = PI / 2f64.powi(n as i32 + 1);
            let r_n = theta_n.sin() / (2f64.powi(n as i32) - 1.0);
            for k in 1..(1usize << n) {
                terms.push(StripTerm {
                    n,
                    k,
                    theta: k as f64 * theta_n,
                    r: r_n,
                    weight: 2f64.powi(-((n + k) as i32)),
                });
            }
        }
        // each g_{θ,r} has unit mass, so ∫∫ f = 2C Σ weights
        let total: f64 = terms.iter().map(|t| t.weight).sum();
        Ok(StripSeries { terms, c: 0.5 / total, reflect: true, depth: Some(n_max), label: format!("prop2:{n_max}") })
    }

    /// f₀ = C₀ (g_{0,1} + g_{π/2,1}).
    pub fn remark() -> Self {
        let terms = vec![
            StripTerm { n: 0, k: 0, theta: 0.0, r: 1.0, weight: 1.0 },
            StripTerm { n: 0, k: 1, theta: FRAC_PI_2, r: 1.0, weight: 1.0 },
        ];
        StripSeries { terms, c: 0.5, reflect: false, depth: None, label: "remark-f0".into() }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dyadic_depth(&self) -> Option<usize> {
        self.depth
    }

    pub fn eval_g(&self, x: f64, y: f64) -> f64 {
        self.terms.iter().map(|t| t.weight * strip_g(t.theta, t.r, x, y)).sum()
    }

    pub fn eval_g_hat(&self, q: f64, p: f64) -> f64 {
        self.terms.iter().map(|t| t.weight * strip_g_hat(t.theta, t.r, q, p)).sum()
    }

    pub fn eval_f(&self, x: f64, y: f64) -> f64 {
        let mirror = if self.reflect { self.eval_g(-x, y) } else { 0.0 };
        self.c * (self.eval_g(x, y) + mirror)
    }

    pub fn eval_f_hat(&self, q: f64, p: f64) -> f64 {
        let mirror = if self.reflect { self.eval_g_hat(-q, p) } else { 0.0 };
        self.c * (self.eval_g_hat(q, p) + mirror)
    }

    /// Exact total mass, from the unit mass of every strip function.
    pub fn exact_mass(&self) -> f64 {
        let factor = if self.reflect { 2.0 } else { 1.0 };
        factor * self.c * self.terms.iter().map(|t| t.weight).sum::<f64>()
    }

    /// Sup of r/sin θ over the terms: f̂(q, 0) = 0 for |q| at or beyond it.
    pub fn q_star(&self) -> f64 {
        self.terms.iter().map(|t| t.r / t.theta.sin()).fold(0.0, f64::max)
    }

    /// Sup of r/cos θ over the terms: f̂(0, p) = 0 for |p| at or beyond it.
    pub fn p_star(&self) -> f64 {
        self.terms.iter().map(|t| t.r / t.theta.cos()).fold(0.0, f64::max)
    }

    /// True when a cell of the given radius around (q, p) meets the strip of
    /// a series term omitted by the truncation (levels N+1..N+12).
    pub fn explains_gap(&self, q: f64, p: f64, radius: f64) -> bool {
        let Some(n_max) = self.depth else { return false };
        let rad = q.hypot(p);
        if rad <= radius {
            return true;
        }
        let beta = p.abs().atan2(q.abs());
        for n in n_max + 1..=n_max + EXPLAIN_LEVELS {
            let theta_n = PI / 2f64.powi(n as i32 + 1);
            let r_n = theta_n.sin() / (2f64.powi(n as i32) - 1.0);
            let k = (beta / theta_n).round().clamp(1.0, 2f64.powi(n as i32) - 1.0);
            let dist = rad * (beta - k * theta_n).sin().abs();
            if dist <= radius + r_n {
                return true;
            }
        }
        false
    }
}

#[derive(Clone, Debug)]
pub struct Prop2Params {
    pub n_max: usize,
    pub grid2d: (Grid, Grid),
}

impl Prop2Params {
    pub fn new(n_max: usize, grid2d: (Grid, Grid)) -> Result<Self> {
        if !(1..=MAX_N).contains(&n_max) {
            return invalid(format!("N_max = {n_max} outside 1..={MAX_N}"));
        }
        Ok(Prop2Params { n_max, grid2d })
    }

    /// [−4, 4]² with spacing 0.05.
    pub fn default_grid() -> (Grid, Grid) {
        let g = Grid::symmetric(4.0, 161).expect("valid grid");
        (g, g)
    }
}

/// Tabulated convolving function, its transform and the series behind them.
#[derive(Clone, Debug)]
pub struct StripConstruction {
    pub f: Function2D,
    pub f_hat: Function2D,
    pub c: f64,
    pub series: StripSeries,
}

pub type Prop2Construction = StripConstruction;

fn tabulate(series: StripSeries, (gx, gy): (Grid, Grid)) -> StripConstruction {
    let f = Function2D::tabulate(gx, gy, |x, y| series.eval_f(x, y));
    let f_hat = Function2D::tabulate(gx, gy, |q, p| series.eval_f_hat(q, p));
    StripConstruction { f, f_hat, c: series.c, series }
}

/// Truncated dyadic strip series and its closed-form transform.
pub fn prop2_f(params: &Prop2Params) -> Result<StripConstruction> {
    Ok(tabulate(StripSeries::dyadic(params.n_max)?, params.grid2d))
}

/// Two axis-aligned strips of half-width 1.
pub fn remark_f0(grid2d: (Grid, Grid)) -> StripConstruction {
    tabulate(StripSeries::remark(), grid2d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strip_transform_support() {
        let r = 0.3;
        assert!(strip_g_hat(0.0, r, 1.0, 0.299) > 0.0);
        assert_eq!(strip_g_hat(0.0, r, 1.0, 0.3), 0.0);
        assert_eq!(strip_g_hat(0.0, r, -5.0, -0.4), 0.0);
        let theta: f64 = 0.4;
        let qb = r / theta.sin();
        assert_eq!(strip_g_hat(theta, r, qb, 0.0), 0.0);
        assert_eq!(strip_g_hat(theta, r, -qb - 0.1, 0.0), 0.0);
        assert!(strip_g_hat(theta, r, 0.99 * qb, 0.0) > 0.0);
    }

    #[test]
    fn strip_value_at_removable_point() {
        let r = 0.7;
        let at_zero = strip_g(0.0, r, 0.3, 0.0);
        let near = strip_g(0.0, r, 0.3, 2e-5);
        assert!((at_zero - near).abs() < 1e-9 * at_zero);
        let expect = 0.5 * r * r * (-0.25f64 * 0.09).exp() / (2.0 * r * PI.powf(1.5));
        assert!((at_zero - expect).abs() < 1e-15);
    }

    #[test]
    fn dyadic_parameters() {
        let s = StripSeries::dyadic(4).unwrap();
        assert_eq!(s.terms.len(), 1 + 3 + 7 + 15);
        let r: Vec<f64> = (1..=4).map(|n| s.terms.iter().find(|t| t.n == n).unwrap().r).collect();
        assert!((r[0] - (PI / 4.0).sin()).abs() < 1e-15);
        assert!((r[1] - (PI / 8.0).sin() / 3.0).abs() < 1e-15);
        assert!((s.exact_mass() - 1.0).abs() < 1e-15);
        assert!(StripSeries::dyadic(0).is_err() && StripSeries::dyadic(9).is_err());
    }

    #[test]
    fn truncated_bound_is_one() {
        // the first term alone gives r_1/sin θ_1 = 1
        for n in 1..=MAX_N {
            let s = StripSeries::dyadic(n).unwrap();
            assert!((s.q_star() - 1.0).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn f_hat_vanishes_beyond_q_star_on_axis() {
        let s = StripSeries::dyadic(4).unwrap();
        let qs = s.q_star();
        for k in 0..2000 {
            let q = qs + 1e-9 + 0.005 * k as f64;
            assert_eq!(s.eval_f_hat(q, 0.0), 0.0);
            assert_eq!(s.eval_f_hat(-q, 0.0), 0.0);
        }
        assert!(s.eval_f_hat(0.99, 0.0) > 0.0);
    }

    #[test]
    fn remark_support() {
        let s = StripSeries::remark();
        assert_eq!(s.eval_f_hat(1.0, 1.0), 0.0);
        assert_eq!(s.eval_f_hat(-2.5, 1.7), 0.0);
        assert!(s.eval_f_hat(0.5, 0.0) > 0.0);
        assert!((s.exact_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn f_is_symmetric_and_nonnegative() {
        let c = prop2_f(&Prop2Params::new(3, Prop2Params::default_grid()).unwrap()).unwrap();
        let g = c.f.x_grid;
        for i in (0..g.n).step_by(7) {
            for j in (0..g.n).step_by(5) {
                assert!(c.f.at(i, j) >= 0.0);
                assert!((c.f.at(i, j) - c.f.at(g.n - 1 - i, j)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gaps_explained_only_near_omitted_strips() {
        let s = StripSeries::dyadic(2).unwrap();
        assert!(s.explains_gap(2.0, 0.3, 0.05));
        assert!(!StripSeries::remark().explains_gap(2.0, 2.0, 0.05));
    }
}
