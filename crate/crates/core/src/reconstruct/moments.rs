use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hilbert::{Boundary, Grid, Measure1D};
use crate::phase_space::{convolving_measures, Axis, GeneratingOperator};

/// Edge integrand |x|^k ρ(x) above this fraction of its maximum marks a
/// heavy tail.
const TAIL_TOLERANCE: f64 = 1e-9;
/// Largest polynomial degree accepted by [`density_from_moments`].
pub const MAX_MOMENT_DEGREE: usize = 12;
const MAX_CONDITION: f64 = 1e12;
const GROWTH_SLOPE: f64 = 0.01;
/// Odd moments below this fraction of √(|m[k−1] m[k+1]|) are rounding residue.
const ODD_RESIDUE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSequence {
    pub values: Vec<f64>,
    /// Standard errors of empirical estimates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standard_errors: Option<Vec<f64>>,
    /// Set when the tails at the grid edge still carry the integrand.
    #[serde(default)]
    pub heavy_tail: bool,
}

impl MomentSequence {
    pub fn new(values: Vec<f64>) -> Self {
        MomentSequence { values, standard_errors: None, heavy_tail: false }
    }

    /// Highest order K.
    pub fn order(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn delta() -> Self {
        Self::new(vec![1.0])
    }

    /// Moments of the centered normal law with the given variance.
    pub fn gaussian(variance: f64, order: usize) -> Self {
        let mut v = vec![0.0; order + 1];
        v[0] = 1.0;
        for k in (2..=order).step_by(2) {
            v[k] = v[k - 2] * (k - 1) as f64 * variance;
        }
        Self::new(v)
    }

    /// Pads with the moments of a point mass at 0 up to order K.
    pub fn padded(mut self, order: usize) -> Self {
        self.values.resize(order + 1, 0.0);
        self
    }
}

/// m[k] = ∫ x^k dμ for k ≤ K.
pub fn moments_of(measure: &Measure1D, order: usize) -> MomentSequence {
    let g = measure.grid;
    let values = (0..=order).map(|k| measure.integrate(|x| x.powi(k as i32))).collect();
    let heavy_tail = (1..=order).any(|k| {
        let integrand = |i: usize| g.point(i).abs().powi(k as i32) * measure.density[i].abs();
        let max = (0..g.n).map(integrand).fold(0.0, f64::max);
        max > 0.0 && integrand(0).max(integrand(g.n - 1)) > TAIL_TOLERANCE * max
    });
    MomentSequence { values, standard_errors: None, heavy_tail }
}

/// Moments of μ^T (position) or ν^T (momentum); refused when the measure
/// has no finite moments of the requested order.
pub fn convolver_moments(t: &GeneratingOperator, axis: Axis, order: usize, grid: Grid) -> Result<MomentSequence> {
    let (mu, nu) = convolving_measures(t, grid, Boundary::Truncated)?;
    let m = moments_of(if axis == Axis::Position { &mu } else { &nu }, order);
    if m.heavy_tail {
        return Err(Error::NoFiniteMoments(format!(
            "convolving measure keeps |x|^k weight at the grid edge for some k ≤ {order}"
        )));
    }
    Ok(m)
}

fn binomials(order: usize) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![1.0]];
    for k in 1..=order {
        let prev = &rows[k - 1];
        let mut row = vec![1.0; k + 1];
        for j in 1..k {
            row[j] = prev[j - 1] + prev[j];
        }
        rows.push(row);
    }
    rows
}

fn check_lengths(a: &MomentSequence, b: &MomentSequence) -> Result<()> {
    if a.values.len() != b.values.len() {
        return Err(Error::LengthMismatch(a.values.len(), b.values.len()));
    }
    if a.values.is_empty() {
        return invalid("empty moment sequence");
    }
    Ok(())
}

/// Double-double accumulator for the binomial recursions.
#[derive(Clone, Copy, Debug)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd { hi: s, lo: (a - (s - bb)) + (b - bb) }
    }

    fn renorm(hi: f64, lo: f64) -> Dd {
        let s = hi + lo;
        Dd { hi: s, lo: lo - (s - hi) }
    }

    fn prod(a: f64, b: f64) -> Dd {
        let p = a * b;
        Dd { hi: p, lo: a.mul_add(b, -p) }
    }

    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        Dd::renorm(s.hi, s.lo + self.lo + o.lo)
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    fn mul(self, o: Dd) -> Dd {
        let p = Dd::prod(self.hi, o.hi);
        Dd::renorm(p.hi, p.lo + self.hi * o.lo + self.lo * o.hi)
    }

    fn div(self, d: f64) -> Dd {
        let q = self.hi / d;
        let r = self.add(Dd::prod(q, d).neg());
        Dd::renorm(q, r.hi / d)
    }
}

/// Moments of a sum of independent variables: c[k] = Σ_n C(k,n) a[k−n] b[n].
pub fn convolve_moments(a: &MomentSequence, b: &MomentSequence) -> Result<MomentSequence> {
    check_lengths(a, b)?;
    let binom = binomials(a.order());
    let values = (0..a.values.len())
        .map(|k| {
            (0..=k)
                .fold(Dd::ZERO, |acc, n| acc.add(Dd::prod(binom[k][n], b.values[n]).mul(Dd::from(a.values[k - n]))))
                .hi
        })
        .collect();
    Ok(MomentSequence::new(values))
}

/// Inverse of [`convolve_moments`] in its second argument: the state
/// moments m with margin = conv ⋆ m.
pub fn deconvolve_moments(margin: &MomentSequence, conv: &MomentSequence) -> Result<MomentSequence> {
    check_lengths(margin, conv)?;
    if conv.values[0] == 0.0 {
        return invalid("convolver has zero mass");
    }
    let binom = binomials(margin.order());
    let mut m: Vec<Dd> = Vec::with_capacity(margin.values.len());
    for k in 0..margin.values.len() {
        let acc = (0..k).fold(Dd::ZERO, |acc, n| acc.add(Dd::prod(binom[k][n], conv.values[k - n]).mul(m[n])));
        m.push(Dd::from(margin.values[k]).add(acc.neg()).div(conv.values[0]));
    }
    Ok(MomentSequence::new(m.into_iter().map(|v| v.hi).collect()))
}

/// [`deconvolve_moments`] with standard errors propagated through the
/// (linear) recursion from the covariance of the margin moments.
pub fn deconvolve_moments_with_errors(
    margin: &MomentSequence,
    covariance: &DMatrix<f64>,
    conv: &MomentSequence,
) -> Result<MomentSequence> {
    let k = margin.values.len();
    if covariance.nrows() != k || covariance.ncols() != k {
        return Err(Error::LengthMismatch(covariance.nrows(), k));
    }
    let mut out = deconvolve_moments(margin, conv)?;
    let mut l = DMatrix::zeros(k, k);
    for j in 0..k {
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        let col = deconvolve_moments(&MomentSequence::new(e), conv)?;
        l.set_column(j, &DVector::from_vec(col.values));
    }
    let var = &l * covariance * l.transpose();
    out.standard_errors = Some((0..k).map(|i| var[(i, i)].max(0.0).sqrt()).collect());
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpBoundFit {
    pub c: f64,
    pub r: f64,
    pub satisfied: bool,
    pub max_ratio_order: usize,
    /// Least-squares slope of log r_k against k.
    pub slope: f64,
}

/// An odd moment that is zero up to rounding, measured against the
/// Cauchy–Schwarz bound |m[k]| ≤ √(m[k−1] m[k+1]).
fn negligible(m: &[f64], k: usize) -> bool {
    if m[k] == 0.0 {
        return true;
    }
    k % 2 == 1 && k + 1 < m.len() && m[k].abs() <= ODD_RESIDUE * (m[k - 1] * m[k + 1]).abs().sqrt()
}

/// Finite-order test of |m[k]| ≤ C R^k k!, with r_k = (|m[k]|/k!)^{1/k}.
pub fn exp_bound_check(m: &MomentSequence) -> Result<ExpBoundFit> {
    let mut ratios = Vec::new();
    let mut log_fact = 0.0;
    for (k, &v) in m.values.iter().enumerate().skip(1) {
        log_fact += (k as f64).ln();
        if !negligible(&m.values, k) {
            ratios.push((k, ((v.abs().ln() - log_fact) / k as f64).exp()));
        }
    }
    if ratios.is_empty() {
        return Ok(ExpBoundFit { c: m.values.first().map_or(0.0, |v| v.abs()), r: 0.0, satisfied: true, max_ratio_order: 0, slope: 0.0 });
    }
    let (max_ratio_order, r) = ratios.iter().cloned().fold((0, 0.0), |acc, (k, rk)| if rk > acc.1 { (k, rk) } else { acc });
    let mut c = m.values[0].abs();
    let mut log_fact = 0.0;
    for (k, &v) in m.values.iter().enumerate().skip(1) {
        log_fact += (k as f64).ln();
        if !negligible(&m.values, k) {
            c = c.max((v.abs().ln() - log_fact - k as f64 * r.ln()).exp());
        }
    }
    let slope = if ratios.len() < 2 {
        0.0
    } else {
        let n = ratios.len() as f64;
        let mx = ratios.iter().map(|(k, _)| *k as f64).sum::<f64>() / n;
        let my = ratios.iter().map(|(_, r)| r.ln()).sum::<f64>() / n;
        let sxy: f64 = ratios.iter().map(|(k, r)| (*k as f64 - mx) * (r.ln() - my)).sum();
        let sxx: f64 = ratios.iter().map(|(k, _)| (*k as f64 - mx).powi(2)).sum();
        sxy / sxx
    };
    Ok(ExpBoundFit { c, r, satisfied: slope < GROWTH_SLOPE, max_ratio_order, slope })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentFitDiagnostics {
    pub degree: usize,
    pub coefficients: Vec<f64>,
    pub condition_number: f64,
    pub clipped_mass: f64,
    pub mass_before_normalization: f64,
}

/// ∫ x^i e^{−x²} dx.
fn gaussian_weight_moment(i: usize) -> f64 {
    if i % 2 == 1 {
        return 0.0;
    }
    let j = i / 2;
    (1..=j).fold(std::f64::consts::PI.sqrt(), |acc, l| acc * (2 * l - 1) as f64 / 2.0)
}

/// Density e^{−x²} Σ_j c_j x^j of degree `degree` matching m[0..=degree].
pub fn density_from_moments(m: &MomentSequence, degree: usize, grid: Grid) -> Result<(Measure1D, MomentFitDiagnostics)> {
    if degree % 2 == 1 {
        return invalid(format!("degree {degree} is odd"));
    }
    if degree > MAX_MOMENT_DEGREE {
        return Err(Error::DegreeTooLarge(degree, MAX_MOMENT_DEGREE));
    }
    if m.values.len() < degree + 1 {
        return Err(Error::LengthMismatch(m.values.len(), degree + 1));
    }
    let d = degree + 1;
    let h = DMatrix::from_fn(d, d, |k, j| gaussian_weight_moment(k + j));
    let scale: Vec<f64> = (0..d).map(|j| 1.0 / h[(j, j)].sqrt()).collect();
    let scaled = DMatrix::from_fn(d, d, |k, j| h[(k, j)] * scale[k] * scale[j]);
    let rhs = DVector::from_fn(d, |k, _| m.values[k] * scale[k]);
    let svd = scaled.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if cond > MAX_CONDITION {
        return Err(Error::IllConditioned(cond));
    }
    let y = svd.solve(&rhs, 0.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let coefficients: Vec<f64> = (0..d).map(|j| y[j] * scale[j]).collect();
    let raw: Vec<f64> = grid
        .points()
        .iter()
        .map(|&x| (-x * x).exp() * coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c))
        .collect();
    let measure = Measure1D::new(grid, raw, Boundary::Truncated)?;
    let clipped_mass: f64 = (0..grid.n).map(|i| measure.weight(i) * (-measure.density[i]).max(0.0)).sum();
    let clipped = Measure1D::new(grid, measure.density.iter().map(|v| v.max(0.0)).collect(), Boundary::Truncated)?;
    let before = clipped.mass();
    let out = clipped.normalized();
    Ok((
        out,
        MomentFitDiagnostics { degree, coefficients, condition_number: cond, clipped_mass, mass_before_normalization: before },
    ))
}

/// ∫ |a − b| with the quadrature weights of `a`.
pub fn l1_distance(a: &Measure1D, b: &Measure1D) -> Result<f64> {
    if a.grid.n != b.grid.n || (a.grid.x_min - b.grid.x_min).abs() > 1e-9 || (a.grid.x_max - b.grid.x_max).abs() > 1e-9 {
        return Err(Error::GridMismatch);
    }
    Ok((0..a.grid.n).map(|i| a.weight(i) * (a.density[i] - b.density[i]).abs()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{husimi_operator, prop1_operator};
    use crate::hilbert::{position_density, HermiteState, State};
    use crate::phase_space::margin_density;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn gaussian_quadrature_moments() {
        let g = Grid::default_line();
        let m = Measure1D::new(g, g.points().iter().map(|x| (-x * x).exp() / PI.sqrt()).collect(), Boundary::Truncated).unwrap();
        let mom = moments_of(&m, 6);
        assert!((mom.values[2] - 0.5).abs() < 1e-12 && (mom.values[4] - 0.75).abs() < 1e-12);
        assert!(mom.values[1].abs() < 1e-10 && mom.values[3].abs() < 1e-10 && mom.values[5].abs() < 1e-10);
        assert!(!mom.heavy_tail);
        assert_eq!(MomentSequence::gaussian(0.5, 4).values, vec![1.0, 0.0, 0.5, 0.0, 0.75]);
    }

    #[test]
    fn sinc_measure_has_heavy_tail() {
        let g = Grid::default_line();
        let (mu, _) = convolving_measures(&prop1_operator(), g, Boundary::Truncated).unwrap();
        assert!(moments_of(&mu, 2).heavy_tail);
        let err = convolver_moments(&prop1_operator(), Axis::Position, 2, g).unwrap_err();
        assert!(err.to_string().contains("no finite moments"));
        assert!(convolver_moments(&husimi_operator(), Axis::Position, 12, g).is_ok());
    }

    #[test]
    fn convolution_identities() {
        let a = MomentSequence::gaussian(0.5, 6);
        let delta = MomentSequence::delta().padded(6);
        assert_eq!(convolve_moments(&a, &delta).unwrap(), a);
        let c = convolve_moments(&a, &a).unwrap();
        assert!((c.values[2] - 1.0).abs() < 1e-15 && (c.values[4] - 3.0).abs() < 1e-15);
        let m = deconvolve_moments(&a, &a).unwrap();
        assert_eq!(m.values, delta.values);
        assert!(convolve_moments(&a, &MomentSequence::delta()).is_err());
        assert!(deconvolve_moments(&a, &MomentSequence::delta()).is_err());
    }

    #[test]
    fn husimi_margin_moments_deconvolve_to_state() {
        let g = Grid::default_line();
        let state: State = HermiteState::basis(0).into();
        let margin = margin_density(&husimi_operator(), &state, Axis::Position, g, Boundary::Truncated).unwrap();
        let mm = moments_of(&margin, 8);
        let conv = convolver_moments(&husimi_operator(), Axis::Position, 8, g).unwrap();
        let m = deconvolve_moments(&mm, &conv).unwrap();
        let truth = MomentSequence::gaussian(0.5, 8);
        for k in 0..=8 {
            assert!(close(m.values[k], truth.values[k], 1e-8), "k={k}: {} vs {}", m.values[k], truth.values[k]);
        }
    }

    #[test]
    fn exp_bound_ignores_odd_residue() {
        let mut m = MomentSequence::gaussian(0.5, 20);
        for k in (1..20).step_by(2) {
            m.values[k] = 1e-17 * if k % 4 == 1 { 1.0 } else { -1.0 };
        }
        assert!(exp_bound_check(&m).unwrap().satisfied);
        m.values[3] = 3.0;
        assert!(exp_bound_check(&m).unwrap().r > 0.5);
    }

    #[test]
    fn exp_bound_cases() {
        let gauss = exp_bound_check(&MomentSequence::gaussian(0.5, 20)).unwrap();
        assert!(gauss.satisfied && gauss.r <= 1.0);
        let fact: Vec<f64> = (0..15).map(|k| (1..=k).map(|j| j as f64).product::<f64>() * 2f64.powi(k)).collect();
        let fit = exp_bound_check(&MomentSequence::new(fact.clone())).unwrap();
        assert!(fit.satisfied);
        assert!((fit.r - 2.0).abs() < 1e-12 && (fit.c - 1.0).abs() < 1e-12);
        for (k, v) in fact.iter().enumerate() {
            let bound = fit.c * fit.r.powi(k as i32) * (1..=k).map(|j| j as f64).product::<f64>();
            assert!(v.abs() <= bound * (1.0 + 1e-12));
        }
        let double: Vec<f64> = (0..15).map(|k| (1..=2 * k).map(|j| j as f64).product()).collect();
        assert!(!exp_bound_check(&MomentSequence::new(double)).unwrap().satisfied);
    }

    #[test]
    fn moment_density_reconstruction() {
        let g = Grid::default_line();
        let gauss = MomentSequence::gaussian(0.5, 0);
        let (_, d) = density_from_moments(&gauss, 0, g).unwrap();
        assert!((d.coefficients[0] - 1.0 / PI.sqrt()).abs() < 1e-15);

        let h1: State = HermiteState::basis(1).into();
        let truth = position_density(&h1, g);
        let (rec, _) = density_from_moments(&moments_of(&truth, 5), 4, g).unwrap();
        assert!(l1_distance(&rec, &truth).unwrap() < 1e-8);

        let mix: State = HermiteState::from_real(&[1.0, 0.0, 1.0]).unwrap().into();
        let truth = position_density(&mix, g);
        let (rec, d) = density_from_moments(&moments_of(&truth, 9), 8, g).unwrap();
        assert!(l1_distance(&rec, &truth).unwrap() < 1e-6);
        assert!((rec.mass() - 1.0).abs() < 1e-6 && rec.min() >= 0.0);
        assert!(d.condition_number < MAX_CONDITION);

        assert!(density_from_moments(&gauss, 3, g).is_err());
        assert!(matches!(density_from_moments(&gauss.clone().padded(14), 14, g), Err(Error::DegreeTooLarge(..))));
    }

    #[test]
    fn l1_oracles() {
        let g = Grid::symmetric(10.0, 4001).unwrap();
        let gauss = |s: f64| Measure1D::new(g, g.points().iter().map(|x| (-(x - s).powi(2)).exp() / PI.sqrt()).collect(), Boundary::Truncated).unwrap();
        assert_eq!(l1_distance(&gauss(0.0), &gauss(0.0)).unwrap(), 0.0);
        // ∫|ρ(x) − ρ(x − s)| = 2 erf(s/2) for variance-½ Gaussians; the
        // trapezoid rule adds −(h²/12)·4sρ(s/2) from the kink at s/2 = 0.05,
        // which sits on a node
        let s: f64 = 0.1;
        let h = g.dx();
        let expected = 2.0 * erf(s / 2.0) - h * h / 12.0 * 4.0 * s * (-s * s / 4.0).exp() / PI.sqrt();
        assert!((l1_distance(&gauss(0.0), &gauss(s)).unwrap() - expected).abs() < 1e-8);
        let mut a = vec![0.0; g.n];
        let mut b = vec![0.0; g.n];
        a[100] = 1.0 / g.dx();
        b[200] = 1.0 / g.dx();
        let (a, b) = (Measure1D::new(g, a, Boundary::Truncated).unwrap(), Measure1D::new(g, b, Boundary::Truncated).unwrap());
        assert!((l1_distance(&a, &b).unwrap() - 2.0).abs() < 1e-12);
    }

    fn erf(x: f64) -> f64 {
        // Taylor series, adequate for |x| ≤ 1
        let mut term = x;
        let mut sum = x;
        for n in 1..40 {
            term *= -x * x / n as f64;
            sum += term / (2 * n + 1) as f64;
        }
        2.0 / PI.sqrt() * sum
    }

    fn atoms() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-1.5..1.5f64, 0.05..1.0f64), 1..5)
    }

    /// Moments of the probability measure with the given (position, weight)
    /// atoms.
    fn discrete_moments(atoms: &[(f64, f64)], k: usize) -> MomentSequence {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        MomentSequence::new((0..=k).map(|j| atoms.iter().map(|(x, w)| w * x.powi(j as i32)).sum::<f64>() / total).collect())
    }

    proptest! {
        #[test]
        fn deconvolution_inverts_convolution(
            k in 1usize..=12,
            a in atoms(),
            b in atoms(),
        ) {
            let (a, b) = (discrete_moments(&a, k), discrete_moments(&b, k));
            let c = convolve_moments(&a, &b).unwrap();
            let back = deconvolve_moments(&c, &b).unwrap();
            // relative to the largest term summed into any c[j]
            let binom = binomials(k);
            let scale = (0..=k)
                .map(|j| (0..=j).map(|n| binom[j][n] * (a.values[j - n] * b.values[n]).abs()).sum::<f64>())
                .fold(1.0, f64::max);
            for j in 0..=k {
                prop_assert!((back.values[j] - a.values[j]).abs() <= 1e-12 * scale,
                    "j={} {} vs {}", j, back.values[j], a.values[j]);
            }
        }

        #[test]
        fn integer_round_trip_is_exact(
            k in 1usize..=12,
            a in prop::collection::vec(-3i32..=3, 13),
            b in prop::collection::vec(-3i32..=3, 13),
        ) {
            let seq = |v: &[i32]| {
                let mut v: Vec<f64> = v[..=k].iter().map(|&x| x as f64).collect();
                v[0] = 1.0;
                MomentSequence::new(v)
            };
            let (a, b) = (seq(&a), seq(&b));
            let back = deconvolve_moments(&convolve_moments(&a, &b).unwrap(), &b).unwrap();
            prop_assert_eq!(back.values, a.values);
        }

        #[test]
        fn convolution_is_commutative(a in prop::collection::vec(-2.0..2.0f64, 1..10), seed in 0.0..1.0f64) {
            let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| v * seed + i as f64).collect();
            let (a, b) = (MomentSequence::new(a), MomentSequence::new(b));
            let ab = convolve_moments(&a, &b).unwrap();
            let ba = convolve_moments(&b, &a).unwrap();
            for (x, y) in ab.values.iter().zip(&ba.values) {
                prop_assert!(close(*x, *y, 1e-13));
            }
        }
    }
}
