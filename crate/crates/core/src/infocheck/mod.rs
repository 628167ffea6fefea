//! Grid-level verdicts on informational completeness, margin equivalence and
//! regularity of a generating operator.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hilbert::{Grid, GridFunction};
use crate::phase_space::{ft_convolver, weyl_transform_field, Axis, GeneratingOperator, PhaseSpaceField};

pub const CAVEAT: &str = "grid-and-tolerance limited";

/// Default tolerance, relative to the largest sampled magnitude.
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Longest run of sub-threshold samples still read as one isolated zero.
const ISOLATED_RUN: usize = 3;
const FLANK_FACTOR: f64 = 10.0;
const MAX_WITNESSES: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ZeroRegion {
    Point { x: f64 },
    Interval { lo: f64, hi: f64, samples: usize },
    /// Bounding box of one connected component of sub-threshold samples.
    Rectangle {
        q: [f64; 2],
        p: [f64; 2],
        samples: usize,
        /// Samples whose whole 3×3 neighbourhood is below threshold.
        interior: usize,
        /// Interior samples not attributable to a known truncation gap.
        unexplained_interior: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    pub dimension: u8,
    pub zero_regions: Vec<ZeroRegion>,
    /// Evenly strided subset of the samples with |value| ≥ epsilon.
    pub witness_points: Vec<Vec<f64>>,
    pub witness_count: usize,
    /// Absolute threshold.
    pub epsilon: f64,
    pub max_abs: f64,
    pub grids: Vec<Grid>,
}

impl SupportReport {
    pub fn points(&self) -> Vec<f64> {
        self.zero_regions
            .iter()
            .filter_map(|r| match r {
                ZeroRegion::Point { x } => Some(*x),
                _ => None,
            })
            .collect()
    }

    pub fn intervals(&self) -> Vec<(f64, f64)> {
        self.zero_regions
            .iter()
            .filter_map(|r| match r {
                ZeroRegion::Interval { lo, hi, .. } => Some((*lo, *hi)),
                _ => None,
            })
            .collect()
    }

    /// True when some sub-threshold set has interior on the grid.
    pub fn has_interior(&self) -> bool {
        self.zero_regions.iter().any(|r| match r {
            ZeroRegion::Point { .. } => false,
            ZeroRegion::Interval { .. } => true,
            ZeroRegion::Rectangle { interior, .. } => *interior > 0,
        })
    }

    pub fn has_unexplained_interior(&self) -> bool {
        self.zero_regions.iter().any(|r| match r {
            ZeroRegion::Point { .. } => false,
            ZeroRegion::Interval { .. } => true,
            ZeroRegion::Rectangle { unexplained_interior, .. } => *unexplained_interior > 0,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    CompleteOnGrid,
    Incomplete,
    EquivalentMargins,
    InequivalentMargins,
    Regular,
    NotRegular,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub report: SupportReport,
    pub caveat: String,
}

impl Verdict {
    fn new(kind: VerdictKind, report: SupportReport) -> Self {
        Verdict { kind, report, caveat: CAVEAT.to_string() }
    }
}

fn witnesses(points: impl Iterator<Item = Vec<f64>>, count: usize) -> Vec<Vec<f64>> {
    let stride = count.div_ceil(MAX_WITNESSES).max(1);
    points.step_by(stride).collect()
}

/// Sub-threshold set of sampled values on a line.
///
/// Runs of at most three samples below `eps` whose neighbours reach 10·eps
/// become isolated points; any other run is an interval. A sign change
/// between two samples that both exceed `eps` also counts as an isolated
/// zero when the straight segment joining them passes within `eps` of 0.
pub fn zero_set_1d(samples: &GridFunction, eps: f64) -> Result<SupportReport> {
    if !(eps > 0.0) {
        return invalid(format!("epsilon must be positive, got {eps}"));
    }
    let grid = samples.grid;
    let v = &samples.values;
    let n = v.len();
    let mag: Vec<f64> = v.iter().map(|z| z.norm()).collect();
    let below: Vec<bool> = mag.iter().map(|&m| m < eps).collect();
    let mut regions = Vec::new();
    let mut i = 0;
    while i < n {
        if below[i] {
            let start = i;
            while i < n && below[i] {
                i += 1;
            }
            let end = i - 1;
            let len = end - start + 1;
            let left_ok = start == 0 || mag[start - 1] >= FLANK_FACTOR * eps;
            let right_ok = end + 1 == n || mag[end + 1] >= FLANK_FACTOR * eps;
            let interior_flank = start > 0 || end + 1 < n;
            if len <= ISOLATED_RUN && left_ok && right_ok && interior_flank {
                let k = (start..=end).min_by(|&a, &b| mag[a].total_cmp(&mag[b])).unwrap();
                regions.push(ZeroRegion::Point { x: grid.point(k) });
            } else {
                regions.push(ZeroRegion::Interval { lo: grid.point(start), hi: grid.point(end), samples: len });
            }
        } else {
            if i + 1 < n && !below[i + 1] {
                if let Some(t) = segment_crossing(v[i], v[i + 1], eps) {
                    let x = grid.point(i) + t * grid.dx();
                    regions.push(ZeroRegion::Point { x });
                }
            }
            i += 1;
        }
    }
    let count = below.iter().filter(|b| !**b).count();
    let witness_points = witnesses((0..n).filter(|&k| !below[k]).map(|k| vec![grid.point(k)]), count);
    Ok(SupportReport {
        dimension: 1,
        zero_regions: regions,
        witness_points,
        witness_count: count,
        epsilon: eps,
        max_abs: mag.iter().cloned().fold(0.0, f64::max),
        grids: vec![grid],
    })
}

/// Parameter t ∈ (0, 1) of the closest approach to 0 of a + t(b − a), when
/// that distance is below eps.
fn segment_crossing(a: Complex64, b: Complex64, eps: f64) -> Option<f64> {
    let d = b - a;
    let dd = d.norm_sqr();
    if dd == 0.0 {
        return None;
    }
    let t = -(a.conj() * d).re / dd;
    if !(t > 0.0 && t < 1.0) {
        return None;
    }
    ((a + d * t).norm() < eps).then_some(t)
}

/// Bisection for a sign change of `f` inside [lo, hi].
pub fn refine_zero(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Scans a tabulated field for sub-threshold components.
pub(crate) fn scan_2d(
    q_grid: Grid,
    p_grid: Grid,
    mag: &[f64],
    eps: f64,
    explains: &(dyn Fn(f64, f64, f64) -> bool + Sync),
) -> SupportReport {
    let (nq, np) = (q_grid.n, p_grid.n);
    let below: Vec<bool> = mag.iter().map(|&m| m < eps).collect();
    let radius = 0.5 * q_grid.dx().hypot(p_grid.dx());
    let interior: Vec<bool> = (0..nq * np)
        .into_par_iter()
        .map(|idx| {
            if !below[idx] {
                return false;
            }
            let (iq, ip) = (idx / np, idx % np);
            let q_range = iq.saturating_sub(1)..=(iq + 1).min(nq - 1);
            q_range.into_iter().all(|a| {
                (ip.saturating_sub(1)..=(ip + 1).min(np - 1)).all(|b| below[a * np + b])
            })
        })
        .collect();
    let unexplained: Vec<bool> = (0..nq * np)
        .into_par_iter()
        .map(|idx| interior[idx] && !explains(q_grid.point(idx / np), p_grid.point(idx % np), radius))
        .collect();

    let mut label = vec![usize::MAX; nq * np];
    let mut regions = Vec::new();
    let mut stack = Vec::new();
    for seed in 0..nq * np {
        if !below[seed] || label[seed] != usize::MAX {
            continue;
        }
        let id = regions.len();
        label[seed] = id;
        stack.push(seed);
        let (mut qlo, mut qhi, mut plo, mut phi) = (usize::MAX, 0, usize::MAX, 0);
        let (mut count, mut inner, mut unexpl) = (0, 0, 0);
        while let Some(idx) = stack.pop() {
            let (iq, ip) = (idx / np, idx % np);
            qlo = qlo.min(iq);
            qhi = qhi.max(iq);
            plo = plo.min(ip);
            phi = phi.max(ip);
            count += 1;
            inner += interior[idx] as usize;
            unexpl += unexplained[idx] as usize;
            let mut visit = |a: usize, b: usize| {
                let j = a * np + b;
                if below[j] && label[j] == usize::MAX {
                    label[j] = id;
                    stack.push(j);
                }
            };
            if iq > 0 {
                visit(iq - 1, ip);
            }
            if iq + 1 < nq {
                visit(iq + 1, ip);
            }
            if ip > 0 {
                visit(iq, ip - 1);
            }
            if ip + 1 < np {
                visit(iq, ip + 1);
            }
        }
        regions.push(ZeroRegion::Rectangle {
            q: [q_grid.point(qlo), q_grid.point(qhi)],
            p: [p_grid.point(plo), p_grid.point(phi)],
            samples: count,
            interior: inner,
            unexplained_interior: unexpl,
        });
    }
    let count = below.iter().filter(|b| !**b).count();
    let witness_points = witnesses(
        (0..nq * np).filter(|&k| !below[k]).map(|k| vec![q_grid.point(k / np), p_grid.point(k % np)]),
        count,
    );
    SupportReport {
        dimension: 2,
        zero_regions: regions,
        witness_points,
        witness_count: count,
        epsilon: eps,
        max_abs: mag.iter().cloned().fold(0.0, f64::max),
        grids: vec![q_grid, p_grid],
    }
}

fn field_report(t: &GeneratingOperator, field: &PhaseSpaceField, eps_rel: f64) -> Result<SupportReport> {
    if !(eps_rel > 0.0) {
        return invalid(format!("epsilon must be positive, got {eps_rel}"));
    }
    let mag: Vec<f64> = field.values.iter().map(|v| v.norm()).collect();
    let max = mag.iter().cloned().fold(0.0, f64::max);
    let explains = |q: f64, p: f64, r: f64| t.as_field().is_some_and(|f| f.explains_gap(q, p, r));
    Ok(scan_2d(field.q_grid, field.p_grid, &mag, eps_rel * max, &explains))
}

/// Completeness on a (q, p) grid: incomplete iff tr[T W(q,p)] stays below
/// eps·max on a full 3×3 block of samples not attributed to truncation.
pub fn completeness_verdict(t: &GeneratingOperator, q_grid: Grid, p_grid: Grid, eps_rel: f64) -> Result<Verdict> {
    let field = weyl_transform_field(t, q_grid, p_grid)?;
    completeness_from_field(t, &field, eps_rel)
}

/// As [`completeness_verdict`] for an already tabulated field.
pub fn completeness_from_field(t: &GeneratingOperator, field: &PhaseSpaceField, eps_rel: f64) -> Result<Verdict> {
    let report = field_report(t, field, eps_rel)?;
    let kind = if report.has_unexplained_interior() { VerdictKind::Incomplete } else { VerdictKind::CompleteOnGrid };
    Ok(Verdict::new(kind, report))
}

/// Regular iff no sample of the field falls below eps·max.
pub fn regularity_check(t: &GeneratingOperator, q_grid: Grid, p_grid: Grid, eps_rel: f64) -> Result<Verdict> {
    let field = weyl_transform_field(t, q_grid, p_grid)?;
    regularity_from_field(t, &field, eps_rel)
}

pub fn regularity_from_field(t: &GeneratingOperator, field: &PhaseSpaceField, eps_rel: f64) -> Result<Verdict> {
    let report = field_report(t, field, eps_rel)?;
    let kind = if report.zero_regions.is_empty() { VerdictKind::Regular } else { VerdictKind::NotRegular };
    Ok(Verdict::new(kind, report))
}

/// μ̂^T (or ν̂^T) sampled on `grid`.
pub fn sample_convolver_ft(t: &GeneratingOperator, axis: Axis, grid: Grid) -> Result<GridFunction> {
    let values = grid.points().par_iter().map(|&k| ft_convolver(t, axis, k)).collect::<Result<Vec<_>>>()?;
    GridFunction::new(grid, values)
}

/// Equivalence of one margin with its sharp counterpart.
pub fn margin_verdict(ft: &GridFunction, eps_rel: f64) -> Result<Verdict> {
    if !(eps_rel > 0.0) {
        return invalid(format!("epsilon must be positive, got {eps_rel}"));
    }
    let report = zero_set_1d(ft, eps_rel * ft.max_abs())?;
    let kind = if report.has_interior() { VerdictKind::InequivalentMargins } else { VerdictKind::EquivalentMargins };
    Ok(Verdict::new(kind, report))
}

/// (position, momentum) margin verdicts: equivalent iff the zero set of
/// μ̂^T (resp. ν̂^T) on `grid` consists of isolated points.
pub fn margins_equivalence_verdict(t: &GeneratingOperator, grid: Grid, eps_rel: f64) -> Result<(Verdict, Verdict)> {
    let pos = margin_verdict(&sample_convolver_ft(t, Axis::Position, grid)?, eps_rel)?;
    let mom = margin_verdict(&sample_convolver_ft(t, Axis::Momentum, grid)?, eps_rel)?;
    Ok((pos, mom))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{convolved_operator, husimi_operator, prop1_mu_hat, prop1_operator, StripSeries};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn band(half: f64, n: usize) -> Grid {
        // midpoint samples, so the band edges themselves are never sampled
        let h = 2.0 * half / n as f64;
        Grid::new(-half + 0.5 * h, half - 0.5 * h, n).unwrap()
    }

    #[test]
    fn prop1_transform_has_isolated_zeros_at_multiples_of_two_pi() {
        let g = band(8.0 * PI, 2001);
        let f = GridFunction::from_real(g, prop1_mu_hat);
        let report = zero_set_1d(&f, 1e-8).unwrap();
        assert!(report.intervals().is_empty());
        let pts = report.points();
        assert_eq!(pts.len(), 6, "{pts:?}");
        for x in pts {
            let n = (x / (2.0 * PI)).round();
            assert!(n != 0.0 && n.abs() <= 3.0);
            assert!((x - 2.0 * PI * n).abs() < 0.02);
            let z = refine_zero(prop1_mu_hat, x - 0.05, x + 0.05, 1e-12).unwrap();
            assert!((z - 2.0 * PI * n).abs() < 1e-9);
        }
    }

    #[test]
    fn gaussian_has_no_zeros_and_zero_is_one_interval() {
        let g = band(8.0, 801);
        let husimi = GridFunction::from_real(g, |p| (-0.25 * p * p).exp());
        assert!(zero_set_1d(&husimi, 1e-8).unwrap().zero_regions.is_empty());
        let zero = GridFunction::from_real(g, |_| 0.0);
        let r = zero_set_1d(&zero, 1e-8).unwrap();
        assert_eq!(r.zero_regions, vec![ZeroRegion::Interval { lo: g.x_min, hi: g.x_max, samples: 801 }]);
        assert_eq!(r.witness_count, 0);
    }

    #[test]
    fn sampled_zero_is_a_point_and_plateau_an_interval() {
        let g = Grid::new(-1.0, 1.0, 201).unwrap();
        let touch = GridFunction::from_real(g, |x| x * x);
        let r = zero_set_1d(&touch, 1e-8).unwrap();
        assert_eq!(r.points().len(), 1);
        assert!(r.points()[0].abs() < 1e-12);
        let plateau = GridFunction::from_real(g, |x| (x.abs() - 0.3).max(0.0));
        let r = zero_set_1d(&plateau, 1e-8).unwrap();
        assert_eq!(r.intervals().len(), 1);
        assert!(r.has_interior());
        assert!(zero_set_1d(&plateau, 0.0).is_err());
    }

    #[test]
    fn witnesses_and_zeros_are_disjoint() {
        let g = Grid::new(-1.0, 1.0, 101).unwrap();
        let f = GridFunction::from_real(g, |x| (x.abs() - 0.5).max(0.0));
        let r = zero_set_1d(&f, 1e-6).unwrap();
        let (lo, hi) = r.intervals()[0];
        assert!(r.witness_points.iter().all(|w| w[0] < lo || w[0] > hi));
        assert!(r.witness_points.len() <= MAX_WITNESSES);
    }

    #[test]
    fn husimi_verdicts() {
        let g = Grid::symmetric(5.0, 41).unwrap();
        let t = husimi_operator();
        assert_eq!(completeness_verdict(&t, g, g, DEFAULT_EPSILON).unwrap().kind, VerdictKind::CompleteOnGrid);
        assert_eq!(regularity_check(&t, g, g, DEFAULT_EPSILON).unwrap().kind, VerdictKind::Regular);
        let (a, b) = margins_equivalence_verdict(&t, band(8.0, 321), DEFAULT_EPSILON).unwrap();
        assert_eq!(a.kind, VerdictKind::EquivalentMargins);
        assert_eq!(b.kind, VerdictKind::EquivalentMargins);
        assert_eq!(a.caveat, CAVEAT);
    }

    #[test]
    fn prop1_verdicts() {
        let g = Grid::symmetric(5.0, 41).unwrap();
        let t = prop1_operator();
        let v = completeness_verdict(&t, g, g, DEFAULT_EPSILON).unwrap();
        assert_eq!(v.kind, VerdictKind::Incomplete);
        // the four corner blocks beyond |q|, |p| ≥ 1
        assert!(v.report.zero_regions.len() >= 4);
        assert_eq!(regularity_check(&t, g, g, DEFAULT_EPSILON).unwrap().kind, VerdictKind::NotRegular);
        let (a, b) = margins_equivalence_verdict(&t, band(8.0 * PI, 1001), DEFAULT_EPSILON).unwrap();
        assert_eq!(a.kind, VerdictKind::EquivalentMargins);
        assert_eq!(b.kind, VerdictKind::EquivalentMargins);
        assert_eq!(a.report.points().len(), 6);
    }

    #[test]
    fn strip_construction_verdicts() {
        let s = StripSeries::dyadic(4).unwrap();
        let check = Grid::symmetric(3.0, 25).unwrap();
        let t = convolved_operator(&s, &husimi_operator(), (check, check)).unwrap();
        let g = Grid::symmetric(3.0, 61).unwrap();
        let v = completeness_verdict(&t, g, g, DEFAULT_EPSILON).unwrap();
        assert_eq!(v.kind, VerdictKind::CompleteOnGrid, "{:?}", v.report.zero_regions);
        assert_eq!(regularity_check(&t, g, g, DEFAULT_EPSILON).unwrap().kind, VerdictKind::NotRegular);
        let (a, b) = margins_equivalence_verdict(&t, band(4.0, 161), DEFAULT_EPSILON).unwrap();
        assert_eq!(a.kind, VerdictKind::InequivalentMargins);
        assert_eq!(b.kind, VerdictKind::InequivalentMargins);
        // removing the explainer exposes the same gaps as genuine zeros
        let bare = crate::phase_space::WeylField::new("bare", {
            let t = t.clone();
            move |q, p| crate::phase_space::weyl_transform(&t, q, p).unwrap()
        });
        let bare = GeneratingOperator::field(bare).unwrap();
        assert_eq!(completeness_verdict(&bare, g, g, DEFAULT_EPSILON).unwrap().kind, VerdictKind::Incomplete);
    }

    #[test]
    fn verdicts_serialize() {
        let g = Grid::symmetric(2.0, 9).unwrap();
        let v = completeness_verdict(&husimi_operator(), g, g, DEFAULT_EPSILON).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        assert!(json.contains("\"complete_on_grid\"") && json.contains(CAVEAT));
        let back: Verdict = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
    }

    fn field_strategy() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
        (3usize..9, 3usize..9).prop_flat_map(|(a, b)| {
            (Just(a), Just(b), prop::collection::vec(prop_oneof![Just(0.0), 1e-12..1.0f64], a * b))
        })
    }

    proptest! {
        #[test]
        fn shrinking_epsilon_never_breaks_completeness(
            (nq, np, mag) in field_strategy(),
            eps in 1e-10..0.5f64,
            shrink in 0.0..1.0f64,
        ) {
            let qg = Grid::new(0.0, 1.0, nq).unwrap();
            let pg = Grid::new(0.0, 1.0, np).unwrap();
            let never = |_: f64, _: f64, _: f64| false;
            let coarse = scan_2d(qg, pg, &mag, eps, &never);
            let fine = scan_2d(qg, pg, &mag, eps * shrink.max(1e-3), &never);
            if !coarse.has_unexplained_interior() {
                prop_assert!(!fine.has_unexplained_interior());
            }
            let total: usize = coarse.zero_regions.iter().map(|r| match r {
                ZeroRegion::Rectangle { samples, .. } => *samples,
                _ => 0,
            }).sum();
            prop_assert_eq!(total + coarse.witness_count, nq * np);
        }

        #[test]
        fn isolated_points_imply_equivalence(zeros in prop::collection::btree_set(2usize..98, 0..6)) {
            // simple zeros with slope one at chosen nodes
            let g = Grid::new(0.0, 1.0, 101).unwrap();
            let zs: Vec<f64> = zeros.iter().map(|&k| g.point(k) + 1e-3).collect();
            let f = GridFunction::from_real(g, |x| zs.iter().map(|z| (50.0 * (x - z)).tanh()).product::<f64>());
            let v = margin_verdict(&f, DEFAULT_EPSILON).unwrap();
            prop_assert_eq!(v.kind, VerdictKind::EquivalentMargins);
        }
    }
}
