use std::error::Error;
use std::f64::consts::PI;

use phasemargins::constructions::{
    convolved_operator, husimi_operator, prop1_mu_hat, prop1_operator, prop2_f, Prop2Params, StripSeries,
};
use phasemargins::hilbert::{position_density, Boundary, Grid, GridFunction, HermiteState, Measure1D, State};
use phasemargins::infocheck::{
    completeness_from_field, margins_equivalence_verdict, refine_zero, regularity_from_field, zero_set_1d, Verdict,
    VerdictKind,
};
use phasemargins::phase_space::{ft_convolver, margin_density, weyl_transform, weyl_transform_field, Axis, GeneratingOperator};
use phasemargins::reconstruct::{
    convolver_moments, deconvolve_moments, deconvolve_moments_with_errors, density_from_moments, exp_bound_check,
    fourier_deconvolve, l1_distance, moments_of, DeconvolveConfig,
};
use phasemargins::sampling::{
    empirical_measure, empirical_moment_covariance, empirical_moments, sample_measure, write_samples,
};

use crate::config::{Command, Completeness, Convolver, DataMode, GridSpec, MarginPattern, Method, Preset};
use crate::report::Report;

type Res = Result<(), Box<dyn Error>>;

pub fn run(report: &mut Report) -> Res {
    match report.config.command {
        Command::VerifyProp1 => verify_prop1(report),
        Command::VerifyProp2 => verify_prop2(report),
        Command::Reconstruct => reconstruct(report),
        Command::CompletenessCheck => completeness_check(report),
    }
}

/// Midpoints of n equal cells of [−h, h]: avoids sampling p = 0 twice
/// under reflection and keeps band edges off exact zeros.
fn band_grid(g: GridSpec) -> phasemargins::Result<Grid> {
    let h = 2.0 * g.half_width / g.n as f64;
    Grid::new(-g.half_width + 0.5 * h, g.half_width - 0.5 * h, g.n)
}

fn field_grid(g: GridSpec) -> phasemargins::Result<Grid> {
    Grid::symmetric(g.half_width, g.n)
}

/// Husimi probe on which strip constructions are built.
fn base_check_grid() -> (Grid, Grid) {
    let g = Grid::symmetric(4.0, 33).expect("valid grid");
    (g, g)
}

fn operator(preset: Preset) -> phasemargins::Result<GeneratingOperator> {
    match preset {
        Preset::Husimi => Ok(husimi_operator()),
        Preset::Prop1 => Ok(prop1_operator()),
        Preset::Prop2(n) => convolved_operator(&StripSeries::dyadic(n)?, &husimi_operator(), base_check_grid()),
        Preset::RemarkF0 => convolved_operator(&StripSeries::remark(), &husimi_operator(), base_check_grid()),
    }
}

fn convolver(c: Convolver) -> GeneratingOperator {
    match c {
        Convolver::Husimi => husimi_operator(),
        Convolver::Prop1 => prop1_operator(),
    }
}

fn kind_name(v: &Verdict) -> String {
    serde_json::to_value(v.kind).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
}

fn check_completeness(r: &mut Report, v: &Verdict, expect: Completeness) {
    let want = match expect {
        Completeness::Complete => VerdictKind::CompleteOnGrid,
        Completeness::Incomplete => VerdictKind::Incomplete,
    };
    let detail = format!("{} ({} zero regions, {} witnesses)", kind_name(v), v.report.zero_regions.len(), v.report.witness_count);
    r.check("completeness", v.kind == want, detail);
}

fn check_margins(r: &mut Report, pos: &Verdict, mom: &Verdict, expect: MarginPattern) {
    let want = match expect {
        MarginPattern::Equivalent => VerdictKind::EquivalentMargins,
        MarginPattern::Inequivalent => VerdictKind::InequivalentMargins,
    };
    r.check(
        "margin_equivalence",
        pos.kind == want && mom.kind == want,
        format!("position {}, momentum {}", kind_name(pos), kind_name(mom)),
    );
}

fn verify_prop1(r: &mut Report) -> Res {
    let cfg = r.config.clone();
    let t = prop1_operator();
    let band = band_grid(cfg.band)?;
    let mu = |p: f64| ft_convolver(&t, Axis::Position, p);
    let values = band.points().iter().map(|&p| mu(p)).collect::<phasemargins::Result<Vec<_>>>()?;
    let samples = GridFunction::new(band, values)?;

    let mut w = csv::Writer::from_path(r.file("mu_hat.csv"))?;
    w.write_record(["p", "mu_hat_re", "mu_hat_im", "mu_hat_closed_form"])?;
    let mut deviation: f64 = 0.0;
    for (p, v) in band.points().iter().zip(&samples.values) {
        let closed = prop1_mu_hat(*p);
        deviation = deviation.max((v - closed).norm());
        w.write_record([p.to_string(), v.re.to_string(), v.im.to_string(), closed.to_string()])?;
    }
    w.flush()?;
    r.check("mu_hat_curve", deviation <= 1e-6, format!("max |numeric − closed form| = {deviation:.2e} on {} points", band.n));

    let zeros = zero_set_1d(&samples, cfg.epsilon * samples.max_abs())?;
    let dx = band.dx();
    let mut located: Vec<f64> = zeros
        .points()
        .iter()
        .map(|&x| refine_zero(|p| mu(p).map_or(f64::NAN, |v| v.re), x - dx, x + dx, 1e-13).unwrap_or(x))
        .collect();
    located.sort_by(f64::total_cmp);
    let n_top = ((band.x_max - dx) / (2.0 * PI)).floor() as i64;
    let expected: Vec<(i64, f64)> =
        (-n_top..=n_top).filter(|&n| n != 0).map(|n| (n, 2.0 * PI * n as f64)).collect();
    let mut w = csv::Writer::from_path(r.file("zeros.csv"))?;
    w.write_record(["n", "expected", "located", "offset"])?;
    let mut worst: f64 = 0.0;
    for &(n, e) in &expected {
        let near = located.iter().cloned().min_by(|a, b| (a - e).abs().total_cmp(&(b - e).abs()));
        let offset = near.map_or(f64::INFINITY, |z| (z - e).abs());
        worst = worst.max(offset);
        let shown = near.map_or("none".to_string(), |z| z.to_string());
        w.write_record([n.to_string(), e.to_string(), shown, offset.to_string()])?;
    }
    w.flush()?;
    let ok = located.len() == expected.len() && zeros.intervals().is_empty() && worst <= 1e-6;
    r.check(
        "zero_locations",
        ok,
        format!("{} isolated zeros for {} expected at 2πn, worst offset {worst:.1e}, {} intervals", located.len(), expected.len(), zeros.intervals().len()),
    );
    r.result("zeros", &located);

    let fg = field_grid(cfg.field)?;
    let field = weyl_transform_field(&t, fg, fg)?;
    field.write_csv(&r.file("weyl_field.csv"))?;
    let verdict = completeness_from_field(&t, &field, cfg.epsilon)?;
    check_completeness(r, &verdict, cfg.expect_completeness);
    r.result("weyl_transform_at_2_0", weyl_transform(&t, 2.0, 0.0)?.re);
    r.result("completeness", &verdict);

    let (pos, mom) = margins_equivalence_verdict(&t, band, cfg.epsilon)?;
    check_margins(r, &pos, &mom, cfg.expect_margins);
    r.result("margin_position", &pos);
    r.result("margin_momentum", &mom);
    Ok(())
}

const CLAIMED_Q_STAR: f64 = 0.5;

fn verify_prop2(r: &mut Report) -> Res {
    let cfg = r.config.clone();
    let Preset::Prop2(n_max) = cfg.preset else { unreachable!("resolved config pins prop2") };
    let built = prop2_f(&Prop2Params::new(n_max, Prop2Params::default_grid())?)?;
    built.f.write_csv(&r.file("f.csv"))?;
    built.f_hat.write_csv(&r.file("f_hat.csv"))?;
    let s = &built.series;

    let min = built.f.min();
    r.check("f_nonnegative", min >= 0.0, format!("min f = {min:.3e} on the tabulation grid"));
    let mass = 2.0 * PI * s.eval_f_hat(0.0, 0.0);
    r.check("normalized", (mass - 1.0).abs() <= 1e-6, format!("2π f̂(0,0) = {mass:.12}"));

    let q_star = s.q_star();
    let mut beyond: f64 = 0.0;
    for k in 0..4000 {
        let q = q_star + 1e-9 + 1e-3 * k as f64;
        beyond = beyond.max(s.eval_f_hat(q, 0.0).abs()).max(s.eval_f_hat(-q, 0.0).abs());
    }
    r.check(
        "marginal_support_bounded",
        q_star.is_finite() && beyond == 0.0,
        format!("Q* = {q_star} (claimed {CLAIMED_Q_STAR}); max |f̂(q,0)| beyond Q* = {beyond:.1e}"),
    );
    r.result("q_star", q_star);
    r.result("q_star_claimed", CLAIMED_Q_STAR);
    r.result("p_star", s.p_star());
    r.result("normalization_c", built.c);
    if (q_star - CLAIMED_Q_STAR).abs() > 1e-12 {
        r.warn(format!(
            "open question: truncated bound Q* = {q_star} differs from the claimed {CLAIMED_Q_STAR}; the n = 1, k = 1 strip reaches r/sin θ = 1"
        ));
    }

    let band = band_grid(cfg.band)?;
    let mut w = csv::Writer::from_path(r.file("marginal_support.csv"))?;
    w.write_record(["k", "f_hat_k_0", "f_hat_0_k"])?;
    for k in band.points() {
        w.write_record([k.to_string(), s.eval_f_hat(k, 0.0).to_string(), s.eval_f_hat(0.0, k).to_string()])?;
    }
    w.flush()?;

    let t = operator(cfg.preset)?;
    let fg = field_grid(cfg.field)?;
    let field = weyl_transform_field(&t, fg, fg)?;
    field.write_csv(&r.file("weyl_field.csv"))?;
    let verdict = completeness_from_field(&t, &field, cfg.epsilon)?;
    check_completeness(r, &verdict, cfg.expect_completeness);
    r.result("completeness", &verdict);
    let (pos, mom) = margins_equivalence_verdict(&t, band, cfg.epsilon)?;
    check_margins(r, &pos, &mom, cfg.expect_margins);
    r.result("margin_position", &pos);
    r.result("margin_momentum", &mom);
    Ok(())
}

fn completeness_check(r: &mut Report) -> Res {
    let cfg = r.config.clone();
    let t = operator(cfg.preset)?;
    let fg = field_grid(cfg.field)?;
    let field = weyl_transform_field(&t, fg, fg)?;
    field.write_csv(&r.file("weyl_field.csv"))?;
    let verdict = completeness_from_field(&t, &field, cfg.epsilon)?;
    check_completeness(r, &verdict, cfg.expect_completeness);
    r.result("completeness", &verdict);
    r.result("regularity", regularity_from_field(&t, &field, cfg.epsilon)?);
    let (pos, mom) = margins_equivalence_verdict(&t, band_grid(cfg.band)?, cfg.epsilon)?;
    check_margins(r, &pos, &mom, cfg.expect_margins);
    r.result("margin_position", &pos);
    r.result("margin_momentum", &mom);
    Ok(())
}

fn reconstruct(r: &mut Report) -> Res {
    let cfg = r.config.clone();
    let grid = Grid::symmetric(cfg.line.half_width, cfg.line.n)?;
    let t = convolver(cfg.convolver);
    let state: State = HermiteState::from_real(&cfg.state)?.into();
    let truth = position_density(&state, grid);
    let margin = margin_density(&t, &state, Axis::Position, grid, Boundary::Periodic)?;
    let (data, deconv_cfg, samples) = match cfg.data {
        DataMode::Exact => (margin.clone(), DeconvolveConfig::default(), None),
        DataMode::Sampled => {
            let s = sample_measure(&margin, cfg.samples, cfg.seed, format!("{:?} margin", cfg.convolver).to_lowercase())?;
            write_samples(&s, &r.file("samples.csv"))?;
            r.files.push("samples.meta.json".into());
            r.result("truncation_mass", s.truncation_mass);
            (empirical_measure(&s, grid, 0.0)?, DeconvolveConfig::sampled(cfg.samples), Some(s))
        }
    };

    let mut columns: Vec<(&str, Vec<f64>)> =
        vec![("truth", truth.density.clone()), ("margin", data.density.clone())];

    if matches!(cfg.method, Method::Fourier | Method::Both) {
        let mu = |p: f64| ft_convolver(&t, Axis::Position, p).expect("preset convolvers evaluate everywhere");
        match fourier_deconvolve(&data, mu, &deconv_cfg) {
            Ok((rec, diag)) => {
                let l1 = l1_distance(&rec, &truth)?;
                r.check(
                    "fourier_l1",
                    l1 <= cfg.l1_bound_fourier,
                    format!("L1 = {l1:.3e} (bound {:.1e}), {} interpolated bands", cfg.l1_bound_fourier, diag.interpolated_bands.len()),
                );
                r.result("fourier_l1", l1);
                r.result("fourier_diagnostics", &diag);
                columns.push(("fourier", rec.density));
            }
            Err(e) => r.check("fourier_l1", false, format!("refused: {e}")),
        }
    }

    if matches!(cfg.method, Method::Moments | Method::Both) {
        let degree = cfg.moment_degree;
        match moments_route(&t, &data, samples.as_ref(), degree, grid) {
            Ok((rec, fit, bound)) => {
                let l1 = l1_distance(&rec, &truth)?;
                r.check(
                    "moments_l1",
                    l1 <= cfg.l1_bound_moments,
                    format!("L1 = {l1:.3e} (bound {:.1e}), degree {degree}, condition {:.2e}", cfg.l1_bound_moments, fit.condition_number),
                );
                r.result("moments_l1", l1);
                r.result("moments_fit", &fit);
                r.result("exp_bound", bound);
                columns.push(("moments", rec.density));
            }
            Err(e) => {
                r.check("moments_l1", false, format!("refused: {e}"));
                r.result("moments_refusal", e.to_string());
            }
        }
    }

    let mut w = csv::Writer::from_path(r.file("reconstruction.csv"))?;
    let mut header = vec!["x"];
    header.extend(columns.iter().map(|c| c.0));
    w.write_record(&header)?;
    for (i, x) in grid.points().iter().enumerate() {
        let mut row = vec![x.to_string()];
        row.extend(columns.iter().map(|c| c.1[i].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

type MomentOutcome = (Measure1D, phasemargins::reconstruct::MomentFitDiagnostics, phasemargins::reconstruct::ExpBoundFit);

fn moments_route(
    t: &GeneratingOperator,
    data: &Measure1D,
    samples: Option<&phasemargins::sampling::SampleSet>,
    degree: usize,
    grid: Grid,
) -> phasemargins::Result<MomentOutcome> {
    let conv = convolver_moments(t, Axis::Position, degree, grid)?;
    let m = match samples {
        Some(s) => deconvolve_moments_with_errors(&empirical_moments(s, degree)?, &empirical_moment_covariance(s, degree)?, &conv)?,
        None => deconvolve_moments(&moments_of(data, degree), &conv)?,
    };
    let bound = exp_bound_check(&m)?;
    let (rec, fit) = density_from_moments(&m, degree, grid)?;
    Ok((rec, fit, bound))
}
