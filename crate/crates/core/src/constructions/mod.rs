//! Concrete generating operators and convolving functions: the Husimi
//! probe, the interval/sinc mixture, strip functions and their series.

mod function2d;
mod strips;

pub use function2d::Function2D;
pub use strips::{
    prop2_f, remark_f0, strip_g, strip_g_hat, Prop2Construction, Prop2Params, StripSeries,
    StripTerm, MAX_N,
};

use num_complex::Complex64;

use crate::constants::{INV_SQRT_2PI, TWO_PI};
use crate::error::{Error, Result};
use crate::hilbert::{Grid, HermiteState, Wavefunction};
use crate::phase_space::{weyl_transform, GeneratingOperator, WeylField};

/// T = |h_0⟩⟨h_0|.
pub fn husimi_operator() -> GeneratingOperator {
    GeneratingOperator::pure(Wavefunction::Hermite(HermiteState::basis(0))).expect("h_0 is normalized")
}

/// T = ½|χ⟩⟨χ| + ½|χ̂⟩⟨χ̂| with χ the indicator of [−1/2, 1/2].
pub fn prop1_operator() -> GeneratingOperator {
    let chi = Wavefunction::indicator(0.0, 1.0);
    GeneratingOperator::mixture(vec![0.5, 0.5], vec![chi.clone(), chi.fourier()]).expect("valid mixture")
}

/// Closed-form μ̂^T of [`prop1_operator`].
pub fn prop1_mu_hat(p: f64) -> f64 {
    let triangle = (1.0 - p.abs()).max(0.0);
    0.5 * INV_SQRT_2PI * (triangle + crate::hilbert::sinc(0.5 * p))
}

/// Closed-form tr[T W(q,p)] of [`prop1_operator`]; exactly zero once both
/// |q| ≥ 1 and |p| ≥ 1.
pub fn prop1_weyl(q: f64, p: f64) -> Complex64 {
    let term = |shift: f64, freq: f64| {
        let len = 1.0 - shift.abs();
        if len <= 0.0 {
            0.0
        } else {
            len * crate::hilbert::sinc(0.5 * freq * len)
        }
    };
    Complex64::new(0.5 * term(q, p) + 0.5 * term(p, q), 0.0)
}

/// Operator f*T₀ represented by its Weyl field 2π f̂(−p,q) tr[T₀W(q,p)].
///
/// `check` is the (q, p) grid on which T₀ must be free of zeros.
pub fn convolved_operator(series: &StripSeries, t0: &GeneratingOperator, check: (Grid, Grid)) -> Result<GeneratingOperator> {
    let (qg, pg) = check;
    for iq in 0..qg.n {
        for ip in 0..pg.n {
            let (q, p) = (qg.point(iq), pg.point(ip));
            let v = weyl_transform(t0, q, p)?.norm();
            if !(v > 1e-12) {
                return Err(Error::BaseNotRegular { q, p, value: v });
            }
        }
    }
    let s = series.clone();
    let base = t0.clone();
    let label = format!("f*T0 [{}]", series.label());
    let mut field = WeylField::new(label, move |q, p| {
        let tr = weyl_transform(&base, q, p).unwrap_or(Complex64::new(f64::NAN, 0.0));
        TWO_PI * s.eval_f_hat(-p, q) * tr
    });
    if series.dyadic_depth().is_some() {
        let s = series.clone();
        field = field.with_truncation_gaps(std::sync::Arc::new(move |q, p, radius| s.explains_gap(-p, q, radius)));
    }
    let op = GeneratingOperator::field(field)?;
    Ok(op)
}
