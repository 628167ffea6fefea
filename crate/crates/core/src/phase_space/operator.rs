use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::constants::TWO_PI;
use crate::error::{invalid, Error, Result};
use crate::hilbert::{GridFunction, Wavefunction};

/// W(q,p)ψ(x) = e^{−iqp/2} e^{ipx} ψ(x − q); the translation is an FFT phase
/// ramp, exact for band-limited samples.
pub fn weyl_apply(q: f64, p: f64, psi: &GridFunction) -> Result<GridFunction> {
    let grid = psi.grid;
    let n = grid.n;
    let dx = grid.dx();
    if q.abs() > 0.25 * (grid.x_max - grid.x_min) || p.abs() > 0.5 * std::f64::consts::PI / dx {
        return Err(Error::ShiftExceedsMargin { q, p });
    }
    let mut buf = psi.values.clone();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let dk = TWO_PI / (n as f64 * dx);
    for (j, v) in buf.iter_mut().enumerate() {
        let signed = if 2 * j < n { j as f64 } else { j as f64 - n as f64 };
        if n % 2 == 0 && 2 * j == n {
            *v *= (signed * dk * q).cos();
        } else {
            *v *= Complex64::from_polar(1.0, -signed * dk * q);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    let values = buf
        .iter()
        .enumerate()
        .map(|(i, v)| v * scale * Complex64::from_polar(1.0, p * grid.point(i) - 0.5 * q * p))
        .collect();
    Ok(GridFunction { grid, values })
}

/// Reports whether a zero of a Weyl field at (q, p), within a cell of the
/// given radius, is an artefact of truncating an otherwise dense support.
pub type GapExplainer = Arc<dyn Fn(f64, f64, f64) -> bool + Send + Sync>;

/// Operator known only through its Weyl transform.
#[derive(Clone)]
pub struct WeylField {
    pub label: String,
    eval: Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>,
    truncation_gaps: Option<GapExplainer>,
}

impl WeylField {
    pub fn new(label: impl Into<String>, eval: impl Fn(f64, f64) -> Complex64 + Send + Sync + 'static) -> Self {
        WeylField { label: label.into(), eval: Arc::new(eval), truncation_gaps: None }
    }

    pub fn with_truncation_gaps(mut self, explainer: GapExplainer) -> Self {
        self.truncation_gaps = Some(explainer);
        self
    }

    pub fn eval(&self, q: f64, p: f64) -> Complex64 {
        (self.eval)(q, p)
    }

    pub fn explains_gap(&self, q: f64, p: f64, radius: f64) -> bool {
        self.truncation_gaps.as_ref().is_some_and(|f| f(q, p, radius))
    }

    pub fn has_gap_explainer(&self) -> bool {
        self.truncation_gaps.is_some()
    }
}

impl fmt::Debug for WeylField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeylField")
            .field("label", &self.label)
            .field("truncation_gaps", &self.truncation_gaps.is_some())
            .finish()
    }
}

/// T = Σ t_k |φ_k⟩⟨φ_k|, or an operator given by its Weyl transform.
#[derive(Clone, Debug)]
pub enum GeneratingOperator {
    Mixture { weights: Vec<f64>, wavefunctions: Vec<Wavefunction> },
    Field(WeylField),
}

impl GeneratingOperator {
    pub fn mixture(weights: Vec<f64>, wavefunctions: Vec<Wavefunction>) -> Result<Self> {
        if weights.len() != wavefunctions.len() {
            return Err(Error::LengthMismatch(weights.len(), wavefunctions.len()));
        }
        if weights.is_empty() || weights.iter().any(|&w| !(w >= 0.0)) {
            return invalid("weights must be nonnegative and nonempty");
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("weights sum to {total}"));
        }
        for (k, wf) in wavefunctions.iter().enumerate() {
            let norm = wf.norm();
            if (norm - 1.0).abs() > 1e-9 {
                return invalid(format!("wavefunction {k} has norm {norm}"));
            }
        }
        Ok(GeneratingOperator::Mixture { weights, wavefunctions })
    }

    pub fn pure(wf: Wavefunction) -> Result<Self> {
        Self::mixture(vec![1.0], vec![wf])
    }

    pub fn field(field: WeylField) -> Result<Self> {
        let origin = field.eval(0.0, 0.0);
        if (origin - Complex64::new(1.0, 0.0)).norm() > 1e-9 {
            return invalid(format!("Weyl field at the origin is {origin}, not 1"));
        }
        Ok(GeneratingOperator::Field(field))
    }

    pub fn components(&self) -> Result<Vec<(f64, &Wavefunction)>> {
        match self {
            GeneratingOperator::Mixture { weights, wavefunctions } => {
                Ok(weights.iter().cloned().zip(wavefunctions.iter()).collect())
            }
            GeneratingOperator::Field(_) => Err(Error::DensityRequiresPureDecomposition),
        }
    }

    pub fn as_field(&self) -> Option<&WeylField> {
        match self {
            GeneratingOperator::Field(f) => Some(f),
            _ => None,
        }
    }
}
