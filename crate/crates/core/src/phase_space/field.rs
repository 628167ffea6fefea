use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use super::GeneratingOperator;
use crate::error::Result;
use crate::hilbert::Grid;

/// tr[T W(q,p)].
pub fn weyl_transform(t: &GeneratingOperator, q: f64, p: f64) -> Result<Complex64> {
    match t {
        GeneratingOperator::Mixture { weights, wavefunctions } => {
            let mut acc = Complex64::new(0.0, 0.0);
            for (w, wf) in weights.iter().zip(wavefunctions) {
                acc += *w * wf.self_weyl(q, p)?;
            }
            Ok(acc)
        }
        GeneratingOperator::Field(f) => Ok(f.eval(q, p)),
    }
}

/// Complex samples over a (q, p) grid, stored with q as the slow index.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceField {
    pub q_grid: Grid,
    pub p_grid: Grid,
    pub values: Vec<Complex64>,
}

impl PhaseSpaceField {
    pub fn at(&self, iq: usize, ip: usize) -> Complex64 {
        self.values[iq * self.p_grid.n + ip]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["q", "p", "re", "im"])?;
        for iq in 0..self.q_grid.n {
            for ip in 0..self.p_grid.n {
                let v = self.at(iq, ip);
                w.write_record(&[
                    self.q_grid.point(iq).to_string(),
                    self.p_grid.point(ip).to_string(),
                    v.re.to_string(),
                    v.im.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Tabulates tr[T W(q,p)]; on centered grids only half the rows are
/// evaluated and the rest follow from tr[T W(−q,−p)] = conj tr[T W(q,p)].
pub fn weyl_transform_field(t: &GeneratingOperator, q_grid: Grid, p_grid: Grid) -> Result<PhaseSpaceField> {
    let (nq, np) = (q_grid.n, p_grid.n);
    let symmetric = q_grid.is_centered() && p_grid.is_centered();
    let rows = if symmetric { nq / 2 + 1 } else { nq };
    let computed: Vec<Vec<Complex64>> = (0..rows)
        .into_par_iter()
        .map(|iq| {
            let q = q_grid.point(iq);
            (0..np).map(|ip| weyl_transform(t, q, p_grid.point(ip))).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut values = vec![Complex64::new(0.0, 0.0); nq * np];
    for (iq, row) in computed.iter().enumerate() {
        values[iq * np..(iq + 1) * np].copy_from_slice(row);
    }
    if symmetric {
        for iq in rows..nq {
            let src = nq - 1 - iq;
            for ip in 0..np {
                values[iq * np + ip] = values[src * np + (np - 1 - ip)].conj();
            }
        }
    }
    Ok(PhaseSpaceField { q_grid, p_grid, values })
}
