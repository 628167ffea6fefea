//! Position (or momentum) densities from a single margin: Fourier
//! deconvolution and the method of moments.

mod deconvolve;
mod moments;

pub use deconvolve::{fourier_deconvolve, BandLimit, DeconvolveConfig, DeconvolveDiagnostics};
pub use moments::{
    convolve_moments, convolver_moments, deconvolve_moments, deconvolve_moments_with_errors,
    density_from_moments, exp_bound_check, l1_distance, moments_of, ExpBoundFit, MomentFitDiagnostics,
    MomentSequence, MAX_MOMENT_DEGREE,
};
