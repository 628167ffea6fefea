//! Covariant phase-space observables on L²(ℝ): Weyl transforms, Cartesian
//! margins, informational-completeness verdicts and reconstruction of
//! position densities from margin statistics.
//!
//! Units have ħ = 1 and the Fourier convention is
//! `f̂(p) = (2π)^{-1/2} ∫ e^{-ipx} f(x) dx` throughout.

pub mod constants;
pub mod constructions;
pub mod error;
pub mod hilbert;
pub mod infocheck;
pub mod phase_space;
pub mod reconstruct;
pub mod sampling;

pub use error::{Error, Result};
pub use num_complex::Complex64;
