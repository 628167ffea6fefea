//! Grids, Hermite functions, the unitary Fourier transform and densities.

mod fourier;
mod grid;
mod hermite;
mod measure;
mod quadrature;
mod state;
mod wavefunction;

pub use fourier::{fourier_transform, inverse_fourier_transform, FourierResult};
pub use grid::{Grid, GridFunction};
pub use hermite::{hermite_function, hermite_values, MAX_HERMITE_DEGREE};
pub use measure::{Boundary, Measure1D};
pub use quadrature::{gauss_legendre_16, quadrature, trapezoid};
pub use state::{
    momentum_density, position_density, state_wavefunction, HermiteState, MixedState, State,
};
pub use wavefunction::{sinc, Wavefunction};
