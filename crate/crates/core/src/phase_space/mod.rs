//! Weyl operators, generating operators, the phase-space observable and its
//! Cartesian margins.

mod field;
mod margins;
mod operator;

pub use field::{weyl_transform, weyl_transform_field, PhaseSpaceField};
pub use margins::{
    convolving_measures, ft_convolver, gt_density, integrated_margin, margin_density,
    margin_from_density, IntegrationOptions,
};
pub use operator::{weyl_apply, GapExplainer, GeneratingOperator, WeylField};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Position,
    Momentum,
}
