//! Mean-field-game price formation through a potential formulation.
//!
//! The potential `phi` has `phi_x = m` (agent density) and `-phi_t` equal to
//! the agent flux. Minimizing a penalized discretization of the variational
//! functional over a recurrent-network parametrization of `phi` yields the
//! density and the market-clearing price, for deterministic or common-noise
//! (Ornstein-Uhlenbeck) supply.

pub mod domain;
pub mod error;
pub mod fmt;
pub mod loss;
pub mod nn;
pub mod oracle;
pub mod supply;
pub mod training;

pub use domain::{GridSpec, InitialDensity, LagrangianModel, PotentialField};
pub use error::{Error, Result};
pub use loss::{LossBreakdown, LossWeights, Objective};
pub use nn::{NetDims, NetParams};
pub use supply::{SupplyParams, SupplyPath, SupplyScheme};
