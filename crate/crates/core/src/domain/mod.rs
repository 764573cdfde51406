//! Grids, the Lagrangian/Hamiltonian pair, the initial density and the
//! potential field container shared by the solver modules.

mod density;
mod field;
mod grid;
mod lagrangian;

pub use density::{initial_cumulative, InitialDensity};
pub use field::PotentialField;
pub use grid::{build_grid, GridSpec};
pub use lagrangian::{hamiltonian, perspective_f, LagrangianKind, LagrangianModel, DEFAULT_EPS};
