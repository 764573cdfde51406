//! Closed-form benchmark, price and value recovery from a potential, a
//! parametrization-free grid solver, and test-set evaluation.

mod analytic;
mod eval;
mod price;
mod tabular;

pub use analytic::{
    analytic_potential_lq, analytic_price, analytic_price_half_step, analytic_price_midpoint,
    continuum_variational_value,
};
pub use eval::{evaluate_stochastic, mean_test_loss, evaluate_with, EvalOptions, EvalReport, PriceReference};
pub use price::{
    extract_price, extract_price_terminal, reconstruct_value_function, recover_price, PriceMode, PricePath,
    ValueFunction, DEFAULT_MASS_THRESHOLD,
};
pub use tabular::{tabular_solve, TabularConfig, TabularSolution, DIVERGENCE_FACTOR, MAX_TABULAR_POINTS};
pub(crate) use tabular::{check_divergence, scheduled_rate};
