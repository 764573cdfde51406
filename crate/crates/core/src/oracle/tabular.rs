use serde::{Deserialize, Serialize};

use crate::domain::{GridSpec, PotentialField};
use crate::error::{Error, Result};
use crate::loss::{LossBreakdown, Objective};
use crate::nn::{AdamHyper, AdamState};
use crate::supply::SupplyPath;

/// Largest grid (per axis) the tabular solver accepts.
pub const MAX_TABULAR_POINTS: usize = 64;

/// A run counts as diverged once the total loss exceeds this multiple of
/// `max(initial total, 1)`.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

pub(crate) fn check_divergence(step: usize, loss: &LossBreakdown, reference: f64) -> Result<()> {
    if !loss.is_finite() {
        return Err(Error::Diverged {
            step,
            detail: format!("non-finite loss {loss:?}"),
        });
    }
    let limit = DIVERGENCE_FACTOR * reference.max(1.0);
    if loss.total > limit {
        return Err(Error::Diverged {
            step,
            detail: format!("total loss {:.3e} exceeds {limit:.3e}", loss.total),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TabularConfig {
    pub steps: usize,
    pub adam: AdamHyper,
    /// Learning rate at the last step as a fraction of the initial one;
    /// the rate decays geometrically in between. `1.0` keeps it constant.
    pub lr_final_fraction: f64,
}

impl Default for TabularConfig {
    fn default() -> Self {
        Self {
            steps: 200_000,
            adam: AdamHyper::default(),
            lr_final_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TabularSolution {
    pub field: PotentialField,
    pub loss: LossBreakdown,
    pub initial_loss: LossBreakdown,
    /// Step at which `field` was evaluated (0 is the initial field).
    pub best_step: usize,
}

/// Geometric learning-rate schedule shared by the optimizers.
pub(crate) fn scheduled_rate(base: f64, final_fraction: f64, step: usize, steps: usize) -> f64 {
    if final_fraction == 1.0 || steps <= 1 {
        base
    } else {
        base * final_fraction.powf(step as f64 / (steps - 1) as f64)
    }
}

/// Minimizes the penalized objective directly over the grid values of the
/// potential, starting from the time-constant field `M_0(x)`, and returns
/// the best field encountered.
pub fn tabular_solve(
    grid: &GridSpec,
    path: &SupplyPath,
    objective: &Objective,
    config: &TabularConfig,
) -> Result<TabularSolution> {
    if grid.n_t > MAX_TABULAR_POINTS || grid.n_x > MAX_TABULAR_POINTS {
        return Err(Error::param(format!(
            "tabular solver is limited to {MAX_TABULAR_POINTS} points per axis, got {}x{}",
            grid.n_t, grid.n_x
        )));
    }
    if config.steps == 0 {
        return Err(Error::param("tabular solver needs at least one step"));
    }
    config.adam.validate()?;
    let density = objective.density;
    let mut values: Vec<f64> = (0..grid.ext_t())
        .flat_map(|_| grid.positions().map(move |x| density.cumulative(x)))
        .collect();
    let mut adam = AdamState::with_len(values.len(), config.adam);

    let mut best: Option<(LossBreakdown, Vec<f64>, usize)> = None;
    let mut initial_loss = None;
    for step in 0..=config.steps {
        let field = PotentialField::from_values(*grid, values.clone())?;
        let (loss, grad) = objective.evaluate_with_gradient(&field, path)?;
        let reference = initial_loss.get_or_insert(loss).total;
        check_divergence(step, &loss, reference)?;
        if best.as_ref().is_none_or(|(b, _, _)| loss.total < b.total) {
            best = Some((loss, values.clone(), step));
        }
        if step == config.steps {
            break;
        }
        adam.hyper.learning_rate =
            scheduled_rate(config.adam.learning_rate, config.lr_final_fraction, step, config.steps);
        adam.update(&mut values, &grad)?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                step,
                detail: format!("non-finite grid value at index {i}"),
            });
        }
    }
    let (loss, values, best_step) = best.expect("at least one evaluation");
    Ok(TabularSolution {
        field: PotentialField::from_values(*grid, values)?,
        loss,
        initial_loss: initial_loss.expect("at least one evaluation"),
        best_step,
    })
}
