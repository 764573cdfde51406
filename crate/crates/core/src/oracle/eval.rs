use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{GridSpec, PotentialField};
use crate::error::{Error, Result};
use crate::loss::{LossBreakdown, Objective};
use crate::nn::{forward_field, NetParams};
use crate::oracle::analytic::{analytic_price, analytic_price_midpoint};
use crate::oracle::price::extract_price;
use crate::supply::{evaluation_rng, sample_ou_path, SupplyParams, SupplyPath, SupplyScheme};

/// Test-set statistics of the L-infinity price error over time levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mean: f64,
    pub stddev: f64,
    pub max: f64,
    /// Number of samples requested.
    pub n: usize,
    pub seed: u64,
    /// Samples whose price could not be recovered.
    pub failures: usize,
    #[serde(skip)]
    pub errors: Vec<f64>,
}

/// Which benchmark price the recovered price is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceReference {
    /// `-Q(t_k)`.
    #[default]
    GridPoint,
    /// `-(Q(t_k) + Q(t_{k+1})) / 2`, where forward differences sit.
    HalfStep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub scheme: SupplyScheme,
    pub mass_threshold: f64,
    pub reference: PriceReference,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            scheme: SupplyScheme::Euler,
            mass_threshold: crate::oracle::DEFAULT_MASS_THRESHOLD,
            reference: PriceReference::GridPoint,
        }
    }
}

/// Draws `n_samples` test supply paths from the evaluation stream of
/// `seed`, builds a potential for each with `build`, and compares the
/// recovered price with `-Q` in the max norm over interior levels.
pub fn evaluate_with<F>(
    build: F,
    supply: &SupplyParams,
    grid: &GridSpec,
    n_samples: usize,
    seed: u64,
    options: EvalOptions,
) -> Result<EvalReport>
where
    F: Fn(&SupplyPath) -> Result<PotentialField> + Sync,
{
    if n_samples == 0 {
        return Err(Error::param("evaluation needs at least one sample"));
    }
    supply.validate()?;
    let outcomes: Vec<Option<f64>> = (0..n_samples)
        .into_par_iter()
        .map(|idx| {
            let mut rng = evaluation_rng(seed, idx as u64);
            let path = sample_ou_path(supply, grid, &mut rng, options.scheme);
            let field = build(&path).ok()?;
            let predicted = extract_price(&field, options.mass_threshold).ok()?;
            let reference = match options.reference {
                PriceReference::GridPoint => analytic_price(&path, grid),
                PriceReference::HalfStep => analytic_price_midpoint(&path, grid),
            }
            .ok()?;
            Some(predicted.linf_distance(&reference))
        })
        .collect();
    let errors: Vec<f64> = outcomes.iter().flatten().copied().collect();
    let failures = n_samples - errors.len();
    let count = errors.len() as f64;
    let (mean, stddev, max) = if errors.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        let mean = errors.iter().sum::<f64>() / count;
        let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / count;
        (mean, var.sqrt(), errors.iter().copied().fold(0.0, f64::max))
    };
    Ok(EvalReport {
        mean,
        stddev,
        max,
        n: n_samples,
        seed,
        failures,
        errors,
    })
}

/// [`evaluate_with`] for a trained network.
pub fn evaluate_stochastic(
    params: &NetParams,
    supply: &SupplyParams,
    grid: &GridSpec,
    n_samples: usize,
    seed: u64,
    options: EvalOptions,
) -> Result<EvalReport> {
    evaluate_with(|path| forward_field(params, grid, path), supply, grid, n_samples, seed, options)
}

/// Mean loss of `params` over the same test paths [`evaluate_stochastic`]
/// draws for `seed`.
pub fn mean_test_loss(
    params: &NetParams,
    supply: &SupplyParams,
    grid: &GridSpec,
    n_samples: usize,
    seed: u64,
    scheme: SupplyScheme,
    objective: &Objective,
) -> Result<LossBreakdown> {
    if n_samples == 0 {
        return Err(Error::param("evaluation needs at least one sample"));
    }
    supply.validate()?;
    let losses = (0..n_samples)
        .into_par_iter()
        .map(|idx| {
            let mut rng = evaluation_rng(seed, idx as u64);
            let path = sample_ou_path(supply, grid, &mut rng, scheme);
            objective.evaluate(&forward_field(params, grid, &path)?, &path)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LossBreakdown::mean(&losses))
}
