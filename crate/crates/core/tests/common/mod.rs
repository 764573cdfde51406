//! Measurements shared by the focused integration tests and the acceptance
//! suite. Each returns the measured quantity; callers own the tolerances.

#![allow(dead_code)]

use std::path::Path;
use std::time::Instant;

use mfg_price::nn::{backward, forward_field, forward_recorded, init_params, load_checkpoint, save_checkpoint};
use mfg_price::training::{TrainConfig, Trainer};
use mfg_price::supply::{sample_ou_path, SupplyScheme};
use mfg_price::{GridSpec, NetDims, NetParams, Objective, SupplyParams, SupplyPath};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gradients smaller than this are compared in absolute terms.
pub const GRADIENT_FLOOR: f64 = 1e-4;

pub struct GradientCheck {
    pub configs: usize,
    pub parameters: usize,
    pub worst_relative: f64,
}

fn loss_total(params: &NetParams, grid: &GridSpec, path: &SupplyPath, objective: &Objective) -> f64 {
    let field = forward_field(params, grid, path).unwrap();
    objective.evaluate(&field, path).unwrap().total
}

/// Reverse-mode gradient of the total loss against central differences on
/// `configs` random nets, grids and supply paths.
pub fn gradient_check(configs: usize, seed: u64) -> GradientCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let objective = Objective::default();
    let mut worst: f64 = 0.0;
    let mut parameters = 0;
    for c in 0..configs {
        let dims = NetDims::new(rng.random_range(1..5), rng.random_range(1..5), rng.random_range(1..5)).unwrap();
        let grid = GridSpec::new(
            rng.random_range(0.5..1.5),
            rng.random_range(2..6),
            -1.0,
            1.0,
            rng.random_range(2..7),
        )
        .unwrap();
        let supply = SupplyParams {
            sigma: 0.3,
            ..SupplyParams::benchmark()
        };
        let path = sample_ou_path(&supply, &grid, &mut rng, SupplyScheme::Euler);
        let params = init_params(dims, seed.wrapping_add(c as u64));

        let (field, tape) = forward_recorded(&params, &grid, &path).unwrap();
        let (_, field_grad) = objective.evaluate_with_gradient(&field, &path).unwrap();
        let grads = backward(&params, &tape, &field_grad).unwrap();

        let h = 1e-4;
        for idx in 0..params.len() {
            let shifted = |delta: f64| {
                let mut q = params.clone();
                q.values_mut()[idx] += delta;
                loss_total(&q, &grid, &path, &objective)
            };
            // Richardson-extrapolated central difference, O(h^4)
            let d = |h: f64| (shifted(h) - shifted(-h)) / (2.0 * h);
            let fd = (4.0 * d(0.5 * h) - d(h)) / 3.0;
            let ad = grads.values()[idx];
            let rel = (ad - fd).abs() / ad.abs().max(fd.abs()).max(GRADIENT_FLOOR);
            worst = worst.max(rel);
        }
        parameters += params.len();
    }
    GradientCheck {
        configs,
        parameters,
        worst_relative: worst,
    }
}

/// Number of prefix potential values that differ between the two paths of
/// `pairs` random pairs sharing a random prefix.
pub fn causality_violations(pairs: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = GridSpec::benchmark();
    let supply = SupplyParams::benchmark_stochastic();
    let params = init_params(NetDims::default(), seed);
    let ex = grid.ext_x();
    let mut violations = 0;
    for _ in 0..pairs {
        let a = sample_ou_path(&supply, &grid, &mut rng, SupplyScheme::Euler);
        let mut b = sample_ou_path(&supply, &grid, &mut rng, SupplyScheme::Euler);
        let prefix = rng.random_range(1..grid.ext_t());
        b.values_mut()[..prefix].copy_from_slice(&a.values()[..prefix]);
        let fa = forward_field(&params, &grid, &a).unwrap();
        let fb = forward_field(&params, &grid, &b).unwrap();
        let n = prefix * ex;
        violations += fa.values()[..n]
            .iter()
            .zip(&fb.values()[..n])
            .filter(|(x, y)| x.to_bits() != y.to_bits())
            .count();
    }
    violations
}

pub struct MomentCheck {
    pub mean: f64,
    pub variance: f64,
    pub z_mean: f64,
    pub z_variance: f64,
}

/// Sample mean and variance of `Q(T)` over `paths` exact-scheme paths, with
/// their deviations from the closed form in Monte-Carlo standard errors.
pub fn ou_terminal_moments(paths: usize, seed: u64) -> MomentCheck {
    let grid = GridSpec::benchmark();
    let supply = SupplyParams::benchmark_stochastic();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let last = grid.n_t - 1;
    let samples: Vec<f64> = (0..paths)
        .map(|_| sample_ou_path(&supply, &grid, &mut rng, SupplyScheme::Exact).at(last))
        .collect();
    let n = paths as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let variance = samples.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = samples.iter().map(|q| (q - mean).powi(4)).sum::<f64>() / n;
    let t = grid.t(last);
    let (mu, var) = (supply.mean(t), supply.variance(t));
    MomentCheck {
        mean,
        variance,
        z_mean: (mean - mu) / (var / n).sqrt(),
        z_variance: (variance - var) / ((m4 - variance * variance) / n).sqrt(),
    }
}

/// Largest deviation of a `sigma = 0` exact-scheme path from the
/// closed-form mean.
pub fn degenerate_supply_error() -> f64 {
    let grid = GridSpec::benchmark();
    let supply = SupplyParams::benchmark();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let exact = sample_ou_path(&supply, &grid, &mut rng, SupplyScheme::Exact);
    grid.times()
        .zip(exact.values())
        .map(|(t, q)| (q - supply.mean(t)).abs())
        .fold(0.0, f64::max)
}

/// Two identical runs agree bitwise in parameters and logged losses.
pub fn runs_reproducible(config: &TrainConfig) -> bool {
    let run = || {
        let mut t = Trainer::new(config.clone()).unwrap();
        t.run().unwrap();
        t.into_parts()
    };
    let (p1, h1) = run();
    let (p2, h2) = run();
    p1 == p2 && h1.same_trajectory(&h2)
}

/// Training `config.steps` updates in one go equals stopping at `split`,
/// checkpointing through `file`, and resuming.
pub fn resume_matches(config: &TrainConfig, split: u64, file: &Path) -> bool {
    let mut whole = Trainer::new(config.clone()).unwrap();
    whole.run().unwrap();

    let mut first = Trainer::new(config.clone()).unwrap();
    let started = Instant::now();
    for _ in 0..split {
        first.advance(started).unwrap();
    }
    save_checkpoint(&first.checkpoint(), file).unwrap();
    let mut second = Trainer::resume(config.clone(), load_checkpoint(file).unwrap()).unwrap();
    second.run().unwrap();

    let tail: Vec<_> = whole
        .history()
        .records
        .iter()
        .filter(|r| r.step >= split)
        .map(|r| (r.step, r.loss))
        .collect();
    let resumed: Vec<_> = second.history().records.iter().map(|r| (r.step, r.loss)).collect();
    whole.params() == second.params()
        && tail == resumed
        && whole.history().final_loss == second.history().final_loss
}
