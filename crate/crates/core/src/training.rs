//! Deterministic and stochastic optimization loops with logging and
//! checkpoint/resume.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::domain::{GridSpec, InitialDensity, DEFAULT_EPS};
use crate::error::{Error, Result};
use crate::fmt::g9;
use crate::loss::{LossBreakdown, LossWeights, Objective};
use crate::nn::{
    adam_step, backward, forward_recorded, init_params, AdamHyper, AdamState, Checkpoint, GradientAccumulator,
    NetDims, NetParams,
};
use crate::oracle::{check_divergence, scheduled_rate};
use crate::supply::{deterministic_supply, sample_ou_path, training_rng, SupplyParams, SupplyPath, SupplyScheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainMode {
    #[default]
    Deterministic,
    Stochastic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub mode: TrainMode,
    pub steps: u64,
    pub seed: u64,
    pub grid: GridSpec,
    pub supply: SupplyParams,
    pub density: InitialDensity,
    pub dims: NetDims,
    pub adam: AdamHyper,
    pub weights: LossWeights,
    pub eps: f64,
    pub log_every: u64,
    /// 0 disables periodic checkpoints.
    pub checkpoint_every: u64,
    /// Supply paths averaged per stochastic step.
    pub batch_size: usize,
    pub scheme: SupplyScheme,
    /// Learning rate at the last step as a fraction of `adam.learning_rate`,
    /// decaying geometrically. `1.0` keeps it constant.
    pub lr_final_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::deterministic()
    }
}

impl TrainConfig {
    /// Benchmark deterministic run: 18000 steps on the 17x31 grid.
    pub fn deterministic() -> Self {
        Self {
            mode: TrainMode::Deterministic,
            steps: 18_000,
            seed: 0,
            grid: GridSpec::benchmark(),
            supply: SupplyParams::benchmark(),
            density: InitialDensity::default(),
            dims: NetDims::default(),
            adam: AdamHyper::default(),
            weights: LossWeights::default(),
            eps: DEFAULT_EPS,
            log_every: 100,
            checkpoint_every: 0,
            batch_size: 1,
            scheme: SupplyScheme::Euler,
            lr_final_fraction: 1.0,
        }
    }

    /// Benchmark stochastic run: 36000 steps with `sigma = 0.2` and the
    /// learning rate decaying to 1% of its initial value.
    pub fn stochastic() -> Self {
        Self {
            mode: TrainMode::Stochastic,
            steps: 36_000,
            supply: SupplyParams::benchmark_stochastic(),
            lr_final_fraction: 0.01,
            ..Self::deterministic()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::param("steps must be at least 1"));
        }
        if self.log_every == 0 {
            return Err(Error::param("log_every must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::param("batch_size must be at least 1"));
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::param(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.lr_final_fraction.is_finite() && self.lr_final_fraction > 0.0) {
            return Err(Error::param(format!(
                "lr_final_fraction must be positive, got {}",
                self.lr_final_fraction
            )));
        }
        if self.mode == TrainMode::Stochastic && self.supply.sigma < 0.0 {
            return Err(Error::param("stochastic training needs sigma >= 0"));
        }
        // re-run the constructors' checks on deserialized values
        GridSpec::new(self.grid.t_hi, self.grid.n_t, self.grid.x_lo, self.grid.x_hi, self.grid.n_x)?;
        NetDims::new(self.dims.d_h, self.dims.d_1, self.dims.d_2)?;
        InitialDensity::new(self.density.center, self.density.half_width)?;
        self.supply.validate()?;
        self.adam.validate()?;
        self.weights.validate()
    }

    pub fn objective(&self) -> Objective {
        Objective {
            density: self.density,
            eps: self.eps,
            weights: self.weights,
            ..Objective::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    /// Zero-based index of the update; the loss is that of the parameters
    /// it starts from.
    pub step: u64,
    pub loss: LossBreakdown,
    /// Wall-clock seconds since the run (or resumed segment) started.
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<HistoryRecord>,
    /// Loss of the returned parameters.
    pub final_loss: Option<LossBreakdown>,
}

impl TrainHistory {
    pub const CSV_HEADER: &'static str = "step,l_v,l_0,l_b,l_m0,l_p,total,seconds";

    /// Running minimum of the logged total loss.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.records
            .iter()
            .scan(f64::INFINITY, |best, r| {
                *best = best.min(r.loss.total);
                Some(*best)
            })
            .collect()
    }

    /// Equality of everything except the timestamps.
    pub fn same_trajectory(&self, other: &TrainHistory) -> bool {
        self.final_loss == other.final_loss
            && self.records.len() == other.records.len()
            && self
                .records
                .iter()
                .zip(&other.records)
                .all(|(a, b)| a.step == b.step && a.loss == b.loss)
    }

    pub fn write_csv<W: Write>(&self, mut out: W, header: bool) -> Result<()> {
        if header {
            writeln!(out, "{}", Self::CSV_HEADER)?;
        }
        for r in &self.records {
            writeln!(out, "{},{}", r.loss.csv_row(r.step), g9(r.seconds))?;
        }
        Ok(())
    }
}

/// Training state that can be stepped, checkpointed and resumed.
#[derive(Debug, Clone)]
pub struct Trainer {
    config: TrainConfig,
    objective: Objective,
    fixed_path: Option<SupplyPath>,
    params: NetParams,
    adam: AdamState,
    step: u64,
    reference_total: Option<f64>,
    history: TrainHistory,
}

impl Trainer {
    /// Fresh run with Glorot-initialized parameters from `config.seed`.
    /// Deterministic mode trains on the closed-form supply.
    pub fn new(config: TrainConfig) -> Result<Self> {
        let path = match config.mode {
            TrainMode::Deterministic => Some(deterministic_supply(&config.supply, &config.grid)),
            TrainMode::Stochastic => None,
        };
        Self::build(config, path)
    }

    /// Fresh run on a caller-supplied fixed supply path.
    pub fn with_path(config: TrainConfig, path: SupplyPath) -> Result<Self> {
        path.check_grid(&config.grid)?;
        Self::build(config, Some(path))
    }

    fn build(config: TrainConfig, fixed_path: Option<SupplyPath>) -> Result<Self> {
        config.validate()?;
        let params = init_params(config.dims, config.seed);
        let adam = AdamState::new(config.dims, config.adam);
        Ok(Self {
            objective: config.objective(),
            config,
            fixed_path,
            params,
            adam,
            step: 0,
            reference_total: None,
            history: TrainHistory::default(),
        })
    }

    /// Continues from `checkpoint` with the same configuration.
    pub fn resume(config: TrainConfig, checkpoint: Checkpoint) -> Result<Self> {
        let mut trainer = Self::new(config)?;
        trainer.restore(checkpoint)?;
        Ok(trainer)
    }

    /// [`Trainer::resume`] on a fixed path.
    pub fn resume_with_path(config: TrainConfig, path: SupplyPath, checkpoint: Checkpoint) -> Result<Self> {
        let mut trainer = Self::with_path(config, path)?;
        trainer.restore(checkpoint)?;
        Ok(trainer)
    }

    fn restore(&mut self, checkpoint: Checkpoint) -> Result<()> {
        if checkpoint.params.dims() != self.config.dims {
            return Err(Error::shape(format!(
                "checkpoint dims {:?} differ from configured {:?}",
                checkpoint.params.dims(),
                self.config.dims
            )));
        }
        if checkpoint.adam.first_moment.len() != checkpoint.params.len() {
            return Err(Error::shape("checkpoint optimizer state does not match parameters"));
        }
        if checkpoint.step > self.config.steps {
            return Err(Error::param(format!(
                "checkpoint step {} exceeds configured steps {}",
                checkpoint.step, self.config.steps
            )));
        }
        self.params = checkpoint.params;
        self.adam = checkpoint.adam;
        self.step = checkpoint.step;
        Ok(())
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn params(&self) -> &NetParams {
        &self.params
    }

    /// Completed updates.
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.config.steps
    }

    pub fn history(&self) -> &TrainHistory {
        &self.history
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            params: self.params.clone(),
            adam: self.adam.clone(),
            step: self.step,
        }
    }

    /// Supply paths used by update `step`.
    fn paths(&self, step: u64) -> Vec<SupplyPath> {
        match &self.fixed_path {
            Some(path) => vec![path.clone()],
            None => {
                let mut rng = training_rng(self.config.seed, step);
                (0..self.config.batch_size)
                    .map(|_| sample_ou_path(&self.config.supply, &self.config.grid, &mut rng, self.config.scheme))
                    .collect()
            }
        }
    }

    /// Batch-averaged loss and parameter gradient.
    fn loss_and_gradient(&self, paths: &[SupplyPath]) -> Result<(LossBreakdown, GradientAccumulator)> {
        let mut grads = GradientAccumulator::zeros(self.config.dims);
        let mut losses = Vec::with_capacity(paths.len());
        for path in paths {
            let (field, tape) = forward_recorded(&self.params, &self.config.grid, path)?;
            let (loss, field_grad) = self.objective.evaluate_with_gradient(&field, path)?;
            grads.add_assign(&backward(&self.params, &tape, &field_grad)?);
            losses.push(loss);
        }
        if paths.len() > 1 {
            grads.scale(1.0 / paths.len() as f64);
            Ok((LossBreakdown::mean(&losses), grads))
        } else {
            Ok((losses[0], grads))
        }
    }

    /// Loss of the current parameters on the paths of update `step`.
    pub fn evaluate(&self, step: u64) -> Result<LossBreakdown> {
        let paths = self.paths(step);
        let losses = paths
            .iter()
            .map(|path| {
                let (field, _) = forward_recorded(&self.params, &self.config.grid, path)?;
                self.objective.evaluate(&field, path)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LossBreakdown::mean(&losses))
    }

    /// Performs one update and returns the loss it started from.
    pub fn advance(&mut self, started: Instant) -> Result<LossBreakdown> {
        if self.is_finished() {
            return Err(Error::param(format!("training already finished at step {}", self.step)));
        }
        let step = self.step;
        let paths = self.paths(step);
        let (loss, grads) = self.loss_and_gradient(&paths).map_err(|e| match e {
            Error::NonFinite { node } => Error::Diverged {
                step: step as usize,
                detail: format!("non-finite value at {node}"),
            },
            other => other,
        })?;
        let reference = *self.reference_total.get_or_insert(loss.total);
        check_divergence(step as usize, &loss, reference)?;
        if step.is_multiple_of(self.config.log_every) || step + 1 == self.config.steps {
            self.history.records.push(HistoryRecord {
                step,
                loss,
                seconds: started.elapsed().as_secs_f64(),
            });
        }
        self.adam.hyper.learning_rate = scheduled_rate(
            self.config.adam.learning_rate,
            self.config.lr_final_fraction,
            step as usize,
            self.config.steps as usize,
        );
        adam_step(&mut self.params, &grads, &mut self.adam)?;
        if !self.params.is_finite() {
            return Err(Error::Diverged {
                step: step as usize,
                detail: "non-finite parameters after update".into(),
            });
        }
        self.step += 1;
        Ok(loss)
    }

    /// Runs until `config.steps`, handing a checkpoint to `on_checkpoint`
    /// every `checkpoint_every` completed updates.
    pub fn run_with<F>(&mut self, mut on_checkpoint: F) -> Result<()>
    where
        F: FnMut(&Checkpoint) -> Result<()>,
    {
        let started = Instant::now();
        while !self.is_finished() {
            self.advance(started)?;
            let every = self.config.checkpoint_every;
            if every > 0 && self.step.is_multiple_of(every) {
                on_checkpoint(&self.checkpoint())?;
            }
        }
        let final_loss = self.evaluate(self.config.steps.saturating_sub(1))?;
        self.history.final_loss = Some(final_loss);
        Ok(())
    }

    pub fn run(&mut self) -> Result<()> {
        self.run_with(|_| Ok(()))
    }

    pub fn into_parts(self) -> (NetParams, TrainHistory) {
        (self.params, self.history)
    }
}

fn expect_mode(config: &TrainConfig, mode: TrainMode) -> Result<()> {
    if config.mode == mode {
        Ok(())
    } else {
        Err(Error::param(format!("expected {mode:?} mode, got {:?}", config.mode)))
    }
}

/// Trains on the closed-form supply.
pub fn train_deterministic(config: &TrainConfig) -> Result<(NetParams, TrainHistory)> {
    expect_mode(config, TrainMode::Deterministic)?;
    let mut trainer = Trainer::new(config.clone())?;
    trainer.run()?;
    Ok(trainer.into_parts())
}

/// Trains on a fresh OU path per step drawn from `training_rng(seed, step)`.
pub fn train_stochastic(config: &TrainConfig) -> Result<(NetParams, TrainHistory)> {
    expect_mode(config, TrainMode::Stochastic)?;
    let mut trainer = Trainer::new(config.clone())?;
    trainer.run()?;
    Ok(trainer.into_parts())
}

/// Trains on one fixed supply path regardless of `config.mode`.
pub fn train_with_path(config: &TrainConfig, path: SupplyPath) -> Result<(NetParams, TrainHistory)> {
    let mut trainer = Trainer::with_path(config.clone(), path)?;
    trainer.run()?;
    Ok(trainer.into_parts())
}
