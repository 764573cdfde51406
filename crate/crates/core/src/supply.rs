//! Exogenous supply processes on the time grid.
//!
//! The deterministic supply solves `dQ = theta (Q_bar - Q) dt`; the
//! stochastic one adds `sigma dW`, an Ornstein-Uhlenbeck process shared by
//! every agent (common noise).

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::domain::GridSpec;
use crate::error::{Error, Result};
use crate::fmt::g9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SupplyParams {
    pub theta: f64,
    pub q_bar: f64,
    pub sigma: f64,
    pub q0: f64,
}

impl Default for SupplyParams {
    fn default() -> Self {
        Self::benchmark()
    }
}

impl SupplyParams {
    /// `theta = 2`, `Q_bar = 1`, `Q(0) = -0.5`, no noise.
    pub fn benchmark() -> Self {
        Self {
            theta: 2.0,
            q_bar: 1.0,
            sigma: 0.0,
            q0: -0.5,
        }
    }

    /// The benchmark drift with `sigma = 0.2`.
    pub fn benchmark_stochastic() -> Self {
        Self {
            sigma: 0.2,
            ..Self::benchmark()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta.is_finite() && self.theta > 0.0) {
            return Err(Error::param(format!("theta must be positive, got {}", self.theta)));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::param(format!("sigma must be nonnegative, got {}", self.sigma)));
        }
        if !(self.q_bar.is_finite() && self.q0.is_finite()) {
            return Err(Error::param("supply levels must be finite"));
        }
        Ok(())
    }

    /// Closed-form mean `E[Q(t)]`, which is also the deterministic solution.
    pub fn mean(&self, t: f64) -> f64 {
        self.q_bar + (self.q0 - self.q_bar) * (-self.theta * t).exp()
    }

    /// Closed-form `Var[Q(t)] = sigma^2 (1 - exp(-2 theta t)) / (2 theta)`.
    pub fn variance(&self, t: f64) -> f64 {
        self.sigma * self.sigma * (1.0 - (-2.0 * self.theta * t).exp()) / (2.0 * self.theta)
    }

    /// `int_0^t E[Q(s)] ds`.
    pub fn mean_integral(&self, t: f64) -> f64 {
        self.q_bar * t + (self.q0 - self.q_bar) * (1.0 - (-self.theta * t).exp()) / self.theta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SupplyScheme {
    /// Euler-Maruyama.
    #[default]
    Euler,
    /// Exact Gaussian transition of the OU process.
    Exact,
}

/// One realization of `Q` on every extended time level.
#[derive(Debug, Clone, PartialEq)]
pub struct SupplyPath {
    values: Vec<f64>,
}

impl SupplyPath {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn constant(grid: &GridSpec, q: f64) -> Self {
        Self::new(vec![q; grid.ext_t()])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub(crate) fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        if self.values.len() != grid.ext_t() {
            return Err(Error::shape(format!(
                "supply path has {} levels, extended grid has {}",
                self.values.len(),
                grid.ext_t()
            )));
        }
        Ok(())
    }

    /// Writes `t,Q` rows.
    pub fn write_csv<W: Write>(&self, grid: &GridSpec, mut out: W) -> Result<()> {
        writeln!(out, "t,Q")?;
        for (k, q) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", g9(grid.t(k)), g9(*q))?;
        }
        Ok(())
    }
}

/// Closed-form deterministic supply on the extended time axis.
pub fn deterministic_supply(params: &SupplyParams, grid: &GridSpec) -> SupplyPath {
    SupplyPath::new(grid.times().map(|t| params.mean(t)).collect())
}

/// Samples one OU path starting at `q0`.
pub fn sample_ou_path<R: Rng + ?Sized>(
    params: &SupplyParams,
    grid: &GridSpec,
    rng: &mut R,
    scheme: SupplyScheme,
) -> SupplyPath {
    let h = grid.h_t;
    let (theta, q_bar, sigma) = (params.theta, params.q_bar, params.sigma);
    let mut values = Vec::with_capacity(grid.ext_t());
    let mut q = params.q0;
    values.push(q);
    match scheme {
        SupplyScheme::Euler => {
            let scale = sigma * h.sqrt();
            for _ in 1..grid.ext_t() {
                let xi: f64 = rng.sample(StandardNormal);
                q = q + theta * (q_bar - q) * h + scale * xi;
                values.push(q);
            }
        }
        SupplyScheme::Exact => {
            let decay = (-theta * h).exp();
            let scale = sigma * ((1.0 - (-2.0 * theta * h).exp()) / (2.0 * theta)).sqrt();
            for _ in 1..grid.ext_t() {
                let xi: f64 = rng.sample(StandardNormal);
                q = q_bar + (q - q_bar) * decay + scale * xi;
                values.push(q);
            }
        }
    }
    SupplyPath::new(values)
}

/// Trapezoid approximation of `int_0^{t_k} Q`, `k <= n_t`.
pub fn cumulative_supply(path: &SupplyPath, grid: &GridSpec, k: usize) -> Result<f64> {
    path.check_grid(grid)?;
    if k > grid.n_t {
        return Err(Error::IndexOutOfRange {
            index: k,
            max: grid.n_t,
        });
    }
    let v = path.values();
    Ok((0..k).map(|j| 0.5 * (v[j] + v[j + 1]) * grid.h_t).sum())
}

/// Cumulative supply at every extended level.
pub fn cumulative_profile(path: &SupplyPath, grid: &GridSpec) -> Vec<f64> {
    let v = path.values();
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(v.len());
    out.push(0.0);
    for w in v.windows(2) {
        acc += 0.5 * (w[0] + w[1]) * grid.h_t;
        out.push(acc);
    }
    out
}

/// Stream tag separating training draws from evaluation draws.
const EVAL_STREAM_BIT: u64 = 1 << 63;

/// Generator for the supply sample of training step `step`.
pub fn training_rng(seed: u64, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(step & !EVAL_STREAM_BIT);
    rng
}

/// Generator for test sample `index`; never overlaps a training stream.
pub fn evaluation_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index | EVAL_STREAM_BIT);
    rng
}
