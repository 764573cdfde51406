//! Discretized penalized objective: the variational term plus four penalties
//! for positivity, balance, initial condition and unit mass.
//!
//! All sums run over interior points, time level major, in a fixed order so
//! results are bit-stable.

use serde::{Deserialize, Serialize};

use crate::domain::{GridSpec, InitialDensity, LagrangianModel, PotentialField, DEFAULT_EPS};
use crate::error::{Error, Result};
use crate::fmt::g9;
use crate::supply::SupplyPath;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_v: f64,
    pub l_0: f64,
    pub l_b: f64,
    pub l_m0: f64,
    pub l_p: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub const CSV_HEADER: &'static str = "step,l_v,l_0,l_b,l_m0,l_p,total";

    pub fn csv_row(&self, step: u64) -> String {
        format!(
            "{step},{},{},{},{},{},{}",
            g9(self.l_v),
            g9(self.l_0),
            g9(self.l_b),
            g9(self.l_m0),
            g9(self.l_p),
            g9(self.total)
        )
    }

    pub fn terms(&self) -> [f64; 5] {
        [self.l_v, self.l_0, self.l_b, self.l_m0, self.l_p]
    }

    pub fn is_finite(&self) -> bool {
        self.terms().iter().all(|v| v.is_finite()) && self.total.is_finite()
    }

    /// Term-wise mean of several evaluations.
    pub fn mean(items: &[LossBreakdown]) -> LossBreakdown {
        let n = items.len().max(1) as f64;
        let mut acc = LossBreakdown::default();
        for b in items {
            acc.l_v += b.l_v;
            acc.l_0 += b.l_0;
            acc.l_b += b.l_b;
            acc.l_m0 += b.l_m0;
            acc.l_p += b.l_p;
            acc.total += b.total;
        }
        LossBreakdown {
            l_v: acc.l_v / n,
            l_0: acc.l_0 / n,
            l_b: acc.l_b / n,
            l_m0: acc.l_m0 / n,
            l_p: acc.l_p / n,
            total: acc.total / n,
        }
    }
}

/// Multipliers applied to each term when forming the total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossWeights {
    pub v: f64,
    pub zero: f64,
    pub balance: f64,
    pub initial: f64,
    pub probability: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            v: 1.0,
            zero: 1.0,
            balance: 1.0,
            initial: 1.0,
            probability: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let w = [self.v, self.zero, self.balance, self.initial, self.probability];
        if w.iter().all(|w| w.is_finite() && *w >= 0.0) {
            Ok(())
        } else {
            Err(Error::param(format!("loss weights must be finite and nonnegative, got {self:?}")))
        }
    }
}

/// Model data the loss depends on besides the field and the supply.
#[derive(Debug, Clone)]
pub struct Objective {
    pub model: LagrangianModel,
    pub density: InitialDensity,
    pub eps: f64,
    pub weights: LossWeights,
}

impl Default for Objective {
    fn default() -> Self {
        Self {
            model: LagrangianModel::lq(),
            density: InitialDensity::default(),
            eps: DEFAULT_EPS,
            weights: LossWeights::default(),
        }
    }
}

impl Objective {
    pub fn evaluate(&self, field: &PotentialField, path: &SupplyPath) -> Result<LossBreakdown> {
        path.check_grid(field.grid())?;
        let grid = field.grid();
        let l_v = loss_variational(field, grid, &self.model, self.eps)?;
        let l_0 = loss_positivity(field, grid)?;
        let l_b = loss_balance(field, path, grid)?;
        let l_m0 = loss_initial(field, grid, &self.density)?;
        let l_p = loss_probability(field, grid)?;
        Ok(self.combine(l_v, l_0, l_b, l_m0, l_p))
    }

    fn combine(&self, l_v: f64, l_0: f64, l_b: f64, l_m0: f64, l_p: f64) -> LossBreakdown {
        let w = &self.weights;
        let total = w.v * l_v + w.zero * l_0 + w.balance * l_b + w.initial * l_m0 + w.probability * l_p;
        LossBreakdown {
            l_v,
            l_0,
            l_b,
            l_m0,
            l_p,
            total,
        }
    }

    /// Loss terms and the derivative of the weighted total with respect to
    /// every extended-grid potential value (row-major, `ext_t x ext_x`).
    pub fn evaluate_with_gradient(
        &self,
        field: &PotentialField,
        path: &SupplyPath,
    ) -> Result<(LossBreakdown, Vec<f64>)> {
        let breakdown = self.evaluate(field, path)?;
        let grid = field.grid();
        let (nt, nx, ex) = (grid.n_t, grid.n_x, grid.ext_x());
        let (h_t, h_x) = (grid.h_t, grid.h_x);
        let w = &self.weights;
        let cell = h_x * h_t;

        let mut grad = vec![0.0; grid.ext_t() * ex];
        for k in 0..nt {
            let dt_row = field.dt_row(k);
            let dx_row = field.dx_row(k);
            let balance = h_x * dt_row.iter().sum::<f64>() + path.at(k);
            let deficit = 1.0 - h_x * dx_row.iter().sum::<f64>();
            for i in 0..nx {
                let x = grid.x(i);
                let (dt, dx) = (dt_row[i], dx_row[i]);
                let (f_j, f_m) = self.model.perspective_grad(x, -dt, dx, self.eps);
                let mut g_dt = w.v * cell * (-f_j - self.model.terminal_slope(x));
                let mut g_dx = w.v * cell * f_m;
                if dx < 0.0 {
                    g_dx -= w.zero;
                }
                g_dt += w.balance * 2.0 * balance * h_x;
                g_dx -= w.probability * 2.0 * deficit * h_x;

                let here = k * ex + i;
                grad[here] -= g_dt / h_t + g_dx / h_x;
                grad[here + ex] += g_dt / h_t;
                grad[here + 1] += g_dx / h_x;
            }
        }
        for (i, g) in grad[..nx].iter_mut().enumerate() {
            *g += w.initial * 2.0 * (field.phi(0, i) - self.density.cumulative(grid.x(i)));
        }
        Ok((breakdown, grad))
    }
}

/// `h_x h_t sum_k sum_i [F(x_i, -dt_phi, dx_phi) - u_T'(x_i) dt_phi]`.
pub fn loss_variational(field: &PotentialField, grid: &GridSpec, model: &LagrangianModel, eps: f64) -> Result<f64> {
    field.check_grid(grid)?;
    let mut sum = 0.0;
    for k in 0..grid.n_t {
        for (i, (&dt, &dx)) in field.dt_row(k).iter().zip(field.dx_row(k)).enumerate() {
            let x = grid.x(i);
            sum += model.perspective(x, -dt, dx, eps) - model.terminal_slope(x) * dt;
        }
    }
    Ok(grid.h_x * grid.h_t * sum)
}

/// `sum_k sum_i max(-dx_phi, 0)`.
pub fn loss_positivity(field: &PotentialField, grid: &GridSpec) -> Result<f64> {
    field.check_grid(grid)?;
    let mut sum = 0.0;
    for k in 0..grid.n_t {
        for &dx in field.dx_row(k) {
            sum += (-dx).max(0.0);
        }
    }
    Ok(sum)
}

/// `sum_k (h_x sum_i dt_phi + Q_k)^2`.
pub fn loss_balance(field: &PotentialField, path: &SupplyPath, grid: &GridSpec) -> Result<f64> {
    field.check_grid(grid)?;
    path.check_grid(grid)?;
    let mut sum = 0.0;
    for k in 0..grid.n_t {
        let r = grid.h_x * field.dt_row(k).iter().sum::<f64>() + path.at(k);
        sum += r * r;
    }
    Ok(sum)
}

/// `sum_i (phi(0, x_i) - M_0(x_i))^2`.
pub fn loss_initial(field: &PotentialField, grid: &GridSpec, density: &InitialDensity) -> Result<f64> {
    field.check_grid(grid)?;
    let mut sum = 0.0;
    for i in 0..grid.n_x {
        let r = field.phi(0, i) - density.cumulative(grid.x(i));
        sum += r * r;
    }
    Ok(sum)
}

/// `sum_k (1 - h_x sum_i dx_phi)^2`.
pub fn loss_probability(field: &PotentialField, grid: &GridSpec) -> Result<f64> {
    field.check_grid(grid)?;
    let mut sum = 0.0;
    for k in 0..grid.n_t {
        let r = 1.0 - grid.h_x * field.dx_row(k).iter().sum::<f64>();
        sum += r * r;
    }
    Ok(sum)
}

/// All five terms with the given weights.
pub fn loss_total(field: &PotentialField, path: &SupplyPath, objective: &Objective) -> Result<LossBreakdown> {
    objective.evaluate(field, path)
}
