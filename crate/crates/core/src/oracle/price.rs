use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::domain::{LagrangianModel, PotentialField};
use crate::error::{Error, Result};
use crate::fmt::g9;

/// Mass threshold below which a grid point is ignored in price recovery.
pub const DEFAULT_MASS_THRESHOLD: f64 = 1e-3;

/// Price at the interior time levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricePath {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl PricePath {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(times.len(), values.len());
        Self { times, values }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `max_k |self_k - other_k|`.
    pub fn linf_distance(&self, other: &PricePath) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `t,price_predicted,price_analytic,abs_error` rows.
    pub fn write_comparison_csv<W: Write>(&self, reference: &PricePath, mut out: W) -> Result<()> {
        writeln!(out, "t,price_predicted,price_analytic,abs_error")?;
        for ((t, p), r) in self.times.iter().zip(&self.values).zip(&reference.values) {
            writeln!(out, "{},{},{},{}", g9(*t), g9(*p), g9(*r), g9((p - r).abs()))?;
        }
        Ok(())
    }
}

/// How the price is recovered from a potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceMode {
    /// Density-weighted average of `phi_t / phi_x` per level.
    #[default]
    WeightedRatio,
    /// Terminal condition plus backward integration of the first
    /// Euler-Lagrange equation; needs second differences.
    TerminalBackward,
}

/// Recovers the price per interior level as the mass-weighted mean of
/// `w = dt_phi / dx_phi` over points with `dx_phi >= threshold`.
///
/// For the quadratic model `price + u_x = phi_t / phi_x`, so this is exact
/// whenever `u_x` vanishes.
pub fn extract_price(field: &PotentialField, mass_threshold: f64) -> Result<PricePath> {
    let grid = field.grid();
    let mut values = Vec::with_capacity(grid.n_t);
    for k in 0..grid.n_t {
        let (mut flux, mut mass) = (0.0, 0.0);
        for (&dt, &dx) in field.dt_row(k).iter().zip(field.dx_row(k)) {
            if dx >= mass_threshold {
                // w * m = dt
                flux += dt;
                mass += dx;
            }
        }
        if mass == 0.0 {
            return Err(Error::DegenerateDensity { level: k });
        }
        values.push(flux / mass);
    }
    Ok(PricePath::new((0..grid.n_t).map(|k| grid.t(k)).collect(), values))
}

/// Price from the terminal condition `-D_vL(v(T, x)) - price(T) = u_T'(x)`
/// and backward integration of `(D_vL(v) + price)_t = -(H(x, -D_vL(v)))_x`,
/// with `v = -phi_t / phi_x`. Each level averages the pointwise estimates
/// with weight `m` over points whose neighbours also carry mass.
pub fn extract_price_terminal(field: &PotentialField, model: &LagrangianModel, mass_threshold: f64) -> Result<PricePath> {
    let grid = field.grid();
    let (nt, nx) = (grid.n_t, grid.n_x);
    let velocity = |k: usize, i: usize| -> Option<f64> {
        let m = field.dx(k, i);
        (m >= mass_threshold).then(|| -field.dt(k, i) / m)
    };

    // flux_x[k][i] = d/dx H(x, -D_vL(v)) by central differences
    let mut source = vec![None; nt * nx];
    for k in 0..nt {
        for i in 1..nx - 1 {
            if let (Some(vl), Some(vr)) = (velocity(k, i - 1), velocity(k, i + 1)) {
                let (xl, xr) = (grid.x(i - 1), grid.x(i + 1));
                let hl = model.hamiltonian(xl, -model.lagrangian_dv(xl, vl));
                let hr = model.hamiltonian(xr, -model.lagrangian_dv(xr, vr));
                source[k * nx + i] = Some((hr - hl) / (2.0 * grid.h_x));
            }
        }
    }

    let last = nt - 1;
    let mut values = vec![0.0; nt];
    for (k, value) in values.iter_mut().enumerate() {
        let (mut acc, mut mass) = (0.0, 0.0);
        for i in 0..nx {
            let Some(v) = velocity(k, i) else { continue };
            let x = grid.x(i);
            // price(t) = -D_vL(v(t)) - u_T' + int_t^T source ds, along fixed x
            let mut integral = 0.0;
            let mut complete = true;
            for kk in k..last {
                match source[kk * nx + i] {
                    Some(s) => integral += s * grid.h_t,
                    None => {
                        complete = false;
                        break;
                    }
                }
            }
            if !complete {
                continue;
            }
            let m = field.dx(k, i);
            acc += m * (-model.lagrangian_dv(x, v) - model.terminal_slope(x) + integral);
            mass += m;
        }
        if mass == 0.0 {
            return Err(Error::DegenerateDensity { level: k });
        }
        *value = acc / mass;
    }
    Ok(PricePath::new((0..nt).map(|k| grid.t(k)).collect(), values))
}

/// Price in the requested mode.
pub fn recover_price(field: &PotentialField, model: &LagrangianModel, mode: PriceMode, mass_threshold: f64) -> Result<PricePath> {
    match mode {
        PriceMode::WeightedRatio => extract_price(field, mass_threshold),
        PriceMode::TerminalBackward => extract_price_terminal(field, model, mass_threshold),
    }
}

/// Value function on the interior grid, `None` where the density falls
/// below the threshold somewhere on `[t_k, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    n_x: usize,
    values: Vec<Option<f64>>,
}

impl ValueFunction {
    pub fn at(&self, k: usize, i: usize) -> Option<f64> {
        self.values[k * self.n_x + i]
    }

    pub fn level(&self, k: usize) -> &[Option<f64>] {
        &self.values[k * self.n_x..(k + 1) * self.n_x]
    }
}

/// `u(t_k, x) = u_T(x) - int_{t_k}^T H(x, -D_vL(x, -phi_t/phi_x)) ds` with a
/// right-endpoint rule, `T` being the last interior level. `u_T` is the
/// integral of the terminal slope from `x_lo` (zero without terminal cost).
pub fn reconstruct_value_function(field: &PotentialField, model: &LagrangianModel, mass_threshold: f64) -> Result<ValueFunction> {
    let grid = field.grid();
    let (nt, nx) = (grid.n_t, grid.n_x);
    let mut terminal = vec![0.0; nx];
    if model.has_terminal_cost() {
        for i in 1..nx {
            let (a, b) = (grid.x(i - 1), grid.x(i));
            terminal[i] = terminal[i - 1] + 0.5 * (model.terminal_slope(a) + model.terminal_slope(b)) * grid.h_x;
        }
    }
    let mut values = vec![None; nt * nx];
    for i in 0..nx {
        let x = grid.x(i);
        let mut u = Some(terminal[i]);
        values[(nt - 1) * nx + i] = u;
        for k in (0..nt - 1).rev() {
            let m = field.dx(k + 1, i);
            u = match u {
                Some(u) if m >= mass_threshold => {
                    let v = -field.dt(k + 1, i) / m;
                    let running = model.hamiltonian(x, -model.lagrangian_dv(x, v));
                    Some(u - running * grid.h_t)
                }
                _ => None,
            };
            values[k * nx + i] = u;
        }
    }
    for k in 0..nt - 1 {
        if values[k * nx..(k + 1) * nx].iter().all(Option::is_none) {
            return Err(Error::DegenerateDensity { level: k });
        }
    }
    Ok(ValueFunction { n_x: nx, values })
}
