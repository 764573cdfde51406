use crate::domain::GridSpec;
use crate::error::{Error, Result};

/// Potential values on the extended grid with their forward differences on
/// the interior grid. `dx_phi` is the density `m`, `-dt_phi` the agent flux.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    grid: GridSpec,
    phi: Vec<f64>,
    dt_phi: Vec<f64>,
    dx_phi: Vec<f64>,
}

impl PotentialField {
    /// Takes row-major values, one row of `grid.ext_x()` per extended time level.
    pub fn from_values(grid: GridSpec, phi: Vec<f64>) -> Result<Self> {
        let expected = grid.ext_t() * grid.ext_x();
        if phi.len() != expected {
            return Err(Error::shape(format!(
                "field has {} values, extended grid needs {expected}",
                phi.len()
            )));
        }
        let (nt, nx, ex) = (grid.n_t, grid.n_x, grid.ext_x());
        let mut dt_phi = Vec::with_capacity(nt * nx);
        let mut dx_phi = Vec::with_capacity(nt * nx);
        for k in 0..nt {
            for i in 0..nx {
                let here = phi[k * ex + i];
                dt_phi.push((phi[(k + 1) * ex + i] - here) / grid.h_t);
                dx_phi.push((phi[k * ex + i + 1] - here) / grid.h_x);
            }
        }
        Ok(Self {
            grid,
            phi,
            dt_phi,
            dx_phi,
        })
    }

    /// Evaluates `f(t, x)` on every extended grid point.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut phi = Vec::with_capacity(grid.ext_t() * grid.ext_x());
        for k in 0..grid.ext_t() {
            let t = grid.t(k);
            for i in 0..grid.ext_x() {
                phi.push(f(t, grid.x(i)));
            }
        }
        Self::from_values(grid, phi).expect("sized from grid")
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::from_fn(grid, |_, _| 0.0)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.phi
    }

    pub fn into_values(self) -> Vec<f64> {
        self.phi
    }

    /// Extended-grid value, `k <= n_t`, `i <= n_x`.
    pub fn phi(&self, k: usize, i: usize) -> f64 {
        self.phi[k * self.grid.ext_x() + i]
    }

    /// Forward time difference at interior point `(k, i)`.
    pub fn dt(&self, k: usize, i: usize) -> f64 {
        self.dt_phi[k * self.grid.n_x + i]
    }

    /// Forward space difference at interior point `(k, i)`.
    pub fn dx(&self, k: usize, i: usize) -> f64 {
        self.dx_phi[k * self.grid.n_x + i]
    }

    pub fn dt_row(&self, k: usize) -> &[f64] {
        &self.dt_phi[k * self.grid.n_x..(k + 1) * self.grid.n_x]
    }

    pub fn dx_row(&self, k: usize) -> &[f64] {
        &self.dx_phi[k * self.grid.n_x..(k + 1) * self.grid.n_x]
    }

    /// `h_x * sum_i dx_phi[k][i]`.
    pub fn mass(&self, k: usize) -> f64 {
        self.grid.h_x * self.dx_row(k).iter().sum::<f64>()
    }

    pub(crate) fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        if self.grid != *grid {
            return Err(Error::shape(format!(
                "field grid {}x{} does not match {}x{}",
                self.grid.n_t, self.grid.n_x, grid.n_t, grid.n_x
            )));
        }
        Ok(())
    }
}
