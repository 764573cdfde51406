use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform space-time grid `[0, T] x [x_lo, x_hi]` plus one appended time
/// level and one appended space column used by forward differences.
///
/// Indices are zero-based: interior time levels `k in 0..n_t` sit at
/// `t_k = k * h_t`, interior space points `i in 0..n_x` at
/// `x_i = x_lo + i * h_x`. The extended grid adds level `n_t` and column `n_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridShape", into = "GridShape")]
pub struct GridSpec {
    pub t_lo: f64,
    pub t_hi: f64,
    pub n_t: usize,
    pub x_lo: f64,
    pub x_hi: f64,
    pub n_x: usize,
    pub h_t: f64,
    pub h_x: f64,
}

/// Serialized form of [`GridSpec`]; steps are derived on load.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridShape {
    t_hi: f64,
    n_t: usize,
    x_lo: f64,
    x_hi: f64,
    n_x: usize,
}

impl TryFrom<GridShape> for GridSpec {
    type Error = Error;

    fn try_from(s: GridShape) -> Result<Self> {
        GridSpec::new(s.t_hi, s.n_t, s.x_lo, s.x_hi, s.n_x)
    }
}

impl From<GridSpec> for GridShape {
    fn from(g: GridSpec) -> Self {
        GridShape {
            t_hi: g.t_hi,
            n_t: g.n_t,
            x_lo: g.x_lo,
            x_hi: g.x_hi,
            n_x: g.n_x,
        }
    }
}

impl GridSpec {
    pub fn new(t_hi: f64, n_t: usize, x_lo: f64, x_hi: f64, n_x: usize) -> Result<Self> {
        if n_t < 2 || n_x < 2 {
            return Err(Error::param(format!(
                "grid needs at least 2 points per axis, got n_t={n_t}, n_x={n_x}"
            )));
        }
        if !(t_hi.is_finite() && t_hi > 0.0) {
            return Err(Error::param(format!("horizon must be positive, got T={t_hi}")));
        }
        if !(x_lo.is_finite() && x_hi.is_finite() && x_hi > x_lo) {
            return Err(Error::param(format!(
                "degenerate space interval [{x_lo}, {x_hi}]"
            )));
        }
        Ok(Self {
            t_lo: 0.0,
            t_hi,
            n_t,
            x_lo,
            x_hi,
            n_x,
            h_t: t_hi / (n_t - 1) as f64,
            h_x: (x_hi - x_lo) / (n_x - 1) as f64,
        })
    }

    /// 17 time levels on `[0, 1]`, 31 points on `[-1, 1]`.
    pub fn benchmark() -> Self {
        Self::new(1.0, 17, -1.0, 1.0, 31).expect("benchmark grid is valid")
    }

    /// Number of time levels including the appended one.
    pub fn ext_t(&self) -> usize {
        self.n_t + 1
    }

    /// Number of space points including the appended one.
    pub fn ext_x(&self) -> usize {
        self.n_x + 1
    }

    pub fn t(&self, k: usize) -> f64 {
        self.t_lo + k as f64 * self.h_t
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_lo + i as f64 * self.h_x
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.ext_t()).map(|k| self.t(k))
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.ext_x()).map(|i| self.x(i))
    }
}

/// Builds a grid from the horizon and point counts.
pub fn build_grid(t_hi: f64, n_t: usize, x_lo: f64, x_hi: f64, n_x: usize) -> Result<GridSpec> {
    GridSpec::new(t_hi, n_t, x_lo, x_hi, n_x)
}
