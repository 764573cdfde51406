use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quartic bump `m_0(x) = 15/(16 r) (1 - ((x - c)/r)^2)^2` on `[c - r, c + r]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialDensity {
    pub center: f64,
    pub half_width: f64,
}

impl Default for InitialDensity {
    fn default() -> Self {
        Self {
            center: -0.2,
            half_width: 0.5,
        }
    }
}

impl InitialDensity {
    pub fn new(center: f64, half_width: f64) -> Result<Self> {
        if !(center.is_finite() && half_width.is_finite() && half_width > 0.0) {
            return Err(Error::param(format!(
                "initial density needs finite center and positive half width, got c={center}, r={half_width}"
            )));
        }
        Ok(Self { center, half_width })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    pub fn density(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.half_width;
        if u.abs() > 1.0 {
            return 0.0;
        }
        let s = 1.0 - u * u;
        15.0 / (16.0 * self.half_width) * s * s
    }

    /// `M_0(x) = int_{-inf}^x m_0`.
    pub fn cumulative(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.half_width;
        if u <= -1.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        let u2 = u * u;
        0.5 + 15.0 / 16.0 * u * (1.0 - 2.0 * u2 / 3.0 + u2 * u2 / 5.0)
    }
}

pub fn initial_cumulative(density: &InitialDensity, x: f64) -> f64 {
    density.cumulative(x)
}
