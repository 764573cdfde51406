use std::fmt;
use std::sync::Arc;

/// Default floor applied to the density inside the perspective function.
pub const DEFAULT_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LagrangianKind {
    /// `L(x, v) = v^2 / 2`, `H(x, p) = p^2 / 2`.
    #[default]
    Lq,
}

type SlopeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Running cost in velocity together with its Legendre dual and the slope
/// of the terminal cost.
#[derive(Clone, Default)]
pub struct LagrangianModel {
    pub kind: LagrangianKind,
    terminal_slope: Option<SlopeFn>,
}

impl fmt::Debug for LagrangianModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LagrangianModel")
            .field("kind", &self.kind)
            .field("terminal_slope", &self.terminal_slope.as_ref().map(|_| "fn"))
            .finish()
    }
}

impl LagrangianModel {
    /// Quadratic running cost, no terminal cost.
    pub fn lq() -> Self {
        Self::default()
    }

    /// Attaches `u_T'(x)`.
    pub fn with_terminal_slope(mut self, slope: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.terminal_slope = Some(Arc::new(slope));
        self
    }

    pub fn has_terminal_cost(&self) -> bool {
        self.terminal_slope.is_some()
    }

    pub fn terminal_slope(&self, x: f64) -> f64 {
        self.terminal_slope.as_ref().map_or(0.0, |f| f(x))
    }

    pub fn lagrangian(&self, _x: f64, v: f64) -> f64 {
        match self.kind {
            LagrangianKind::Lq => 0.5 * v * v,
        }
    }

    pub fn hamiltonian(&self, _x: f64, p: f64) -> f64 {
        match self.kind {
            LagrangianKind::Lq => 0.5 * p * p,
        }
    }

    /// `D_p H(x, p)`.
    pub fn hamiltonian_dp(&self, _x: f64, p: f64) -> f64 {
        match self.kind {
            LagrangianKind::Lq => p,
        }
    }

    /// `D_v L(x, v)`.
    pub fn lagrangian_dv(&self, _x: f64, v: f64) -> f64 {
        match self.kind {
            LagrangianKind::Lq => v,
        }
    }

    /// Perspective `F(x, j, m) = m L(x, j/m)` with the density floored at
    /// `eps`. Equals the exact value whenever `m >= eps`; finite and
    /// nonnegative for every real `m`.
    pub fn perspective(&self, x: f64, j: f64, m: f64, eps: f64) -> f64 {
        let m = m.max(eps);
        m * self.lagrangian(x, j / m)
    }

    /// Partial derivatives `(dF/dj, dF/dm)` of the floored perspective.
    /// The floor is flat in `m`, so `dF/dm = 0` when `m <= eps`.
    pub fn perspective_grad(&self, _x: f64, j: f64, m: f64, eps: f64) -> (f64, f64) {
        match self.kind {
            LagrangianKind::Lq => {
                if m > eps {
                    let v = j / m;
                    (v, -0.5 * v * v)
                } else {
                    (j / eps, 0.0)
                }
            }
        }
    }
}

/// `H(x, p)` for the given model.
pub fn hamiltonian(model: &LagrangianModel, x: f64, p: f64) -> f64 {
    model.hamiltonian(x, p)
}

/// Regularized perspective function of the model's Lagrangian.
pub fn perspective_f(model: &LagrangianModel, x: f64, j: f64, m: f64, eps: f64) -> f64 {
    model.perspective(x, j, m, eps)
}
