use crate::domain::{GridSpec, InitialDensity, PotentialField};
use crate::error::{Error, Result};
use crate::oracle::PricePath;
use crate::supply::{cumulative_profile, SupplyParams, SupplyPath};

/// Closed-form potential of the quadratic benchmark without terminal cost.
///
/// Every agent moves with velocity `Q(t)`, so the density is `m_0`
/// transported by `X(t) = int_0^t Q` and `phi(t, x) = M_0(x - X(t))`.
/// `X` is the trapezoid cumulative supply of `path`.
pub fn analytic_potential_lq(grid: &GridSpec, path: &SupplyPath, density: &InitialDensity) -> Result<PotentialField> {
    path.check_grid(grid)?;
    let shift = cumulative_profile(path, grid);
    let (lo, hi) = density.support();
    let (min_x, max_x) = shift
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| (a.min(s), b.max(s)));
    let (lo, hi) = (lo + min_x, hi + max_x);
    if lo < grid.x_lo || hi > grid.x_hi {
        return Err(Error::DomainViolation {
            lo,
            hi,
            x_lo: grid.x_lo,
            x_hi: grid.x_hi,
        });
    }
    let mut phi = Vec::with_capacity(grid.ext_t() * grid.ext_x());
    for s in &shift {
        phi.extend(grid.positions().map(|x| density.cumulative(x - s)));
    }
    PotentialField::from_values(*grid, phi)
}

/// Benchmark price `-Q(t_k)` at the interior levels.
pub fn analytic_price(path: &SupplyPath, grid: &GridSpec) -> Result<PricePath> {
    path.check_grid(grid)?;
    Ok(PricePath::new(
        (0..grid.n_t).map(|k| grid.t(k)).collect(),
        (0..grid.n_t).map(|k| -path.at(k)).collect(),
    ))
}

/// Benchmark price averaged over each forward step,
/// `-(Q_k + Q_{k+1}) / 2`; works for sampled paths.
pub fn analytic_price_midpoint(path: &SupplyPath, grid: &GridSpec) -> Result<PricePath> {
    path.check_grid(grid)?;
    Ok(PricePath::new(
        (0..grid.n_t).map(|k| grid.t(k)).collect(),
        (0..grid.n_t).map(|k| -0.5 * (path.at(k) + path.at(k + 1))).collect(),
    ))
}

/// Benchmark price at the half steps `t_k + h_t / 2`, where forward
/// differences evaluate the velocity. Needs the closed-form supply.
pub fn analytic_price_half_step(params: &SupplyParams, grid: &GridSpec) -> PricePath {
    let times: Vec<f64> = (0..grid.n_t).map(|k| grid.t(k)).collect();
    let values = times.iter().map(|&t| -params.mean(t + 0.5 * grid.h_t)).collect();
    PricePath::new(times, values)
}

/// Composite Simpson approximation of `1/2 int_0^T Q(t)^2 dt` for the
/// deterministic supply: the continuum value of the variational term on
/// the benchmark (unit mass moving at speed `Q`).
pub fn continuum_variational_value(params: &SupplyParams, t_hi: f64, panels: usize) -> f64 {
    let n = panels.max(2) & !1;
    let h = t_hi / n as f64;
    let f = |t: f64| 0.5 * params.mean(t).powi(2);
    let mut s = f(0.0) + f(t_hi);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(k as f64 * h);
    }
    s * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::{loss_initial, Objective};
    use crate::supply::deterministic_supply;

    #[test]
    fn initial_level_is_cumulative() {
        let g = GridSpec::benchmark();
        let d = InitialDensity::default();
        let path = deterministic_supply(&SupplyParams::benchmark(), &g);
        let f = analytic_potential_lq(&g, &path, &d).unwrap();
        for i in 0..g.ext_x() {
            assert_eq!(f.phi(0, i), d.cumulative(g.x(i)));
        }
        assert_eq!(loss_initial(&f, &g, &d).unwrap(), 0.0);
    }

    #[test]
    fn support_leaving_domain_is_rejected() {
        let g = GridSpec::benchmark();
        let d = InitialDensity::new(0.5, 0.45).unwrap();
        let path = deterministic_supply(&SupplyParams::benchmark(), &g);
        assert!(matches!(
            analytic_potential_lq(&g, &path, &d),
            Err(Error::DomainViolation { .. })
        ));
    }

    #[test]
    fn continuum_value() {
        let p = SupplyParams::benchmark();
        // 1/2 int (1 - 3 e^{-2t} + 2.25 e^{-4t}) dt in closed form
        let closed = 0.5 * (1.0 - 1.5 * (1.0 - (-2.0f64).exp()) + 0.5625 * (1.0 - (-4.0f64).exp()));
        let simpson = continuum_variational_value(&p, 1.0, 4096);
        assert!((simpson - closed).abs() < 1e-12);
        assert!((simpson - 0.127600).abs() < 1e-5);
    }

    #[test]
    fn prices() {
        let g = GridSpec::benchmark();
        let path = deterministic_supply(&SupplyParams::benchmark(), &g);
        let p = analytic_price(&path, &g).unwrap();
        assert_eq!(p.values()[0], 0.5);
        assert!((p.values()[16] + 0.796997).abs() < 1e-6);
        let c = analytic_price(&SupplyPath::constant(&g, 0.3), &g).unwrap();
        assert!(c.values().iter().all(|&v| v == -0.3));
    }

    #[test]
    fn balance_and_mass_close_on_analytic_field() {
        let g = GridSpec::benchmark();
        let path = deterministic_supply(&SupplyParams::benchmark(), &g);
        let f = analytic_potential_lq(&g, &path, &InitialDensity::default()).unwrap();
        for k in 0..g.n_t {
            let m = f.mass(k);
            assert!((0.97..=1.0 + 1e-12).contains(&m), "level {k}: mass {m}");
        }
        let l = Objective::default().evaluate(&f, &path).unwrap();
        assert_eq!(l.l_0, 0.0);
        assert!(l.l_p <= 0.02);
    }
}
