//! Benchmark acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` are reported as FAIL without failing
//! the test run; any other failure, or a known failure that starts passing,
//! fails the test so the list stays accurate.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use mfg_price::loss::{loss_balance, loss_initial, loss_positivity, loss_probability, loss_variational};
use mfg_price::nn::forward_field;
use mfg_price::oracle::{
    analytic_potential_lq, analytic_price, analytic_price_half_step, continuum_variational_value,
    evaluate_stochastic, extract_price, mean_test_loss, tabular_solve, EvalOptions, TabularConfig,
    DEFAULT_MASS_THRESHOLD,
};
use mfg_price::supply::deterministic_supply;
use mfg_price::training::{train_deterministic, train_stochastic, TrainConfig};
use mfg_price::{GridSpec, InitialDensity, LossBreakdown, Objective, PotentialField, SupplyParams};

/// Benchmark value of the variational term.
const BENCHMARK_LV: f64 = 0.1276;
const BENCHMARK_LV_TOL: f64 = 0.002;
const CONTINUUM_LV: f64 = 0.127600;
const CONTINUUM_TOL: f64 = 1e-5;

const DET_LV_MAX: f64 = 0.14;
const DET_PENALTY_MAX: f64 = 0.02;
const DET_PRICE_GRID_MAX: f64 = 0.1;
const DET_PRICE_HALF_MAX: f64 = 0.05;
const DET_RUNTIME: Duration = Duration::from_secs(30 * 60);

const STOCH_EVAL_SAMPLES: usize = 1000;
const STOCH_EVAL_SEED: u64 = 12_345;
const STOCH_PRICE_MEAN_MAX: f64 = 0.06;
/// Reference components `(l_v, l_0, l_b, l_m0, l_p)`.
const STOCH_REFERENCE: [f64; 5] = [0.141007, 0.0, 0.002728, 0.007506, 0.01905];
const STOCH_FACTOR: f64 = 2.0;
const STOCH_RUNTIME: Duration = Duration::from_secs(90 * 60);

const GRADIENT_CONFIGS: usize = 24;
const GRADIENT_REL_MAX: f64 = 1e-5;

const CAUSALITY_PAIRS: usize = 100;

const TABULAR_LV_FACTOR: f64 = 1.05;
const TABULAR_TOTAL_SLACK: f64 = 1e-2;

const OU_PATHS: usize = 100_000;
const OU_Z_MAX: f64 = 4.0;
const OU_DEGENERATE_MAX: f64 = 1e-12;

const KNOWN_FAILURES: &[u32] = &[1, 3];

struct Outcome {
    id: u32,
    pass: bool,
}

fn report(outcomes: &mut Vec<Outcome>, id: u32, name: &str, pass: bool, detail: String) {
    println!("[{}] criterion {id:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    outcomes.push(Outcome { id, pass });
}

fn fmt_loss(l: &LossBreakdown) -> String {
    format!(
        "l_v={:.6} l_0={:.6} l_b={:.6} l_m0={:.6} l_p={:.6} total={:.6}",
        l.l_v, l.l_0, l.l_b, l.l_m0, l.l_p, l.total
    )
}

fn analytic_variational(outcomes: &mut Vec<Outcome>) {
    let started = Instant::now();
    let grid = GridSpec::benchmark();
    let path = deterministic_supply(&SupplyParams::benchmark(), &grid);
    let field = analytic_potential_lq(&grid, &path, &InitialDensity::default()).unwrap();
    let obj = Objective::default();
    let l_v = loss_variational(&field, &grid, &obj.model, obj.eps).unwrap();
    let elapsed = started.elapsed();
    let pass = (l_v - BENCHMARK_LV).abs() <= BENCHMARK_LV_TOL && elapsed < Duration::from_secs(1);
    report(
        outcomes,
        1,
        "analytic discrete variational term",
        pass,
        format!("l_v={l_v:.6} target {BENCHMARK_LV}±{BENCHMARK_LV_TOL} in {elapsed:.2?}"),
    );
}

fn continuum(outcomes: &mut Vec<Outcome>) {
    let value = continuum_variational_value(&SupplyParams::benchmark(), 1.0, 4096);
    let pass = (value - CONTINUUM_LV).abs() <= CONTINUUM_TOL;
    report(
        outcomes,
        2,
        "continuum quadrature",
        pass,
        format!("value={value:.8} target {CONTINUUM_LV}±{CONTINUUM_TOL:e}"),
    );
}

/// Returns the trained network's total loss.
fn deterministic_training(outcomes: &mut Vec<Outcome>) -> f64 {
    let cfg = TrainConfig::deterministic();
    let started = Instant::now();
    let (params, history) = train_deterministic(&cfg).unwrap();
    let elapsed = started.elapsed();
    let loss = history.final_loss.unwrap();
    let path = deterministic_supply(&cfg.supply, &cfg.grid);
    let field = forward_field(&params, &cfg.grid, &path).unwrap();
    let price = extract_price(&field, DEFAULT_MASS_THRESHOLD).unwrap();
    let grid_err = price.linf_distance(&analytic_price(&path, &cfg.grid).unwrap());
    let half_err = price.linf_distance(&analytic_price_half_step(&cfg.supply, &cfg.grid));
    let penalties_ok = [loss.l_0, loss.l_b, loss.l_m0, loss.l_p].iter().all(|&p| p <= DET_PENALTY_MAX);
    let checks = [
        loss.l_v <= DET_LV_MAX,
        penalties_ok,
        grid_err <= DET_PRICE_GRID_MAX,
        half_err <= DET_PRICE_HALF_MAX,
        elapsed <= DET_RUNTIME,
    ];
    report(
        outcomes,
        3,
        "deterministic training",
        checks.iter().all(|&c| c),
        format!(
            "{} | price err grid={grid_err:.4} (<= {DET_PRICE_GRID_MAX}) half-step={half_err:.4} (<= {DET_PRICE_HALF_MAX}) | {elapsed:.1?} | checks [l_v, penalties, grid, half, time] = {checks:?}",
            fmt_loss(&loss)
        ),
    );
    loss.total
}

fn stochastic_training(outcomes: &mut Vec<Outcome>) {
    let cfg = TrainConfig::stochastic();
    let started = Instant::now();
    let (params, _) = train_stochastic(&cfg).unwrap();
    let elapsed = started.elapsed();
    let eval = evaluate_stochastic(
        &params,
        &cfg.supply,
        &cfg.grid,
        STOCH_EVAL_SAMPLES,
        STOCH_EVAL_SEED,
        EvalOptions::default(),
    )
    .unwrap();
    let loss = mean_test_loss(
        &params,
        &cfg.supply,
        &cfg.grid,
        STOCH_EVAL_SAMPLES,
        STOCH_EVAL_SEED,
        cfg.scheme,
        &cfg.objective(),
    )
    .unwrap();
    let terms = [loss.l_v, loss.l_0, loss.l_b, loss.l_m0, loss.l_p];
    let v_ok = terms[0] <= STOCH_FACTOR * STOCH_REFERENCE[0] && terms[0] >= STOCH_REFERENCE[0] / STOCH_FACTOR;
    let penalties_ok = terms[1..]
        .iter()
        .zip(&STOCH_REFERENCE[1..])
        .all(|(t, r)| *t <= STOCH_FACTOR * r);
    let checks = [
        eval.failures == 0 && eval.mean <= STOCH_PRICE_MEAN_MAX,
        v_ok,
        penalties_ok,
        elapsed <= STOCH_RUNTIME,
    ];
    report(
        outcomes,
        4,
        "stochastic training and evaluation",
        checks.iter().all(|&c| c),
        format!(
            "price L-inf mean={:.6} sd={:.6} max={:.6} failures={} (mean <= {STOCH_PRICE_MEAN_MAX}) | test loss {} | {elapsed:.1?} | checks [price, l_v, penalties, time] = {checks:?}",
            eval.mean,
            eval.stddev,
            eval.max,
            eval.failures,
            fmt_loss(&loss)
        ),
    );
}

fn gradients(outcomes: &mut Vec<Outcome>) {
    let started = Instant::now();
    let check = common::gradient_check(GRADIENT_CONFIGS, 2024);
    let pass = check.configs >= 20 && check.worst_relative <= GRADIENT_REL_MAX;
    report(
        outcomes,
        5,
        "gradient oracle",
        pass,
        format!(
            "{} configs, {} parameters, worst relative error {:.3e} (<= {GRADIENT_REL_MAX:e}) in {:.2?}",
            check.configs,
            check.parameters,
            check.worst_relative,
            started.elapsed()
        ),
    );
}

fn causality(outcomes: &mut Vec<Outcome>) {
    let violations = common::causality_violations(CAUSALITY_PAIRS, 77);
    report(
        outcomes,
        6,
        "causality",
        violations == 0,
        format!("{CAUSALITY_PAIRS} path pairs, {violations} prefix values differ"),
    );
}

fn tabular(outcomes: &mut Vec<Outcome>, network_total: f64) {
    let grid = GridSpec::benchmark();
    let path = deterministic_supply(&SupplyParams::benchmark(), &grid);
    let started = Instant::now();
    let sol = tabular_solve(&grid, &path, &Objective::default(), &TabularConfig::default()).unwrap();
    let lv_max = TABULAR_LV_FACTOR * BENCHMARK_LV;
    let total_max = network_total + TABULAR_TOTAL_SLACK;
    let pass = sol.loss.l_v <= lv_max && sol.loss.total <= total_max;
    report(
        outcomes,
        7,
        "tabular independence check",
        pass,
        format!(
            "{} | l_v <= {lv_max:.6}, total <= {total_max:.6} | {:.1?}",
            fmt_loss(&sol.loss),
            started.elapsed()
        ),
    );
}

fn supply_statistics(outcomes: &mut Vec<Outcome>) {
    let m = common::ou_terminal_moments(OU_PATHS, 4242);
    let degenerate = common::degenerate_supply_error();
    let pass = m.z_mean.abs() <= OU_Z_MAX && m.z_variance.abs() <= OU_Z_MAX && degenerate <= OU_DEGENERATE_MAX;
    report(
        outcomes,
        8,
        "supply statistics",
        pass,
        format!(
            "mean={:.6} (z={:+.2}) variance={:.6} (z={:+.2}) over {OU_PATHS} paths; sigma=0 deviation {degenerate:.1e}",
            m.mean, m.z_mean, m.variance, m.z_variance
        ),
    );
}

fn loss_identities(outcomes: &mut Vec<Outcome>) {
    let grid = GridSpec::benchmark();
    let path = deterministic_supply(&SupplyParams::benchmark(), &grid);
    let obj = Objective::default();
    let mut failed = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failed.push(name.to_string());
        }
    };

    let zero = PotentialField::zeros(grid);
    check("zero l_v", loss_variational(&zero, &grid, &obj.model, obj.eps).unwrap() == 0.0);
    check("zero l_0", loss_positivity(&zero, &grid).unwrap() == 0.0);
    check("zero l_p", loss_probability(&zero, &grid).unwrap() == 17.0);
    let supply_sq: f64 = (0..grid.n_t).map(|k| path.at(k).powi(2)).sum();
    check("zero l_b", loss_balance(&zero, &path, &grid).unwrap() == supply_sq);
    let m0_sq: f64 = (0..grid.n_x).map(|i| obj.density.cumulative(grid.x(i)).powi(2)).sum();
    check("zero l_m0", loss_initial(&zero, &grid, &obj.density).unwrap() == m0_sq);

    let tiny = GridSpec::new(1.0, 2, 0.0, 1.0, 2).unwrap();
    check(
        "hinge count",
        loss_positivity(&PotentialField::from_fn(tiny, |_, x| -x), &tiny).unwrap() == 4.0,
    );

    let exact = PotentialField::from_fn(grid, |_, x| obj.density.cumulative(x));
    check("initial exact", loss_initial(&exact, &grid, &obj.density).unwrap() == 0.0);
    let lifted = PotentialField::from_fn(grid, |_, x| obj.density.cumulative(x) + 0.1);
    check(
        "initial offset",
        (loss_initial(&lifted, &grid, &obj.density).unwrap() - 0.31).abs() < 1e-12,
    );

    // values on a dyadic lattice so that adding 0.25 is exact
    let dyadic = |v: f64| (v * 1_048_576.0).round() / 1_048_576.0;
    let base = PotentialField::from_fn(grid, |t, x| dyadic(obj.density.cumulative(x - 0.3 * t)));
    let shifted = PotentialField::from_fn(grid, |t, x| dyadic(obj.density.cumulative(x - 0.3 * t)) + 0.25);
    let (a, b) = (obj.evaluate(&base, &path).unwrap(), obj.evaluate(&shifted, &path).unwrap());
    check("offset l_v", a.l_v == b.l_v);
    check("offset l_0", a.l_0 == b.l_0);
    check("offset l_b", a.l_b == b.l_b);
    check("offset l_p", a.l_p == b.l_p);
    check("total is sum", a.total == a.l_v + a.l_0 + a.l_b + a.l_m0 + a.l_p);

    let pass = failed.is_empty();
    let detail = if pass {
        format!("13 identities hold (sum of Q_k^2 = {supply_sq:.6})")
    } else {
        format!("failed: {}", failed.join(", "))
    };
    report(outcomes, 9, "loss identities", pass, detail);
}

fn determinism(outcomes: &mut Vec<Outcome>) {
    let dir = tempfile::tempdir().unwrap();
    let det = TrainConfig {
        steps: 200,
        log_every: 10,
        ..TrainConfig::deterministic()
    };
    let stoch = TrainConfig {
        steps: 200,
        log_every: 10,
        ..TrainConfig::stochastic()
    };
    let checks = [
        common::runs_reproducible(&det),
        common::runs_reproducible(&stoch),
        common::resume_matches(&det, 100, &dir.path().join("det.ckpt")),
        common::resume_matches(&stoch, 100, &dir.path().join("stoch.ckpt")),
    ];
    report(
        outcomes,
        10,
        "determinism and resume",
        checks.iter().all(|&c| c),
        format!("[det repro, stoch repro, det resume, stoch resume] = {checks:?}"),
    );
}

fn main() -> ExitCode {
    let mut outcomes = Vec::new();
    analytic_variational(&mut outcomes);
    continuum(&mut outcomes);
    let network_total = deterministic_training(&mut outcomes);
    stochastic_training(&mut outcomes);
    gradients(&mut outcomes);
    causality(&mut outcomes);
    tabular(&mut outcomes, network_total);
    supply_statistics(&mut outcomes);
    loss_identities(&mut outcomes);
    determinism(&mut outcomes);

    let failing: Vec<u32> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    let passed = outcomes.len() - failing.len();
    println!("acceptance: {passed}/{} criteria pass; failing {failing:?}", outcomes.len());
    if failing == KNOWN_FAILURES {
        ExitCode::SUCCESS
    } else {
        eprintln!("failing criteria differ from the recorded known failures {KNOWN_FAILURES:?}");
        ExitCode::FAILURE
    }
}
