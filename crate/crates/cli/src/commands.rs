use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use mfg_price::fmt::g9;
use mfg_price::nn::{forward_field, load_checkpoint, save_checkpoint, Checkpoint};
use mfg_price::oracle::{
    analytic_potential_lq, analytic_price, analytic_price_half_step, continuum_variational_value,
    evaluate_stochastic, extract_price, tabular_solve, EvalOptions, PricePath,
};
use mfg_price::supply::{deterministic_supply, evaluation_rng, sample_ou_path};
use mfg_price::training::{TrainMode, Trainer};
use mfg_price::{LossBreakdown, PotentialField, SupplyPath};
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{io_error, Output};
use crate::svg::{self, Series};

const CONTINUUM_PANELS: usize = 4096;
const SAMPLE_PLOTS: usize = 3;

fn write_field_csv<W: Write>(field: &PotentialField, w: &mut W) -> std::io::Result<()> {
    let g = field.grid();
    writeln!(w, "t,x,phi,m,flux")?;
    for k in 0..g.n_t {
        for i in 0..g.n_x {
            writeln!(
                w,
                "{},{},{},{},{}",
                g9(g.t(k)),
                g9(g.x(i)),
                g9(field.phi(k, i)),
                g9(field.dx(k, i)),
                g9(-field.dt(k, i))
            )?;
        }
    }
    Ok(())
}

/// Field CSV plus density heatmap.
fn emit_field(out: &mut Output, field: &PotentialField) -> CliResult<()> {
    let path = out.path("field.csv");
    out.csv("field.csv", |w| write_field_csv(field, w).map_err(|e| io_error(&path, e)))?;
    let g = field.grid();
    let density: Vec<f64> = (0..g.n_t)
        .flat_map(|k| (0..g.n_x).map(move |i| (k, i)))
        .map(|(k, i)| field.dx(k, i))
        .collect();
    let title = format!("density m(t, x) [config {} seed {}]", &out.config_hash[..12], out.seed);
    out.svg("density.svg", svg::heatmap(&title, g.n_t, g.n_x, &density))
}

fn price_chart(out: &Output, stem: &str, predicted: &PricePath, reference: &PricePath) -> String {
    let title = format!("{stem} [config {} seed {}]", &out.config_hash[..12], out.seed);
    svg::line_chart(
        &title,
        "t",
        "price",
        &[
            Series {
                label: "predicted",
                x: predicted.times(),
                y: predicted.values(),
            },
            Series {
                label: "analytic",
                x: reference.times(),
                y: reference.values(),
            },
        ],
    )
}

fn emit_price(out: &mut Output, predicted: &PricePath, reference: &PricePath) -> CliResult<()> {
    out.csv("price.csv", |w| Ok(predicted.write_comparison_csv(reference, w)?))?;
    let chart = price_chart(out, "price", predicted, reference);
    out.svg("price.svg", chart)
}

fn read_checkpoint(path: &Path) -> CliResult<Checkpoint> {
    load_checkpoint(path).map_err(|e| match e {
        mfg_price::Error::Io(source) => io_error(path, source),
        other => other.into(),
    })
}

fn mean_path(config: &RunConfig) -> SupplyPath {
    deterministic_supply(&config.train.supply, &config.train.grid)
}

pub fn oracle(config: &RunConfig, root: Option<&Path>) -> CliResult<PathBuf> {
    let train = &config.train;
    let mut out = Output::create(config, "oracle", train.seed, root)?;
    let note = (train.supply.sigma > 0.0)
        .then(|| format!("sigma = {} ignored: the oracle uses the deterministic mean path", train.supply.sigma));
    if let Some(n) = &note {
        eprintln!("note: {n}");
    }
    let path = mean_path(config);
    let field = analytic_potential_lq(&train.grid, &path, &train.density)?;
    let loss = train.objective().evaluate(&field, &path)?;
    let continuum = continuum_variational_value(&train.supply, train.grid.t_hi, CONTINUUM_PANELS);
    let price = extract_price(&field, config.eval.mass_threshold)?;
    let reference = analytic_price(&path, &train.grid)?;
    let half = analytic_price_half_step(&train.supply, &train.grid);

    let summary = json!({
        "l_v_discrete": loss.l_v,
        "l_v_continuum": continuum,
        "loss": loss,
        "price_error_grid": price.linf_distance(&reference),
        "price_error_half_step": price.linf_distance(&half),
        "note": note,
    });
    out.json("oracle.json", &summary)?;
    emit_field(&mut out, &field)?;
    emit_price(&mut out, &price, &reference)?;
    out.finish("oracle", config, &summary)
}

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    pub resume: Option<PathBuf>,
}

pub fn train(config: &RunConfig, options: &TrainOptions, root: Option<&Path>) -> CliResult<PathBuf> {
    let train = &config.train;
    let mut out = Output::create(config, "train", train.seed, root)?;
    let (mut trainer, start_step) = match &options.resume {
        Some(p) => {
            let ckpt = read_checkpoint(p)?;
            let step = ckpt.step;
            (Trainer::resume(train.clone(), ckpt)?, step)
        }
        None => (Trainer::new(train.clone())?, 0),
    };
    let ckpt_path = out.path("checkpoint.bin");
    let started = Instant::now();
    let result = trainer.run_with(|c: &Checkpoint| save_checkpoint(c, &ckpt_path));
    let seconds = started.elapsed().as_secs_f64();

    // history is written even when the run fails, to show where it stopped
    let history = trainer.history().clone();
    if start_step > 0 && out.path("history.csv").exists() {
        out.csv_append("history.csv", |w| Ok(history.write_csv(w, false)?))?;
    } else {
        out.csv("history.csv", |w| Ok(history.write_csv(w, true)?))?;
    }
    result?;

    save_checkpoint(&trainer.checkpoint(), &ckpt_path)?;
    out.record("checkpoint.bin");
    let steps: Vec<f64> = history.records.iter().map(|r| r.step as f64).collect();
    let totals: Vec<f64> = history.records.iter().map(|r| r.loss.total).collect();
    let l_v: Vec<f64> = history.records.iter().map(|r| r.loss.l_v).collect();
    let title = format!("training loss [config {} seed {}]", &out.config_hash[..12], out.seed);
    out.svg(
        "loss.svg",
        svg::line_chart(
            &title,
            "step",
            "loss",
            &[
                Series {
                    label: "total",
                    x: &steps,
                    y: &totals,
                },
                Series {
                    label: "l_v",
                    x: &steps,
                    y: &l_v,
                },
            ],
        ),
    )?;
    let details = json!({
        "mode": train.mode,
        "start_step": start_step,
        "steps": train.steps,
        "final_loss": history.final_loss,
        "seconds": seconds,
    });
    out.finish("train", config, &details)
}

#[derive(Debug, Clone, Default)]
pub struct EvalOptionsCli {
    pub checkpoint: Option<PathBuf>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Serialize)]
struct DeterministicReport {
    mode: TrainMode,
    /// `None` when the density is degenerate and no price can be read off.
    max_abs_error: Option<f64>,
    max_abs_error_half_step: Option<f64>,
    degenerate: Option<String>,
    loss: LossBreakdown,
}

pub fn eval(config: &RunConfig, options: &EvalOptionsCli, root: Option<&Path>) -> CliResult<PathBuf> {
    let train = &config.train;
    let ckpt_path = options
        .checkpoint
        .clone()
        .or_else(|| config.out.as_ref().map(|d| d.join("checkpoint.bin")))
        .ok_or_else(|| CliError::Config("eval needs --checkpoint or an output directory holding one".into()))?;
    let ckpt = read_checkpoint(&ckpt_path)?;
    if ckpt.params.dims() != train.dims {
        return Err(CliError::Config(format!(
            "checkpoint {} has dims {:?}, config expects {:?}",
            ckpt_path.display(),
            ckpt.params.dims(),
            train.dims
        )));
    }
    let params = ckpt.params;
    let seed = options.seed.unwrap_or(config.eval.seed);
    let mut out = Output::create(config, "eval", seed, root)?;
    let grid = &train.grid;

    match train.mode {
        TrainMode::Deterministic => {
            let path = mean_path(config);
            let field = forward_field(&params, grid, &path)?;
            let reference = analytic_price(&path, grid)?;
            let half = analytic_price_half_step(&train.supply, grid);
            let price = match extract_price(&field, config.eval.mass_threshold) {
                Ok(p) => Some(p),
                Err(e @ mfg_price::Error::DegenerateDensity { .. }) => {
                    eprintln!("note: {e}");
                    None
                }
                Err(e) => return Err(e.into()),
            };
            let report = DeterministicReport {
                mode: train.mode,
                max_abs_error: price.as_ref().map(|p| p.linf_distance(&reference)),
                max_abs_error_half_step: price.as_ref().map(|p| p.linf_distance(&half)),
                degenerate: price.is_none().then(|| "density below the mass threshold".into()),
                loss: train.objective().evaluate(&field, &path)?,
            };
            out.json("report.json", &report)?;
            if let Some(price) = &price {
                emit_price(&mut out, price, &reference)?;
            }
            emit_field(&mut out, &field)?;
            out.finish("eval", config, &report)
        }
        TrainMode::Stochastic => {
            let n = options.samples.unwrap_or(config.eval.samples);
            let eval_options = EvalOptions {
                scheme: train.scheme,
                mass_threshold: config.eval.mass_threshold,
                reference: config.eval.reference,
            };
            let report = evaluate_stochastic(&params, &train.supply, grid, n, seed, eval_options)?;
            out.json("report.json", &report)?;
            for idx in 0..n.min(SAMPLE_PLOTS) {
                let mut rng = evaluation_rng(seed, idx as u64);
                let path = sample_ou_path(&train.supply, grid, &mut rng, train.scheme);
                let field = forward_field(&params, grid, &path)?;
                let Ok(price) = extract_price(&field, config.eval.mass_threshold) else {
                    continue;
                };
                let reference = analytic_price(&path, grid)?;
                if idx == 0 {
                    emit_price(&mut out, &price, &reference)?;
                }
                let stem = format!("price_sample_{idx}");
                let chart = price_chart(&out, &stem, &price, &reference);
                out.svg(&format!("{stem}.svg"), chart)?;
            }
            out.finish("eval", config, &report)
        }
    }
}

pub fn tabular(config: &RunConfig, steps: Option<u64>, root: Option<&Path>) -> CliResult<PathBuf> {
    let train = &config.train;
    let mut tab = config.tabular;
    if let Some(s) = steps {
        tab.steps = s as usize;
    }
    let mut out = Output::create(config, "tabular", train.seed, root)?;
    let path = mean_path(config);
    let started = Instant::now();
    let sol = tabular_solve(&train.grid, &path, &train.objective(), &tab)?;
    let price = extract_price(&sol.field, config.eval.mass_threshold)?;
    let reference = analytic_price(&path, &train.grid)?;
    let half = analytic_price_half_step(&train.supply, &train.grid);
    let summary = json!({
        "loss": sol.loss,
        "initial_loss": sol.initial_loss,
        "best_step": sol.best_step,
        "steps": tab.steps,
        "price_error_grid": price.linf_distance(&reference),
        "price_error_half_step": price.linf_distance(&half),
        "seconds": started.elapsed().as_secs_f64(),
    });
    out.json("tabular.json", &summary)?;
    emit_field(&mut out, &sol.field)?;
    emit_price(&mut out, &price, &reference)?;
    out.finish("tabular", config, &summary)
}
