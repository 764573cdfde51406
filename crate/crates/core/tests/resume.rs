mod common;

use mfg_price::supply::{sample_ou_path, training_rng, SupplyScheme};
use mfg_price::training::{train_stochastic, train_with_path, TrainConfig};
use mfg_price::{GridSpec, NetDims, SupplyParams, SupplyPath};

fn small(base: TrainConfig) -> TrainConfig {
    TrainConfig {
        steps: 100,
        seed: 5,
        grid: GridSpec::new(1.0, 6, -1.0, 1.0, 11).unwrap(),
        dims: NetDims::new(6, 6, 6).unwrap(),
        log_every: 7,
        ..base
    }
}

#[test]
fn deterministic_resume_equals_uninterrupted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(TrainConfig::deterministic());
    assert!(common::runs_reproducible(&cfg));
    assert!(common::resume_matches(&cfg, 50, &dir.path().join("ckpt.bin")));
}

#[test]
fn stochastic_resume_equals_uninterrupted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(TrainConfig::stochastic());
    assert!(common::runs_reproducible(&cfg));
    assert!(common::resume_matches(&cfg, 37, &dir.path().join("ckpt.bin")));
}

#[test]
fn different_seeds_differ() {
    let a = train_stochastic(&small(TrainConfig::stochastic())).unwrap();
    let b = train_stochastic(&TrainConfig {
        seed: 6,
        ..small(TrainConfig::stochastic())
    })
    .unwrap();
    assert_ne!(a.0, b.0);
}

#[test]
fn zero_volatility_matches_fixed_euler_path() {
    let cfg = TrainConfig {
        supply: SupplyParams {
            sigma: 0.0,
            ..SupplyParams::benchmark()
        },
        ..small(TrainConfig::stochastic())
    };
    let mut rng = training_rng(cfg.seed, 0);
    let euler: SupplyPath = sample_ou_path(&cfg.supply, &cfg.grid, &mut rng, SupplyScheme::Euler);
    let (p_stoch, h_stoch) = train_stochastic(&cfg).unwrap();
    let (p_fixed, h_fixed) = train_with_path(&cfg, euler).unwrap();
    assert_eq!(p_stoch, p_fixed);
    assert!(h_stoch.same_trajectory(&h_fixed));

    // the closed-form path differs from the Euler path only at O(h)
    let det = TrainConfig {
        mode: mfg_price::training::TrainMode::Deterministic,
        ..cfg.clone()
    };
    let (_, h_det) = mfg_price::training::train_deterministic(&det).unwrap();
    let (a, b) = (h_det.final_loss.unwrap().total, h_stoch.final_loss.unwrap().total);
    assert!((a - b).abs() < 0.1 * a, "{a} vs {b}");
}
