use std::path::{Path, PathBuf};

use mfg_price::oracle::{PriceReference, TabularConfig, DEFAULT_MASS_THRESHOLD};
use mfg_price::training::{TrainConfig, TrainMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Export {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSettings {
    pub samples: usize,
    pub seed: u64,
    pub mass_threshold: f64,
    pub reference: PriceReference,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            samples: 1000,
            seed: 12_345,
            mass_threshold: DEFAULT_MASS_THRESHOLD,
            reference: PriceReference::GridPoint,
        }
    }
}

/// Everything a run depends on; hashed into the output metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub tabular: TabularConfig,
    pub eval: EvalSettings,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub export: Option<Vec<Export>>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<TrainMode>,
    pub steps: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub export: Option<Vec<Export>>,
}

fn merge(base: &mut Table, overlay: Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

fn take_section<T: for<'de> Deserialize<'de> + Default>(table: &mut Table, key: &str) -> CliResult<T> {
    match table.remove(key) {
        None => Ok(T::default()),
        Some(v) => v
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(format!("[{key}]: {}", e.message()))),
    }
}

impl RunConfig {
    /// Parses `text` (TOML) on top of the preset for the selected mode.
    pub fn parse(text: &str, overrides: &Overrides) -> CliResult<Self> {
        let mut table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;

        let out = match table.remove("out") {
            None => None,
            Some(Value::String(s)) => Some(PathBuf::from(s)),
            Some(other) => return Err(CliError::Config(format!("out must be a string, got {other}"))),
        };
        let export = match table.remove("export") {
            None => None,
            Some(v) => Some(
                v.try_into::<Vec<Export>>()
                    .map_err(|e| CliError::Config(format!("export: {}", e.message())))?,
            ),
        };
        let tabular: TabularConfig = take_section(&mut table, "tabular")?;
        let eval: EvalSettings = take_section(&mut table, "eval")?;

        let file_mode = match table.get("mode") {
            None => None,
            Some(v) => Some(
                v.clone()
                    .try_into::<TrainMode>()
                    .map_err(|e| CliError::Config(format!("mode: {}", e.message())))?,
            ),
        };
        let mode = overrides.mode.or(file_mode).unwrap_or_default();
        let preset = match mode {
            TrainMode::Deterministic => TrainConfig::deterministic(),
            TrainMode::Stochastic => TrainConfig::stochastic(),
        };
        let mut merged = Table::try_from(&preset).map_err(|e| CliError::Config(e.to_string()))?;
        merge(&mut merged, table);
        merged.insert("mode".into(), Value::try_from(mode).map_err(|e| CliError::Config(e.to_string()))?);
        let mut train: TrainConfig = Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;

        if let Some(steps) = overrides.steps {
            train.steps = steps;
        }
        if let Some(seed) = overrides.seed {
            train.seed = seed;
        }
        train.validate()?;
        Ok(Self {
            train,
            tabular,
            eval,
            out: overrides.out.clone().or(out),
            export: overrides.export.clone().or(export),
        })
    }

    pub fn load(path: Option<&Path>, overrides: &Overrides) -> CliResult<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Io {
                path: p.to_path_buf(),
                source: e,
            })?,
            None => String::new(),
        };
        Self::parse(&text, overrides)
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn exports(&self) -> Vec<Export> {
        let mut e = self.export.clone().unwrap_or_else(|| vec![Export::Csv, Export::Json]);
        e.sort();
        e.dedup();
        e
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_preset() {
        let c = RunConfig::parse("", &Overrides::default()).unwrap();
        assert_eq!(c.train, TrainConfig::deterministic());
        assert_eq!(c.tabular, TabularConfig::default());
        assert_eq!(c.exports(), [Export::Csv, Export::Json]);
    }

    #[test]
    fn mode_selects_preset_and_file_overrides() {
        let text = r#"
            mode = "stochastic"
            steps = 10
            export = ["svg", "csv"]
            [supply]
            sigma = 0.3
            [grid]
            n_x = 11
            [tabular]
            steps = 5
        "#;
        let c = RunConfig::parse(text, &Overrides::default()).unwrap();
        assert_eq!(c.train.mode, TrainMode::Stochastic);
        assert_eq!(c.train.steps, 10);
        assert_eq!(c.train.supply.sigma, 0.3);
        assert_eq!(c.train.supply.theta, 2.0);
        assert_eq!(c.train.grid.n_x, 11);
        assert_eq!(c.train.grid.h_x, 0.2);
        assert_eq!(c.train.lr_final_fraction, 0.01);
        assert_eq!(c.tabular.steps, 5);
        assert_eq!(c.exports(), [Export::Csv, Export::Svg]);
    }

    #[test]
    fn overrides_win() {
        let o = Overrides {
            mode: Some(TrainMode::Deterministic),
            steps: Some(3),
            seed: Some(9),
            ..Overrides::default()
        };
        let c = RunConfig::parse("mode = \"stochastic\"\nseed = 1", &o).unwrap();
        assert_eq!(c.train.mode, TrainMode::Deterministic);
        assert_eq!((c.train.steps, c.train.seed), (3, 9));
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in ["bogus = 1", "[grid]\nn_y = 3", "[tabular]\nrate = 1", "[eval]\nx = 1", "[adam]\nlr = 1"] {
            assert!(
                matches!(RunConfig::parse(text, &Overrides::default()), Err(CliError::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(RunConfig::parse("steps = 0", &Overrides::default()).is_err());
        assert!(RunConfig::parse("[grid]\nn_t = 1", &Overrides::default()).is_err());
        assert!(RunConfig::parse("mode = \"sideways\"", &Overrides::default()).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::parse("", &Overrides::default()).unwrap();
        let b = RunConfig::parse("seed = 0", &Overrides::default()).unwrap();
        let c = RunConfig::parse("seed = 1", &Overrides::default()).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
