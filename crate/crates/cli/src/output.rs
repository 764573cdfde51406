use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Export, RunConfig};
use crate::error::{CliError, CliResult};

/// Environment variable naming the default output root.
pub const OUT_ROOT_ENV: &str = "MFG_PRICE_OUT";

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "+", env!("MFG_PRICE_GIT_REV"));

/// Run directory plus the list of files written to it.
pub struct Output {
    dir: PathBuf,
    exports: Vec<Export>,
    pub config_hash: String,
    pub seed: u64,
    written: Vec<String>,
}

/// Default run directory `<root>/<command>-<hash12>-seed<seed>`.
pub fn default_dir(root: Option<&Path>, command: &str, hash: &str, seed: u64) -> PathBuf {
    let root = root.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("runs"));
    root.join(format!("{command}-{}-seed{seed}", &hash[..12]))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl Output {
    pub fn create(config: &RunConfig, command: &str, seed: u64, root: Option<&Path>) -> CliResult<Self> {
        let hash = config.hash();
        let dir = config
            .out
            .clone()
            .unwrap_or_else(|| default_dir(root, command, &hash, seed));
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(Self {
            dir,
            exports: config.exports(),
            config_hash: hash,
            seed,
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn wants(&self, kind: Export) -> bool {
        self.exports.contains(&kind)
    }

    pub fn record(&mut self, name: &str) {
        if !self.written.iter().any(|n| n == name) {
            self.written.push(name.to_string());
        }
    }

    fn write_with<F>(&mut self, name: &str, append: bool, body: F) -> CliResult<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> CliResult<()>,
    {
        let path = self.path(name);
        let file = OpenOptions::new()
            .write(true)
            .create(true)
            .append(append)
            .truncate(!append)
            .open(&path)
            .map_err(io_err(&path))?;
        let mut w = BufWriter::new(file);
        body(&mut w)?;
        w.flush().map_err(io_err(&path))?;
        self.record(name);
        Ok(())
    }

    /// Writes a CSV file if CSV export is enabled.
    pub fn csv<F>(&mut self, name: &str, body: F) -> CliResult<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> CliResult<()>,
    {
        if self.wants(Export::Csv) {
            self.write_with(name, false, body)?;
        }
        Ok(())
    }

    pub fn csv_append<F>(&mut self, name: &str, body: F) -> CliResult<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> CliResult<()>,
    {
        if self.wants(Export::Csv) {
            self.write_with(name, true, body)?;
        }
        Ok(())
    }

    /// Writes a JSON document tagged with the config hash and seed.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        if self.wants(Export::Json) {
            self.write_json(name, value)?;
        }
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut doc = serde_json::to_value(value).map_err(|e| CliError::Config(e.to_string()))?;
        if let serde_json::Value::Object(map) = &mut doc {
            map.insert("config_hash".into(), self.config_hash.clone().into());
            map.insert("seed".into(), self.seed.into());
        }
        let path = self.path(name);
        let text = serde_json::to_string_pretty(&doc).expect("json value serializes");
        self.write_with(name, false, |w| writeln!(w, "{text}").map_err(io_err(&path)))
    }

    pub fn svg(&mut self, name: &str, document: String) -> CliResult<()> {
        if self.wants(Export::Svg) {
            let path = self.path(name);
            self.write_with(name, false, |w| w.write_all(document.as_bytes()).map_err(io_err(&path)))?;
        }
        Ok(())
    }

    /// Writes `metadata.json` (always) describing the run and its files.
    pub fn finish<T: Serialize>(mut self, command: &str, config: &RunConfig, extra: &T) -> CliResult<PathBuf> {
        self.record("metadata.json");
        let meta = serde_json::json!({
            "command": command,
            "version": VERSION,
            "files": self.written,
            "config": config,
            "details": extra,
        });
        self.write_json("metadata.json", &meta)?;
        Ok(self.dir)
    }
}

pub fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}
