//! Flat key = value run configuration.
//!
//! One file drives a whole experiment: federation shape, search window,
//! strategy, task and optimizer settings, and the timing/memory coefficients
//! behind the simulated hardware. Lines are `key = value`; `#` starts a
//! comment. Every key has a default, so an empty file is a valid config and
//! the shipped `default.cfg` simply spells the defaults out.
//!
//! Parsing reports the offending line and key; validation reports the
//! offending key. The `Display` form is the fully-resolved config in a fixed
//! key order, which `run` echoes next to its outputs so every result file
//! names the exact configuration that produced it.

use crate::error::{Error, Result};
use crate::search::Strategy;
use std::path::{Path, PathBuf};

/// Everything a run needs, fully resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Number of clients in the federation.
    pub m: usize,
    /// Fraction of clients shielded from probing each round.
    pub f: f64,
    /// Initial lower end of the batch window (assumed feasible everywhere).
    pub b_min: usize,
    /// Initial upper end of the batch window.
    pub b_max: usize,
    /// Master seed; every random stream in the run derives from it.
    pub seed: u64,
    /// Batch-size strategy: `rasba`, `single_prober`, or `fixed(N)`.
    pub strategy: Strategy,
    /// Total synchronous rounds to simulate.
    pub rounds: usize,
    /// Dirichlet concentration for the per-class data split.
    pub alpha: f64,
    /// SGD learning rate.
    pub lr: f64,
    /// Local passes over a client's shard per round.
    pub local_epochs: usize,
    /// Training-set size of the synthetic task.
    pub n_samples: usize,
    /// Feature dimension of the synthetic task.
    pub n_features: usize,
    /// Class count of the synthetic task.
    pub n_classes: usize,
    /// Class-separation scale of the synthetic task.
    pub margin: f64,
    /// Held-out evaluation set size.
    pub n_test: usize,
    /// Smallest shard any client may receive.
    pub min_shard: usize,
    /// Seconds to stage one mini-batch onto a device.
    pub t_load: f64,
    /// Fixed per-step seconds (kernel launch and bookkeeping).
    pub t_fixed: f64,
    /// Seconds of compute per sample.
    pub t_per_sample: f64,
    /// Device memory consumed before the first sample, MB.
    pub mem_fixed: f64,
    /// Device memory per sample in a resident batch, MB.
    pub mem_per_sample: f64,
    /// Device memory capacities to draw client hardware from, MB.
    pub mem_tiers: Vec<f64>,
    /// Optional external dataset: feature rows.
    pub features_csv: Option<PathBuf>,
    /// Optional external dataset: label rows.
    pub labels_csv: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            m: 10,
            f: 0.5,
            b_min: 4,
            b_max: 64,
            seed: 42,
            strategy: Strategy::Rasba,
            rounds: 25,
            alpha: 10.0,
            lr: 0.1,
            local_epochs: 1,
            n_samples: 10_000,
            n_features: 32,
            n_classes: 10,
            margin: 1.0,
            n_test: 2_000,
            min_shard: 64,
            t_load: 0.38,
            t_fixed: 0.075,
            t_per_sample: 0.01,
            mem_fixed: 512.0,
            mem_per_sample: 24.0,
            mem_tiers: vec![8192.0, 12288.0, 16384.0],
            features_csv: None,
            labels_csv: None,
        }
    }
}

impl RunConfig {
    /// Parses a config file. Unknown keys, duplicates, and malformed values
    /// are reported with their line number.
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))?;
        RunConfig::parse_str(&text)
    }

    /// Parses config text; see the module docs for the format.
    pub fn parse_str(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut seen: Vec<String> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {lineno}: expected 'key = value', got '{line}'"))
            })?;
            let key = key.trim();
            let value = value.trim();
            if seen.iter().any(|k| k == key) {
                return Err(Error::Config(format!("line {lineno}: duplicate key '{key}'")));
            }
            seen.push(key.to_string());
            cfg.apply(key, value)
                .map_err(|e| Error::Config(format!("line {lineno}: {e}")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str, kind: &str) -> std::result::Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("{key}: '{value}' is not {kind}"))
        }
        match key {
            "m" => self.m = num(key, value, "a positive integer")?,
            "f" => self.f = num(key, value, "a real number")?,
            "b_min" => self.b_min = num(key, value, "a positive integer")?,
            "b_max" => self.b_max = num(key, value, "a positive integer")?,
            "seed" => self.seed = num(key, value, "a 64-bit unsigned integer")?,
            "strategy" => self.strategy = Strategy::parse(value).map_err(|e| e.to_string())?,
            "rounds" => self.rounds = num(key, value, "a positive integer")?,
            "alpha" => self.alpha = num(key, value, "a real number")?,
            "lr" => self.lr = num(key, value, "a real number")?,
            "local_epochs" => self.local_epochs = num(key, value, "a positive integer")?,
            "n_samples" => self.n_samples = num(key, value, "a positive integer")?,
            "n_features" => self.n_features = num(key, value, "a positive integer")?,
            "n_classes" => self.n_classes = num(key, value, "a positive integer")?,
            "margin" => self.margin = num(key, value, "a real number")?,
            "n_test" => self.n_test = num(key, value, "a positive integer")?,
            "min_shard" => self.min_shard = num(key, value, "a non-negative integer")?,
            "t_load" => self.t_load = num(key, value, "a real number")?,
            "t_fixed" => self.t_fixed = num(key, value, "a real number")?,
            "t_per_sample" => self.t_per_sample = num(key, value, "a real number")?,
            "mem_fixed" => self.mem_fixed = num(key, value, "a real number")?,
            "mem_per_sample" => self.mem_per_sample = num(key, value, "a real number")?,
            "mem_tiers" => {
                let tiers: std::result::Result<Vec<f64>, String> = value
                    .split(',')
                    .map(|t| num::<f64>(key, t.trim(), "a real number"))
                    .collect();
                self.mem_tiers = tiers?;
            }
            "features_csv" => {
                if value.is_empty() {
                    return Err("features_csv: empty path".into());
                }
                self.features_csv = Some(PathBuf::from(value));
            }
            "labels_csv" => {
                if value.is_empty() {
                    return Err("labels_csv: empty path".into());
                }
                self.labels_csv = Some(PathBuf::from(value));
            }
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Checks cross-key consistency. Every message names the offending key.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.m == 0 {
            return bad("m: need at least one client".into());
        }
        if !(self.f.is_finite() && (0.0..1.0).contains(&self.f)) {
            return bad(format!("f: {} is outside [0, 1)", self.f));
        }
        if self.b_min == 0 {
            return bad("b_min: batch sizes start at 1".into());
        }
        if self.b_min > self.b_max {
            return bad(format!(
                "b_min ({}) exceeds b_max ({}): the search window is empty",
                self.b_min, self.b_max
            ));
        }
        if self.strategy == Strategy::Rasba {
            let searchers = self.m - crate::search::shielded_count(self.m, self.f);
            if searchers == 0 {
                return bad(format!(
                    "f: shielding ceil({} x {}) = {} of {} clients leaves no searcher",
                    self.f,
                    self.m,
                    crate::search::shielded_count(self.m, self.f),
                    self.m
                ));
            }
        }
        if self.rounds == 0 {
            return bad("rounds: need at least one round".into());
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return bad(format!("alpha: {} must be positive and finite", self.alpha));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return bad(format!("lr: {} must be non-negative and finite", self.lr));
        }
        if self.local_epochs == 0 {
            return bad("local_epochs: need at least one local pass".into());
        }
        if self.n_classes < 2 {
            return bad("n_classes: a classification task needs at least 2 classes".into());
        }
        if self.n_features == 0 {
            return bad("n_features: need at least one feature".into());
        }
        if self.n_samples < self.n_classes {
            return bad(format!(
                "n_samples ({}) must cover every one of n_classes ({})",
                self.n_samples, self.n_classes
            ));
        }
        if self.n_test == 0 {
            return bad("n_test: need at least one evaluation sample".into());
        }
        if self.m * self.min_shard > self.n_samples {
            return bad(format!(
                "min_shard: {} clients x {} minimum samples exceeds n_samples = {}",
                self.m, self.min_shard, self.n_samples
            ));
        }
        if !(self.t_load.is_finite() && self.t_load > 0.0) {
            return bad(format!("t_load: {} must be positive and finite", self.t_load));
        }
        if !(self.t_fixed.is_finite() && self.t_fixed >= 0.0) {
            return bad(format!("t_fixed: {} must be non-negative and finite", self.t_fixed));
        }
        if !(self.t_per_sample.is_finite() && self.t_per_sample > 0.0) {
            return bad(format!(
                "t_per_sample: {} must be positive and finite",
                self.t_per_sample
            ));
        }
        if !(self.mem_fixed.is_finite() && self.mem_fixed >= 0.0) {
            return bad(format!("mem_fixed: {} must be non-negative and finite", self.mem_fixed));
        }
        if !(self.mem_per_sample.is_finite() && self.mem_per_sample > 0.0) {
            return bad(format!(
                "mem_per_sample: {} must be positive and finite",
                self.mem_per_sample
            ));
        }
        if self.mem_tiers.is_empty() {
            return bad("mem_tiers: need at least one hardware tier".into());
        }
        for &tier in &self.mem_tiers {
            if !(tier.is_finite() && tier > 0.0) {
                return bad(format!("mem_tiers: {tier} must be positive and finite"));
            }
            if tier < self.mem_fixed + self.mem_per_sample {
                return bad(format!(
                    "mem_tiers: a {tier} MB device cannot hold even a single sample \
                     (mem_fixed {} + mem_per_sample {})",
                    self.mem_fixed, self.mem_per_sample
                ));
            }
        }
        if self.features_csv.is_some() != self.labels_csv.is_some() {
            return bad("features_csv and labels_csv must be set together".into());
        }
        Ok(())
    }
}

impl std::fmt::Display for RunConfig {
    /// The fully-resolved config, parseable back into an equal `RunConfig`.
    fn fmt(&self, out: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(out, "m = {}", self.m)?;
        writeln!(out, "f = {}", self.f)?;
        writeln!(out, "b_min = {}", self.b_min)?;
        writeln!(out, "b_max = {}", self.b_max)?;
        writeln!(out, "seed = {}", self.seed)?;
        writeln!(out, "strategy = {}", self.strategy)?;
        writeln!(out, "rounds = {}", self.rounds)?;
        writeln!(out, "alpha = {}", self.alpha)?;
        writeln!(out, "lr = {}", self.lr)?;
        writeln!(out, "local_epochs = {}", self.local_epochs)?;
        writeln!(out, "n_samples = {}", self.n_samples)?;
        writeln!(out, "n_features = {}", self.n_features)?;
        writeln!(out, "n_classes = {}", self.n_classes)?;
        writeln!(out, "margin = {}", self.margin)?;
        writeln!(out, "n_test = {}", self.n_test)?;
        writeln!(out, "min_shard = {}", self.min_shard)?;
        writeln!(out, "t_load = {}", self.t_load)?;
        writeln!(out, "t_fixed = {}", self.t_fixed)?;
        writeln!(out, "t_per_sample = {}", self.t_per_sample)?;
        writeln!(out, "mem_fixed = {}", self.mem_fixed)?;
        writeln!(out, "mem_per_sample = {}", self.mem_per_sample)?;
        let tiers: Vec<String> = self.mem_tiers.iter().map(|t| t.to_string()).collect();
        writeln!(out, "mem_tiers = {}", tiers.join(","))?;
        if let Some(p) = &self.features_csv {
            writeln!(out, "features_csv = {}", p.display())?;
        }
        if let Some(p) = &self.labels_csv {
            writeln!(out, "labels_csv = {}", p.display())?;
        }
        Ok(())
    }
}
