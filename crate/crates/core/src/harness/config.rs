//! Experiment configuration and its key-value file form.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::table::Format;
use crate::error::{Error, Result};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "HYPERROUTE_OUT_DIR";

/// Fully determines one experiment run: identical configs give identical
/// tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub id: String,
    /// Experiment-specific parameters, for example `sizes = 8,10`.
    pub overrides: BTreeMap<String, String>,
    pub seed: u64,
    pub trials: Option<usize>,
    pub format: Format,
    /// Destination file; the table is returned only when absent.
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(id: impl Into<String>) -> Self {
        Self { id: id.into(), overrides: BTreeMap::new(), seed: 0, trials: None, format: Format::default(), output: None }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.overrides.insert(key.into(), value.to_string());
        self
    }

    /// Parse `key = value` lines; `#` starts a comment. The reserved keys
    /// `experiment`, `seed`, `trials`, `format` and `output` fill the fixed
    /// fields, every other key becomes an override.
    pub fn parse_kv(text: &str) -> Result<Self> {
        let mut cfg = Self::new("");
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse { line: i + 1, msg: "expected key = value".into() })?;
            cfg.set(k.trim(), v.trim()).map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
        }
        Ok(cfg)
    }

    /// Apply one setting; later calls override earlier ones.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Parameter(format!("{key}: invalid {what} '{value}'"));
        match key {
            "experiment" | "id" => self.id = value.into(),
            "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
            "trials" => self.trials = Some(value.parse().map_err(|_| bad("trial count"))?),
            "format" => self.format = Format::parse(value)?,
            "output" => self.output = Some(value.into()),
            "" => return Err(Error::Parameter("empty key".into())),
            _ => {
                self.overrides.insert(key.into(), value.into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_key_values() {
        let c =
            ExperimentConfig::parse_kv("experiment = overlay_spectral_gain\n# note\nseed=3 \ntrials = 2\nformat=csv\nsizes = 64, 100  # trailing\n").unwrap();
        assert_eq!(c.id, "overlay_spectral_gain");
        assert_eq!((c.seed, c.trials, c.format), (3, Some(2), Format::Csv));
        assert_eq!(c.overrides["sizes"], "64, 100");
    }

    #[test]
    fn reports_bad_lines() {
        assert!(matches!(ExperimentConfig::parse_kv("seed = 1\nnonsense\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(ExperimentConfig::parse_kv("seed = x"), Err(Error::Parse { line: 1, .. })));
    }
}
