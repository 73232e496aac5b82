//! TOML run configuration and default path resolution.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ruag_core::classifiers::{BowLrParams, NgramParams};
use ruag_core::partition::PartitionConfig;
use serde::Deserialize;

pub const DATA_DIR_ENV: &str = "RUAG_DATA_DIR";

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub paths: Paths,
    pub partition: PartitionSection,
    pub bowlr: BowLrSection,
    pub ngram: NgramSection,
    pub guard: GuardSection,
    /// Directory relative config paths are resolved against.
    #[serde(skip)]
    root: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub pos_grammar: Option<String>,
    pub aic_grammar: Option<String>,
    pub dataset: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionSection {
    pub p: Option<f64>,
    pub split_fractions: Option<[f64; 3]>,
    pub min_alternatives_to_split: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BowLrSection {
    pub learning_rate: Option<f64>,
    pub l2: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NgramSection {
    pub ngram_max: Option<usize>,
    pub buckets: Option<u32>,
    pub dim: Option<usize>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub l2: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuardSection {
    pub config: Option<PathBuf>,
    pub preset: Option<String>,
}

fn data_dir() -> Option<PathBuf> {
    std::env::var_os(DATA_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

impl RunConfig {
    /// Reads `path` if given. Relative paths inside the file resolve against
    /// `RUAG_DATA_DIR` when set, otherwise against the file's directory.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig { root: data_dir(), ..Default::default() });
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.root = data_dir().or_else(|| path.parent().map(Path::to_path_buf));
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        match &self.root {
            Some(root) if p.is_relative() => root.join(p),
            _ => p.to_path_buf(),
        }
    }

    /// Grammar specs may name a shipped grammar (`shipped:pos`) instead of a file.
    pub fn resolve_grammar(&self, spec: &str) -> String {
        if spec.starts_with("shipped:") {
            spec.to_string()
        } else {
            self.resolve(Path::new(spec)).to_string_lossy().into_owned()
        }
    }

    /// Explicit flag, then config, then `$RUAG_DATA_DIR/<fallback>`.
    pub fn path_or(&self, flag: Option<&Path>, configured: Option<&PathBuf>, fallback: &str, what: &str) -> Result<PathBuf> {
        if let Some(f) = flag {
            return Ok(f.to_path_buf());
        }
        if let Some(c) = configured {
            return Ok(self.resolve(c));
        }
        match data_dir() {
            Some(d) => Ok(d.join(fallback)),
            None => anyhow::bail!("no {what} given: pass a path, set it in --config, or set {DATA_DIR_ENV}"),
        }
    }

    pub fn partition_config(&self) -> PartitionConfig {
        let mut c = PartitionConfig::default();
        let s = &self.partition;
        c.p = s.p.unwrap_or(c.p);
        c.split_fractions = s.split_fractions.unwrap_or(c.split_fractions);
        c.min_alternatives_to_split = s.min_alternatives_to_split.unwrap_or(c.min_alternatives_to_split);
        c
    }

    pub fn bowlr_params(&self) -> BowLrParams {
        let mut p = BowLrParams::default();
        let s = &self.bowlr;
        p.learning_rate = s.learning_rate.unwrap_or(p.learning_rate);
        p.l2 = s.l2.unwrap_or(p.l2);
        p.epochs = s.epochs.unwrap_or(p.epochs);
        p.batch_size = s.batch_size.unwrap_or(p.batch_size);
        p
    }

    pub fn ngram_params(&self) -> NgramParams {
        let mut p = NgramParams::default();
        let s = &self.ngram;
        p.ngram_max = s.ngram_max.unwrap_or(p.ngram_max);
        p.buckets = s.buckets.unwrap_or(p.buckets);
        p.dim = s.dim.unwrap_or(p.dim);
        p.epochs = s.epochs.unwrap_or(p.epochs);
        p.learning_rate = s.learning_rate.unwrap_or(p.learning_rate);
        p.l2 = s.l2.unwrap_or(p.l2);
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_override_defaults() {
        let cfg: RunConfig = toml::from_str(
            "seed = 7\n[partition]\np = 0.5\n[ngram]\ndim = 10\n[paths]\npos_grammar = \"shipped:toy\"\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.partition_config().p, 0.5);
        assert_eq!(cfg.partition_config().split_fractions, [0.70, 0.15, 0.15]);
        assert_eq!(cfg.ngram_params().dim, 10);
        assert_eq!(cfg.bowlr_params(), BowLrParams::default());
        assert_eq!(cfg.resolve_grammar("shipped:toy"), "shipped:toy");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("sede = 7").is_err());
    }
}
