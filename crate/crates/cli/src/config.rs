//! `key = value` pipeline configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use swkg_core::tagger::{DecayKind, TrainingConfig};

use crate::manifest::sha256_hex;

/// Keys holding file or directory paths, resolved against the config file's directory.
pub const PATH_KEYS: [&str; 13] = [
    "corpus_dir",
    "corpus_manifest",
    "stopwords",
    "kb_dictionary",
    "english_wordlist",
    "exact_rules",
    "negative_list",
    "kb_export",
    "enrichment",
    "gsc_train",
    "gsc_test",
    "output_dir",
    "mm_headings_file",
];

const SCALAR_KEYS: [&str; 7] = [
    "seed",
    "max_ngram",
    "top_k",
    "jobs",
    "resource_base",
    "kb_base",
    "same_as_base",
];

const TRAINING_FIELDS: [&str; 6] = [
    "learning_rate",
    "lr_decay",
    "feature_dropout",
    "positive_class_weight_boost",
    "epochs",
    "negative_sampling_ratio",
];

/// Keys that do not influence artifact contents.
const UNHASHED: [&str; 2] = ["output_dir", "jobs"];

pub const DEFAULT_OUTPUT_DIR: &str = "swkg-out";
pub const OUTPUT_DIR_ENV: &str = "SWKG_OUTPUT_DIR";

fn known_key(key: &str) -> bool {
    if PATH_KEYS.contains(&key) || SCALAR_KEYS.contains(&key) {
        return true;
    }
    match key.split_once('.') {
        Some(("ssc" | "gsc", field)) => TRAINING_FIELDS.contains(&field),
        _ => false,
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineConfig {
    /// Raw values as written, after overrides.
    values: BTreeMap<String, String>,
    /// Directory relative paths are resolved against.
    base: PathBuf,
}

impl PipelineConfig {
    /// Parses `key = value` lines; `#` starts a comment line.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = PipelineConfig {
            values: BTreeMap::new(),
            base: base.to_path_buf(),
        };
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected `key = value`", n + 1))?;
            cfg.set(k.trim(), v.trim())
                .with_context(|| format!("config line {}", n + 1))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let base = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Empty configuration resolving paths against the working directory.
    pub fn empty() -> Self {
        PipelineConfig {
            values: BTreeMap::new(),
            base: PathBuf::from("."),
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !known_key(key) {
            bail!("unknown config key `{key}`");
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Sets a path given relative to the working directory rather than the config file.
    pub fn set_path(&mut self, key: &str, path: &Path) -> Result<()> {
        let abs =
            std::path::absolute(path).with_context(|| format!("resolving {}", path.display()))?;
        self.set(key, &abs.to_string_lossy())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(|v| self.base.join(v))
    }

    pub fn require_path(&self, key: &str) -> Result<PathBuf> {
        self.path(key)
            .ok_or_else(|| anyhow!("config key `{key}` is not set"))
    }

    /// Flag, then environment, then config file, then the default.
    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        if let Some(p) = flag {
            return p.to_path_buf();
        }
        if let Some(p) = std::env::var_os(OUTPUT_DIR_ENV).filter(|p| !p.is_empty()) {
            return PathBuf::from(p);
        }
        self.path("output_dir")
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }

    fn parse_value<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| anyhow!("config key `{key}`: bad value `{v}`: {e}"))
            })
            .transpose()
    }

    pub fn seed(&self) -> Result<u64> {
        Ok(self.parse_value("seed")?.unwrap_or(42))
    }

    pub fn max_ngram(&self) -> Result<usize> {
        let n = self
            .parse_value("max_ngram")?
            .unwrap_or(swkg_core::weaksup::MAX_CANDIDATE_TOKENS);
        if n == 0 {
            bail!("config key `max_ngram` must be >= 1");
        }
        Ok(n)
    }

    pub fn top_k(&self) -> Result<Option<usize>> {
        self.parse_value("top_k")
    }

    pub fn jobs(&self) -> Result<Option<usize>> {
        self.parse_value("jobs")
    }

    /// Stage defaults overlaid with `<stage>.<field>` keys and the shared seed.
    pub fn training(&self, stage: &str) -> Result<TrainingConfig> {
        let mut t = match stage {
            "ssc" => TrainingConfig::ssc_default(),
            "gsc" => TrainingConfig::gsc_default(),
            other => bail!("unknown training stage `{other}`"),
        };
        let key = |f: &str| format!("{stage}.{f}");
        if let Some(v) = self.parse_value(&key("learning_rate"))? {
            t.learning_rate = v;
        }
        if let Some(v) = self.get(&key("lr_decay")) {
            t.lr_decay =
                parse_decay(v).with_context(|| format!("config key `{}`", key("lr_decay")))?;
        }
        if let Some(v) = self.parse_value(&key("feature_dropout"))? {
            t.feature_dropout = v;
        }
        if let Some(v) = self.parse_value(&key("positive_class_weight_boost"))? {
            t.positive_class_weight_boost = v;
        }
        if let Some(v) = self.parse_value(&key("epochs"))? {
            t.epochs = v;
        }
        if let Some(v) = self.parse_value(&key("negative_sampling_ratio"))? {
            t.negative_sampling_ratio = v;
        }
        t.seed = self.seed()?;
        t.validate(true)
            .with_context(|| format!("{stage} training configuration"))?;
        Ok(t)
    }

    /// Every configured path must exist.
    pub fn validate(&self) -> Result<()> {
        for key in PATH_KEYS.iter().filter(|k| **k != "output_dir") {
            if let Some(p) = self.path(key) {
                if !p.exists() {
                    bail!("config key `{key}` points to missing path {}", p.display());
                }
            }
        }
        self.seed()?;
        self.max_ngram()?;
        self.top_k()?;
        self.jobs()?;
        self.training("ssc")?;
        self.training("gsc")?;
        Ok(())
    }

    /// Hash of the effective settings, excluding keys that cannot change outputs.
    pub fn hash(&self) -> String {
        let canonical: String = self
            .values
            .iter()
            .filter(|(k, _)| !UNHASHED.contains(&k.as_str()))
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect();
        sha256_hex(canonical.as_bytes())
    }
}

/// `kind:rate`, e.g. `linear:0.0001`.
pub fn parse_decay(v: &str) -> Result<(DecayKind, f64)> {
    let (kind, rate) = v
        .split_once(':')
        .ok_or_else(|| anyhow!("expected `linear:<rate>` or `exponential:<rate>`, got `{v}`"))?;
    let kind: DecayKind = kind.trim().parse()?;
    let rate: f64 = rate
        .trim()
        .parse()
        .map_err(|e| anyhow!("bad decay rate `{rate}`: {e}"))?;
    Ok((kind, rate))
}
