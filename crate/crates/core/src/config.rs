//! Run configuration, read from a single TOML file.
//!
//! Every section is optional. Relative paths are resolved against the
//! directory holding the config file.
//!
//! ```toml
//! output_dir = "out"
//!
//! [corpus]
//! path = "headlines.csv"
//! keywords = "infer"
//!
//! [normalization]
//! stopwords = "stopwords.txt"
//! min_tokens = 3
//!
//! [checkpoint]
//! interval = 300
//!
//! [[backends]]
//! name = "gpt-4.1"
//! kind = "two_stage_generative"
//! endpoint = "http://localhost:8000"
//! api_key_env = "OPENAI_API_KEY"
//!
//! [ensemble]
//! members = ["CAMeLBERT-MSA", "CAMeLBERT-DA", "MARBERT"]
//! tie_policy = ["Neutral", "Negative", "Positive"]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backends::{BackendConfig, BackendError};
use crate::corpus::{InputFormat, KeywordPolicy};
use crate::ensemble::TiePolicy;
use crate::hashing::json_hash;
use crate::metrics::VsScale;
use crate::normalize::{NormalizationConfig, NormalizeError};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("backend {0:?} is configured twice")]
    DuplicateBackend(String),
    #[error("no backend named {0:?} in the config")]
    UnknownBackend(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Normalization(#[from] NormalizeError),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Inferred from the file extension when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<InputFormat>,
    #[serde(default)]
    pub keywords: KeywordPolicy,
}

fn default_min_tokens() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalizationSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopwords: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outlets: Option<PathBuf>,
    #[serde(default = "default_min_tokens")]
    pub min_tokens: usize,
}

impl Default for NormalizationSection {
    fn default() -> Self {
        Self { stopwords: None, outlets: None, min_tokens: default_min_tokens() }
    }
}

impl NormalizationSection {
    pub fn build(&self) -> Result<NormalizationConfig, NormalizeError> {
        let mut config = NormalizationConfig::from_files(self.stopwords.as_deref(), self.outlets.as_deref())?;
        config.min_tokens = self.min_tokens;
        config.validate()?;
        Ok(config)
    }
}

fn default_interval() -> usize {
    300
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointSection {
    #[serde(default = "default_interval")]
    pub interval: usize,
    /// Defaults to `<output_dir>/runs`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

impl Default for CheckpointSection {
    fn default() -> Self {
        Self { interval: default_interval(), dir: None }
    }
}

fn default_ensemble_name() -> String {
    "BERT-Ensemble".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    #[serde(default = "default_ensemble_name")]
    pub name: String,
    #[serde(default)]
    pub members: Vec<String>,
    #[serde(default)]
    pub tie_policy: TiePolicy,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self { name: default_ensemble_name(), members: Vec::new(), tie_policy: TiePolicy::default() }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSection {
    #[serde(default)]
    pub vs_scale: VsScale,
    #[serde(default = "yes")]
    pub vs_include_benchmark: bool,
    /// Table row order; unlisted models follow.
    #[serde(default)]
    pub order: Vec<String>,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self { vs_scale: VsScale::default(), vs_include_benchmark: true, order: Vec::new() }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub corpus: CorpusSection,
    #[serde(default)]
    pub normalization: NormalizationSection,
    #[serde(default)]
    pub checkpoint: CheckpointSection,
    #[serde(default)]
    pub backends: Vec<BackendConfig>,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub metrics: MetricsSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config is valid")
    }
}

impl RunConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: origin.to_path_buf(), message: e.to_string() })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut names = std::collections::BTreeSet::new();
        for b in &self.backends {
            b.validate()?;
            if !names.insert(b.name.as_str()) {
                return Err(ConfigError::DuplicateBackend(b.name.clone()));
            }
        }
        if self.normalization.min_tokens < 1 {
            return Err(NormalizeError::InvalidConfig("min_tokens must be at least 1".into()).into());
        }
        if self.checkpoint.interval < 1 {
            return Err(ConfigError::Parse { path: PathBuf::new(), message: "checkpoint.interval must be at least 1".into() });
        }
        Ok(())
    }

    /// Rewrites relative paths against `base` and fills derived defaults.
    pub fn resolve(mut self, base: &Path) -> Self {
        let abs = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        abs(&mut self.output_dir);
        for p in [&mut self.corpus.path, &mut self.normalization.stopwords, &mut self.normalization.outlets, &mut self.checkpoint.dir]
            .into_iter()
            .flatten()
        {
            abs(p);
        }
        if self.checkpoint.dir.is_none() {
            self.checkpoint.dir = Some(self.output_dir.join("runs"));
        }
        self
    }

    pub fn backend(&self, name: &str) -> Result<&BackendConfig, ConfigError> {
        self.backends.iter().find(|b| b.name == name).ok_or_else(|| ConfigError::UnknownBackend(name.to_string()))
    }

    pub fn checkpoint_dir(&self) -> PathBuf {
        self.checkpoint.dir.clone().unwrap_or_else(|| self.output_dir.join("runs"))
    }

    /// Hash of the resolved config, stamped into outputs.
    pub fn hash(&self) -> String {
        json_hash(self)
    }
}

/// Reads, validates and resolves a config file.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    Ok(RunConfig::parse(&text, path)?.resolve(base))
}
