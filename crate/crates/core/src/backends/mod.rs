//! Classification over pluggable model backends.
//!
//! A [`Backend`] pairs a [`ClassificationStrategy`] (the request protocol)
//! with a [`Transport`] (where completions come from). Backends are built
//! from a [`BackendConfig`] by the factory registered under its `kind` in a
//! [`BackendRegistry`]. [`run_batch`] drives one backend over a cleaned
//! corpus with checkpointing.

mod batch;
mod http;
mod simulated;
mod strategy;
mod transport;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::normalize::CleanHeadline;
use crate::protocol::{Frame, ParseMode, Sentiment};

pub use batch::{
    batch_config_hash, checkpoint_path, outcomes_path, read_checkpoint, resume_from_checkpoint,
    run_batch, BatchError, BatchSummary, Checkpoint, CheckpointConfig, RunControl,
};
pub use http::HttpTransport;
pub use simulated::{LabelRule, Sampling, SimulatedTransport, SimulationProfile};
pub use strategy::{
    ClassificationStrategy, SentimentOnlyProtocol, Session, TwoStageProtocol,
    DOUBLE_FALLBACK_FAILURE, TRANSPORT_ERROR, UNMAPPABLE_LABEL,
};
pub use transport::{
    CompletionRequest, CompletionResponse, FnTransport, Pacer, PromptVariant, RecordingPacer,
    ScriptedTransport, Stage, ThreadPacer, Transport, TransportError,
};

pub const KIND_TWO_STAGE: &str = "two_stage_generative";
pub const KIND_SENTIMENT_ONLY: &str = "sentiment_only_encoder";
pub const KIND_SIMULATED: &str = "simulated";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    #[error("invalid backend config {name:?}: {reason}")]
    InvalidConfig { name: String, reason: String },
    #[error("invalid simulation profile: {0}")]
    InvalidProfile(String),
    #[error("unknown backend kind {0:?}")]
    UnknownKind(String),
    #[error("environment variable {0} is not set")]
    MissingCredential(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Decoding {
    pub greedy: bool,
    pub temperature: f64,
}

impl Default for Decoding {
    fn default() -> Self {
        Self { greedy: true, temperature: 0.0 }
    }
}

fn default_delay() -> f64 {
    0.2
}
fn default_timeout() -> f64 {
    30.0
}
fn default_retries() -> u32 {
    3
}
fn default_pause() -> f64 {
    5.0
}

/// Backend description as it appears in the run config. Secrets are never
/// stored here, only the name of the environment variable holding them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub name: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub decoding: Decoding,
    /// Seconds slept between consecutive requests.
    #[serde(default = "default_delay")]
    pub request_delay: f64,
    #[serde(default = "default_timeout")]
    pub timeout: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_pause")]
    pub pause_on_error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    #[serde(default)]
    pub parse_mode: ParseMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationProfile>,
}

impl BackendConfig {
    pub fn new(name: impl Into<String>, kind: &str) -> Self {
        Self {
            name: name.into(),
            kind: kind.to_string(),
            endpoint: None,
            decoding: Decoding::default(),
            request_delay: default_delay(),
            timeout: default_timeout(),
            max_retries: default_retries(),
            pause_on_error: default_pause(),
            api_key_env: None,
            parse_mode: ParseMode::Strict,
            simulation: None,
        }
    }

    pub fn simulated(name: impl Into<String>, profile: SimulationProfile) -> Self {
        Self { simulation: Some(profile), ..Self::new(name, KIND_SIMULATED) }
    }

    pub fn http(name: impl Into<String>, kind: &str, endpoint: impl Into<String>) -> Self {
        Self { endpoint: Some(endpoint.into()), ..Self::new(name, kind) }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        let bad = |reason: &str| BackendError::InvalidConfig { name: self.name.clone(), reason: reason.into() };
        if self.name.is_empty()
            || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        {
            return Err(bad("name must be non-empty ASCII letters, digits, '-', '_' or '.'"));
        }
        if self.decoding.greedy && self.decoding.temperature != 0.0 {
            return Err(bad("greedy decoding requires temperature 0"));
        }
        for (v, what) in [
            (self.request_delay, "request_delay"),
            (self.pause_on_error, "pause_on_error"),
            (self.timeout, "timeout"),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(bad(&format!("{what} must be a non-negative number of seconds")));
            }
        }
        if let Some(profile) = &self.simulation {
            profile.validate()?;
        }
        Ok(())
    }
}

/// Per-headline result of one backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationOutcome {
    pub headline_id: u64,
    pub backend_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<Frame>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_why: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentiment: Option<Sentiment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentiment_why: Option<String>,
    #[serde(default)]
    pub frame_fallback_used: bool,
    #[serde(default)]
    pub sentiment_fallback_used: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_stage1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_stage1_fallback: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_stage2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_stage2_fallback: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ClassificationOutcome {
    pub fn empty(headline_id: u64, backend_name: &str) -> Self {
        Self {
            headline_id,
            backend_name: backend_name.to_string(),
            frame: None,
            frame_why: None,
            sentiment: None,
            sentiment_why: None,
            frame_fallback_used: false,
            sentiment_fallback_used: false,
            raw_stage1: None,
            raw_stage1_fallback: None,
            raw_stage2: None,
            raw_stage2_fallback: None,
            error: None,
        }
    }

    pub fn sentiment_only(headline_id: u64, backend_name: &str, label: Sentiment) -> Self {
        Self { sentiment: Some(label), ..Self::empty(headline_id, backend_name) }
    }

    pub fn is_transport_error(&self) -> bool {
        self.error.as_deref().is_some_and(|e| e.starts_with(TRANSPORT_ERROR))
    }
}

pub fn write_outcomes_jsonl(outcomes: &[ClassificationOutcome], path: &Path) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for o in outcomes {
        serde_json::to_writer(&mut w, o)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn read_outcomes_jsonl(path: &Path) -> std::io::Result<Vec<ClassificationOutcome>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| {
                std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}:{}: {e}", path.display(), i + 1))
            })
        })
        .collect()
}

/// A ready-to-run backend.
pub struct Backend {
    config: BackendConfig,
    strategy: Box<dyn ClassificationStrategy>,
    transport: Box<dyn Transport>,
}

impl Backend {
    pub fn from_parts(
        config: BackendConfig,
        strategy: Box<dyn ClassificationStrategy>,
        transport: Box<dyn Transport>,
    ) -> Result<Self, BackendError> {
        config.validate()?;
        Ok(Self { config, strategy, transport })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    pub fn name(&self) -> &str {
        &self.config.name
    }

    pub fn produces_frames(&self) -> bool {
        self.strategy.produces_frames()
    }

    /// Classifies one headline outside any batch (no delay before the first request).
    pub fn classify_headline(&mut self, headline: &CleanHeadline, pacer: &mut dyn Pacer) -> ClassificationOutcome {
        let mut session = Session::new(self.transport.as_mut(), pacer, &self.config);
        self.strategy.classify(&mut session, 0, headline)
    }

    pub(crate) fn session<'a>(&'a mut self, pacer: &'a mut dyn Pacer) -> (Session<'a>, &'a dyn ClassificationStrategy) {
        (Session::new(self.transport.as_mut(), pacer, &self.config), self.strategy.as_ref())
    }
}

pub type BackendFactory = fn(&BackendConfig) -> Result<Backend, BackendError>;

/// Backend kinds by name.
#[derive(Clone)]
pub struct BackendRegistry {
    factories: BTreeMap<String, BackendFactory>,
}

impl BackendRegistry {
    pub fn empty() -> Self {
        Self { factories: BTreeMap::new() }
    }

    /// `two_stage_generative` and `sentiment_only_encoder` over HTTP, and
    /// `simulated` (two-stage when its profile has frames).
    pub fn with_builtin() -> Self {
        let mut r = Self::empty();
        r.register(KIND_TWO_STAGE, |c| http_backend(c, Box::new(TwoStageProtocol)));
        r.register(KIND_SENTIMENT_ONLY, |c| http_backend(c, Box::new(SentimentOnlyProtocol)));
        r.register(KIND_SIMULATED, simulated_backend);
        r
    }

    pub fn register(&mut self, kind: &str, factory: BackendFactory) {
        self.factories.insert(kind.to_string(), factory);
    }

    pub fn kinds(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn build(&self, config: &BackendConfig) -> Result<Backend, BackendError> {
        let factory = self.factories.get(&config.kind).ok_or_else(|| BackendError::UnknownKind(config.kind.clone()))?;
        config.validate()?;
        factory(config)
    }
}

impl Default for BackendRegistry {
    fn default() -> Self {
        Self::with_builtin()
    }
}

fn http_backend(config: &BackendConfig, strategy: Box<dyn ClassificationStrategy>) -> Result<Backend, BackendError> {
    let endpoint = config.endpoint.as_deref().ok_or_else(|| BackendError::InvalidConfig {
        name: config.name.clone(),
        reason: "endpoint is required".into(),
    })?;
    let api_key = match &config.api_key_env {
        Some(var) => Some(std::env::var(var).map_err(|_| BackendError::MissingCredential(var.clone()))?),
        None => None,
    };
    let transport = HttpTransport::new(endpoint, Duration::from_secs_f64(config.timeout), api_key);
    Backend::from_parts(config.clone(), strategy, Box::new(transport))
}

fn simulated_backend(config: &BackendConfig) -> Result<Backend, BackendError> {
    let profile = config.simulation.clone().ok_or_else(|| BackendError::InvalidConfig {
        name: config.name.clone(),
        reason: "simulated backend needs a simulation profile".into(),
    })?;
    let strategy: Box<dyn ClassificationStrategy> =
        if profile.has_frames() { Box::new(TwoStageProtocol) } else { Box::new(SentimentOnlyProtocol) };
    Backend::from_parts(config.clone(), strategy, Box::new(SimulatedTransport::new(profile)?))
}
