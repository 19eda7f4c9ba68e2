use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::Decoding;
use crate::protocol::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Frame,
    Sentiment,
    SentimentOnly,
}

/// Whether a request carries the full template or the letter-only re-prompt.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum PromptVariant {
    #[default]
    Primary,
    LetterFallback,
}

/// One text-in/text-out request. Serializes to the `POST /v1/classify` body;
/// `headline_id` and `variant` stay local.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletionRequest {
    pub stage: Stage,
    pub headline: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame: Option<Frame>,
    pub prompt: String,
    pub decoding: Decoding,
    #[serde(skip)]
    pub headline_id: u64,
    #[serde(skip)]
    pub variant: PromptVariant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub completion: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("connection failed: {0}")]
    Connection(String),
    #[error("timed out")]
    Timeout,
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("bad response body: {0}")]
    BadResponse(String),
    #[error("script exhausted")]
    Exhausted,
}

/// Source of completions: a remote model host, a simulator or a test script.
pub trait Transport: Send {
    fn complete(&mut self, request: &CompletionRequest) -> Result<String, TransportError>;
}

/// Sleeps between requests. Tests substitute [`RecordingPacer`].
pub trait Pacer {
    fn sleep(&mut self, duration: Duration);
}

#[derive(Debug, Default, Clone, Copy)]
pub struct ThreadPacer;

impl Pacer for ThreadPacer {
    fn sleep(&mut self, duration: Duration) {
        if !duration.is_zero() {
            std::thread::sleep(duration);
        }
    }
}

/// Records requested sleeps without sleeping.
#[derive(Debug, Default, Clone)]
pub struct RecordingPacer {
    pub sleeps: Vec<Duration>,
}

impl Pacer for RecordingPacer {
    fn sleep(&mut self, duration: Duration) {
        self.sleeps.push(duration);
    }
}

/// Replays a fixed queue of replies and logs every request it receives.
#[derive(Debug, Clone, Default)]
pub struct ScriptedTransport {
    replies: VecDeque<Result<String, TransportError>>,
    log: Arc<Mutex<Vec<CompletionRequest>>>,
}

impl ScriptedTransport {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::with_results(replies.into_iter().map(|s| Ok(s.into())))
    }

    pub fn with_results(replies: impl IntoIterator<Item = Result<String, TransportError>>) -> Self {
        Self { replies: replies.into_iter().collect(), log: Arc::default() }
    }

    /// Handle to the request log that survives moving the transport into a backend.
    pub fn log(&self) -> Arc<Mutex<Vec<CompletionRequest>>> {
        Arc::clone(&self.log)
    }
}

impl Transport for ScriptedTransport {
    fn complete(&mut self, request: &CompletionRequest) -> Result<String, TransportError> {
        self.log.lock().unwrap().push(request.clone());
        self.replies.pop_front().unwrap_or(Err(TransportError::Exhausted))
    }
}

/// Transport backed by a closure.
pub struct FnTransport<F>(pub F);

impl<F> Transport for FnTransport<F>
where
    F: FnMut(&CompletionRequest) -> Result<String, TransportError> + Send,
{
    fn complete(&mut self, request: &CompletionRequest) -> Result<String, TransportError> {
        (self.0)(request)
    }
}
