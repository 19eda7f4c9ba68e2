use std::time::Duration;

use tracing::warn;

use super::transport::{CompletionRequest, Pacer, PromptVariant, Stage, Transport, TransportError};
use super::{BackendConfig, ClassificationOutcome};
use crate::normalize::CleanHeadline;
use crate::protocol::{self, Frame, ParseMode, ProtocolError};

pub const TRANSPORT_ERROR: &str = "TransportError";
pub const DOUBLE_FALLBACK_FAILURE: &str = "DoubleFallbackFailure";
pub const UNMAPPABLE_LABEL: &str = "UnmappableLabel";

/// Request plumbing shared by all strategies: inter-request delay, retries
/// with a pause, and request counting.
pub struct Session<'a> {
    transport: &'a mut dyn Transport,
    pacer: &'a mut dyn Pacer,
    config: &'a BackendConfig,
    requests_sent: u64,
}

impl<'a> Session<'a> {
    pub fn new(transport: &'a mut dyn Transport, pacer: &'a mut dyn Pacer, config: &'a BackendConfig) -> Self {
        Self { transport, pacer, config, requests_sent: 0 }
    }

    pub fn parse_mode(&self) -> ParseMode {
        self.config.parse_mode
    }

    pub fn requests_sent(&self) -> u64 {
        self.requests_sent
    }

    fn request(
        &self,
        headline: &CleanHeadline,
        stage: Stage,
        variant: PromptVariant,
        frame: Option<Frame>,
        prompt: String,
    ) -> CompletionRequest {
        CompletionRequest {
            stage,
            headline: headline.text.clone(),
            frame,
            prompt,
            decoding: self.config.decoding,
            headline_id: headline.id,
            variant,
        }
    }

    /// Sends with `request_delay` before every request but the session's
    /// first, retrying up to `max_retries` times with `pause_on_error` between.
    pub fn send(&mut self, index: usize, request: &CompletionRequest) -> Result<String, TransportError> {
        let mut attempt = 0;
        loop {
            if self.requests_sent > 0 {
                self.pacer.sleep(Duration::from_secs_f64(self.config.request_delay));
            }
            self.requests_sent += 1;
            match self.transport.complete(request) {
                Ok(text) => return Ok(text),
                Err(err) => {
                    warn!(event = "request_failed", index, attempt, error = %err);
                    if attempt >= self.config.max_retries {
                        return Err(err);
                    }
                    attempt += 1;
                    self.pacer.sleep(Duration::from_secs_f64(self.config.pause_on_error));
                }
            }
        }
    }
}

/// A classification protocol. Implementations are registered by name in
/// [`super::BackendRegistry`].
pub trait ClassificationStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    /// Whether outcomes carry a frame.
    fn produces_frames(&self) -> bool;

    fn classify(&self, session: &mut Session<'_>, index: usize, headline: &CleanHeadline) -> ClassificationOutcome;
}

/// Frame first, then sentiment conditioned on the resolved frame. Each stage
/// falls back once to a letter-only prompt when the reply fails validation.
#[derive(Debug, Default, Clone, Copy)]
pub struct TwoStageProtocol;

/// One request whose reply is harmonized directly to a sentiment.
#[derive(Debug, Default, Clone, Copy)]
pub struct SentimentOnlyProtocol;

fn transport_failure(mut outcome: ClassificationOutcome, err: TransportError) -> ClassificationOutcome {
    outcome.error = Some(format!("{TRANSPORT_ERROR}: {err}"));
    outcome
}

fn prompt_or_panic(result: Result<String, ProtocolError>) -> String {
    // cleaned headlines always have at least one token
    result.expect("cleaned headline text is non-empty")
}

impl ClassificationStrategy for TwoStageProtocol {
    fn name(&self) -> &'static str {
        "two_stage"
    }

    fn produces_frames(&self) -> bool {
        true
    }

    fn classify(&self, session: &mut Session<'_>, index: usize, headline: &CleanHeadline) -> ClassificationOutcome {
        let mut out = ClassificationOutcome::empty(headline.id, &session.config.name);
        let mode = session.parse_mode();

        let prompt = prompt_or_panic(protocol::render_frame_prompt(&headline.text));
        let req = session.request(headline, Stage::Frame, PromptVariant::Primary, None, prompt);
        let raw = match session.send(index, &req) {
            Ok(raw) => raw,
            Err(e) => return transport_failure(out, e),
        };
        out.raw_stage1 = Some(raw.clone());
        let frame = match protocol::parse_frame_output(&raw, mode) {
            Ok(decision) => {
                out.frame_why = Some(decision.explanation);
                decision.frame
            }
            Err(_) => {
                out.frame_fallback_used = true;
                let prompt = prompt_or_panic(protocol::render_frame_fallback_prompt(&headline.text));
                let req = session.request(headline, Stage::Frame, PromptVariant::LetterFallback, None, prompt);
                let raw = match session.send(index, &req) {
                    Ok(raw) => raw,
                    Err(e) => return transport_failure(out, e),
                };
                out.raw_stage1_fallback = Some(raw.clone());
                match protocol::fallback_frame(&raw) {
                    Ok(frame) => frame,
                    Err(_) => {
                        warn!(event = "double_fallback_failure", index, stage = "frame");
                        out.error = Some(format!("{DOUBLE_FALLBACK_FAILURE}: frame"));
                        return out;
                    }
                }
            }
        };
        out.frame = Some(frame);

        let prompt = prompt_or_panic(protocol::render_sentiment_prompt(&headline.text, frame));
        let req = session.request(headline, Stage::Sentiment, PromptVariant::Primary, Some(frame), prompt);
        let raw = match session.send(index, &req) {
            Ok(raw) => raw,
            Err(e) => return transport_failure(out, e),
        };
        out.raw_stage2 = Some(raw.clone());
        match protocol::parse_sentiment_output(&raw, mode) {
            Ok(decision) => {
                out.sentiment = Some(decision.label);
                out.sentiment_why = Some(decision.rationale);
            }
            Err(_) => {
                out.sentiment_fallback_used = true;
                let prompt =
                    prompt_or_panic(protocol::render_sentiment_fallback_prompt(&headline.text, frame));
                let req = session.request(headline, Stage::Sentiment, PromptVariant::LetterFallback, Some(frame), prompt);
                let raw = match session.send(index, &req) {
                    Ok(raw) => raw,
                    Err(e) => return transport_failure(out, e),
                };
                out.raw_stage2_fallback = Some(raw.clone());
                match protocol::fallback_sentiment(&raw) {
                    Ok(label) => out.sentiment = Some(label),
                    Err(_) => {
                        warn!(event = "double_fallback_failure", index, stage = "sentiment");
                        out.error = Some(format!("{DOUBLE_FALLBACK_FAILURE}: sentiment"));
                    }
                }
            }
        }
        out
    }
}

impl ClassificationStrategy for SentimentOnlyProtocol {
    fn name(&self) -> &'static str {
        "sentiment_only"
    }

    fn produces_frames(&self) -> bool {
        false
    }

    fn classify(&self, session: &mut Session<'_>, index: usize, headline: &CleanHeadline) -> ClassificationOutcome {
        let mut out = ClassificationOutcome::empty(headline.id, &session.config.name);
        let prompt = prompt_or_panic(protocol::render_sentiment_only_prompt(&headline.text));
        let req = session.request(headline, Stage::SentimentOnly, PromptVariant::Primary, None, prompt);
        let raw = match session.send(index, &req) {
            Ok(raw) => raw,
            Err(e) => return transport_failure(out, e),
        };
        match protocol::harmonize_sentiment(&raw) {
            Ok(label) => out.sentiment = Some(label),
            Err(_) => out.error = Some(format!("{UNMAPPABLE_LABEL}: {:?}", raw.trim())),
        }
        out.raw_stage2 = Some(raw);
        out
    }
}
