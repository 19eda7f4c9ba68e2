//! Frame/sentiment taxonomies, the two-stage prompt templates, strict
//! completion parsing, letter-code fallbacks and label harmonization.

mod parse;
mod prompts;
mod taxonomy;

pub use parse::{
    parse_frame_output, parse_sentiment_output, serialize_frame_decision,
    serialize_sentiment_decision, FrameDecision, ParseMode, SchemaError, SentimentDecision,
};
pub use prompts::{
    render_frame_fallback_prompt, render_frame_prompt, render_sentiment_fallback_prompt,
    render_sentiment_only_prompt, render_sentiment_prompt, render_sentiment_prompt_for,
    FRAME_FALLBACK_TEMPLATE, FRAME_TEMPLATE, SENTIMENT_FALLBACK_TEMPLATE, SENTIMENT_ONLY_TEMPLATE,
    SENTIMENT_TEMPLATE, TEMPLATE_VERSION,
};
pub use taxonomy::{Frame, Label, Sentiment, TaxonomyKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error("headline text is empty")]
    EmptyHeadline,
    #[error("not a frame: {0:?}")]
    InvalidFrame(String),
    #[error("letter {letter:?} is outside the {kind:?} range")]
    InvalidLetter { kind: TaxonomyKind, letter: String },
    #[error("cannot map {0:?} to a canonical label")]
    UnmappableLabel(String),
}

/// Maps a letter-only fallback reply to its label. Letters are positional in
/// the order the fallback prompt lists the options.
pub fn map_fallback_letter(kind: TaxonomyKind, letter: &str) -> Result<Label, ProtocolError> {
    let invalid = || ProtocolError::InvalidLetter { kind, letter: letter.to_string() };
    let mut chars = letter.trim().chars();
    let (Some(c), None) = (chars.next(), chars.next()) else {
        return Err(invalid());
    };
    match kind {
        TaxonomyKind::Frame => Frame::from_letter(c).map(Label::Frame),
        TaxonomyKind::Sentiment => Sentiment::from_letter(c).map(Label::Sentiment),
    }
    .ok_or_else(invalid)
}

/// Normalizes a raw label (canonical name or single letter, any case,
/// surrounding whitespace) to a canonical member. No fuzzy matching.
pub fn harmonize_label(raw: &str, kind: TaxonomyKind) -> Result<Label, ProtocolError> {
    let trimmed = raw.trim();
    let by_name = match kind {
        TaxonomyKind::Frame => trimmed.parse::<Frame>().map(Label::Frame).ok(),
        TaxonomyKind::Sentiment => trimmed.parse::<Sentiment>().map(Label::Sentiment).ok(),
    };
    by_name
        .or_else(|| map_fallback_letter(kind, trimmed).ok())
        .ok_or_else(|| ProtocolError::UnmappableLabel(raw.to_string()))
}

pub fn harmonize_sentiment(raw: &str) -> Result<Sentiment, ProtocolError> {
    match harmonize_label(raw, TaxonomyKind::Sentiment)? {
        Label::Sentiment(s) => Ok(s),
        Label::Frame(_) => unreachable!(),
    }
}

pub fn fallback_frame(letter: &str) -> Result<Frame, ProtocolError> {
    match map_fallback_letter(TaxonomyKind::Frame, letter)? {
        Label::Frame(f) => Ok(f),
        Label::Sentiment(_) => unreachable!(),
    }
}

pub fn fallback_sentiment(letter: &str) -> Result<Sentiment, ProtocolError> {
    match map_fallback_letter(TaxonomyKind::Sentiment, letter)? {
        Label::Sentiment(s) => Ok(s),
        Label::Frame(_) => unreachable!(),
    }
}
