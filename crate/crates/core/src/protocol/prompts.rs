use super::{Frame, ProtocolError};

/// Version tag of the shipped template set. Folded into batch config hashes
/// so outcomes can be traced to the exact prompt bytes.
pub const TEMPLATE_VERSION: &str = "v1";

pub const FRAME_TEMPLATE: &str = include_str!("../../templates/frame_v1.txt");
pub const SENTIMENT_TEMPLATE: &str = include_str!("../../templates/sentiment_v1.txt");
pub const FRAME_FALLBACK_TEMPLATE: &str = include_str!("../../templates/frame_fallback_v1.txt");
pub const SENTIMENT_FALLBACK_TEMPLATE: &str =
    include_str!("../../templates/sentiment_fallback_v1.txt");
pub const SENTIMENT_ONLY_TEMPLATE: &str = include_str!("../../templates/sentiment_only_v1.txt");

/// Stage 1: frame classification.
pub fn render_frame_prompt(headline: &str) -> Result<String, ProtocolError> {
    check_headline(headline)?;
    Ok(fill(FRAME_TEMPLATE, headline, None))
}

/// Stage 2: sentiment conditioned on an already-resolved frame.
pub fn render_sentiment_prompt(headline: &str, frame: Frame) -> Result<String, ProtocolError> {
    check_headline(headline)?;
    Ok(fill(SENTIMENT_TEMPLATE, headline, Some(frame)))
}

/// Like [`render_sentiment_prompt`] but takes the frame as text, rejecting
/// anything that is not one of the five canonical names.
pub fn render_sentiment_prompt_for(headline: &str, frame: &str) -> Result<String, ProtocolError> {
    let frame = frame
        .trim()
        .parse::<Frame>()
        .map_err(|_| ProtocolError::InvalidFrame(frame.to_string()))?;
    render_sentiment_prompt(headline, frame)
}

pub fn render_frame_fallback_prompt(headline: &str) -> Result<String, ProtocolError> {
    check_headline(headline)?;
    Ok(fill(FRAME_FALLBACK_TEMPLATE, headline, None))
}

pub fn render_sentiment_fallback_prompt(
    headline: &str,
    frame: Frame,
) -> Result<String, ProtocolError> {
    check_headline(headline)?;
    Ok(fill(SENTIMENT_FALLBACK_TEMPLATE, headline, Some(frame)))
}

pub fn render_sentiment_only_prompt(headline: &str) -> Result<String, ProtocolError> {
    check_headline(headline)?;
    Ok(fill(SENTIMENT_ONLY_TEMPLATE, headline, None))
}

fn check_headline(headline: &str) -> Result<(), ProtocolError> {
    if headline.trim().is_empty() {
        Err(ProtocolError::EmptyHeadline)
    } else {
        Ok(())
    }
}

// Single left-to-right pass: substituted values are never rescanned, so a
// headline that happens to contain "{{frame}}" is emitted literally.
fn fill(template: &str, headline: &str, frame: Option<Frame>) -> String {
    let mut out = String::with_capacity(template.len() + headline.len());
    // template files end with a newline that is not part of the prompt
    let mut rest = template.strip_suffix('\n').unwrap_or(template);
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        match after.find("}}") {
            Some(end) => {
                match (&after[..end], frame) {
                    ("headline", _) => out.push_str(headline),
                    ("frame", Some(f)) => out.push_str(f.name()),
                    (other, _) => {
                        out.push_str("{{");
                        out.push_str(other);
                        out.push_str("}}");
                    }
                }
                rest = &after[end + 2..];
            }
            None => {
                out.push_str(&rest[start..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}
