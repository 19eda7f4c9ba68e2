use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{Frame, Sentiment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum SchemaError {
    #[error("malformed_json")]
    MalformedJson,
    #[error("wrong_keys")]
    WrongKeys,
    #[error("unknown_label")]
    UnknownLabel,
    #[error("extra_text")]
    ExtraText,
    #[error("empty_field")]
    EmptyField,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameDecision {
    pub frame: Frame,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentimentDecision {
    pub label: Sentiment,
    pub rationale: String,
}

/// How much non-JSON text around the object is tolerated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseMode {
    /// Whitespace only; anything else is `extra_text`.
    #[default]
    Strict,
    /// Take the first JSON object embedded anywhere in the completion.
    ExtractFirstObject,
}

pub fn parse_frame_output(raw: &str, mode: ParseMode) -> Result<FrameDecision, SchemaError> {
    let (label, explanation) = parse_pair(raw, mode, "frame", "explanation")?;
    let frame = Frame::ALL
        .into_iter()
        .find(|f| f.name().eq_ignore_ascii_case(label.trim()))
        .ok_or(SchemaError::UnknownLabel)?;
    Ok(FrameDecision { frame, explanation })
}

pub fn parse_sentiment_output(
    raw: &str,
    mode: ParseMode,
) -> Result<SentimentDecision, SchemaError> {
    let (label, rationale) = parse_pair(raw, mode, "label", "rationale")?;
    let label = Sentiment::ALL
        .into_iter()
        .find(|s| s.name().eq_ignore_ascii_case(label.trim()))
        .ok_or(SchemaError::UnknownLabel)?;
    Ok(SentimentDecision { label, rationale })
}

fn parse_pair(
    raw: &str,
    mode: ParseMode,
    label_key: &str,
    text_key: &str,
) -> Result<(String, String), SchemaError> {
    let object = match mode {
        ParseMode::Strict => strict_object(raw)?,
        ParseMode::ExtractFirstObject => match strict_object(raw) {
            Ok(obj) => obj,
            Err(_) => first_embedded_object(raw).ok_or(SchemaError::MalformedJson)?,
        },
    };
    if object.len() != 2 || !object.contains_key(label_key) || !object.contains_key(text_key) {
        return Err(SchemaError::WrongKeys);
    }
    let (Some(Value::String(label)), Some(Value::String(text))) =
        (object.get(label_key), object.get(text_key))
    else {
        return Err(SchemaError::WrongKeys);
    };
    if text.trim().is_empty() {
        return Err(SchemaError::EmptyField);
    }
    Ok((label.clone(), text.clone()))
}

fn strict_object(raw: &str) -> Result<Map<String, Value>, SchemaError> {
    let trimmed = raw.trim();
    let mut stream = serde_json::Deserializer::from_str(trimmed).into_iter::<Value>();
    match stream.next() {
        Some(Ok(Value::Object(map))) => {
            if stream.byte_offset() == trimmed.len() {
                Ok(map)
            } else {
                Err(SchemaError::ExtraText)
            }
        }
        Some(Ok(_)) => Err(SchemaError::WrongKeys),
        _ => {
            if first_embedded_object(trimmed).is_some() {
                Err(SchemaError::ExtraText)
            } else {
                Err(SchemaError::MalformedJson)
            }
        }
    }
}

fn first_embedded_object(raw: &str) -> Option<Map<String, Value>> {
    raw.char_indices()
        .filter(|(_, c)| *c == '{')
        .find_map(|(i, _)| {
            let mut stream = serde_json::Deserializer::from_str(&raw[i..]).into_iter::<Value>();
            match stream.next() {
                Some(Ok(Value::Object(map))) => Some(map),
                _ => None,
            }
        })
}

/// Canonical one-line JSON for a frame decision, as a well-behaved model would emit it.
pub fn serialize_frame_decision(decision: &FrameDecision) -> String {
    serde_json::json!({ "frame": decision.frame.name(), "explanation": decision.explanation })
        .to_string()
}

pub fn serialize_sentiment_decision(decision: &SentimentDecision) -> String {
    serde_json::json!({ "label": decision.label.name(), "rationale": decision.rationale })
        .to_string()
}
