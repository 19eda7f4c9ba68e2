use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ProtocolError;

/// Interpretive frame assigned to a headline before sentiment is judged.
///
/// Serialized names are the exact spellings used in the prompts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Frame {
    Humanitarian,
    Security,
    #[serde(rename = "Legal_Accountability")]
    LegalAccountability,
    #[serde(rename = "Political_Strategic")]
    PoliticalStrategic,
    #[serde(rename = "Historical_Informational")]
    HistoricalInformational,
}

impl Frame {
    /// Prompt listing order; letter codes A..E are positional in this order.
    pub const ALL: [Frame; 5] = [
        Frame::Humanitarian,
        Frame::Security,
        Frame::LegalAccountability,
        Frame::PoliticalStrategic,
        Frame::HistoricalInformational,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Frame::Humanitarian => "Humanitarian",
            Frame::Security => "Security",
            Frame::LegalAccountability => "Legal_Accountability",
            Frame::PoliticalStrategic => "Political_Strategic",
            Frame::HistoricalInformational => "Historical_Informational",
        }
    }

    pub fn letter(self) -> char {
        let pos = Self::ALL.iter().position(|f| *f == self).unwrap();
        (b'A' + pos as u8) as char
    }

    pub fn from_letter(letter: char) -> Option<Frame> {
        letter_index(letter).and_then(|i| Self::ALL.get(i).copied())
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|f| *f == self).unwrap()
    }
}

/// Three-way sentiment polarity. Vector components elsewhere in the crate
/// follow this declaration order: Negative, Neutral, Positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sentiment {
    Negative,
    Neutral,
    Positive,
}

impl Sentiment {
    pub const ALL: [Sentiment; 3] = [Sentiment::Negative, Sentiment::Neutral, Sentiment::Positive];

    pub fn name(self) -> &'static str {
        match self {
            Sentiment::Negative => "Negative",
            Sentiment::Neutral => "Neutral",
            Sentiment::Positive => "Positive",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        (b'A' + self.index() as u8) as char
    }

    pub fn from_letter(letter: char) -> Option<Sentiment> {
        letter_index(letter).and_then(|i| Self::ALL.get(i).copied())
    }
}

fn letter_index(letter: char) -> Option<usize> {
    let upper = letter.to_ascii_uppercase();
    upper
        .is_ascii_uppercase()
        .then(|| (upper as u8 - b'A') as usize)
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Case-insensitive match against canonical names only (no letters).
impl FromStr for Frame {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Frame::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ProtocolError::UnmappableLabel(s.to_string()))
    }
}

impl FromStr for Sentiment {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Sentiment::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ProtocolError::UnmappableLabel(s.to_string()))
    }
}

/// Which label set a raw string is harmonized against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaxonomyKind {
    Frame,
    Sentiment,
}

/// A canonical label from either taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Frame(Frame),
    Sentiment(Sentiment),
}

impl Label {
    pub fn name(self) -> &'static str {
        match self {
            Label::Frame(f) => f.name(),
            Label::Sentiment(s) => s.name(),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
