//! Deterministic seven-step Arabic headline cleaning plus the minimum-token
//! filter.
//!
//! Steps run in a fixed order (see [`Step::PIPELINE`]):
//! strip trailing source, remove diacritics, fold orthographic variants,
//! remove outlet names, delete Latin letters and digits then blank out
//! punctuation, drop stopwords and one-character tokens, collapse whitespace.

mod config;

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{HeadlineRecord, KeywordStream};

pub use config::{
    load_word_list, parse_word_list, NormalizationConfig, DEFAULT_CHAR_MAP, DEFAULT_HYPHENS,
    DEFAULT_OUTLETS, DEFAULT_STOPWORDS,
};

#[derive(Debug, thiserror::Error)]
pub enum NormalizeError {
    #[error("invalid normalization config: {0}")]
    InvalidConfig(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A headline after the full pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanHeadline {
    pub id: u64,
    pub tokens: Vec<String>,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keyword_stream: Option<KeywordStream>,
}

impl CleanHeadline {
    pub fn from_tokens(id: u64, tokens: Vec<String>, keyword_stream: Option<KeywordStream>) -> Self {
        let text = tokens.join(" ");
        Self { id, tokens, text, keyword_stream }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cleaned {
    Accepted(CleanHeadline),
    /// Fewer than `min_tokens` tokens survived.
    TooShort { id: u64, tokens: usize },
}

impl Cleaned {
    pub fn accepted(self) -> Option<CleanHeadline> {
        match self {
            Cleaned::Accepted(h) => Some(h),
            Cleaned::TooShort { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Step {
    StripSource,
    RemoveDiacritics,
    NormalizeOrthography,
    RemoveOutlets,
    RemoveLatinDigitsPunctuation,
    DropStopwordsAndShortTokens,
    CollapseWhitespace,
}

impl Step {
    pub const PIPELINE: [Step; 7] = [
        Step::StripSource,
        Step::RemoveDiacritics,
        Step::NormalizeOrthography,
        Step::RemoveOutlets,
        Step::RemoveLatinDigitsPunctuation,
        Step::DropStopwordsAndShortTokens,
        Step::CollapseWhitespace,
    ];
}

/// Tashkeel range U+064B..=U+065F plus superscript alef U+0670.
pub fn is_diacritic(c: char) -> bool {
    matches!(c as u32, 0x064B..=0x065F | 0x0670)
}

pub fn is_latin_letter(c: char) -> bool {
    c.is_alphabetic()
        && matches!(c as u32,
            0x0041..=0x005A | 0x0061..=0x007A | 0x00AA | 0x00BA | 0x00C0..=0x02AF
            | 0x1D00..=0x1DBF | 0x1E00..=0x1EFF | 0x2071 | 0x207F | 0x2090..=0x209C
            | 0x2C60..=0x2C7F | 0xA720..=0xA7FF | 0xAB30..=0xAB6F | 0xFB00..=0xFB06
            | 0xFF21..=0xFF3A | 0xFF41..=0xFF5A)
}

pub fn remove_diacritics(text: &str) -> String {
    text.chars().filter(|c| !is_diacritic(*c)).collect()
}

/// Replaces each mapped code point; everything else is preserved.
pub fn normalize_orthography(
    text: &str,
    char_map: &std::collections::BTreeMap<char, char>,
) -> String {
    text.chars().map(|c| char_map.get(&c).copied().unwrap_or(c)).collect()
}

/// Left part of `text` before the last hyphen (any of the default dash
/// characters), or `text` unchanged when there is none.
pub fn strip_source_suffix(text: &str) -> &str {
    strip_source_suffix_with(text, &DEFAULT_HYPHENS)
}

pub fn strip_source_suffix_with<'a>(text: &'a str, hyphens: &[char]) -> &'a str {
    match text.rfind(|c| hyphens.contains(&c)) {
        Some(i) => &text[..i],
        None => text,
    }
}

/// Diacritic removal plus the default orthographic map. Used to compare
/// free text against keyword and list entries.
pub fn fold_for_matching(text: &str) -> String {
    let map = DEFAULT_CHAR_MAP.into_iter().collect();
    normalize_orthography(&remove_diacritics(text), &map)
}

/// A validated [`NormalizationConfig`] with its word lists pre-normalized.
#[derive(Debug, Clone)]
pub struct Normalizer {
    config: NormalizationConfig,
    stopwords: HashSet<String>,
    outlets: Vec<String>,
}

impl Normalizer {
    pub fn new(config: NormalizationConfig) -> Result<Self, NormalizeError> {
        config.validate()?;
        let fold = |s: &str| normalize_orthography(&remove_diacritics(s.trim()), &config.char_map);
        let stopwords = config.stopwords.iter().map(|w| fold(w)).filter(|w| !w.is_empty()).collect();
        let mut outlets: Vec<String> =
            config.outlet_names.iter().map(|w| fold(w)).filter(|w| !w.is_empty()).collect();
        // longest first so a name is not pre-empted by one of its substrings
        outlets.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then(a.cmp(b)));
        outlets.dedup();
        Ok(Self { config, stopwords, outlets })
    }

    pub fn config(&self) -> &NormalizationConfig {
        &self.config
    }

    pub fn clean(&self, record: &HeadlineRecord) -> Cleaned {
        self.clean_text(record.id, &record.raw_text, record.keyword_stream)
    }

    pub fn clean_text(&self, id: u64, raw: &str, keyword: Option<KeywordStream>) -> Cleaned {
        let text = self.run_steps(raw, &Step::PIPELINE);
        let tokens: Vec<String> = text.split(' ').filter(|t| !t.is_empty()).map(String::from).collect();
        if tokens.len() < self.config.min_tokens {
            Cleaned::TooShort { id, tokens: tokens.len() }
        } else {
            Cleaned::Accepted(CleanHeadline::from_tokens(id, tokens, keyword))
        }
    }

    /// Applies `steps` in the given order. Exposed so order sensitivity can
    /// be examined; [`Normalizer::clean`] always uses [`Step::PIPELINE`].
    pub fn run_steps(&self, raw: &str, steps: &[Step]) -> String {
        steps.iter().fold(raw.to_string(), |text, step| self.apply(*step, &text))
    }

    pub fn apply(&self, step: Step, text: &str) -> String {
        match step {
            Step::StripSource => strip_source_suffix_with(text, &self.config.hyphens).to_string(),
            Step::RemoveDiacritics => remove_diacritics(text),
            Step::NormalizeOrthography => normalize_orthography(text, &self.config.char_map),
            Step::RemoveOutlets => self.remove_outlets(text),
            Step::RemoveLatinDigitsPunctuation => text
                .chars()
                .filter(|c| !is_latin_letter(*c) && !c.is_numeric())
                .map(|c| if c.is_alphanumeric() || c.is_whitespace() { c } else { ' ' })
                .collect(),
            Step::DropStopwordsAndShortTokens => text
                .split_whitespace()
                .filter(|t| t.chars().count() > 1 && !self.stopwords.contains(*t))
                .collect::<Vec<_>>()
                .join(" "),
            Step::CollapseWhitespace => text.split_whitespace().collect::<Vec<_>>().join(" "),
        }
    }

    fn remove_outlets(&self, text: &str) -> String {
        let mut current = text.to_string();
        loop {
            let next = self.outlets.iter().fold(current.clone(), |t, o| t.replace(o.as_str(), ""));
            if next == current {
                return current;
            }
            current = next;
        }
    }
}

/// One-shot convenience over [`Normalizer`].
pub fn clean_headline(
    record: &HeadlineRecord,
    config: &NormalizationConfig,
) -> Result<Cleaned, NormalizeError> {
    Ok(Normalizer::new(config.clone())?.clean(record))
}

/// Result of cleaning a whole corpus.
#[derive(Debug, Clone, Default)]
pub struct CleanedCorpus {
    pub headlines: Vec<CleanHeadline>,
    /// `(id, surviving token count)` for every filtered headline.
    pub too_short: Vec<(u64, usize)>,
}

pub fn clean_corpus(corpus: &crate::Corpus, normalizer: &Normalizer) -> CleanedCorpus {
    let mut out = CleanedCorpus::default();
    for record in &corpus.records {
        match normalizer.clean(record) {
            Cleaned::Accepted(h) => out.headlines.push(h),
            Cleaned::TooShort { id, tokens } => out.too_short.push((id, tokens)),
        }
    }
    out
}

/// JSONL of `{id, tokens, text[, keyword_stream]}`.
pub fn write_clean_jsonl(headlines: &[CleanHeadline], path: &Path) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for h in headlines {
        serde_json::to_writer(&mut w, h)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn read_clean_jsonl(path: &Path) -> std::io::Result<Vec<CleanHeadline>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| {
                std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1))
            })
        })
        .collect()
}
