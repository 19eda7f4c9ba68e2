use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{is_diacritic, NormalizeError};

pub const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords_ar.txt");
pub const DEFAULT_OUTLETS: &str = include_str!("../../data/outlets_ar.txt");

/// Orthographic variants folded onto one spelling.
pub const DEFAULT_CHAR_MAP: [(char, char); 7] = [
    ('أ', 'ا'),
    ('إ', 'ا'),
    ('آ', 'ا'),
    ('ى', 'ي'),
    ('ئ', 'ي'),
    ('ؤ', 'و'),
    ('ة', 'ه'),
];

/// Characters treated as the hyphen that separates a trailing source.
pub const DEFAULT_HYPHENS: [char; 3] = ['-', '\u{2013}', '\u{2014}'];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalizationConfig {
    pub outlet_names: Vec<String>,
    pub stopwords: Vec<String>,
    pub char_map: BTreeMap<char, char>,
    pub min_tokens: usize,
    pub hyphens: Vec<char>,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        Self {
            outlet_names: parse_word_list(DEFAULT_OUTLETS),
            stopwords: parse_word_list(DEFAULT_STOPWORDS),
            char_map: DEFAULT_CHAR_MAP.into_iter().collect(),
            min_tokens: 3,
            hyphens: DEFAULT_HYPHENS.to_vec(),
        }
    }
}

impl NormalizationConfig {
    /// Default config with the word lists replaced by the given files, when present.
    pub fn from_files(
        stopwords: Option<&Path>,
        outlets: Option<&Path>,
    ) -> Result<Self, NormalizeError> {
        let mut config = Self::default();
        if let Some(path) = stopwords {
            config.stopwords = load_word_list(path)?;
        }
        if let Some(path) = outlets {
            config.outlet_names = load_word_list(path)?;
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), NormalizeError> {
        if self.min_tokens < 1 {
            return Err(NormalizeError::InvalidConfig("min_tokens must be at least 1".into()));
        }
        for (&from, &to) in &self.char_map {
            if !is_arabic(from) || !is_arabic(to) {
                return Err(NormalizeError::InvalidConfig(format!(
                    "char_map entry {from:?} -> {to:?} is not Arabic"
                )));
            }
            if is_diacritic(to) {
                return Err(NormalizeError::InvalidConfig(format!(
                    "char_map maps {from:?} to a diacritic"
                )));
            }
            if from != to && self.char_map.contains_key(&to) {
                return Err(NormalizeError::InvalidConfig(format!(
                    "char_map chains {from:?} -> {to:?} -> {:?}",
                    self.char_map[&to]
                )));
            }
        }
        Ok(())
    }
}

fn is_arabic(c: char) -> bool {
    matches!(c as u32,
        0x0600..=0x06FF | 0x0750..=0x077F | 0x08A0..=0x08FF | 0xFB50..=0xFDFF | 0xFE70..=0xFEFF)
}

/// One entry per line; blank lines and `#` comments are skipped.
pub fn parse_word_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

pub fn load_word_list(path: &Path) -> Result<Vec<String>, NormalizeError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| NormalizeError::Io { path: path.display().to_string(), source })?;
    Ok(parse_word_list(&text))
}
