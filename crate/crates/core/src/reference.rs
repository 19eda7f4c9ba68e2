//! Published reference distributions and the checks that recompute their
//! derived columns (entropy, JS distance to the ensemble, Variance Score,
//! per-frame entropy) with this crate's metrics.

use serde::Serialize;

use crate::corpus::KeywordStream;
use crate::metrics::{js_distance, shannon_entropy, variance_score, SentimentDistribution, VsScale};
use crate::protocol::Frame;

/// Tolerance for recomputed columns.
pub const TOLERANCE: f64 = 0.002;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedRow {
    pub model: &'static str,
    /// Negative, Neutral, Positive (%).
    pub pct: [f64; 3],
    pub entropy: f64,
}

impl PublishedRow {
    pub fn distribution(&self) -> SentimentDistribution {
        SentimentDistribution::from_percentages(self.pct).expect("published rows sum to 100")
    }
}

const fn row(model: &'static str, pct: [f64; 3], entropy: f64) -> PublishedRow {
    PublishedRow { model, pct, entropy }
}

pub const ENSEMBLE: &str = "BERT-Ensemble";

/// Aggregate distributions, encoder models first, then the ensemble, then LLMs.
pub const AGGREGATE: [PublishedRow; 9] = [
    row("CAMeLBERT-MSA", [47.29, 50.25, 2.46], 1.1415),
    row("CAMeLBERT-DA", [55.41, 41.90, 2.69], 1.1382),
    row("MARBERT", [4.05, 95.80, 0.15], 0.2605),
    row("DarijaBERT", [36.30, 55.17, 8.53], 1.3069),
    row("mBERT", [27.97, 54.54, 17.49], 1.4311),
    row(ENSEMBLE, [32.57, 66.35, 1.08], 0.9905),
    row("GPT-4.1", [65.52, 22.58, 11.90], 1.2499),
    row("Qwen2.5-7B", [69.52, 29.11, 1.37], 0.9679),
    row("LLaMA-3.1-8B", [98.94, 1.04, 0.02], 0.0859),
];

pub const JS_VS_ENSEMBLE: [(&str, f64); 8] = [
    ("CAMeLBERT-MSA", 0.1174),
    ("CAMeLBERT-DA", 0.1752),
    ("MARBERT", 0.2805),
    ("DarijaBERT", 0.1395),
    ("mBERT", 0.2180),
    ("GPT-4.1", 0.3329),
    ("Qwen2.5-7B", 0.2675),
    ("LLaMA-3.1-8B", 0.5457),
];

pub const VARIANCE_SCORE: [(&str, f64); 8] = [
    ("CAMeLBERT-MSA", 0.002414),
    ("CAMeLBERT-DA", 0.007117),
    ("MARBERT", 0.446034),
    ("DarijaBERT", 0.024236),
    ("mBERT", 0.064820),
    ("GPT-4.1", 0.089481),
    ("Qwen2.5-7B", 0.074609),
    ("LLaMA-3.1-8B", 0.460702),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedFrameRow {
    pub model: &'static str,
    pub frame: Frame,
    pub pct: [f64; 3],
    pub entropy: f64,
    pub n: u64,
}

impl PublishedFrameRow {
    pub fn distribution(&self) -> SentimentDistribution {
        SentimentDistribution::from_percentages(self.pct).expect("published rows sum to 100")
    }
}

const fn frow(model: &'static str, frame: Frame, pct: [f64; 3], entropy: f64, n: u64) -> PublishedFrameRow {
    PublishedFrameRow { model, frame, pct, entropy, n }
}

use Frame::*;

pub const FRAME_CONDITIONED: [PublishedFrameRow; 14] = [
    frow("GPT-4.1", HistoricalInformational, [6.42, 91.97, 1.61], 0.4612, 685),
    frow("GPT-4.1", Humanitarian, [80.80, 1.35, 17.85], 0.7764, 1255),
    frow("GPT-4.1", LegalAccountability, [84.64, 8.21, 7.15], 0.7720, 755),
    frow("GPT-4.1", PoliticalStrategic, [54.08, 37.24, 8.68], 1.3163, 4321),
    frow("GPT-4.1", Security, [79.64, 4.17, 16.19], 0.8778, 3984),
    frow("Qwen2.5-7B", HistoricalInformational, [9.23, 90.38, 0.38], 0.4800, 260),
    frow("Qwen2.5-7B", Humanitarian, [76.17, 18.46, 5.38], 0.9758, 1544),
    frow("Qwen2.5-7B", LegalAccountability, [72.67, 26.45, 0.87], 0.9018, 344),
    frow("Qwen2.5-7B", PoliticalStrategic, [37.84, 60.50, 1.65], 1.0670, 1995),
    frow("Qwen2.5-7B", Security, [79.36, 20.18, 0.45], 0.7658, 6857),
    frow("LLaMA-3.1-8B", HistoricalInformational, [97.77, 2.20, 0.03], 0.1562, 3813),
    frow("LLaMA-3.1-8B", Humanitarian, [99.87, 0.13, 0.00], 0.0146, 1503),
    frow("LLaMA-3.1-8B", PoliticalStrategic, [62.50, 37.50, 0.00], 0.9544, 8),
    frow("LLaMA-3.1-8B", Security, [100.00, 0.00, 0.00], 0.0000, 7),
];

/// Headlines per keyword stream in the published corpus.
pub const KEYWORD_COUNTS: [(KeywordStream, usize); 5] = [
    (KeywordStream::Gaza, 2550),
    (KeywordStream::Captives, 2335),
    (KeywordStream::Hamas, 2231),
    (KeywordStream::IsraeliArmy, 2029),
    (KeywordStream::AlQassam, 1845),
];

pub const CORPUS_SIZE: usize = 10_990;

pub fn aggregate_row(model: &str) -> Option<&'static PublishedRow> {
    AGGREGATE.iter().find(|r| r.model == model)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Entropy,
    JsDistance,
    VarianceScore,
    FrameEntropy,
}

impl CheckKind {
    pub fn label(self) -> &'static str {
        match self {
            CheckKind::Entropy => "entropy",
            CheckKind::JsDistance => "js_vs_ensemble",
            CheckKind::VarianceScore => "variance_score",
            CheckKind::FrameEntropy => "frame_entropy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub kind: CheckKind,
    pub model: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame: Option<Frame>,
    pub expected: f64,
    pub computed: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        (self.computed - self.expected).abs() <= self.tolerance
    }

    pub fn line(&self) -> String {
        let subject = match self.frame {
            Some(f) => format!("{}/{}", self.model, f.name()),
            None => self.model.to_string(),
        };
        format!(
            "{} {:<15} {:<38} expected {:.6} computed {:.6}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.kind.label(),
            subject,
            self.expected,
            self.computed
        )
    }
}

/// Recomputes every derived published column: 9 entropies, 8 JS distances,
/// 8 Variance Scores and 14 frame entropies.
pub fn verify_published_tables() -> Vec<Check> {
    let dists: Vec<SentimentDistribution> = AGGREGATE.iter().map(PublishedRow::distribution).collect();
    let ensemble = dists[AGGREGATE.iter().position(|r| r.model == ENSEMBLE).unwrap()];
    let index = |model: &str| AGGREGATE.iter().position(|r| r.model == model).unwrap();
    let check = |kind, model, frame, expected, computed| Check { kind, model, frame, expected, computed, tolerance: TOLERANCE };

    let mut out = Vec::with_capacity(39);
    for (r, d) in AGGREGATE.iter().zip(&dists) {
        out.push(check(CheckKind::Entropy, r.model, None, r.entropy, shannon_entropy(d)));
    }
    for (model, expected) in JS_VS_ENSEMBLE {
        out.push(check(CheckKind::JsDistance, model, None, expected, js_distance(&dists[index(model)], &ensemble)));
    }
    for (model, expected) in VARIANCE_SCORE {
        let vs = variance_score(&dists, index(model), VsScale::Proportions).expect("nine members");
        out.push(check(CheckKind::VarianceScore, model, None, expected, vs));
    }
    for r in &FRAME_CONDITIONED {
        out.push(check(CheckKind::FrameEntropy, r.model, Some(r.frame), r.entropy, shannon_entropy(&r.distribution())));
    }
    out
}
