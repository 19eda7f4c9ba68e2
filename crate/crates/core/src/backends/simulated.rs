use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::transport::{CompletionRequest, PromptVariant, Stage, Transport, TransportError};
use super::BackendError;
use crate::protocol::{Frame, Sentiment};

const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// Either a fixed label or a categorical distribution over the label set
/// (in the taxonomy's declaration order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LabelRule<T> {
    Fixed(T),
    Probabilities(Vec<f64>),
}

impl<T: Copy> LabelRule<T> {
    fn validate(&self, arity: usize, what: &str) -> Result<(), BackendError> {
        if let LabelRule::Probabilities(p) = self {
            let sum: f64 = p.iter().sum();
            if p.len() != arity
                || p.iter().any(|x| !x.is_finite() || *x < 0.0)
                || (sum - 1.0).abs() > PROBABILITY_TOLERANCE
            {
                return Err(BackendError::InvalidProfile(format!(
                    "{what} probabilities {p:?} must be {arity} non-negative values summing to 1"
                )));
            }
        }
        Ok(())
    }

    fn draw(&self, all: &[T], u: f64) -> T {
        match self {
            LabelRule::Fixed(label) => *label,
            LabelRule::Probabilities(p) => sample_index(p, u).map(|i| all[i]).unwrap(),
        }
    }
}

// Inverse CDF; the last positive-probability category absorbs rounding slack.
fn sample_index(p: &[f64], u: f64) -> Option<usize> {
    let mut acc = 0.0;
    for (i, w) in p.iter().enumerate() {
        acc += w;
        if u < acc && *w > 0.0 {
            return Some(i);
        }
    }
    p.iter().rposition(|w| *w > 0.0)
}

/// How per-headline uniforms are drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Independent ChaCha draws per (headline, purpose).
    #[default]
    Random,
    /// Kronecker low-discrepancy sequence over headline ids: empirical label
    /// shares over a contiguous id range track the profile within O(log n / n).
    Stratified,
}

/// Seeded synthetic model behaviour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationProfile {
    pub seed: u64,
    pub sentiment: LabelRule<Sentiment>,
    /// When present the backend runs the two-stage protocol.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<LabelRule<Frame>>,
    /// Per-frame sentiment probabilities overriding `sentiment`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub frame_sentiment: BTreeMap<Frame, Vec<f64>>,
    /// Share of primary completions replaced by unparseable text.
    #[serde(default)]
    pub malformed_rate: f64,
    /// Share of letter-fallback completions replaced by unparseable text.
    #[serde(default)]
    pub fallback_failure_rate: f64,
    #[serde(default)]
    pub sampling: Sampling,
}

impl SimulationProfile {
    pub fn fixed(label: Sentiment, seed: u64) -> Self {
        Self {
            seed,
            sentiment: LabelRule::Fixed(label),
            frames: None,
            frame_sentiment: BTreeMap::new(),
            malformed_rate: 0.0,
            fallback_failure_rate: 0.0,
            sampling: Sampling::Random,
        }
    }

    pub fn probabilities(p: [f64; 3], seed: u64) -> Self {
        Self { sentiment: LabelRule::Probabilities(p.to_vec()), ..Self::fixed(Sentiment::Neutral, seed) }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        self.sentiment.validate(3, "sentiment")?;
        if let Some(frames) = &self.frames {
            frames.validate(5, "frame")?;
        }
        for (frame, p) in &self.frame_sentiment {
            LabelRule::<Sentiment>::Probabilities(p.clone()).validate(3, frame.name())?;
        }
        for (rate, what) in [(self.malformed_rate, "malformed_rate"), (self.fallback_failure_rate, "fallback_failure_rate")] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(BackendError::InvalidProfile(format!("{what} {rate} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn has_frames(&self) -> bool {
        self.frames.is_some()
    }

    pub fn frame_for(&self, headline_id: u64) -> Option<Frame> {
        let rule = self.frames.as_ref()?;
        Some(rule.draw(&Frame::ALL, self.uniform(headline_id, 1)))
    }

    pub fn sentiment_for(&self, headline_id: u64, frame: Option<Frame>) -> Sentiment {
        let u = self.uniform(headline_id, 2);
        match frame.and_then(|f| self.frame_sentiment.get(&f)) {
            Some(p) => Sentiment::ALL[sample_index(p, u).unwrap()],
            None => self.sentiment.draw(&Sentiment::ALL, u),
        }
    }

    fn corrupts(&self, headline_id: u64, stage: Stage, variant: PromptVariant) -> bool {
        let rate = match variant {
            PromptVariant::Primary => self.malformed_rate,
            PromptVariant::LetterFallback => self.fallback_failure_rate,
        };
        let tag = 10 + stage as u64 * 2 + variant as u64;
        rate > 0.0 && self.uniform(headline_id, tag) < rate
    }

    // Each (headline, purpose) pair gets its own stream, so labels never
    // depend on how many requests came before.
    fn uniform(&self, headline_id: u64, tag: u64) -> f64 {
        match self.sampling {
            Sampling::Random => {
                let seed = splitmix64(self.seed ^ splitmix64(headline_id ^ splitmix64(tag)));
                ChaCha8Rng::seed_from_u64(seed).gen::<f64>()
            }
            Sampling::Stratified => {
                let alpha = (KRONECKER_PRIMES[tag as usize % KRONECKER_PRIMES.len()] as f64).sqrt().fract();
                let offset = (splitmix64(self.seed ^ splitmix64(tag)) >> 11) as f64 / (1u64 << 53) as f64;
                (offset + (headline_id % (1 << 40)) as f64 * alpha).fract()
            }
        }
    }
}

// Square roots of distinct primes are rationally independent, so the
// per-purpose sequences are jointly equidistributed.
const KRONECKER_PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Emits well-formed (or deliberately broken) completions drawn from a profile.
#[derive(Debug, Clone)]
pub struct SimulatedTransport {
    profile: SimulationProfile,
}

impl SimulatedTransport {
    pub fn new(profile: SimulationProfile) -> Result<Self, BackendError> {
        profile.validate()?;
        Ok(Self { profile })
    }
}

impl Transport for SimulatedTransport {
    fn complete(&mut self, req: &CompletionRequest) -> Result<String, TransportError> {
        let p = &self.profile;
        let id = req.headline_id;
        if p.corrupts(id, req.stage, req.variant) {
            return Ok("I cannot answer that in JSON.".into());
        }
        let reply = match (req.stage, req.variant) {
            (Stage::Frame, PromptVariant::Primary) => {
                let frame = p.frame_for(id).unwrap_or(Frame::HistoricalInformational);
                serde_json::json!({ "frame": frame.name(), "explanation": "simulated" }).to_string()
            }
            (Stage::Frame, PromptVariant::LetterFallback) => {
                p.frame_for(id).unwrap_or(Frame::HistoricalInformational).letter().to_string()
            }
            (Stage::Sentiment, PromptVariant::Primary) => {
                let label = p.sentiment_for(id, req.frame);
                serde_json::json!({ "label": label.name(), "rationale": "simulated" }).to_string()
            }
            (Stage::Sentiment, PromptVariant::LetterFallback) => {
                p.sentiment_for(id, req.frame).letter().to_string()
            }
            (Stage::SentimentOnly, _) => p.sentiment_for(id, None).name().to_string(),
        };
        Ok(reply)
    }
}
