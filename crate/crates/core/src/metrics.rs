//! Information-theoretic comparison of sentiment distributions.
//!
//! Bases are fixed per metric: entropy in bits (log2), KL and Jensen–Shannon
//! in nats (natural log). Components are ordered Negative, Neutral, Positive.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::backends::ClassificationOutcome;
use crate::protocol::{Frame, Sentiment};

const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("label counts total zero")]
    ZeroTotal,
    #[error("invalid distribution {0:?}: components must be non-negative and sum to 1")]
    InvalidDistribution([f64; 3]),
    #[error("percentages {0:?} do not sum to 100")]
    InvalidPercentages([f64; 3]),
    #[error("KL undefined: Q is zero where P is positive (component {0})")]
    NotAbsolutelyContinuous(usize),
    #[error("need at least two distributions, got {0}")]
    TooFewMembers(usize),
    #[error("target index {index} out of range for {len} members")]
    InvalidIndex { index: usize, len: usize },
}

/// Proportions over (Negative, Neutral, Positive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct SentimentDistribution([f64; 3]);

impl SentimentDistribution {
    pub fn new(p: [f64; 3]) -> Result<Self, MetricsError> {
        let sum: f64 = p.iter().sum();
        if p.iter().any(|x| !x.is_finite() || *x < 0.0) || (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(MetricsError::InvalidDistribution(p));
        }
        Ok(Self(p))
    }

    /// From published percentages; rescaled by their sum, which may differ
    /// from 100 by rounding (up to 0.05 points is accepted).
    pub fn from_percentages(pct: [f64; 3]) -> Result<Self, MetricsError> {
        let sum: f64 = pct.iter().sum();
        if pct.iter().any(|x| !x.is_finite() || *x < 0.0) || (sum - 100.0).abs() > 0.05 {
            return Err(MetricsError::InvalidPercentages(pct));
        }
        Ok(Self(pct.map(|x| x / sum)))
    }

    pub fn uniform() -> Self {
        Self([1.0 / 3.0; 3])
    }

    pub fn point(label: Sentiment) -> Self {
        let mut p = [0.0; 3];
        p[label.index()] = 1.0;
        Self(p)
    }

    pub fn probabilities(&self) -> [f64; 3] {
        self.0
    }

    pub fn get(&self, label: Sentiment) -> f64 {
        self.0[label.index()]
    }

    pub fn percentages(&self) -> [f64; 3] {
        self.0.map(|x| x * 100.0)
    }
}

impl TryFrom<[f64; 3]> for SentimentDistribution {
    type Error = MetricsError;

    fn try_from(p: [f64; 3]) -> Result<Self, Self::Error> {
        Self::new(p)
    }
}

impl From<SentimentDistribution> for [f64; 3] {
    fn from(d: SentimentDistribution) -> Self {
        d.0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts(pub [u64; 3]);

impl LabelCounts {
    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn add(&mut self, label: Sentiment) {
        self.0[label.index()] += 1;
    }

    pub fn get(&self, label: Sentiment) -> u64 {
        self.0[label.index()]
    }
}

impl FromIterator<Sentiment> for LabelCounts {
    fn from_iter<I: IntoIterator<Item = Sentiment>>(iter: I) -> Self {
        let mut c = LabelCounts::default();
        iter.into_iter().for_each(|l| c.add(l));
        c
    }
}

/// `p_i = n_i / N`.
pub fn distribution_from_counts(counts: &LabelCounts) -> Result<SentimentDistribution, MetricsError> {
    let total = counts.total();
    if total == 0 {
        return Err(MetricsError::ZeroTotal);
    }
    Ok(SentimentDistribution(counts.0.map(|n| n as f64 / total as f64)))
}

/// Shannon entropy in bits; zero-probability terms are skipped.
pub fn shannon_entropy(dist: &SentimentDistribution) -> f64 {
    let h: f64 = dist.0.iter().filter(|p| **p > 0.0).map(|p| -p * p.log2()).sum();
    // -0.0 for degenerate distributions
    h.max(0.0)
}

/// `Σ P_i ln(P_i / Q_i)` over components with `P_i > 0`.
pub fn kl_divergence(p: &SentimentDistribution, q: &SentimentDistribution) -> Result<f64, MetricsError> {
    kl_terms(&p.0, &q.0)
}

fn kl_terms(p: &[f64; 3], q: &[f64; 3]) -> Result<f64, MetricsError> {
    let mut sum = 0.0;
    for i in 0..3 {
        if p[i] > 0.0 {
            if q[i] <= 0.0 {
                return Err(MetricsError::NotAbsolutelyContinuous(i));
            }
            sum += p[i] * (p[i] / q[i]).ln();
        }
    }
    Ok(sum)
}

/// Square root of the Jensen–Shannon divergence (natural log), in `[0, √ln 2]`.
pub fn js_distance(p: &SentimentDistribution, q: &SentimentDistribution) -> f64 {
    let m = [0, 1, 2].map(|i| 0.5 * (p.0[i] + q.0[i]));
    // M covers both supports, so neither KL term can fail
    let jsd = 0.5 * kl_terms(&p.0, &m).unwrap() + 0.5 * kl_terms(&q.0, &m).unwrap();
    jsd.max(0.0).sqrt()
}

/// Space the Variance Score is computed in.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VsScale {
    /// Proportions in [0, 1]. Reproduces the published scores.
    #[default]
    Proportions,
    /// Percentages summing to 100 (scores are 10^4 times larger).
    Percentages,
}

/// Squared deviation of one member's distribution from the componentwise
/// mean over all members.
pub fn variance_score(
    members: &[SentimentDistribution],
    target: usize,
    scale: VsScale,
) -> Result<f64, MetricsError> {
    if members.len() < 2 {
        return Err(MetricsError::TooFewMembers(members.len()));
    }
    let Some(t) = members.get(target) else {
        return Err(MetricsError::InvalidIndex { index: target, len: members.len() });
    };
    let factor = match scale {
        VsScale::Proportions => 1.0,
        VsScale::Percentages => 100.0,
    };
    let k = members.len() as f64;
    Ok((0..3)
        .map(|c| {
            let mean = members.iter().map(|m| m.0[c] * factor).sum::<f64>() / k;
            (t.0[c] * factor - mean).powi(2)
        })
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDistribution {
    pub frame: Frame,
    pub distribution: SentimentDistribution,
    pub entropy: f64,
    pub n: u64,
}

/// Sentiment distribution within each predicted frame, ordered by frame
/// name. Frames never predicted are absent; outcomes without both a frame
/// and a sentiment are skipped.
pub fn frame_conditioned_distributions(outcomes: &[ClassificationOutcome]) -> Vec<FrameDistribution> {
    let mut by_frame: BTreeMap<&'static str, (Frame, LabelCounts)> = BTreeMap::new();
    for o in outcomes {
        if let (Some(frame), Some(label)) = (o.frame, o.sentiment) {
            by_frame.entry(frame.name()).or_insert((frame, LabelCounts::default())).1.add(label);
        }
    }
    by_frame
        .into_values()
        .map(|(frame, counts)| {
            let distribution = distribution_from_counts(&counts).expect("non-empty frame bucket");
            FrameDistribution { frame, entropy: shannon_entropy(&distribution), distribution, n: counts.total() }
        })
        .collect()
}
