//! Synthetic corpora and simulated backends calibrated to the reference
//! distributions, for end-to-end runs without any model host.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::backends::{BackendConfig, LabelRule, Sampling, SimulationProfile};
use crate::corpus::KeywordStream;
use crate::normalize::CleanHeadline;
use crate::protocol::Frame;
use crate::reference::{AGGREGATE, CORPUS_SIZE, ENSEMBLE, FRAME_CONDITIONED, KEYWORD_COUNTS};

const VOCAB: [&str; 24] = [
    "غزه", "قصف", "مستشفي", "الاحتلال", "الاسري", "حماس", "القسام", "جيش", "شمال", "جنوب", "القطاع", "مفاوضات",
    "هدنه", "اطلاق", "سراح", "مساعدات", "انسانيه", "محكمه", "دوليه", "مجلس", "الامن", "اجتياح", "رفح", "خان",
];

/// `n` cleaned headlines with ids `1..=n`. Keyword streams follow the
/// published stream sizes (exactly, when `n` equals the corpus size), in
/// shuffled order; lengths are uniform in 3..=20 tokens.
pub fn synthetic_headlines(n: usize, seed: u64) -> Vec<CleanHeadline> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut streams: Vec<KeywordStream> = Vec::with_capacity(n);
    let mut assigned = 0;
    for (i, (stream, count)) in KEYWORD_COUNTS.iter().enumerate() {
        let take = if i + 1 == KEYWORD_COUNTS.len() { n - assigned } else { count * n / CORPUS_SIZE };
        streams.extend(std::iter::repeat_n(*stream, take));
        assigned += take;
    }
    streams.shuffle(&mut rng);
    streams
        .into_iter()
        .enumerate()
        .map(|(i, stream)| {
            let len = rng.gen_range(3..=20);
            let tokens: Vec<String> = (0..len).map(|_| VOCAB[rng.gen_range(0..VOCAB.len())].to_string()).collect();
            CleanHeadline { id: i as u64 + 1, text: tokens.join(" "), tokens, keyword_stream: Some(stream) }
        })
        .collect()
}

fn normalized(pct: [f64; 3]) -> Vec<f64> {
    let sum: f64 = pct.iter().sum();
    pct.iter().map(|x| x / sum).collect()
}

type FrameProfile = (Vec<f64>, Vec<(Frame, Vec<f64>)>);

/// Frame mix and per-frame sentiment for the two-stage models whose
/// frame-conditioned rows are consistent with their aggregate row.
fn frame_profile(model: &str) -> Option<FrameProfile> {
    let rows: Vec<_> = FRAME_CONDITIONED.iter().filter(|r| r.model == model).collect();
    if rows.is_empty() {
        return None;
    }
    let total: u64 = rows.iter().map(|r| r.n).sum();
    let shares = Frame::ALL
        .iter()
        .map(|f| rows.iter().find(|r| r.frame == *f).map_or(0.0, |r| r.n as f64 / total as f64))
        .collect();
    let per_frame = rows.iter().map(|r| (r.frame, normalized(r.pct))).collect();
    Some((shares, per_frame))
}

/// Nine simulated backends, one per reference row, named after the rows,
/// with stratified sampling so label shares track the rows closely.
/// Two-stage models draw frames from their published frame mix; per-frame
/// sentiment is used only when the frame rows reproduce the aggregate row
/// (within half a point), otherwise sentiment comes from the aggregate row.
pub fn reference_backends(seed: u64) -> Vec<BackendConfig> {
    AGGREGATE
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let marginal = normalized(row.pct);
            let mut profile = SimulationProfile::probabilities(
                [marginal[0], marginal[1], 1.0 - marginal[0] - marginal[1]],
                seed.wrapping_add(i as u64 * 7919),
            );
            profile.sampling = Sampling::Stratified;
            if let Some((shares, per_frame)) = frame_profile(row.model) {
                let implied_negative: f64 =
                    per_frame.iter().map(|(f, p)| shares[f.index()] * p[0]).sum::<f64>() * 100.0;
                profile.frames = Some(LabelRule::Probabilities(shares));
                if (implied_negative - row.pct[0]).abs() < 0.5 {
                    profile.frame_sentiment = per_frame.into_iter().collect();
                }
            }
            let mut config = BackendConfig::simulated(row.model, profile);
            config.request_delay = 0.0;
            config
        })
        .collect()
}

/// Name of the simulated row used as the benchmark.
pub const BENCHMARK: &str = ENSEMBLE;
