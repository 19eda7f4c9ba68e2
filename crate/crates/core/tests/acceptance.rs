//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use headline_audit::backends::{
    outcomes_path, checkpoint_path, read_outcomes_jsonl, resume_from_checkpoint, run_batch, Backend, BackendConfig,
    BackendRegistry, CheckpointConfig, LabelRule, RecordingPacer, RunControl, ScriptedTransport, SimulationProfile,
    TwoStageProtocol, KIND_TWO_STAGE, DOUBLE_FALLBACK_FAILURE,
};
use headline_audit::corpus::{keyword_distribution, Corpus, HeadlineRecord};
use headline_audit::ensemble::{majority_vote, MemberOutcomes, TiePolicy};
use headline_audit::metrics::{js_distance, kl_divergence, shannon_entropy, variance_score, SentimentDistribution, VsScale};
use headline_audit::normalize::{CleanHeadline, NormalizationConfig, Normalizer};
use headline_audit::protocol::{fallback_frame, fallback_sentiment, Frame, Sentiment};
use headline_audit::reference::{AGGREGATE, CORPUS_SIZE, ENSEMBLE, FRAME_CONDITIONED, JS_VS_ENSEMBLE, KEYWORD_COUNTS, VARIANCE_SCORE};
use headline_audit::report::{build_audit_report, Benchmark, ReportOptions};
use headline_audit::simulation::{reference_backends, synthetic_headlines, BENCHMARK};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// Oracles below are written out independently of the library.
fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter().filter(|x| **x > 0.0).map(|x| x * x.log2()).sum::<f64>()
}

fn entropy_nats(p: &[f64]) -> f64 {
    -p.iter().filter(|x| **x > 0.0).map(|x| x * x.ln()).sum::<f64>()
}

fn normalized(pct: [f64; 3]) -> [f64; 3] {
    let s: f64 = pct.iter().sum();
    pct.map(|x| x / s)
}

fn dist(pct: [f64; 3]) -> SentimentDistribution {
    SentimentDistribution::from_percentages(pct).unwrap()
}

fn row(model: &str) -> [f64; 3] {
    AGGREGATE.iter().find(|r| r.model == model).unwrap().pct
}

fn c1_entropy() -> Outcome {
    let mut worst: f64 = 0.0;
    for r in &AGGREGATE {
        let h = shannon_entropy(&dist(r.pct));
        ensure((h - entropy_bits(&normalized(r.pct))).abs() < 1e-12, || format!("{} disagrees with oracle", r.model))?;
        ensure((h - r.entropy).abs() <= 0.002, || format!("{}: {h:.4} vs {}", r.model, r.entropy))?;
        worst = worst.max((h - r.entropy).abs());
    }
    Ok(format!("9/9 rows, max |diff| {worst:.5}"))
}

fn c2_js() -> Outcome {
    let q = normalized(row(ENSEMBLE));
    let mut worst: f64 = 0.0;
    for (model, expected) in JS_VS_ENSEMBLE {
        let p = normalized(row(model));
        let m: Vec<f64> = (0..3).map(|i| (p[i] + q[i]) / 2.0).collect();
        let oracle = (entropy_nats(&m) - (entropy_nats(&p) + entropy_nats(&q)) / 2.0).max(0.0).sqrt();
        let js = js_distance(&dist(row(model)), &dist(row(ENSEMBLE)));
        ensure((js - oracle).abs() < 1e-9, || format!("{model}: library {js} vs oracle {oracle}"))?;
        ensure((js - expected).abs() <= 0.002, || format!("{model}: {js:.4} vs {expected}"))?;
        worst = worst.max((js - expected).abs());
    }
    Ok(format!("8/8 rows, max |diff| {worst:.5}"))
}

fn c3_variance() -> Outcome {
    let all: Vec<[f64; 3]> = AGGREGATE.iter().map(|r| normalized(r.pct)).collect();
    let mean: Vec<f64> = (0..3).map(|c| all.iter().map(|d| d[c]).sum::<f64>() / all.len() as f64).collect();
    let dists: Vec<SentimentDistribution> = AGGREGATE.iter().map(|r| dist(r.pct)).collect();
    let mut worst: f64 = 0.0;
    for (model, expected) in VARIANCE_SCORE {
        let i = AGGREGATE.iter().position(|r| r.model == model).unwrap();
        let oracle: f64 = (0..3).map(|c| (all[i][c] - mean[c]).powi(2)).sum();
        let vs = variance_score(&dists, i, VsScale::Proportions).map_err(|e| e.to_string())?;
        ensure((vs - oracle).abs() < 1e-12, || format!("{model}: library {vs} vs oracle {oracle}"))?;
        ensure((vs - expected).abs() <= 0.002, || format!("{model}: {vs:.6} vs {expected}"))?;
        worst = worst.max((vs - expected).abs());
    }
    Ok(format!("8/8 rows, max |diff| {worst:.6}"))
}

fn c4_frames() -> Outcome {
    let mut worst: f64 = 0.0;
    for r in &FRAME_CONDITIONED {
        let h = shannon_entropy(&dist(r.pct));
        ensure((h - r.entropy).abs() <= 0.002, || format!("{}/{}: {h:.4} vs {}", r.model, r.frame.name(), r.entropy))?;
        worst = worst.max((h - r.entropy).abs());
    }
    let zero = FRAME_CONDITIONED.iter().find(|r| r.model == "LLaMA-3.1-8B" && r.frame == Frame::Security).unwrap();
    let h0 = shannon_entropy(&dist(zero.pct));
    ensure(h0 == 0.0, || format!("LLaMA/Security entropy {h0} is not exactly zero"))?;
    Ok(format!("14/14 rows, max |diff| {worst:.5}, LLaMA/Security exactly 0"))
}

const BEFORE: &str = "غزة: أثر مدمر للهجمات والحصار من جانب إسرائيل على الأشخاص ذوي الإعاقة Human Rights - Watch";
const AFTER: &str = "غزه مدمر للهجمات والحصار جانب اسراييل علي الاشخاص ذوي الاعاقه";

fn fuzz_headline(rng: &mut ChaCha8Rng) -> String {
    const PIECES: &[&str] = &[
        "غزة", "أثر", "إسرائيل", "الأسرى", "على", "في", "من", "مستشفى", "القسام", "حماس", "جيش", "الاحتلال", "ذوي",
        "مؤتمر", "رئيس", "قصف", "الجزيرة نت", "سكاي نيوز عربية", "Reuters", "AFP", "2023", "١٤", "-", "–", "—",
        ":", "،", "؟", "!", "\"", "(", ")", "_", ".", "\u{064B}", "\u{064E}", "\u{0651}", "\u{0670}", "ـ", "ى", "ة",
        "ئ", "ؤ", "آ", "x", "Watch", " ", "  ", "\t",
    ];
    let n = rng.gen_range(0..25);
    let mut s = String::new();
    for _ in 0..n {
        s.push_str(PIECES[rng.gen_range(0..PIECES.len())]);
        if rng.gen_bool(0.6) {
            s.push(' ');
        }
    }
    s
}

fn c5_preprocessing() -> Outcome {
    let normalizer = Normalizer::new(NormalizationConfig::default()).map_err(|e| e.to_string())?;
    let golden = normalizer.clean(&HeadlineRecord::new(3615, BEFORE));
    let h = golden.accepted().ok_or("reference headline was filtered")?;
    ensure(h.text == AFTER, || format!("got {:?}", h.text))?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut accepted = 0;
    for i in 0..10_000u64 {
        let raw = fuzz_headline(&mut rng);
        if raw.trim().is_empty() {
            continue;
        }
        let Some(first) = normalizer.clean(&HeadlineRecord::new(i, raw.clone())).accepted() else {
            continue;
        };
        accepted += 1;
        ensure(first.tokens.len() >= 3, || format!("{raw:?}: too few tokens survived"))?;
        ensure(first.text == first.tokens.join(" "), || format!("{raw:?}: text/tokens mismatch"))?;
        ensure(
            !first.text.chars().any(|c| c.is_ascii_alphanumeric() || ('\u{064B}'..='\u{065F}').contains(&c) || c == '\u{0670}'),
            || format!("{raw:?}: residue in {:?}", first.text),
        )?;
        let again = normalizer.clean(&HeadlineRecord::new(i, first.text.clone()));
        let second = again.accepted().ok_or_else(|| format!("{raw:?}: clean output rejected on re-clean"))?;
        ensure(second.text == first.text, || format!("{raw:?}: {:?} -> {:?}", first.text, second.text))?;
    }
    ensure(accepted > 1_000, || format!("fuzz corpus too degenerate ({accepted} accepted)"))?;
    Ok(format!("golden matches; idempotent on 10000 fuzz cases ({accepted} accepted)"))
}

fn c6_corpus() -> Outcome {
    let total: usize = KEYWORD_COUNTS.iter().map(|(_, n)| n).sum();
    ensure(total == 10_990, || format!("keyword counts sum to {total}"))?;
    let mut records = Vec::new();
    for (stream, count) in KEYWORD_COUNTS {
        for _ in 0..count {
            let id = records.len() as u64 + 1;
            records.push(HeadlineRecord::new(id, format!("عنوان رقم {id}")).with_keyword(stream));
        }
    }
    let corpus = Corpus::new(records, "fixture").map_err(|e| e.to_string())?;
    let dist = keyword_distribution(&corpus).map_err(|e| e.to_string())?;
    for (stream, count) in KEYWORD_COUNTS {
        ensure(dist[&stream] == count, || format!("{stream}: {} vs {count}", dist[&stream]))?;
    }
    ensure(dist.values().sum::<usize>() == CORPUS_SIZE, || "partition does not cover the corpus".into())?;
    Ok("5 streams sum to 10990; partition reproduced".into())
}

fn random_dist(rng: &mut ChaCha8Rng) -> SentimentDistribution {
    let mut w = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
    // a share of samples on the simplex boundary
    if rng.gen_bool(0.2) {
        w[rng.gen_range(0..3)] = 0.0;
    }
    if w.iter().sum::<f64>() == 0.0 {
        w[0] = 1.0;
    }
    let s: f64 = w.iter().sum();
    let mut p = w.map(|x| x / s);
    p[2] = (1.0 - p[0] - p[1]).max(0.0);
    SentimentDistribution::new(p).unwrap()
}

fn c7_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let bound = std::f64::consts::LN_2.sqrt();
    let log3 = 3f64.log2();
    for i in 0..1_000 {
        let (p, q, r) = (random_dist(&mut rng), random_dist(&mut rng), random_dist(&mut rng));
        let (pq, qp) = (js_distance(&p, &q), js_distance(&q, &p));
        ensure((pq - qp).abs() < 1e-12, || format!("case {i}: asymmetric JS"))?;
        ensure(js_distance(&p, &p) == 0.0, || format!("case {i}: JS(p,p) != 0"))?;
        ensure(p == q || pq > 0.0, || format!("case {i}: JS zero for distinct inputs"))?;
        ensure(pq <= bound + 1e-12, || format!("case {i}: JS {pq} above sqrt(ln 2)"))?;
        ensure(pq <= js_distance(&p, &r) + js_distance(&r, &q) + 1e-12, || format!("case {i}: triangle inequality"))?;
        if let Ok(kl) = kl_divergence(&p, &q) {
            ensure(kl >= -1e-12, || format!("case {i}: KL {kl} < 0"))?;
        }
        ensure(kl_divergence(&p, &p).map_err(|e| e.to_string())?.abs() < 1e-12, || format!("case {i}: KL(p,p) != 0"))?;
        let h = shannon_entropy(&p);
        ensure((-1e-12..=log3 + 1e-12).contains(&h), || format!("case {i}: H {h} out of range"))?;
        let a = p.probabilities();
        let perm = SentimentDistribution::new([a[2], a[0], a[1]]).unwrap();
        ensure((shannon_entropy(&perm) - h).abs() < 1e-12, || format!("case {i}: H not permutation invariant"))?;
        let same = vec![p; rng.gen_range(2..8)];
        for t in 0..same.len() {
            let vs = variance_score(&same, t, VsScale::Proportions).map_err(|e| e.to_string())?;
            ensure(vs.abs() < 1e-24, || format!("case {i}: VS {vs} on identical members"))?;
        }
    }
    Ok("1000 seeded cases: JS symmetry/identity/bound/triangle, KL >= 0, H range and symmetry, VS zero".into())
}

fn c8_ensemble() -> Outcome {
    let policy = TiePolicy::default();
    let precedence = policy.precedence();
    let mut ties = 0;
    for code in 0..729u32 {
        let labels: Vec<Sentiment> = (0..6).map(|k| Sentiment::ALL[(code / 3u32.pow(k) % 3) as usize]).collect();
        let mut counts = [0usize; 3];
        for l in &labels {
            counts[Sentiment::ALL.iter().position(|x| x == l).unwrap()] += 1;
        }
        let top = *counts.iter().max().unwrap();
        let tied: Vec<Sentiment> = (0..3).filter(|i| counts[*i] == top).map(|i| Sentiment::ALL[i]).collect();
        let expected = *precedence.iter().find(|s| tied.contains(s)).unwrap();
        let vote = majority_vote(&labels, &policy).map_err(|e| e.to_string())?;
        ensure(vote.winner == expected, || format!("{labels:?}: {:?} vs {expected:?}", vote.winner))?;
        ensure(vote.tie == (tied.len() > 1), || format!("{labels:?}: tie flag {}", vote.tie))?;
        ties += usize::from(vote.tie);
    }
    Ok(format!("729/729 tuples match the counting oracle ({ties} ties, precedence Neutral > Negative > Positive)"))
}

fn headline(id: u64) -> CleanHeadline {
    let tokens: Vec<String> = ["قصف", "مستشفي", "شمال", "القطاع"].map(String::from).to_vec();
    CleanHeadline { id, text: tokens.join(" "), tokens, keyword_stream: None }
}

fn scripted(replies: &[&str]) -> Backend {
    let mut config = BackendConfig::http("scripted", KIND_TWO_STAGE, "http://unused");
    config.pause_on_error = 0.0;
    Backend::from_parts(config, Box::new(TwoStageProtocol), Box::new(ScriptedTransport::new(replies.iter().copied()))).unwrap()
}

fn c9_protocol() -> Outcome {
    let frame_json = r#"{"frame": "Humanitarian", "explanation": "aid"}"#;
    let sent_json = r#"{"label": "Negative", "rationale": "loss"}"#;
    let run = |replies: &[&str]| scripted(replies).classify_headline(&headline(1), &mut RecordingPacer::default());

    let o = run(&[frame_json, sent_json]);
    ensure(
        o.frame == Some(Frame::Humanitarian) && o.sentiment == Some(Sentiment::Negative) && !o.frame_fallback_used && !o.sentiment_fallback_used,
        || format!("clean JSON: {o:?}"),
    )?;
    ensure(o.raw_stage1.as_deref() == Some(frame_json) && o.raw_stage2.as_deref() == Some(sent_json), || "clean JSON raw text".into())?;

    let o = run(&["not json", "B", sent_json]);
    ensure(o.frame == Some(Frame::Security) && o.frame_fallback_used && !o.sentiment_fallback_used, || format!("stage 1 fallback: {o:?}"))?;
    ensure(o.raw_stage1.as_deref() == Some("not json") && o.raw_stage1_fallback.as_deref() == Some("B"), || "stage 1 raw".into())?;

    let o = run(&[frame_json, "```{}```", "C"]);
    ensure(o.sentiment == Some(Sentiment::Positive) && o.sentiment_fallback_used && !o.frame_fallback_used, || format!("stage 2 fallback: {o:?}"))?;
    ensure(o.raw_stage2.as_deref() == Some("```{}```") && o.raw_stage2_fallback.as_deref() == Some("C"), || "stage 2 raw".into())?;

    let o = run(&[frame_json, "garbage", "garbage again"]);
    ensure(
        o.sentiment.is_none() && o.error.as_deref().is_some_and(|e| e.starts_with(DOUBLE_FALLBACK_FAILURE)),
        || format!("double failure: {o:?}"),
    )?;
    ensure(o.raw_stage2.is_some() && o.raw_stage2_fallback.is_some(), || "double failure raw".into())?;

    let frames: Vec<Frame> = ["A", "B", "C", "D", "E"].iter().map(|l| fallback_frame(l).unwrap()).collect();
    ensure(frames == Frame::ALL, || format!("frame letters {frames:?}"))?;
    ensure(frames[0] == Frame::Humanitarian && frames[4] == Frame::HistoricalInformational, || "A/E endpoints".into())?;
    let sents: Vec<Sentiment> = ["A", "B", "C"].iter().map(|l| fallback_sentiment(l).unwrap()).collect();
    ensure(sents == [Sentiment::Negative, Sentiment::Neutral, Sentiment::Positive], || format!("sentiment letters {sents:?}"))?;
    for l in 'A'..='Z' {
        let s = l.to_string();
        ensure(fallback_frame(&s).is_ok() == ('A'..='E').contains(&l), || format!("frame letter {l}"))?;
        ensure(fallback_sentiment(&s).is_ok() == ('A'..='C').contains(&l), || format!("sentiment letter {l}"))?;
    }
    Ok("clean, fallback at each stage and double failure correct; letters A-E and A-C exhaustive".into())
}

fn c10_batch() -> Outcome {
    let heads = synthetic_headlines(700, 10);
    let mut profile = SimulationProfile::probabilities([0.6, 0.3, 0.1], 10);
    profile.frames = Some(LabelRule::Probabilities(vec![0.2; 5]));
    profile.malformed_rate = 0.1;
    profile.fallback_failure_rate = 0.1;
    let mut config = BackendConfig::simulated("sim", profile);
    config.request_delay = 0.0;
    let registry = BackendRegistry::with_builtin();

    let whole = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = CheckpointConfig { interval: 300, dir: whole.path().to_path_buf() };
    let mut b = registry.build(&config).map_err(|e| e.to_string())?;
    let full = run_batch(&mut b, &heads, &cfg, &mut RecordingPacer::default(), RunControl::default()).map_err(|e| e.to_string())?;
    ensure(full.checkpoints == [299, 599, 699], || format!("checkpoints {:?}", full.checkpoints))?;

    let split = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg2 = CheckpointConfig { interval: 300, dir: split.path().to_path_buf() };
    let mut b = registry.build(&config).map_err(|e| e.to_string())?;
    let killed = run_batch(&mut b, &heads, &cfg2, &mut RecordingPacer::default(), RunControl { halt_before: Some(450) })
        .map_err(|e| e.to_string())?;
    ensure(killed.halted && killed.checkpoints == [299], || format!("killed run {:?}", killed.checkpoints))?;
    let mut b = registry.build(&config).map_err(|e| e.to_string())?;
    let resumed = resume_from_checkpoint(&mut b, &heads, &cfg2, &mut RecordingPacer::default(), RunControl::default())
        .map_err(|e| e.to_string())?;
    ensure(resumed.checkpoints == [599, 699], || format!("resumed checkpoints {:?}", resumed.checkpoints))?;

    let a = std::fs::read(outcomes_path(whole.path(), "sim")).map_err(|e| e.to_string())?;
    let c = std::fs::read(outcomes_path(split.path(), "sim")).map_err(|e| e.to_string())?;
    ensure(a == c, || "outcomes differ after kill/resume".into())?;
    let a = std::fs::read(checkpoint_path(whole.path(), "sim")).map_err(|e| e.to_string())?;
    let c = std::fs::read(checkpoint_path(split.path(), "sim")).map_err(|e| e.to_string())?;
    ensure(a == c, || "final checkpoints differ after kill/resume".into())?;
    let n = read_outcomes_jsonl(&outcomes_path(split.path(), "sim")).map_err(|e| e.to_string())?.len();
    ensure(n == 700, || format!("{n} outcomes"))?;
    Ok(format!("checkpoints 299/599/699; kill at 450 + resume byte-identical ({} reconciled)", resumed.reconciled))
}

fn c11_end_to_end() -> Outcome {
    let heads = synthetic_headlines(CORPUS_SIZE, 11);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = CheckpointConfig { interval: 300, dir: dir.path().to_path_buf() };
    let registry = BackendRegistry::with_builtin();
    let mut models = Vec::new();
    for config in reference_backends(11) {
        let mut b = registry.build(&config).map_err(|e| e.to_string())?;
        let s = run_batch(&mut b, &heads, &cfg, &mut RecordingPacer::default(), RunControl::default()).map_err(|e| e.to_string())?;
        models.push(MemberOutcomes { name: config.name.clone(), outcomes: read_outcomes_jsonl(&s.outcomes_path).map_err(|e| e.to_string())? });
    }
    let report = build_audit_report(&models, Benchmark::Model(BENCHMARK), &ReportOptions::default()).map_err(|e| e.to_string())?;
    let (mut pct_dev, mut metric_dev): (f64, f64) = (0.0, 0.0);
    for r in &AGGREGATE {
        let got = report.aggregate(r.model).ok_or_else(|| format!("{} missing", r.model))?;
        for (g, want) in [got.negative_pct, got.neutral_pct, got.positive_pct].iter().zip(normalized(r.pct).map(|x| x * 100.0)) {
            ensure((g - want).abs() <= 1.0, || format!("{}: {g:.2} vs {want:.2}", r.model))?;
            pct_dev = pct_dev.max((g - want).abs());
        }
        ensure((got.entropy - r.entropy).abs() <= 0.02, || format!("{} entropy {:.4} vs {}", r.model, got.entropy, r.entropy))?;
        metric_dev = metric_dev.max((got.entropy - r.entropy).abs());
    }
    for (model, expected) in JS_VS_ENSEMBLE {
        let js = report.js(model).ok_or_else(|| format!("{model} JS missing"))?;
        ensure((js - expected).abs() <= 0.02, || format!("{model} JS {js:.4} vs {expected}"))?;
        metric_dev = metric_dev.max((js - expected).abs());
    }
    for (model, expected) in VARIANCE_SCORE {
        let vs = report.variance(model).ok_or_else(|| format!("{model} VS missing"))?;
        ensure((vs - expected).abs() <= 0.02, || format!("{model} VS {vs:.6} vs {expected}"))?;
        metric_dev = metric_dev.max((vs - expected).abs());
    }
    Ok(format!("9 backends x {CORPUS_SIZE}: max pct dev {pct_dev:.3}, max metric dev {metric_dev:.4}"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("entropy fixtures", c1_entropy),
        ("JS fixtures", c2_js),
        ("Variance Score fixtures", c3_variance),
        ("frame-entropy fixtures", c4_frames),
        ("preprocessing golden + idempotence", c5_preprocessing),
        ("corpus arithmetic", c6_corpus),
        ("metric properties", c7_properties),
        ("ensemble oracle", c8_ensemble),
        ("protocol robustness", c9_protocol),
        ("batch determinism", c10_batch),
        ("end-to-end recovery", c11_end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {:>2} PASS {name} ({secs:.2}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name} ({secs:.2}s): {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
