//! Result tables assembled from per-model outcomes and a benchmark, with
//! CSV, JSON and Markdown export and plot-ready data files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backends::ClassificationOutcome;
use crate::corpus::KeywordStream;
use crate::ensemble::{EnsembleLabeling, MemberOutcomes};
use crate::metrics::{
    frame_conditioned_distributions, js_distance, shannon_entropy, variance_score, LabelCounts, MetricsError,
    SentimentDistribution, VsScale,
};
use crate::normalize::CleanHeadline;
use crate::protocol::{Frame, Sentiment};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("no models given")]
    NoModels,
    #[error("outcomes for {0} are empty")]
    EmptyOutcomes(String),
    #[error("no labelled outcomes for {0}")]
    NoLabels(String),
    #[error("model {0} appears twice")]
    DuplicateModel(String),
    #[error("benchmark model {0} not among the inputs")]
    UnknownBenchmark(String),
    #[error("{model} covers a different headline set than {reference}")]
    HeadlineSetMismatch { model: String, reference: String },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub model: String,
    #[serde(rename = "Negative_%")]
    pub negative_pct: f64,
    #[serde(rename = "Neutral_%")]
    pub neutral_pct: f64,
    #[serde(rename = "Positive_%")]
    pub positive_pct: f64,
    #[serde(rename = "Entropy")]
    pub entropy: f64,
    /// Labelled outcomes behind the row.
    #[serde(rename = "N")]
    pub n: u64,
    /// Outcomes carrying an error, excluded from the row.
    pub errors: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsRow {
    pub model: String,
    #[serde(rename = "JS_vs_Ensemble")]
    pub js_vs_ensemble: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub model: String,
    #[serde(rename = "Variance_Score")]
    pub variance_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRow {
    pub model: String,
    pub frame: Frame,
    #[serde(rename = "Negative_%")]
    pub negative_pct: f64,
    #[serde(rename = "Neutral_%")]
    pub neutral_pct: f64,
    #[serde(rename = "Positive_%")]
    pub positive_pct: f64,
    #[serde(rename = "Entropy")]
    pub entropy: f64,
    #[serde(rename = "N")]
    pub n: u64,
}

/// Sum of a model's frame-table N against its outcome count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameTotal {
    pub model: String,
    pub frame_n_sum: u64,
    pub outcomes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub entropy_log_base: String,
    pub divergence_log_base: String,
    pub benchmark: String,
    pub vs_scale: VsScale,
    pub vs_members: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tie_policy: Option<Vec<Sentiment>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble_members: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub tool_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub conventions: Conventions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub aggregate_table: Vec<AggregateRow>,
    pub js_table: Vec<JsRow>,
    pub variance_table: Vec<VarianceRow>,
    pub frame_tables: Vec<FrameRow>,
    pub frame_n_totals: Vec<FrameTotal>,
    pub metadata: ReportMetadata,
}

impl AuditReport {
    pub fn aggregate(&self, model: &str) -> Option<&AggregateRow> {
        self.aggregate_table.iter().find(|r| r.model == model)
    }

    pub fn js(&self, model: &str) -> Option<f64> {
        self.js_table.iter().find(|r| r.model == model).map(|r| r.js_vs_ensemble)
    }

    pub fn variance(&self, model: &str) -> Option<f64> {
        self.variance_table.iter().find(|r| r.model == model).map(|r| r.variance_score)
    }
}

/// What JS distances are measured against.
#[derive(Debug, Clone, Copy)]
pub enum Benchmark<'a> {
    /// A majority-vote labelling, added to the tables under `name`.
    Ensemble { name: &'a str, labeling: &'a EnsembleLabeling },
    /// One of the input models.
    Model(&'a str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    /// Explicit row order; unlisted models follow in default order.
    pub order: Vec<String>,
    pub vs_scale: VsScale,
    /// Whether the benchmark row counts towards the Variance Score mean.
    pub vs_include_benchmark: bool,
    pub corpus_hash: Option<String>,
    pub config_hash: Option<String>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self { order: Vec::new(), vs_scale: VsScale::Proportions, vs_include_benchmark: true, corpus_hash: None, config_hash: None }
    }
}

struct Row<'a> {
    name: &'a str,
    outcomes: std::borrow::Cow<'a, [ClassificationOutcome]>,
}

fn counts(outcomes: &[ClassificationOutcome]) -> (LabelCounts, u64) {
    let mut c = LabelCounts::default();
    let mut errors = 0;
    for o in outcomes {
        match (&o.error, o.sentiment) {
            (None, Some(s)) => c.add(s),
            _ => errors += 1,
        }
    }
    (c, errors)
}

/// Builds all tables. Default row order: ensemble members in member order,
/// the ensemble, then the remaining models in input order.
pub fn build_audit_report(
    models: &[MemberOutcomes],
    benchmark: Benchmark<'_>,
    options: &ReportOptions,
) -> Result<AuditReport, ReportError> {
    if models.is_empty() {
        return Err(ReportError::NoModels);
    }
    let mut seen = BTreeSet::new();
    for m in models {
        if !seen.insert(m.name.as_str()) {
            return Err(ReportError::DuplicateModel(m.name.clone()));
        }
        if m.outcomes.is_empty() {
            return Err(ReportError::EmptyOutcomes(m.name.clone()));
        }
    }
    let ids = |o: &[ClassificationOutcome]| o.iter().map(|x| x.headline_id).collect::<BTreeSet<_>>();
    let reference = ids(&models[0].outcomes);
    for m in &models[1..] {
        if ids(&m.outcomes) != reference {
            return Err(ReportError::HeadlineSetMismatch { model: m.name.clone(), reference: models[0].name.clone() });
        }
    }

    let (benchmark_name, ensemble_members) = match benchmark {
        Benchmark::Ensemble { name, labeling } => {
            if seen.contains(name) {
                return Err(ReportError::DuplicateModel(name.to_string()));
            }
            (name.to_string(), Some(labeling.member_names.clone()))
        }
        Benchmark::Model(name) => {
            if !seen.contains(name) {
                return Err(ReportError::UnknownBenchmark(name.to_string()));
            }
            (name.to_string(), None)
        }
    };

    let mut rows: Vec<Row> = Vec::new();
    let members: Vec<&str> = ensemble_members.iter().flatten().map(String::as_str).collect();
    for name in &members {
        if let Some(m) = models.iter().find(|m| m.name == *name) {
            rows.push(Row { name: &m.name, outcomes: (&m.outcomes[..]).into() });
        }
    }
    if let Benchmark::Ensemble { name, labeling } = benchmark {
        rows.push(Row { name, outcomes: labeling.as_outcomes(name).into() });
    }
    for m in models {
        if !rows.iter().any(|r| r.name == m.name) {
            rows.push(Row { name: &m.name, outcomes: (&m.outcomes[..]).into() });
        }
    }
    if !options.order.is_empty() {
        let rank = |n: &str| options.order.iter().position(|o| o == n).unwrap_or(usize::MAX);
        rows.sort_by_key(|r| rank(r.name));
    }

    let mut aggregate_table = Vec::with_capacity(rows.len());
    let mut dists = Vec::with_capacity(rows.len());
    for r in &rows {
        let (c, errors) = counts(&r.outcomes);
        let d = crate::metrics::distribution_from_counts(&c).map_err(|_| ReportError::NoLabels(r.name.to_string()))?;
        let pct = d.percentages();
        aggregate_table.push(AggregateRow {
            model: r.name.to_string(),
            negative_pct: pct[0],
            neutral_pct: pct[1],
            positive_pct: pct[2],
            entropy: shannon_entropy(&d),
            n: c.total(),
            errors,
        });
        dists.push(d);
    }
    let bench_idx = rows.iter().position(|r| r.name == benchmark_name).expect("benchmark row present");
    let bench = dists[bench_idx];

    let js_table = rows
        .iter()
        .zip(&dists)
        .enumerate()
        .filter(|(i, _)| *i != bench_idx)
        .map(|(_, (r, d))| JsRow { model: r.name.to_string(), js_vs_ensemble: js_distance(d, &bench) })
        .collect();

    let vs_rows: Vec<usize> =
        (0..rows.len()).filter(|i| options.vs_include_benchmark || *i != bench_idx).collect();
    let vs_members: Vec<SentimentDistribution> = vs_rows.iter().map(|i| dists[*i]).collect();
    let mut variance_table = Vec::new();
    if vs_members.len() >= 2 {
        for (pos, i) in vs_rows.iter().enumerate() {
            if *i != bench_idx {
                variance_table.push(VarianceRow {
                    model: rows[*i].name.to_string(),
                    variance_score: variance_score(&vs_members, pos, options.vs_scale)?,
                });
            }
        }
    }

    let mut frame_tables = Vec::new();
    let mut frame_n_totals = Vec::new();
    for r in &rows {
        let fd = frame_conditioned_distributions(&r.outcomes);
        if fd.is_empty() {
            continue;
        }
        frame_n_totals.push(FrameTotal {
            model: r.name.to_string(),
            frame_n_sum: fd.iter().map(|f| f.n).sum(),
            outcomes: r.outcomes.len() as u64,
        });
        for f in fd {
            let pct = f.distribution.percentages();
            frame_tables.push(FrameRow {
                model: r.name.to_string(),
                frame: f.frame,
                negative_pct: pct[0],
                neutral_pct: pct[1],
                positive_pct: pct[2],
                entropy: f.entropy,
                n: f.n,
            });
        }
    }

    let tie_policy = match benchmark {
        Benchmark::Ensemble { labeling, .. } => Some(labeling.tie_policy.precedence().to_vec()),
        Benchmark::Model(_) => None,
    };
    Ok(AuditReport {
        aggregate_table,
        js_table,
        variance_table,
        frame_tables,
        frame_n_totals,
        metadata: ReportMetadata {
            tool_version: crate::TOOL_VERSION.to_string(),
            corpus_hash: options.corpus_hash.clone(),
            config_hash: options.config_hash.clone(),
            conventions: Conventions {
                entropy_log_base: "2".into(),
                divergence_log_base: "e".into(),
                benchmark: benchmark_name,
                vs_scale: options.vs_scale,
                vs_members: vs_rows.iter().map(|i| rows[*i].name.to_string()).collect(),
                tie_policy,
                ensemble_members,
            },
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// One CSV per table plus `report_metadata.json`, written into a directory.
    Csv,
    Json,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "md" | "markdown" => Ok(Self::Markdown),
            other => Err(format!("unknown report format {other:?} (expected csv, json or markdown)")),
        }
    }
}

pub const AGGREGATE_CSV: &str = "aggregate.csv";
pub const JS_CSV: &str = "js_distance.csv";
pub const VARIANCE_CSV: &str = "variance_score.csv";
pub const FRAMES_CSV: &str = "frame_conditioned.csv";
pub const FRAME_TOTALS_CSV: &str = "frame_totals.csv";
pub const METADATA_JSON: &str = "report_metadata.json";

fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn p2(x: f64) -> String {
    format!("{x:.2}")
}
fn p4(x: f64) -> String {
    format!("{x:.4}")
}
fn p6(x: f64) -> String {
    format!("{x:.6}")
}

fn pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Writes the report. For [`ReportFormat::Csv`] `path` is a directory;
/// otherwise it is the output file. Returns the files written.
pub fn export_report(report: &AuditReport, format: ReportFormat, path: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let files: Vec<(PathBuf, String)> = match format {
        ReportFormat::Json => vec![(path.to_path_buf(), pretty_json(report))],
        ReportFormat::Markdown => vec![(path.to_path_buf(), render_markdown(report))],
        ReportFormat::Csv => {
            std::fs::create_dir_all(path).map_err(io_err(path))?;
            let agg = csv_table(
                &["Index", "Model", "Negative_%", "Neutral_%", "Positive_%", "Entropy", "N"],
                report.aggregate_table.iter().enumerate().map(|(i, r)| {
                    vec![i.to_string(), r.model.clone(), p2(r.negative_pct), p2(r.neutral_pct), p2(r.positive_pct), p4(r.entropy), r.n.to_string()]
                }),
            );
            let js = csv_table(
                &["Index", "Model", "JS_vs_Ensemble"],
                report.js_table.iter().enumerate().map(|(i, r)| vec![i.to_string(), r.model.clone(), p4(r.js_vs_ensemble)]),
            );
            let vs = csv_table(
                &["Index", "Model", "Variance_Score"],
                report.variance_table.iter().enumerate().map(|(i, r)| vec![i.to_string(), r.model.clone(), p6(r.variance_score)]),
            );
            let frames = csv_table(
                &["Model", "Frame", "Negative_%", "Neutral_%", "Positive_%", "Entropy", "N"],
                report.frame_tables.iter().map(|r| {
                    vec![r.model.clone(), r.frame.name().into(), p2(r.negative_pct), p2(r.neutral_pct), p2(r.positive_pct), p4(r.entropy), r.n.to_string()]
                }),
            );
            let totals = csv_table(
                &["Model", "Frame_N_Sum", "Outcomes"],
                report.frame_n_totals.iter().map(|t| vec![t.model.clone(), t.frame_n_sum.to_string(), t.outcomes.to_string()]),
            );
            vec![
                (path.join(AGGREGATE_CSV), agg),
                (path.join(JS_CSV), js),
                (path.join(VARIANCE_CSV), vs),
                (path.join(FRAMES_CSV), frames),
                (path.join(FRAME_TOTALS_CSV), totals),
                (path.join(METADATA_JSON), pretty_json(&report.metadata)),
            ]
        }
    };
    let mut written = Vec::with_capacity(files.len());
    for (p, body) in files {
        if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        std::fs::write(&p, body).map_err(io_err(&p))?;
        written.push(p);
    }
    Ok(written)
}

pub fn read_report_json(path: &Path) -> Result<AuditReport, ReportError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text)
        .map_err(|e| ReportError::Io { path: path.to_path_buf(), source: std::io::Error::new(std::io::ErrorKind::InvalidData, e) })
}

pub fn render_markdown(report: &AuditReport) -> String {
    let m = &report.metadata;
    let mut s = String::from("# Sentiment audit report\n\n");
    let _ = writeln!(s, "- Tool version: {}", m.tool_version);
    if let Some(h) = &m.corpus_hash {
        let _ = writeln!(s, "- Corpus hash: `{h}`");
    }
    if let Some(h) = &m.config_hash {
        let _ = writeln!(s, "- Config hash: `{h}`");
    }
    let _ = writeln!(s, "- Benchmark: {}", m.conventions.benchmark);
    if let Some(p) = &m.conventions.tie_policy {
        let names: Vec<&str> = p.iter().map(|x| x.name()).collect();
        let _ = writeln!(s, "- Tie precedence: {}", names.join(" > "));
    }
    let _ = writeln!(
        s,
        "- Entropy in bits (log base {}), JS distance with log base {}",
        m.conventions.entropy_log_base, m.conventions.divergence_log_base
    );
    let _ = writeln!(s, "- Variance Score over {:?} of: {}", m.conventions.vs_scale, m.conventions.vs_members.join(", "));

    s.push_str("\n## Aggregate sentiment distribution\n\n");
    s.push_str("| Index | Model | Negative_% | Neutral_% | Positive_% | Entropy |\n|---|---|---|---|---|---|\n");
    for (i, r) in report.aggregate_table.iter().enumerate() {
        let _ = writeln!(s, "| {i} | {} | {} | {} | {} | {} |", r.model, p2(r.negative_pct), p2(r.neutral_pct), p2(r.positive_pct), p4(r.entropy));
    }

    s.push_str("\n## Jensen-Shannon distance to the benchmark\n\n| Index | Model | JS_vs_Ensemble |\n|---|---|---|\n");
    for (i, r) in report.js_table.iter().enumerate() {
        let _ = writeln!(s, "| {i} | {} | {} |", r.model, p4(r.js_vs_ensemble));
    }

    s.push_str("\n## Variance Score\n\n| Index | Model | Variance_Score |\n|---|---|---|\n");
    for (i, r) in report.variance_table.iter().enumerate() {
        let _ = writeln!(s, "| {i} | {} | {} |", r.model, p6(r.variance_score));
    }

    if !report.frame_tables.is_empty() {
        s.push_str("\n## Frame-conditioned sentiment distribution\n\n");
        s.push_str("| Model | Frame | Negative_% | Neutral_% | Positive_% | Entropy | N |\n|---|---|---|---|---|---|---|\n");
        for r in &report.frame_tables {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} | {} |",
                r.model,
                r.frame.name(),
                p2(r.negative_pct),
                p2(r.neutral_pct),
                p2(r.positive_pct),
                p4(r.entropy),
                r.n
            );
        }
        s.push_str("\n| Model | Frame N sum | Outcomes |\n|---|---|---|\n");
        for t in &report.frame_n_totals {
            let _ = writeln!(s, "| {} | {} | {} |", t.model, t.frame_n_sum, t.outcomes);
        }
    }
    s
}

pub const KEYWORD_BARS_CSV: &str = "keyword_counts.csv";
pub const LENGTH_HISTOGRAM_CSV: &str = "length_histogram.csv";
pub const SENTIMENT_BARS_CSV: &str = "sentiment_bars.csv";

pub fn keyword_bars(headlines: &[CleanHeadline]) -> BTreeMap<KeywordStream, usize> {
    let mut counts: BTreeMap<KeywordStream, usize> = KeywordStream::ALL.iter().map(|k| (*k, 0)).collect();
    for h in headlines {
        if let Some(k) = h.keyword_stream {
            *counts.entry(k).or_default() += 1;
        }
    }
    counts
}

/// Headline count per token length, one bin for every length from the
/// shortest to the longest headline.
pub fn length_histogram(headlines: &[CleanHeadline]) -> Vec<(usize, usize)> {
    let lengths: Vec<usize> = headlines.iter().map(|h| h.tokens.len()).collect();
    let (Some(&lo), Some(&hi)) = (lengths.iter().min(), lengths.iter().max()) else {
        return Vec::new();
    };
    let mut bins = vec![0; hi - lo + 1];
    for l in lengths {
        bins[l - lo] += 1;
    }
    bins.into_iter().enumerate().map(|(i, c)| (lo + i, c)).collect()
}

/// Writes keyword bars, the length histogram and (given a report) per-model
/// sentiment bars as CSV into `dir`.
pub fn emit_plot_data(headlines: &[CleanHeadline], report: Option<&AuditReport>, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let keywords = csv_table(
        &["keyword", "query", "count"],
        keyword_bars(headlines).into_iter().map(|(k, n)| vec![k.name().into(), k.query().into(), n.to_string()]),
    );
    let lengths = csv_table(
        &["tokens", "count"],
        length_histogram(headlines).into_iter().map(|(l, n)| vec![l.to_string(), n.to_string()]),
    );
    let sentiments = csv_table(
        &["model", "label", "percentage"],
        report.into_iter().flat_map(|r| &r.aggregate_table).flat_map(|r| {
            [("Negative", r.negative_pct), ("Neutral", r.neutral_pct), ("Positive", r.positive_pct)]
                .map(|(label, pct)| vec![r.model.clone(), label.to_string(), p2(pct)])
        }),
    );
    let mut out = Vec::new();
    for (name, body) in [(KEYWORD_BARS_CSV, keywords), (LENGTH_HISTOGRAM_CSV, lengths), (SENTIMENT_BARS_CSV, sentiments)] {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(io_err(&p))?;
        out.push(p);
    }
    Ok(out)
}
