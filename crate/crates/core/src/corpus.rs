//! Headline ingestion (CSV / JSONL), keyword-stream tagging and headline
//! length statistics.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::normalize::{fold_for_matching, CleanHeadline};

/// Query keyword a headline was retrieved with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum KeywordStream {
    Gaza,
    Captives,
    Hamas,
    IsraeliArmy,
    AlQassam,
}

impl KeywordStream {
    pub const ALL: [KeywordStream; 5] = [
        KeywordStream::Gaza,
        KeywordStream::Captives,
        KeywordStream::Hamas,
        KeywordStream::IsraeliArmy,
        KeywordStream::AlQassam,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KeywordStream::Gaza => "Gaza",
            KeywordStream::Captives => "Captives",
            KeywordStream::Hamas => "Hamas",
            KeywordStream::IsraeliArmy => "IsraeliArmy",
            KeywordStream::AlQassam => "AlQassam",
        }
    }

    /// The Arabic query string.
    pub fn query(self) -> &'static str {
        match self {
            KeywordStream::Gaza => "غزة",
            KeywordStream::Captives => "أسرى",
            KeywordStream::Hamas => "حماس",
            KeywordStream::IsraeliArmy => "الجيش الإسرائيلي",
            KeywordStream::AlQassam => "كتائب القسام",
        }
    }

    /// Stream whose query occurs earliest in `text` (compared after
    /// diacritic removal and orthographic folding). On equal start the
    /// longer query wins.
    pub fn infer(text: &str) -> Option<KeywordStream> {
        let folded = fold_for_matching(text);
        Self::ALL
            .into_iter()
            .filter_map(|k| {
                let q = fold_for_matching(k.query());
                folded.find(&q).map(|pos| (pos, std::cmp::Reverse(q.len()), k))
            })
            .min()
            .map(|(_, _, k)| k)
    }
}

impl fmt::Display for KeywordStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KeywordStream {
    type Err = CorpusError;

    /// Accepts English names (case, spaces, `_` and `-` ignored) or the Arabic query.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let squashed: String = s
            .trim()
            .chars()
            .filter(|c| !matches!(c, ' ' | '_' | '-'))
            .flat_map(char::to_lowercase)
            .collect();
        let folded = fold_for_matching(s.trim());
        Self::ALL
            .into_iter()
            .find(|k| {
                k.name().to_lowercase() == squashed || fold_for_matching(k.query()) == folded
            })
            .or(match squashed.as_str() {
                "prisoners" => Some(KeywordStream::Captives),
                "qassam" | "alqassambrigades" | "qassambrigades" => Some(KeywordStream::AlQassam),
                _ => None,
            })
            .ok_or_else(|| CorpusError::UnknownKeyword(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadlineRecord {
    pub id: u64,
    pub raw_text: String,
    pub source: Option<String>,
    pub published_at: Option<NaiveDate>,
    pub keyword_stream: Option<KeywordStream>,
}

impl HeadlineRecord {
    pub fn new(id: u64, raw_text: impl Into<String>) -> Self {
        Self { id, raw_text: raw_text.into(), source: None, published_at: None, keyword_stream: None }
    }

    pub fn with_keyword(mut self, keyword: KeywordStream) -> Self {
        self.keyword_stream = Some(keyword);
        self
    }
}

/// Immutable after ingestion; iteration order is file order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub records: Vec<HeadlineRecord>,
    pub provenance: String,
}

impl Corpus {
    pub fn new(records: Vec<HeadlineRecord>, provenance: impl Into<String>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for (i, r) in records.iter().enumerate() {
            if r.raw_text.trim().is_empty() {
                return Err(CorpusError::EmptyText { row: i + 1 });
            }
            if !seen.insert(r.id) {
                return Err(CorpusError::DuplicateId(r.id));
            }
        }
        Ok(Self { records, provenance: provenance.into() })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// SHA-256 over the canonical JSONL export.
    pub fn content_hash(&self) -> String {
        let mut buf = Vec::new();
        write_records_jsonl(&self.records, &mut buf).expect("in-memory write");
        crate::hashing::sha256_hex(buf)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown corpus format {0:?} (expected csv or jsonl)")]
    UnknownFormat(String),
    #[error("row {row}: no text field")]
    MissingTextField { row: usize },
    #[error("row {row}: empty text")]
    EmptyText { row: usize },
    #[error("duplicate id {0}")]
    DuplicateId(u64),
    #[error("row {row}: invalid {field}: {detail}")]
    InvalidField { row: usize, field: &'static str, detail: String },
    #[error("row {row}: malformed record: {detail}")]
    Malformed { row: usize, detail: String },
    #[error("row {row}: no keyword tag")]
    MissingKeyword { row: usize },
    #[error("row {row}: no query keyword found in text")]
    NoKeywordMatch { row: usize },
    #[error("unknown keyword stream {0:?}")]
    UnknownKeyword(String),
    #[error("record {id} has no keyword stream")]
    UntaggedRecord { id: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Csv,
    Jsonl,
}

impl InputFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(InputFormat::Csv),
            "jsonl" | "ndjson" => Some(InputFormat::Jsonl),
            _ => None,
        }
    }
}

impl FromStr for InputFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(InputFormat::Csv),
            "jsonl" => Ok(InputFormat::Jsonl),
            _ => Err(CorpusError::UnknownFormat(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeywordPolicy {
    /// Every row must carry a keyword column/field.
    #[default]
    Required,
    /// Missing tags are inferred from the headline text.
    Infer,
    /// Missing tags are left empty.
    Optional,
}

#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    pub keywords: KeywordPolicy,
}

/// A row that was skipped, with its 1-based data row number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub corpus: Corpus,
    pub rejections: Vec<Rejection>,
}

/// Field values of one input row before validation.
#[derive(Default)]
struct RawRow {
    id: Option<String>,
    text: Option<String>,
    source: Option<String>,
    date: Option<String>,
    keyword: Option<String>,
}

pub fn ingest_corpus(
    path: &Path,
    format: InputFormat,
    options: &IngestOptions,
) -> Result<Ingested, CorpusError> {
    let io_err = |source| CorpusError::Io { path: path.display().to_string(), source };
    let bytes = std::fs::read(path).map_err(io_err)?;
    let rows = match format {
        InputFormat::Csv => read_csv_rows(&bytes)?,
        InputFormat::Jsonl => read_jsonl_rows(&bytes)?,
    };
    let mut records = Vec::with_capacity(rows.len());
    let mut rejections = Vec::new();
    let mut seen = HashSet::new();
    for (index, (row, raw)) in rows.into_iter().enumerate() {
        let text = raw.text.ok_or(CorpusError::MissingTextField { row })?;
        if text.trim().is_empty() {
            rejections.push(Rejection { row, reason: "empty_text".into() });
            continue;
        }
        let id = match non_empty(raw.id) {
            Some(s) => s.trim().parse::<u64>().map_err(|e| CorpusError::InvalidField {
                row,
                field: "id",
                detail: e.to_string(),
            })?,
            None => index as u64,
        };
        if !seen.insert(id) {
            return Err(CorpusError::DuplicateId(id));
        }
        let published_at = non_empty(raw.date)
            .map(|d| {
                NaiveDate::parse_from_str(d.trim(), "%Y-%m-%d").map_err(|e| {
                    CorpusError::InvalidField { row, field: "date", detail: e.to_string() }
                })
            })
            .transpose()?;
        let keyword_stream = match non_empty(raw.keyword) {
            Some(k) => Some(k.parse::<KeywordStream>().map_err(|_| CorpusError::InvalidField {
                row,
                field: "keyword",
                detail: format!("unknown keyword stream {k:?}"),
            })?),
            None => match options.keywords {
                KeywordPolicy::Required => return Err(CorpusError::MissingKeyword { row }),
                KeywordPolicy::Infer => {
                    Some(KeywordStream::infer(&text).ok_or(CorpusError::NoKeywordMatch { row })?)
                }
                KeywordPolicy::Optional => None,
            },
        };
        records.push(HeadlineRecord {
            id,
            raw_text: text,
            source: non_empty(raw.source),
            published_at,
            keyword_stream,
        });
    }
    Ok(Ingested { corpus: Corpus { records, provenance: path.display().to_string() }, rejections })
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.filter(|s| !s.trim().is_empty())
}

fn read_csv_rows(bytes: &[u8]) -> Result<Vec<(usize, RawRow)>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| CorpusError::Malformed { row: 0, detail: e.to_string() })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
    let (id, text, source, date, keyword) =
        (col("id"), col("text"), col("source"), col("date"), col("keyword"));
    if text.is_none() {
        return Err(CorpusError::MissingTextField { row: 0 });
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CorpusError::Malformed { row, detail: e.to_string() })?;
        let get = |c: Option<usize>| c.and_then(|c| record.get(c)).map(str::to_string);
        rows.push((
            row,
            RawRow {
                id: get(id),
                text: get(text),
                source: get(source),
                date: get(date),
                keyword: get(keyword),
            },
        ));
    }
    Ok(rows)
}

fn read_jsonl_rows(bytes: &[u8]) -> Result<Vec<(usize, RawRow)>, CorpusError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| CorpusError::Malformed { row: 0, detail: e.to_string() })?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line)
            .map_err(|e| CorpusError::Malformed { row, detail: e.to_string() })?;
        let Value::Object(map) = value else {
            return Err(CorpusError::Malformed { row, detail: "not a JSON object".into() });
        };
        let field = |name: &str| -> Option<String> {
            match map.get(name)? {
                Value::Null => None,
                Value::String(s) => Some(s.clone()),
                other => Some(other.to_string()),
            }
        };
        rows.push((
            row,
            RawRow {
                id: field("id"),
                text: field("text"),
                source: field("source"),
                date: field("date"),
                keyword: field("keyword"),
            },
        ));
    }
    Ok(rows)
}

#[derive(Serialize)]
struct ExportRow<'a> {
    id: u64,
    text: &'a str,
    source: Option<&'a str>,
    date: Option<String>,
    keyword: Option<&'static str>,
}

impl<'a> From<&'a HeadlineRecord> for ExportRow<'a> {
    fn from(r: &'a HeadlineRecord) -> Self {
        Self {
            id: r.id,
            text: &r.raw_text,
            source: r.source.as_deref(),
            date: r.published_at.map(|d| d.format("%Y-%m-%d").to_string()),
            keyword: r.keyword_stream.map(KeywordStream::name),
        }
    }
}

fn write_records_jsonl(records: &[HeadlineRecord], mut w: impl Write) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, &ExportRow::from(r))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes the corpus in the same schema [`ingest_corpus`] reads.
pub fn export_corpus(corpus: &Corpus, path: &Path, format: InputFormat) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io { path: path.display().to_string(), source };
    let file = std::fs::File::create(path).map_err(io_err)?;
    match format {
        InputFormat::Jsonl => {
            let mut w = std::io::BufWriter::new(file);
            write_records_jsonl(&corpus.records, &mut w).map_err(io_err)?;
            w.flush().map_err(io_err)
        }
        InputFormat::Csv => {
            let mut w = csv::Writer::from_writer(file);
            let csv_err = |e: csv::Error| CorpusError::Io {
                path: path.display().to_string(),
                source: std::io::Error::other(e),
            };
            for r in &corpus.records {
                w.serialize(ExportRow::from(r)).map_err(csv_err)?;
            }
            if corpus.records.is_empty() {
                w.write_record(["id", "text", "source", "date", "keyword"]).map_err(csv_err)?;
            }
            w.flush().map_err(io_err)
        }
    }
}

/// Rejection report as JSONL of `{row, reason}`.
pub fn write_rejections(rejections: &[Rejection], path: &Path) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in rejections {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Per-stream record counts; every stream is present, counts sum to the corpus size.
pub fn keyword_distribution(corpus: &Corpus) -> Result<BTreeMap<KeywordStream, usize>, CorpusError> {
    let mut counts: BTreeMap<KeywordStream, usize> =
        KeywordStream::ALL.into_iter().map(|k| (k, 0)).collect();
    for r in &corpus.records {
        let k = r.keyword_stream.ok_or(CorpusError::UntaggedRecord { id: r.id })?;
        *counts.get_mut(&k).unwrap() += 1;
    }
    Ok(counts)
}

/// Headline length summary in words. Moments are `None` when `n == 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub n: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub stddev: Option<f64>,
    pub min: Option<usize>,
    pub max: Option<usize>,
}

impl LengthStats {
    /// Population standard deviation; median of an even count is the mean of the middle pair.
    pub fn from_lengths(lengths: &[usize]) -> Self {
        let n = lengths.len();
        if n == 0 {
            return Self { n, mean: None, median: None, stddev: None, min: None, max: None };
        }
        let mut sorted = lengths.to_vec();
        sorted.sort_unstable();
        let mean = sorted.iter().sum::<usize>() as f64 / n as f64;
        let var = sorted.iter().map(|&l| (l as f64 - mean).powi(2)).sum::<f64>() / n as f64;
        let median = if n % 2 == 1 {
            sorted[n / 2] as f64
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
        };
        Self {
            n,
            mean: Some(mean),
            median: Some(median),
            stddev: Some(var.sqrt()),
            min: sorted.first().copied(),
            max: sorted.last().copied(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthReport {
    pub per_stream: BTreeMap<KeywordStream, LengthStats>,
    pub overall: LengthStats,
    /// Always "population".
    pub stddev_estimator: String,
}

/// Token-count statistics over cleaned headlines, per stream and overall.
/// Untagged headlines count toward the overall row only.
pub fn length_stats(headlines: &[CleanHeadline]) -> LengthReport {
    let mut by_stream: BTreeMap<KeywordStream, Vec<usize>> =
        KeywordStream::ALL.into_iter().map(|k| (k, Vec::new())).collect();
    let mut all = Vec::with_capacity(headlines.len());
    for h in headlines {
        all.push(h.tokens.len());
        if let Some(k) = h.keyword_stream {
            by_stream.get_mut(&k).unwrap().push(h.tokens.len());
        }
    }
    LengthReport {
        per_stream: by_stream.into_iter().map(|(k, v)| (k, LengthStats::from_lengths(&v))).collect(),
        overall: LengthStats::from_lengths(&all),
        stddev_estimator: "population".into(),
    }
}

fn opt_num<T: fmt::Display>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// CSV with columns `keyword,n,mean,median,stddev,min,max`; absent moments are empty cells.
pub fn length_report_csv(report: &LengthReport) -> String {
    let mut out = String::from("keyword,n,mean,median,stddev,min,max\n");
    let rows = report
        .per_stream
        .iter()
        .map(|(k, s)| (k.name(), s))
        .chain(std::iter::once(("Overall", &report.overall)));
    for (name, s) in rows {
        out.push_str(&format!(
            "{name},{},{},{},{},{},{}\n",
            s.n,
            opt_num(s.mean),
            opt_num(s.median),
            opt_num(s.stddev),
            opt_num(s.min),
            opt_num(s.max)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn three_row_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "c.csv",
            "id,text,source,date,keyword\n0,خبر اول,الجزيرة,2023-10-08,Gaza\n1,خبر ثاني,,,Hamas\n2,خبر ثالث,,,israeli army\n",
        );
        let ing = ingest_corpus(&p, InputFormat::Csv, &IngestOptions::default()).unwrap();
        let ids: Vec<u64> = ing.corpus.records.iter().map(|r| r.id).collect();
        assert_eq!(ids, vec![0, 1, 2]);
        assert!(ing.rejections.is_empty());
        assert_eq!(ing.corpus.records[0].source.as_deref(), Some("الجزيرة"));
        assert_eq!(ing.corpus.records[0].published_at, NaiveDate::from_ymd_opt(2023, 10, 8));
        assert_eq!(ing.corpus.records[2].keyword_stream, Some(KeywordStream::IsraeliArmy));
    }

    #[test]
    fn empty_text_row_is_rejected_with_row_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "c.jsonl",
            "{\"id\":5,\"text\":\"a b c\",\"keyword\":\"Gaza\"}\n{\"id\":6,\"text\":\"  \",\"keyword\":\"Gaza\"}\n{\"id\":7,\"text\":\"d e\",\"keyword\":\"حماس\"}\n",
        );
        let ing = ingest_corpus(&p, InputFormat::Jsonl, &IngestOptions::default()).unwrap();
        assert_eq!(ing.corpus.len(), 2);
        assert_eq!(ing.rejections, vec![Rejection { row: 2, reason: "empty_text".into() }]);
        assert_eq!(ing.corpus.records[1].keyword_stream, Some(KeywordStream::Hamas));
    }

    #[test]
    fn ingest_errors() {
        let dir = tempfile::tempdir().unwrap();
        let opts = IngestOptions::default();
        let p = write(&dir, "a.csv", "id,headline\n1,x\n");
        assert!(matches!(
            ingest_corpus(&p, InputFormat::Csv, &opts),
            Err(CorpusError::MissingTextField { .. })
        ));
        let p = write(&dir, "b.csv", "id,text,keyword\n1,x,Gaza\n1,y,Gaza\n");
        assert!(matches!(ingest_corpus(&p, InputFormat::Csv, &opts), Err(CorpusError::DuplicateId(1))));
        let p = write(&dir, "c.jsonl", "{\"id\":1,\"keyword\":\"Gaza\"}\n");
        assert!(matches!(
            ingest_corpus(&p, InputFormat::Jsonl, &opts),
            Err(CorpusError::MissingTextField { row: 1 })
        ));
        let p = write(&dir, "d.csv", "text\nخبر\n");
        assert!(matches!(
            ingest_corpus(&p, InputFormat::Csv, &opts),
            Err(CorpusError::MissingKeyword { row: 1 })
        ));
        assert!(matches!(
            ingest_corpus(&dir.path().join("missing.csv"), InputFormat::Csv, &opts),
            Err(CorpusError::Io { .. })
        ));
        assert!(matches!("xml".parse::<InputFormat>(), Err(CorpusError::UnknownFormat(_))));
    }

    #[test]
    fn keyword_inference() {
        assert_eq!(KeywordStream::infer("قصف على غزة"), Some(KeywordStream::Gaza));
        assert_eq!(KeywordStream::infer("بيان الجيش الاسرائيلي"), Some(KeywordStream::IsraeliArmy));
        assert_eq!(KeywordStream::infer("كتائب القسام تعلن"), Some(KeywordStream::AlQassam));
        assert_eq!(KeywordStream::infer("حماس وغزة"), Some(KeywordStream::Hamas));
        assert_eq!(KeywordStream::infer("لا شيء"), None);

        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "i.csv", "text\nتبادل الأسرى\n");
        let opts = IngestOptions { keywords: KeywordPolicy::Infer };
        let ing = ingest_corpus(&p, InputFormat::Csv, &opts).unwrap();
        assert_eq!(ing.corpus.records[0].keyword_stream, Some(KeywordStream::Captives));
    }

    #[test]
    fn keyword_distribution_cases() {
        let empty = Corpus::new(vec![], "empty").unwrap();
        let d = keyword_distribution(&empty).unwrap();
        assert_eq!(d.len(), 5);
        assert!(d.values().all(|&c| c == 0));

        let records = (0..10)
            .map(|i| HeadlineRecord::new(i, "x").with_keyword(KeywordStream::ALL[i as usize / 2]))
            .collect();
        let d = keyword_distribution(&Corpus::new(records, "t").unwrap()).unwrap();
        assert!(d.values().all(|&c| c == 2));

        let untagged = Corpus::new(vec![HeadlineRecord::new(9, "x")], "t").unwrap();
        assert!(matches!(keyword_distribution(&untagged), Err(CorpusError::UntaggedRecord { id: 9 })));
    }

    #[test]
    fn length_stats_examples() {
        let s = LengthStats::from_lengths(&[5]);
        assert_eq!((s.mean, s.median, s.stddev, s.min, s.max), (Some(5.0), Some(5.0), Some(0.0), Some(5), Some(5)));
        let s = LengthStats::from_lengths(&[4, 8]);
        assert_eq!(s.mean, Some(6.0));
        assert_eq!(s.median, Some(6.0));
        assert_eq!(s.stddev, Some(2.0));
        assert_eq!((s.min, s.max), (Some(4), Some(8)));
        let s = LengthStats::from_lengths(&[]);
        assert_eq!(s.n, 0);
        assert!(s.mean.is_none() && s.median.is_none() && s.min.is_none());
    }

    #[test]
    fn length_report_overall_counts_everything() {
        let h = |id, n: usize, k| CleanHeadline::from_tokens(id, vec!["كلمه".to_string(); n], k);
        let report = length_stats(&[
            h(0, 4, Some(KeywordStream::Gaza)),
            h(1, 8, Some(KeywordStream::Gaza)),
            h(2, 6, None),
        ]);
        assert_eq!(report.overall.n, 3);
        assert_eq!(report.per_stream[&KeywordStream::Gaza].mean, Some(6.0));
        assert_eq!(report.per_stream[&KeywordStream::Hamas].n, 0);
        let csv = length_report_csv(&report);
        assert!(csv.contains("Hamas,0,,,,,\n"));
        assert!(csv.ends_with("Overall,3,6,6,1.632993161855452,4,8\n"));
    }

    fn arb_record() -> impl Strategy<Value = HeadlineRecord> {
        (
            "[\\p{Arabic} a-z,\"]{0,12}[\\p{Arabic}a-z]",
            proptest::option::of("[\\p{Arabic}a-z ]{1,8}"),
            proptest::option::of((2000i32..2030, 1u32..13, 1u32..29)),
            proptest::option::of(prop::sample::select(KeywordStream::ALL.to_vec())),
        )
            .prop_map(|(text, source, date, keyword)| HeadlineRecord {
                id: 0,
                raw_text: text,
                source: source.filter(|s| !s.trim().is_empty()),
                published_at: date.and_then(|(y, m, d)| NaiveDate::from_ymd_opt(y, m, d)),
                keyword_stream: keyword,
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn export_then_ingest_is_identity(records in prop::collection::vec(arb_record(), 0..8), csv in any::<bool>()) {
            let records: Vec<_> = records.into_iter().enumerate()
                .map(|(i, r)| HeadlineRecord { id: i as u64 * 3 + 1, ..r })
                .filter(|r| !r.raw_text.trim().is_empty())
                .collect();
            let corpus = Corpus::new(records, "p").unwrap();
            let dir = tempfile::tempdir().unwrap();
            let format = if csv { InputFormat::Csv } else { InputFormat::Jsonl };
            let path = dir.path().join("out");
            export_corpus(&corpus, &path, format).unwrap();
            let opts = IngestOptions { keywords: KeywordPolicy::Optional };
            let back = ingest_corpus(&path, format, &opts).unwrap();
            prop_assert_eq!(back.corpus.records, corpus.records);
        }

        #[test]
        fn length_stats_permutation_invariant(mut lengths in prop::collection::vec(1usize..40, 0..30), seed in any::<u64>()) {
            let a = LengthStats::from_lengths(&lengths);
            use rand::{seq::SliceRandom, SeedableRng};
            lengths.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(a, LengthStats::from_lengths(&lengths));
        }
    }
}
