mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use headline_audit::corpus::{InputFormat, KeywordPolicy};
use tracing_subscriber::EnvFilter;

#[derive(Parser, Debug)]
#[command(name = "headline-audit", version, about = "Audit sentiment disagreement between classifiers on Arabic headlines")]
struct Cli {
    /// Run config (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CorpusArgs {
    /// Corpus file (.csv or .jsonl). Falls back to `corpus.path` in the config.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<InputFormat>,
    /// required, infer or optional
    #[arg(long, value_parser = parse_policy)]
    keywords: Option<KeywordPolicy>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a corpus file and print record and keyword statistics.
    Ingest {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Write the validated corpus as JSONL.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write rejected rows as JSONL.
        #[arg(long)]
        rejections: Option<PathBuf>,
    },
    /// Normalize headlines and drop those below the minimum length.
    Clean {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Output JSONL; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write per-stream length statistics as CSV.
        #[arg(long)]
        stats: Option<PathBuf>,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long)]
        outlets: Option<PathBuf>,
        #[arg(long)]
        min_tokens: Option<usize>,
    },
    /// Run one configured backend over a cleaned corpus.
    Classify {
        #[arg(long)]
        backend: String,
        /// Cleaned headlines (JSONL from `clean`).
        #[arg(long = "in")]
        input: PathBuf,
        /// Continue from the backend's checkpoint.
        #[arg(long)]
        resume: bool,
        /// Overrides `checkpoint.interval`.
        #[arg(long)]
        interval: Option<usize>,
    },
    /// Build the majority-vote benchmark from member outcome files.
    Ensemble {
        /// Comma-separated member names; defaults to `ensemble.members`.
        #[arg(long, value_delimiter = ',')]
        members: Vec<String>,
        /// Directory holding `<name>.outcomes.jsonl` files.
        #[arg(long)]
        runs: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute metrics over outcome files and print them as JSON.
    Analyze {
        #[command(flatten)]
        models: ModelArgs,
    },
    /// Write result tables (CSV, JSON, Markdown) and plot data.
    Report {
        #[command(flatten)]
        models: ModelArgs,
        /// Output directory; defaults to `<output_dir>/report`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cleaned headlines, for keyword and length plot data.
        #[arg(long)]
        clean: Option<PathBuf>,
    },
    /// Seeded synthetic end-to-end run with nine reference-profile backends.
    Simulate {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 10_990)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the published derived columns and print one line per check.
    VerifyPaper {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// Comma-separated model names; defaults to the configured backends or
    /// every outcome file in the runs directory.
    #[arg(long, value_delimiter = ',')]
    models: Vec<String>,
    #[arg(long)]
    runs: Option<PathBuf>,
    /// Benchmark model, when no ensemble members are configured.
    #[arg(long)]
    benchmark: Option<String>,
    /// Cleaned headlines whose hash is stamped into the report.
    #[arg(long = "in")]
    input: Option<PathBuf>,
}

fn parse_format(s: &str) -> Result<InputFormat, String> {
    s.parse().map_err(|e: headline_audit::corpus::CorpusError| e.to_string())
}

fn parse_policy(s: &str) -> Result<KeywordPolicy, String> {
    match s {
        "required" => Ok(KeywordPolicy::Required),
        "infer" => Ok(KeywordPolicy::Infer),
        "optional" => Ok(KeywordPolicy::Optional),
        other => Err(format!("unknown keyword policy {other:?}")),
    }
}

fn init_logging() {
    let filter = EnvFilter::try_from_env("HEADLINE_AUDIT_LOG").unwrap_or_else(|_| EnvFilter::new("info"));
    let _ = tracing_subscriber::fmt()
        .json()
        .flatten_event(true)
        .with_current_span(false)
        .with_target(false)
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_logging();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("headline-audit: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
