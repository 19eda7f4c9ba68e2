use std::io::Write;
use std::path::{Path, PathBuf};

use headline_audit::backends::{
    read_outcomes_jsonl, resume_from_checkpoint, run_batch, BackendRegistry, CheckpointConfig, RunControl,
    ThreadPacer,
};
use headline_audit::config::{load_config, RunConfig};
use headline_audit::corpus::{
    export_corpus, ingest_corpus, keyword_distribution, length_report_csv, length_stats, write_rejections,
    IngestOptions, Ingested, InputFormat,
};
use headline_audit::ensemble::{build_ensemble_labels, write_ensemble_jsonl, EnsembleLabeling, MemberOutcomes};
use headline_audit::hashing::json_hash;
use headline_audit::normalize::{clean_corpus, read_clean_jsonl, write_clean_jsonl, CleanHeadline, Normalizer};
use headline_audit::reference::verify_published_tables;
use headline_audit::report::{
    build_audit_report, emit_plot_data, export_report, AuditReport, Benchmark, ReportFormat, ReportOptions,
};
use headline_audit::simulation::{reference_backends, synthetic_headlines, BENCHMARK};
use serde_json::json;
use tracing::{info, warn};

use crate::error::{CliError, CliResult};
use crate::{Cli, Command, CorpusArgs, ModelArgs};

pub fn run(cli: Cli) -> CliResult {
    let config = match &cli.config {
        Some(path) => load_config(path).map_err(CliError::usage)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Ingest { corpus, out, rejections } => ingest(&config, &corpus, out.as_deref(), rejections.as_deref()),
        Command::Clean { corpus, out, stats, stopwords, outlets, min_tokens } => {
            let mut config = config;
            if stopwords.is_some() {
                config.normalization.stopwords = stopwords;
            }
            if outlets.is_some() {
                config.normalization.outlets = outlets;
            }
            if let Some(n) = min_tokens {
                config.normalization.min_tokens = n;
            }
            clean(&config, &corpus, out.as_deref(), stats.as_deref())
        }
        Command::Classify { backend, input, resume, interval } => classify(&config, &backend, &input, resume, interval),
        Command::Ensemble { members, runs, out } => ensemble(&config, members, runs, out),
        Command::Analyze { models } => {
            let report = build_report(&config, &models)?;
            print_json(&report)
        }
        Command::Report { models, out, clean } => report(&config, &models, out, clean),
        Command::Simulate { seed, n, out } => simulate(&config, seed, n, out),
        Command::VerifyPaper { json } => verify_paper(json),
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> CliResult {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(CliError::data)?;
    writeln!(out).map_err(CliError::data)
}

fn load_corpus(config: &RunConfig, args: &CorpusArgs) -> CliResult<Ingested> {
    let path = args
        .input
        .clone()
        .or_else(|| config.corpus.path.clone())
        .ok_or_else(|| CliError::usage("no corpus given (use --in or corpus.path)"))?;
    let format = args
        .format
        .or(config.corpus.format)
        .or_else(|| InputFormat::from_path(&path))
        .ok_or_else(|| CliError::usage(format!("cannot tell the format of {}; pass --format", path.display())))?;
    let options = IngestOptions { keywords: args.keywords.unwrap_or(config.corpus.keywords) };
    let ingested = ingest_corpus(&path, format, &options).map_err(CliError::data)?;
    for r in &ingested.rejections {
        warn!(event = "row_rejected", row = r.row, reason = %r.reason);
    }
    info!(event = "ingested", records = ingested.corpus.len(), rejected = ingested.rejections.len());
    Ok(ingested)
}

fn ingest(config: &RunConfig, args: &CorpusArgs, out: Option<&Path>, rejections: Option<&Path>) -> CliResult {
    let Ingested { corpus, rejections: rejected } = load_corpus(config, args)?;
    if let Some(out) = out {
        export_corpus(&corpus, out, InputFormat::Jsonl).map_err(CliError::data)?;
    }
    if let Some(path) = rejections {
        write_rejections(&rejected, path).map_err(CliError::data)?;
    }
    let keywords = keyword_distribution(&corpus).ok();
    print_json(&json!({
        "records": corpus.len(),
        "rejected": rejected.len(),
        "corpus_hash": corpus.content_hash(),
        "keyword_distribution": keywords.map(|k| k.into_iter().map(|(s, n)| (s.name(), n)).collect::<std::collections::BTreeMap<_, _>>()),
    }))
}

fn clean(config: &RunConfig, args: &CorpusArgs, out: Option<&Path>, stats: Option<&Path>) -> CliResult {
    let normalization = config.normalization.build().map_err(CliError::usage)?;
    let normalizer = Normalizer::new(normalization).map_err(CliError::usage)?;
    let corpus = load_corpus(config, args)?.corpus;
    let cleaned = clean_corpus(&corpus, &normalizer);
    for (id, tokens) in &cleaned.too_short {
        info!(event = "too_short", headline_id = id, tokens);
    }
    info!(event = "cleaned", kept = cleaned.headlines.len(), dropped = cleaned.too_short.len());
    match out {
        Some(path) => write_clean_jsonl(&cleaned.headlines, path).map_err(CliError::data)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            for h in &cleaned.headlines {
                serde_json::to_writer(&mut stdout, h).map_err(CliError::data)?;
                writeln!(stdout).map_err(CliError::data)?;
            }
        }
    }
    if let Some(path) = stats {
        std::fs::write(path, length_report_csv(&length_stats(&cleaned.headlines))).map_err(CliError::data)?;
    }
    Ok(())
}

fn read_clean(path: &Path) -> CliResult<Vec<CleanHeadline>> {
    read_clean_jsonl(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn classify(config: &RunConfig, name: &str, input: &Path, resume: bool, interval: Option<usize>) -> CliResult {
    let backend_config = config.backend(name).map_err(CliError::usage)?;
    let mut backend = BackendRegistry::with_builtin().build(backend_config).map_err(CliError::usage)?;
    let headlines = read_clean(input)?;
    let cfg = CheckpointConfig { interval: interval.unwrap_or(config.checkpoint.interval), dir: config.checkpoint_dir() };
    let mut pacer = ThreadPacer;
    let summary = if resume {
        resume_from_checkpoint(&mut backend, &headlines, &cfg, &mut pacer, RunControl::default())
    } else {
        run_batch(&mut backend, &headlines, &cfg, &mut pacer, RunControl::default())
    }
    .map_err(|e| match e {
        headline_audit::backends::BatchError::ConfigMismatch { .. } => CliError::usage(e),
        other => CliError::data(other),
    })?;
    print_json(&json!({
        "backend": name,
        "outcomes": summary.outcomes_path,
        "processed": summary.processed,
        "reconciled": summary.reconciled,
        "checkpoints": summary.checkpoints,
        "error_indices": summary.error_indices,
        "transport_error_indices": summary.transport_error_indices,
        "config_hash": summary.checkpoint.config_hash,
    }))?;
    if !summary.transport_error_indices.is_empty() {
        return Err(CliError::backend(format!(
            "{} headline(s) failed with transport errors, first at index {}",
            summary.transport_error_indices.len(),
            summary.transport_error_indices[0]
        )));
    }
    Ok(())
}

fn runs_dir(config: &RunConfig, runs: Option<PathBuf>) -> PathBuf {
    runs.unwrap_or_else(|| config.checkpoint_dir())
}

fn load_outcomes(runs: &Path, name: &str) -> CliResult<MemberOutcomes> {
    let path = headline_audit::backends::outcomes_path(runs, name);
    let outcomes = read_outcomes_jsonl(&path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(MemberOutcomes { name: name.to_string(), outcomes })
}

fn build_labeling(config: &RunConfig, members: &[String], runs: &Path) -> CliResult<EnsembleLabeling> {
    let outcomes = members.iter().map(|m| load_outcomes(runs, m)).collect::<CliResult<Vec<_>>>()?;
    build_ensemble_labels(&outcomes, &config.ensemble.tie_policy).map_err(CliError::data)
}

fn ensemble(config: &RunConfig, members: Vec<String>, runs: Option<PathBuf>, out: Option<PathBuf>) -> CliResult {
    let members = if members.is_empty() { config.ensemble.members.clone() } else { members };
    if members.is_empty() {
        return Err(CliError::usage("no ensemble members (use --members or ensemble.members)"));
    }
    let labeling = build_labeling(config, &members, &runs_dir(config, runs))?;
    let out = out.unwrap_or_else(|| config.output_dir.join("ensemble.jsonl"));
    if let Some(parent) = out.parent() {
        std::fs::create_dir_all(parent).map_err(CliError::data)?;
    }
    write_ensemble_jsonl(&labeling, &out).map_err(CliError::data)?;
    let dist = labeling.distribution().map_err(CliError::data)?;
    print_json(&json!({
        "name": config.ensemble.name,
        "members": labeling.member_names,
        "votes": labeling.votes.len(),
        "excluded": labeling.excluded.len(),
        "ties": labeling.tie_count(),
        "tie_rate": labeling.tie_rate(),
        "distribution": dist,
        "out": out,
        "config_hash": config.hash(),
    }))
}

fn discover_models(runs: &Path) -> CliResult<Vec<String>> {
    let mut names = Vec::new();
    let entries = std::fs::read_dir(runs).map_err(|e| CliError::data(format!("{}: {e}", runs.display())))?;
    for entry in entries {
        let name = entry.map_err(CliError::data)?.file_name().to_string_lossy().into_owned();
        if let Some(model) = name.strip_suffix(".outcomes.jsonl") {
            names.push(model.to_string());
        }
    }
    names.sort();
    Ok(names)
}

fn build_report(config: &RunConfig, args: &ModelArgs) -> CliResult<AuditReport> {
    let runs = runs_dir(config, args.runs.clone());
    let mut names = if !args.models.is_empty() {
        args.models.clone()
    } else if !config.backends.is_empty() {
        config.backends.iter().map(|b| b.name.clone()).collect()
    } else {
        discover_models(&runs)?
    };
    for m in &config.ensemble.members {
        if !names.contains(m) {
            names.push(m.clone());
        }
    }
    if names.is_empty() {
        return Err(CliError::usage(format!("no models to report on in {}", runs.display())));
    }
    let models = names.iter().map(|n| load_outcomes(&runs, n)).collect::<CliResult<Vec<_>>>()?;
    let corpus_hash = match &args.input {
        Some(p) => Some(json_hash(&read_clean(p)?)),
        None => None,
    };
    let options = ReportOptions {
        order: config.metrics.order.clone(),
        vs_scale: config.metrics.vs_scale,
        vs_include_benchmark: config.metrics.vs_include_benchmark,
        corpus_hash,
        config_hash: Some(config.hash()),
    };
    let labeling;
    let benchmark = match (&args.benchmark, config.ensemble.members.is_empty()) {
        (Some(name), _) => Benchmark::Model(name),
        (None, false) => {
            labeling = build_labeling(config, &config.ensemble.members, &runs)?;
            Benchmark::Ensemble { name: &config.ensemble.name, labeling: &labeling }
        }
        (None, true) => return Err(CliError::usage("no benchmark: configure ensemble.members or pass --benchmark")),
    };
    build_audit_report(&models, benchmark, &options).map_err(CliError::data)
}

fn write_all_formats(report: &AuditReport, out: &Path, headlines: Option<&[CleanHeadline]>) -> CliResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    written.extend(export_report(report, ReportFormat::Json, &out.join("report.json")).map_err(CliError::data)?);
    written.extend(export_report(report, ReportFormat::Markdown, &out.join("report.md")).map_err(CliError::data)?);
    written.extend(export_report(report, ReportFormat::Csv, &out.join("tables")).map_err(CliError::data)?);
    written.extend(emit_plot_data(headlines.unwrap_or(&[]), Some(report), &out.join("plots")).map_err(CliError::data)?);
    Ok(written)
}

fn report(config: &RunConfig, args: &ModelArgs, out: Option<PathBuf>, clean: Option<PathBuf>) -> CliResult {
    let report = build_report(config, args)?;
    let out = out.unwrap_or_else(|| config.output_dir.join("report"));
    let headlines = match &clean {
        Some(p) => Some(read_clean(p)?),
        None => None,
    };
    let written = write_all_formats(&report, &out, headlines.as_deref())?;
    print_json(&json!({ "files": written }))
}

fn simulate(config: &RunConfig, seed: u64, n: usize, out: Option<PathBuf>) -> CliResult {
    let out = out.unwrap_or_else(|| config.output_dir.join("simulate"));
    let runs = out.join("runs");
    let headlines = synthetic_headlines(n, seed);
    write_clean_jsonl(&headlines, &out_file(&out, "headlines.jsonl")?).map_err(CliError::data)?;
    let registry = BackendRegistry::with_builtin();
    let cfg = CheckpointConfig { interval: config.checkpoint.interval, dir: runs.clone() };
    let mut models = Vec::new();
    for backend_config in reference_backends(seed) {
        let mut backend = registry.build(&backend_config).map_err(CliError::usage)?;
        let summary = run_batch(&mut backend, &headlines, &cfg, &mut ThreadPacer, RunControl::default())
            .map_err(CliError::data)?;
        let outcomes = read_outcomes_jsonl(&summary.outcomes_path).map_err(CliError::data)?;
        models.push(MemberOutcomes { name: backend_config.name.clone(), outcomes });
    }
    let options = ReportOptions {
        order: Vec::new(),
        vs_scale: config.metrics.vs_scale,
        vs_include_benchmark: config.metrics.vs_include_benchmark,
        corpus_hash: Some(json_hash(&headlines)),
        config_hash: Some(json_hash(&json!({ "seed": seed, "n": n, "run": config.hash() }))),
    };
    let report = build_audit_report(&models, Benchmark::Model(BENCHMARK), &options).map_err(CliError::data)?;
    write_all_formats(&report, &out.join("report"), Some(&headlines))?;
    print_json(&json!({
        "out": out,
        "aggregate": report.aggregate_table,
        "js_vs_benchmark": report.js_table,
        "variance_score": report.variance_table,
    }))
}

fn out_file(dir: &Path, name: &str) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::data(format!("{}: {e}", dir.display())))?;
    Ok(dir.join(name))
}

fn verify_paper(as_json: bool) -> CliResult {
    let checks = verify_published_tables();
    if as_json {
        print_json(&checks)?;
    } else {
        let mut stdout = std::io::stdout().lock();
        for c in &checks {
            writeln!(stdout, "{}", c.line()).map_err(CliError::data)?;
        }
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    if failed > 0 {
        return Err(CliError::data(format!("{failed} of {} checks failed", checks.len())));
    }
    Ok(())
}
