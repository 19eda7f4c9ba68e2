use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tracing::{info, warn};

use super::transport::Pacer;
use super::{Backend, ClassificationOutcome};
use crate::hashing::json_hash;
use crate::normalize::CleanHeadline;
use crate::protocol::TEMPLATE_VERSION;

#[derive(Debug, thiserror::Error)]
pub enum BatchError {
    #[error("checkpoint storage {path}: {source}")]
    Storage { path: PathBuf, source: std::io::Error },
    #[error("checkpoint {path} is unreadable: {reason}")]
    CorruptCheckpoint { path: PathBuf, reason: String },
    #[error("config mismatch: checkpoint was written for {found}, current run is {expected}")]
    ConfigMismatch { expected: String, found: String },
    #[error("outcomes file {path} is shorter than the checkpoint offset {offset}")]
    TruncatedOutcomes { path: PathBuf, offset: u64 },
}

fn storage(path: &Path) -> impl FnOnce(std::io::Error) -> BatchError + '_ {
    move |source| BatchError::Storage { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointConfig {
    /// Outcomes between checkpoints.
    pub interval: usize,
    pub dir: PathBuf,
}

impl CheckpointConfig {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { interval: 300, dir: dir.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub run_id: String,
    pub backend_name: String,
    /// -1 before any headline has completed.
    pub last_completed_index: i64,
    /// Byte length of the outcomes file covered by this checkpoint.
    pub outcomes_offset: u64,
    pub config_hash: String,
}

/// Test hook: stop before processing `halt_before` as if the process had been killed.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunControl {
    pub halt_before: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchSummary {
    pub outcomes_path: PathBuf,
    /// Indices at which a checkpoint was written during this call.
    pub checkpoints: Vec<i64>,
    /// Headlines classified during this call.
    pub processed: usize,
    /// Outcomes found past the checkpoint offset and kept on resume.
    pub reconciled: usize,
    pub error_indices: Vec<usize>,
    pub transport_error_indices: Vec<usize>,
    pub halted: bool,
    pub checkpoint: Checkpoint,
}

pub fn outcomes_path(dir: &Path, backend_name: &str) -> PathBuf {
    dir.join(format!("{backend_name}.outcomes.jsonl"))
}

pub fn checkpoint_path(dir: &Path, backend_name: &str) -> PathBuf {
    dir.join(format!("{backend_name}.checkpoint.json"))
}

/// Hash binding a run to its backend config, corpus and prompt templates.
pub fn batch_config_hash(backend: &Backend, headlines: &[CleanHeadline]) -> String {
    json_hash(&serde_json::json!({
        "backend": backend.config(),
        "corpus": json_hash(&headlines),
        "templates": TEMPLATE_VERSION,
    }))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint, BatchError> {
    let text = std::fs::read_to_string(path).map_err(storage(path))?;
    serde_json::from_str(&text)
        .map_err(|e| BatchError::CorruptCheckpoint { path: path.to_path_buf(), reason: e.to_string() })
}

fn write_checkpoint(dir: &Path, cp: &Checkpoint) -> Result<(), BatchError> {
    let path = checkpoint_path(dir, &cp.backend_name);
    let tmp = path.with_extension("json.tmp");
    let mut body = serde_json::to_vec_pretty(cp).expect("checkpoint serializes");
    body.push(b'\n');
    {
        let mut f = File::create(&tmp).map_err(storage(&tmp))?;
        f.write_all(&body).map_err(storage(&tmp))?;
        f.sync_all().map_err(storage(&tmp))?;
    }
    std::fs::rename(&tmp, &path).map_err(storage(&path))
}

struct Writer {
    path: PathBuf,
    out: BufWriter<File>,
    offset: u64,
}

impl Writer {
    fn append(&mut self, outcome: &ClassificationOutcome) -> Result<(), BatchError> {
        let mut line = serde_json::to_vec(outcome).expect("outcome serializes");
        line.push(b'\n');
        self.out.write_all(&line).map_err(storage(&self.path))?;
        self.offset += line.len() as u64;
        Ok(())
    }

    fn sync(&mut self) -> Result<(), BatchError> {
        self.out.flush().map_err(storage(&self.path))?;
        self.out.get_ref().sync_data().map_err(storage(&self.path))
    }
}

/// Classifies `headlines` in order, appending one outcome per headline to
/// `<dir>/<backend>.outcomes.jsonl` and checkpointing every `interval` outcomes.
/// Any previous outcomes file for the backend is replaced.
pub fn run_batch(
    backend: &mut Backend,
    headlines: &[CleanHeadline],
    cfg: &CheckpointConfig,
    pacer: &mut dyn Pacer,
    control: RunControl,
) -> Result<BatchSummary, BatchError> {
    std::fs::create_dir_all(&cfg.dir).map_err(storage(&cfg.dir))?;
    let config_hash = batch_config_hash(backend, headlines);
    let path = outcomes_path(&cfg.dir, backend.name());
    let file = File::create(&path).map_err(storage(&path))?;
    let writer = Writer { path, out: BufWriter::new(file), offset: 0 };
    let start = Checkpoint {
        run_id: config_hash[..16].to_string(),
        backend_name: backend.name().to_string(),
        last_completed_index: -1,
        outcomes_offset: 0,
        config_hash,
    };
    info!(event = "batch_start", backend = backend.name(), total = headlines.len());
    process(backend, headlines, cfg, pacer, control, writer, start, 0)
}

/// Continues an interrupted run. Complete outcome lines written after the
/// checkpoint are kept when they match the expected headline order; anything
/// else past that point is truncated and re-classified.
pub fn resume_from_checkpoint(
    backend: &mut Backend,
    headlines: &[CleanHeadline],
    cfg: &CheckpointConfig,
    pacer: &mut dyn Pacer,
    control: RunControl,
) -> Result<BatchSummary, BatchError> {
    let cp = read_checkpoint(&checkpoint_path(&cfg.dir, backend.name()))?;
    let expected = batch_config_hash(backend, headlines);
    if cp.config_hash != expected {
        return Err(BatchError::ConfigMismatch { expected, found: cp.config_hash });
    }
    let path = outcomes_path(&cfg.dir, backend.name());
    let mut file = OpenOptions::new().read(true).write(true).open(&path).map_err(storage(&path))?;
    let len = file.metadata().map_err(storage(&path))?.len();
    if len < cp.outcomes_offset {
        return Err(BatchError::TruncatedOutcomes { path, offset: cp.outcomes_offset });
    }

    let mut tail = Vec::new();
    file.seek(SeekFrom::Start(cp.outcomes_offset)).map_err(storage(&path))?;
    file.read_to_end(&mut tail).map_err(storage(&path))?;
    let mut next = (cp.last_completed_index + 1) as usize;
    let mut kept = 0u64;
    let mut reconciled = 0;
    for line in tail.split_inclusive(|&b| b == b'\n') {
        if !line.ends_with(b"\n") || next >= headlines.len() {
            break;
        }
        match serde_json::from_slice::<ClassificationOutcome>(line) {
            Ok(o) if o.headline_id == headlines[next].id && o.backend_name == backend.name() => {
                kept += line.len() as u64;
                next += 1;
                reconciled += 1;
            }
            _ => break,
        }
    }
    let offset = cp.outcomes_offset + kept;
    if offset < len {
        warn!(event = "outcomes_truncated", path = %path.display(), from = len, to = offset);
    }
    file.set_len(offset).map_err(storage(&path))?;
    file.seek(SeekFrom::Start(offset)).map_err(storage(&path))?;
    info!(event = "batch_resume", backend = backend.name(), from_index = next, reconciled);

    let writer = Writer { path, out: BufWriter::new(file), offset };
    let mut summary = process(backend, headlines, cfg, pacer, control, writer, cp, next)?;
    summary.reconciled = reconciled;
    Ok(summary)
}

#[allow(clippy::too_many_arguments)]
fn process(
    backend: &mut Backend,
    headlines: &[CleanHeadline],
    cfg: &CheckpointConfig,
    pacer: &mut dyn Pacer,
    control: RunControl,
    mut writer: Writer,
    mut checkpoint: Checkpoint,
    start: usize,
) -> Result<BatchSummary, BatchError> {
    let interval = cfg.interval.max(1);
    let mut summary = BatchSummary {
        outcomes_path: writer.path.clone(),
        checkpoints: Vec::new(),
        processed: 0,
        reconciled: 0,
        error_indices: Vec::new(),
        transport_error_indices: Vec::new(),
        halted: false,
        checkpoint: checkpoint.clone(),
    };
    let (mut session, strategy) = backend.session(pacer);

    let save = |writer: &mut Writer, cp: &mut Checkpoint, idx: i64, summary: &mut BatchSummary| {
        writer.sync()?;
        cp.last_completed_index = idx;
        cp.outcomes_offset = writer.offset;
        write_checkpoint(&cfg.dir, cp)?;
        info!(event = "checkpoint", index = idx, offset = writer.offset);
        summary.checkpoints.push(idx);
        Ok::<_, BatchError>(())
    };

    for (index, headline) in headlines.iter().enumerate().skip(start) {
        if control.halt_before == Some(index) {
            writer.sync()?;
            summary.halted = true;
            summary.checkpoint = checkpoint;
            return Ok(summary);
        }
        let outcome = strategy.classify(&mut session, index, headline);
        if let Some(err) = &outcome.error {
            warn!(event = "headline_failed", index, headline_id = headline.id, error = %err);
            summary.error_indices.push(index);
            if outcome.is_transport_error() {
                summary.transport_error_indices.push(index);
            }
        }
        writer.append(&outcome)?;
        summary.processed += 1;
        if (index + 1) % interval == 0 {
            save(&mut writer, &mut checkpoint, index as i64, &mut summary)?;
        }
    }

    let last = headlines.len() as i64 - 1;
    if checkpoint.last_completed_index != last || headlines.is_empty() {
        save(&mut writer, &mut checkpoint, last, &mut summary)?;
    }
    writer.sync()?;
    info!(event = "batch_done", processed = summary.processed, errors = summary.error_indices.len());
    summary.checkpoint = checkpoint;
    Ok(summary)
}
