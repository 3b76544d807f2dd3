//! Checkpointed batch translation of a whole corpus.
//!
//! Layout of a run directory:
//!
//! ```text
//! runs/<run_id>/
//!   checkpoint.json      terminal record (atomic replace)
//!   checkpoint.jsonl     append-only log of completed jobs
//!   results/..           content-addressed job results
//!   debug.jsonl          one record per provider attempt
//!   review_queue.jsonl   items awaiting human review
//!   reviewed.jsonl       optional, `{"key": ...}` lines accepting queued items
//!   out/<stem>.<lang>.json
//!   manifest.json
//! ```

pub mod checkpoint;
mod toxicity;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::corpus::{
    output_file_name, parse_dataset_from_reader, write_dataset, AssistantPayload, CorpusError, Sample,
};
use crate::hashing::sha256_hex;
use crate::language::LanguageCode;
use crate::prompt_eval::{render_prompt, PreambleTemplate, PromptError};
use crate::translation::{
    request_id, translate_with_verification, AttemptOutcome, AttemptRecord, TranslationError, TranslationProvider,
    ValidationIssue, Verdict, VerificationConfig,
};
use checkpoint::{load_result, store_result, CheckpointEntry, CheckpointStore, EntryStatus};

pub use toxicity::{toxicity_stage, BlocklistFilter, ContentFilter, FilterDecision};

pub const OUT_DIR: &str = "out";
pub const DEBUG_LOG: &str = "debug.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REVIEW_QUEUE: &str = "review_queue.jsonl";
pub const REVIEWED_FILE: &str = "reviewed.jsonl";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("run directory {0} already holds a checkpoint; use resume")]
    RunExists(PathBuf),
    #[error("no checkpoint in {0}")]
    NoCheckpoint(PathBuf),
    #[error("configuration changed since the checkpoint was written (checkpoint {expected}, current {found})")]
    ConfigMismatch { expected: String, found: String },
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("run aborted after {completed} jobs; checkpoint is resumable")]
    Aborted { completed: usize },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Everything a run needs besides the corpus and the provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub run_id: String,
    pub seed: u64,
    pub targets: Vec<LanguageCode>,
    pub preamble: PreambleTemplate,
    pub verification: VerificationConfig,
    pub parallelism: usize,
    pub checkpoint_every: usize,
    pub dataset_stem: String,
    /// Further settings that must not change across a resume, such as the
    /// provider and blocklist.
    pub fingerprint: Value,
}

impl RunSpec {
    pub fn new(run_id: impl Into<String>, targets: Vec<LanguageCode>) -> Self {
        RunSpec {
            run_id: run_id.into(),
            seed: 0,
            targets,
            preamble: PreambleTemplate::builtin(),
            verification: VerificationConfig::default(),
            parallelism: 8,
            checkpoint_every: 100,
            dataset_stem: "dataset".into(),
            fingerprint: Value::Null,
        }
    }

    /// Hash of the settings that determine outputs. Parallelism, checkpoint
    /// cadence and retry policy are excluded so they can change on resume.
    pub fn config_hash(&self) -> String {
        let canonical = json!({
            "run_id": self.run_id,
            "seed": self.seed,
            "targets": self.targets,
            "preamble": self.preamble,
            "threshold": self.verification.threshold,
            "validation": self.verification.validation,
            "dataset_stem": self.dataset_stem,
            "fingerprint": self.fingerprint,
        });
        sha256_hex(&serde_json::to_vec(&canonical).expect("canonical config serializes"))
    }

    fn validate(&self) -> Result<(), PipelineError> {
        if self.parallelism == 0 {
            return Err(PipelineError::InvalidPlan("parallelism must be at least 1".into()));
        }
        if self.checkpoint_every == 0 {
            return Err(PipelineError::InvalidPlan("checkpoint_every must be at least 1".into()));
        }
        self.preamble.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Pending,
    InFlight,
    Done,
    Failed,
    Flagged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    /// Request id of the forward translation.
    pub job_id: String,
    pub payload: AssistantPayload,
    pub target: LanguageCode,
    pub status: JobStatus,
    pub attempts: u32,
}

/// One job per (assistant payload, target), ordered by sample, turn, then
/// language.
pub fn plan_jobs(samples: &[Sample], targets: &[LanguageCode], preamble_id: u32) -> Result<Vec<Job>, PipelineError> {
    let mut seen = HashSet::new();
    for t in targets {
        if t.is_source() {
            return Err(PipelineError::InvalidPlan("English cannot be a translation target".into()));
        }
        if !seen.insert(t) {
            return Err(PipelineError::InvalidPlan(format!("target {t} listed twice")));
        }
    }
    let english = LanguageCode::english();
    let mut jobs = Vec::new();
    for payload in crate::corpus::extract_assistant_payloads(samples) {
        for target in targets {
            jobs.push(Job {
                job_id: request_id(&payload.text, &english, target, preamble_id),
                payload: payload.clone(),
                target: target.clone(),
                status: JobStatus::Pending,
                attempts: 0,
            });
        }
    }
    Ok(jobs)
}

/// Stored outcome of one unique job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobResult {
    pub job_id: String,
    pub target: LanguageCode,
    pub preamble_id: u32,
    pub source_text: String,
    pub status: JobStatus,
    /// Forward-leg attempts.
    pub attempts: u32,
    pub translation: Option<String>,
    pub back_translation: Option<String>,
    pub gate_bleu: Option<f64>,
    pub issues: Vec<ValidationIssue>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebugRecord {
    pub job_id: String,
    pub at: String,
    #[serde(flatten)]
    pub attempt: AttemptRecord,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Stop after this many jobs complete in this invocation, leaving a
    /// resumable checkpoint. Used to exercise crash recovery.
    pub abort_after: Option<usize>,
    /// Keep results in memory only; no checkpoint or result files.
    pub disable_checkpoints: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub job_id: String,
    pub sample_id: String,
    pub turn_index: usize,
    pub language: LanguageCode,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReviewItem {
    Translation {
        key: String,
        sample_id: String,
        turn_index: usize,
        language: LanguageCode,
        gate_bleu: Option<f64>,
        issues: Vec<ValidationIssue>,
        error: Option<String>,
    },
    Content {
        key: String,
        sample_id: String,
        filter: String,
    },
}

impl ReviewItem {
    pub fn key(&self) -> &str {
        match self {
            ReviewItem::Translation { key, .. } | ReviewItem::Content { key, .. } => key,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProviderStats {
    pub name: String,
    pub attempts: usize,
    pub failed_attempts: usize,
    pub errors_by_kind: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Relative to the run directory.
    pub path: String,
    pub records: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub config_hash: String,
    pub seed: u64,
    pub preamble_id: u32,
    pub threshold: f64,
    pub parallelism: usize,
    /// Samples surviving the content filter.
    pub source_samples: usize,
    pub dropped_samples: Vec<String>,
    pub planned_jobs: usize,
    pub unique_jobs: usize,
    pub executed_jobs: usize,
    pub resumed_jobs: usize,
    pub done: usize,
    pub failed: usize,
    pub flagged: usize,
    /// Records per output language, English included.
    pub counts: BTreeMap<LanguageCode, usize>,
    pub failures: Vec<FailureRecord>,
    pub review_queue: Vec<ReviewItem>,
    pub balanced: bool,
    pub wall_time_ms: f64,
    pub provider: ProviderStats,
    pub outputs: BTreeMap<LanguageCode, OutputFile>,
}

impl RunManifest {
    /// done + failed + flagged = planned.
    pub fn conserved(&self) -> bool {
        self.done + self.failed + self.flagged == self.planned_jobs
    }

    /// Equal apart from timing, execution counters and provider statistics.
    pub fn same_outcome(&self, other: &RunManifest) -> bool {
        let strip = |m: &RunManifest| RunManifest {
            parallelism: 0,
            executed_jobs: 0,
            resumed_jobs: 0,
            wall_time_ms: 0.0,
            provider: ProviderStats::default(),
            ..m.clone()
        };
        strip(self) == strip(other)
    }
}

pub fn load_manifest(run_dir: &Path) -> Result<RunManifest, PipelineError> {
    let path = run_dir.join(MANIFEST_FILE);
    let bytes = fs::read(&path).map_err(io_err(&path))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| PipelineError::Io { path, source: std::io::Error::new(std::io::ErrorKind::InvalidData, e) })
}

/// Starts a fresh run. Fails if `run_dir` already holds a checkpoint.
pub fn run(
    spec: &RunSpec,
    samples: &[Sample],
    provider: &dyn TranslationProvider,
    filter: Option<&dyn ContentFilter>,
    run_dir: &Path,
    options: &RunOptions,
) -> Result<RunManifest, PipelineError> {
    spec.validate()?;
    fs::create_dir_all(run_dir).map_err(io_err(run_dir))?;
    let store = if options.disable_checkpoints {
        None
    } else {
        Some(CheckpointStore::create(run_dir, &spec.run_id, &spec.config_hash())?)
    };
    execute(spec, samples, provider, filter, run_dir, options, store, Vec::new())
}

/// Continues a run from its checkpoint. Jobs already recorded are not
/// re-executed; with a deterministic provider the outputs are identical to
/// an uninterrupted run.
pub fn resume(
    spec: &RunSpec,
    samples: &[Sample],
    provider: &dyn TranslationProvider,
    filter: Option<&dyn ContentFilter>,
    run_dir: &Path,
    options: &RunOptions,
) -> Result<RunManifest, PipelineError> {
    spec.validate()?;
    let (store, entries) = CheckpointStore::open(run_dir, &spec.config_hash())?;
    if store.record().run_id != spec.run_id {
        return Err(PipelineError::ConfigMismatch {
            expected: store.record().run_id.clone(),
            found: spec.run_id.clone(),
        });
    }
    execute(
        spec,
        samples,
        provider,
        filter,
        run_dir,
        &RunOptions { disable_checkpoints: false, ..options.clone() },
        Some(store),
        entries,
    )
}

enum Msg {
    Attempt(DebugRecord),
    Finished(Result<(JobResult, Option<String>), PipelineError>),
}

fn execute_job(
    job: &Job,
    spec: &RunSpec,
    provider: &dyn TranslationProvider,
    observer: &mut dyn FnMut(AttemptRecord),
) -> JobResult {
    let mut result = JobResult {
        job_id: job.job_id.clone(),
        target: job.target.clone(),
        preamble_id: spec.preamble.id,
        source_text: job.payload.text.clone(),
        status: JobStatus::Failed,
        attempts: 0,
        translation: None,
        back_translation: None,
        gate_bleu: None,
        issues: Vec::new(),
        error: None,
    };
    let prompt = match render_prompt(&spec.preamble, &job.target, &job.payload.text) {
        Ok(p) => p,
        Err(e) => {
            result.error = Some(e.to_string());
            return result;
        }
    };
    let mut forward_attempts = 0;
    let outcome = translate_with_verification(
        &job.payload.text,
        &job.target,
        provider,
        spec.preamble.id,
        &prompt,
        &spec.verification,
        &mut |record: AttemptRecord| {
            if record.target == job.target.as_str() {
                forward_attempts += 1;
            }
            observer(record);
        },
    );
    result.attempts = forward_attempts;
    match outcome {
        Ok(v) => {
            result.status = if v.verdict == Verdict::Accepted { JobStatus::Done } else { JobStatus::Flagged };
            result.translation = Some(v.forward.text);
            result.back_translation = Some(v.back.text);
            result.gate_bleu = Some(v.gate_bleu);
            result.issues = v.issues;
        }
        Err(TranslationError::VerificationUnavailable { forward, cause }) => {
            result.status = JobStatus::Flagged;
            result.translation = Some(forward.text);
            result.error = Some(format!("back-translation failed: {cause}"));
        }
        Err(e) => result.error = Some(e.to_string()),
    }
    result
}

fn load_reviewed(run_dir: &Path) -> Result<HashSet<String>, PipelineError> {
    let path = run_dir.join(REVIEWED_FILE);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(HashSet::new()),
        Err(e) => return Err(io_err(&path)(e)),
    };
    #[derive(Deserialize)]
    struct Line {
        key: String,
    }
    let mut keys = HashSet::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let parsed: Line = serde_json::from_str(line).map_err(|e| PipelineError::Io {
            path: path.clone(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1)),
        })?;
        keys.insert(parsed.key);
    }
    Ok(keys)
}

fn content_key(sample_id: &str) -> String {
    format!("sample:{sample_id}")
}

#[allow(clippy::too_many_arguments)]
fn execute(
    spec: &RunSpec,
    samples: &[Sample],
    provider: &dyn TranslationProvider,
    filter: Option<&dyn ContentFilter>,
    run_dir: &Path,
    options: &RunOptions,
    mut store: Option<CheckpointStore>,
    entries: Vec<CheckpointEntry>,
) -> Result<RunManifest, PipelineError> {
    let started = Instant::now();
    let checkpointing = store.is_some();

    let mut kept = Vec::with_capacity(samples.len());
    let mut dropped = Vec::new();
    let mut content_flagged = Vec::new();
    for s in samples {
        match filter.map_or(FilterDecision::Keep, |f| toxicity_stage(s, f)) {
            FilterDecision::Keep => kept.push(s.clone()),
            FilterDecision::Flag => {
                content_flagged.push(s.id.clone());
                kept.push(s.clone());
            }
            FilterDecision::Drop => dropped.push(s.id.clone()),
        }
    }

    let mut jobs = plan_jobs(&kept, &spec.targets, spec.preamble.id)?;
    let mut results: HashMap<String, JobResult> = HashMap::new();
    for e in &entries {
        let bytes = load_result(run_dir, &e.job_id, &e.result_hash)?;
        let r: JobResult = serde_json::from_slice(&bytes)
            .map_err(|err| PipelineError::CorruptCheckpoint(format!("result for {}: {err}", e.job_id)))?;
        results.insert(e.job_id.clone(), r);
    }
    let resumed_jobs = results.len();

    let mut seen = HashSet::new();
    let unique: Vec<&Job> = jobs.iter().filter(|j| seen.insert(j.job_id.as_str())).collect();
    let unique_jobs = unique.len();
    let pending: Vec<&Job> = unique.into_iter().filter(|j| !results.contains_key(&j.job_id)).collect();

    let debug_path = run_dir.join(DEBUG_LOG);
    let mut debug =
        BufWriter::new(OpenOptions::new().create(true).append(true).open(&debug_path).map_err(io_err(&debug_path))?);
    let mut stats = ProviderStats { name: provider.name().to_string(), ..Default::default() };
    let mut executed_jobs = 0usize;
    let mut first_error: Option<PipelineError> = None;
    let mut aborted = false;

    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let workers = spec.parallelism.min(pending.len());
    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<Msg>();
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, stop, pending) = (&next, &stop, &pending);
            scope.spawn(move || loop {
                if stop.load(Ordering::Relaxed) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = pending.get(i) else { break };
                let result = execute_job(job, spec, provider, &mut |attempt| {
                    let _ = tx.send(Msg::Attempt(DebugRecord { job_id: job.job_id.clone(), at: now(), attempt }));
                });
                let stored = if checkpointing && result.status != JobStatus::Failed {
                    let bytes = serde_json::to_vec(&result).expect("job result serializes");
                    store_result(run_dir, &result.job_id, &bytes).map(Some)
                } else {
                    Ok(None)
                };
                let _ = tx.send(Msg::Finished(stored.map(|hash| (result, hash))));
            });
        }
        drop(tx);

        for msg in rx {
            match msg {
                Msg::Attempt(record) => {
                    stats.attempts += 1;
                    if let AttemptOutcome::Error { kind, .. } = &record.attempt.outcome {
                        stats.failed_attempts += 1;
                        *stats.errors_by_kind.entry(kind.clone()).or_default() += 1;
                    }
                    let line = serde_json::to_string(&record).expect("debug record serializes");
                    if let Err(e) = writeln!(debug, "{line}") {
                        first_error.get_or_insert(io_err(&debug_path)(e));
                        stop.store(true, Ordering::Relaxed);
                    }
                }
                Msg::Finished(_) if aborted || first_error.is_some() => {}
                Msg::Finished(Err(e)) => {
                    first_error = Some(e);
                    stop.store(true, Ordering::Relaxed);
                }
                Msg::Finished(Ok((result, hash))) => {
                    if let (Some(store), Some(hash)) = (store.as_mut(), hash) {
                        let entry = CheckpointEntry {
                            job_id: result.job_id.clone(),
                            status: if result.status == JobStatus::Flagged {
                                EntryStatus::Flagged
                            } else {
                                EntryStatus::Done
                            },
                            result_hash: hash,
                            at: now(),
                        };
                        let written = store.append(&entry).and_then(|_| {
                            if store.unflushed() >= spec.checkpoint_every {
                                store.flush()
                            } else {
                                Ok(())
                            }
                        });
                        if let Err(e) = written {
                            first_error = Some(e);
                            stop.store(true, Ordering::Relaxed);
                            continue;
                        }
                    }
                    results.insert(result.job_id.clone(), result);
                    executed_jobs += 1;
                    if options.abort_after == Some(executed_jobs) {
                        aborted = true;
                        stop.store(true, Ordering::Relaxed);
                    }
                }
            }
        }
    });

    debug.flush().map_err(io_err(&debug_path))?;
    if let Some(store) = store.as_mut() {
        store.flush()?;
    }
    if let Some(e) = first_error {
        return Err(e);
    }
    if aborted {
        return Err(PipelineError::Aborted { completed: executed_jobs });
    }

    // assemble outputs
    let reviewed = load_reviewed(run_dir)?;
    let mut failures = Vec::new();
    let mut review_queue = Vec::new();
    let (mut done, mut failed, mut flagged) = (0, 0, 0);
    let mut accepted: HashMap<(&str, usize, &LanguageCode), &str> = HashMap::new();
    for job in jobs.iter_mut() {
        let r = &results[&job.job_id];
        job.attempts = r.attempts;
        job.status = match r.status {
            JobStatus::Flagged if reviewed.contains(&job.job_id) => JobStatus::Done,
            s => s,
        };
    }
    for job in &jobs {
        let r = &results[&job.job_id];
        match job.status {
            JobStatus::Done => done += 1,
            JobStatus::Flagged => flagged += 1,
            _ => failed += 1,
        }
        match job.status {
            JobStatus::Done => {
                let text = r.translation.as_deref().expect("done job has a translation");
                accepted.insert((job.payload.sample_id.as_str(), job.payload.turn_index, &job.target), text);
            }
            JobStatus::Flagged => review_queue.push(ReviewItem::Translation {
                key: job.job_id.clone(),
                sample_id: job.payload.sample_id.clone(),
                turn_index: job.payload.turn_index,
                language: job.target.clone(),
                gate_bleu: r.gate_bleu,
                issues: r.issues.clone(),
                error: r.error.clone(),
            }),
            _ => failures.push(FailureRecord {
                job_id: job.job_id.clone(),
                sample_id: job.payload.sample_id.clone(),
                turn_index: job.payload.turn_index,
                language: job.target.clone(),
                error: r.error.clone().unwrap_or_default(),
            }),
        }
    }
    let mut held: HashSet<&str> = HashSet::new();
    for id in &content_flagged {
        let key = content_key(id);
        if !reviewed.contains(&key) {
            held.insert(id.as_str());
            review_queue.push(ReviewItem::Content {
                key,
                sample_id: id.clone(),
                filter: filter.map(|f| f.name().to_string()).unwrap_or_default(),
            });
        }
    }

    let out_dir = run_dir.join(OUT_DIR);
    fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
    let english = LanguageCode::english();
    let mut counts = BTreeMap::new();
    let mut outputs = BTreeMap::new();
    for lang in std::iter::once(&english).chain(spec.targets.iter()) {
        let mut out = Vec::new();
        'sample: for s in kept.iter().filter(|s| !held.contains(s.id.as_str())) {
            if lang.is_source() {
                out.push(s.clone());
                continue;
            }
            let mut t = s.clone();
            t.language = lang.clone();
            for (i, turn) in s.assistant_turns() {
                match accepted.get(&(s.id.as_str(), i, lang)) {
                    Some(text) => t.turns[i] = turn.with_text(text.to_string()),
                    None => continue 'sample,
                }
            }
            out.push(t);
        }
        let mut bytes = Vec::new();
        let records = write_dataset(&out, lang, &mut bytes)?;
        let name = output_file_name(&spec.dataset_stem, lang);
        let path = out_dir.join(&name);
        fs::write(&path, &bytes).map_err(io_err(&path))?;
        counts.insert(lang.clone(), records);
        outputs.insert(
            lang.clone(),
            OutputFile { path: format!("{OUT_DIR}/{name}"), records, sha256: sha256_hex(&bytes) },
        );
    }

    let queue_path = run_dir.join(REVIEW_QUEUE);
    let mut queue_text = String::new();
    for item in &review_queue {
        queue_text.push_str(&serde_json::to_string(item).expect("review item serializes"));
        queue_text.push('\n');
    }
    fs::write(&queue_path, queue_text).map_err(io_err(&queue_path))?;

    let source_samples = kept.len();
    let manifest = RunManifest {
        run_id: spec.run_id.clone(),
        config_hash: spec.config_hash(),
        seed: spec.seed,
        preamble_id: spec.preamble.id,
        threshold: spec.verification.threshold,
        parallelism: spec.parallelism,
        source_samples,
        dropped_samples: dropped,
        planned_jobs: jobs.len(),
        unique_jobs,
        executed_jobs,
        resumed_jobs,
        done,
        failed,
        flagged,
        balanced: counts.values().all(|&c| c == source_samples),
        counts,
        failures,
        review_queue,
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        provider: stats,
        outputs,
    };
    // A resume that changes no outcome leaves the previous manifest in place.
    if let Ok(previous) = load_manifest(run_dir) {
        if previous.same_outcome(&manifest) {
            return Ok(previous);
        }
    }
    let manifest_path = run_dir.join(MANIFEST_FILE);
    fs::write(&manifest_path, serde_json::to_vec_pretty(&manifest).expect("manifest serializes"))
        .map_err(io_err(&manifest_path))?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shortfall {
    pub language: LanguageCode,
    pub count: usize,
    pub deficit: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub expected: usize,
    pub counts: BTreeMap<LanguageCode, usize>,
    pub shortfalls: Vec<Shortfall>,
    pub pass: bool,
}

/// Passes iff every language holds exactly the source sample count.
pub fn verify_distribution(manifest: &RunManifest) -> BalanceReport {
    let expected = manifest.source_samples;
    let shortfalls: Vec<_> = manifest
        .counts
        .iter()
        .filter(|(_, &c)| c != expected)
        .map(|(l, &c)| Shortfall { language: l.clone(), count: c, deficit: expected as i64 - c as i64 })
        .collect();
    BalanceReport { expected, counts: manifest.counts.clone(), pass: shortfalls.is_empty(), shortfalls }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileCheck {
    pub language: LanguageCode,
    pub path: String,
    pub records: Option<usize>,
    pub hash_ok: bool,
    pub count_ok: bool,
    pub round_trip_ok: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub balance: BalanceReport,
    pub files: Vec<FileCheck>,
    pub ok: bool,
}

/// Re-reads every output file of a finished run: hash against the
/// manifest, record count, and parse/write round trip.
pub fn verify_run(run_dir: &Path) -> Result<VerifyReport, PipelineError> {
    let manifest = load_manifest(run_dir)?;
    let balance = verify_distribution(&manifest);
    let mut files = Vec::new();
    for (lang, out) in &manifest.outputs {
        let mut check = FileCheck {
            language: lang.clone(),
            path: out.path.clone(),
            records: None,
            hash_ok: false,
            count_ok: false,
            round_trip_ok: false,
            error: None,
        };
        match fs::read(run_dir.join(&out.path)) {
            Err(e) => check.error = Some(e.to_string()),
            Ok(bytes) => {
                check.hash_ok = sha256_hex(&bytes) == out.sha256;
                match parse_dataset_from_reader(bytes.as_slice(), lang) {
                    Err(e) => check.error = Some(e.to_string()),
                    Ok(samples) => {
                        check.records = Some(samples.len());
                        check.count_ok = Some(&samples.len()) == manifest.counts.get(lang);
                        let mut again = Vec::new();
                        check.round_trip_ok = write_dataset(&samples, lang, &mut again).is_ok() && again == bytes;
                    }
                }
            }
        }
        files.push(check);
    }
    let ok = balance.pass
        && manifest.failures.is_empty()
        && files.iter().all(|f| f.hash_ok && f.count_ok && f.round_trip_ok);
    Ok(VerifyReport { balance, files, ok })
}

#[cfg(test)]
mod tests;
