use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use linguaforge::config::{ConfigError, ProviderSettings, RunConfig};
use linguaforge::corpus::{dataset_stats, extract_assistant_payloads, parse_dataset, CorpusError};
use linguaforge::pipeline::{self, checkpoint, ContentFilter, PipelineError, RunManifest, RunOptions};
use linguaforge::prompt_eval::{
    build_eval_dataset, evaluate_preambles, export_radar_data, radar_csv, select_best_preamble, EvalPrompt, EvalSet,
    PreambleReport, PreambleTemplate, PromptError,
};
use linguaforge::sampling::SelectionManifest;
use linguaforge::translation::mock::{EchoProvider, ReferenceProvider, TaggingProvider};
use linguaforge::translation::{HttpProvider, HttpProviderConfig, RetryPolicy, TranslationProvider};
use linguaforge::{LanguageCode, Sample};
use serde_json::json;

use crate::{EvalArgs, Overrides};

/// Name of the resolved config stored in each run directory.
const STORED_CONFIG: &str = "config.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    Incomplete = 1,
    Usage = 2,
}

pub struct Failure {
    pub status: Status,
    pub error: anyhow::Error,
}

type Outcome = Result<Status, Failure>;

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure { status: Status::Usage, error: error.into() }
}

fn incomplete(error: impl Into<anyhow::Error>) -> Failure {
    Failure { status: Status::Incomplete, error: error.into() }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Aborted { .. } | PipelineError::Io { .. } => incomplete(e),
            _ => usage(e),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        usage(e)
    }
}

impl From<PromptError> for Failure {
    fn from(e: PromptError) -> Self {
        usage(e)
    }
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn print_json(value: &impl serde::Serialize) {
    emit(&(serde_json::to_string_pretty(value).expect("summary serializes") + "\n"));
}

fn load_dataset(path: &Path) -> Result<Vec<Sample>, Failure> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display())).map_err(usage)?;
    parse_dataset(&bytes).map_err(|e: CorpusError| usage(anyhow!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).map_err(incomplete)?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display())).map_err(incomplete)
}

pub fn ingest(path: &Path) -> Outcome {
    let samples = load_dataset(path)?;
    let stats = dataset_stats(&samples);
    log::info!("{} samples, {} assistant turns", stats.samples, stats.assistant_turns);
    print_json(&stats);
    Ok(Status::Success)
}

pub fn sample(input: &Path, k: usize, seed: u64, out: Option<&Path>) -> Outcome {
    let samples = load_dataset(input)?;
    let manifest = SelectionManifest::build(&extract_assistant_payloads(&samples), k, seed);
    log::info!("selected {} of {} candidates", manifest.selected.len(), manifest.candidates);
    match out {
        Some(path) => {
            write_file(path, serde_json::to_vec_pretty(&manifest).expect("manifest serializes"))?;
            print_json(&json!({
                "k": manifest.k,
                "seed": manifest.seed,
                "candidates": manifest.candidates,
                "skipped": manifest.skipped.len(),
                "selected": manifest.selected.iter().map(|s| &s.metrics.sample_id).collect::<Vec<_>>(),
                "out": path,
            }));
        }
        None => print_json(&manifest),
    }
    Ok(Status::Success)
}

fn eval_provider(
    args: &EvalArgs,
    set: &EvalSet,
    prompts: &[EvalPrompt],
) -> Result<Box<dyn TranslationProvider>, Failure> {
    let spec = args.provider.as_str();
    if let Some(id) = spec.strip_prefix("rigged:") {
        let favored: u32 = id.parse().map_err(|_| usage(anyhow!("rigged provider needs a preamble id, got {id:?}")))?;
        let mut provider = ReferenceProvider::new(favored);
        for prompt in prompts {
            for (lang, reference) in set.references.get(&prompt.id).into_iter().flatten() {
                provider.insert(&prompt.text, lang.clone(), reference);
            }
        }
        return Ok(Box::new(provider));
    }
    match spec {
        "echo" => Ok(Box::new(EchoProvider)),
        "tagging" => Ok(Box::new(TaggingProvider)),
        "http" => {
            let mut config = HttpProviderConfig::default();
            if let Some(url) = &args.base_url {
                config.base_url = url.clone();
            }
            if let Some(model) = &args.model {
                config.model = model.clone();
            }
            Ok(Box::new(HttpProvider::from_env(&config).map_err(usage)?))
        }
        other => Err(usage(anyhow!("unknown provider {other:?}; expected echo, tagging, rigged:<id> or http"))),
    }
}

pub fn eval_preambles(args: &EvalArgs) -> Outcome {
    let set = EvalSet::load(&args.pairs)?;
    let prompts = match &args.selection {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(usage)?;
            let manifest: SelectionManifest =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display())).map_err(usage)?;
            EvalPrompt::from_selection(&manifest)
        }
        None => set.prompts.clone(),
    };
    let languages = args.languages.clone().unwrap_or_else(LanguageCode::default_targets);
    let pairs = build_eval_dataset(&prompts, &set.references, &languages)?;
    let preambles = PreambleTemplate::load_dir(&args.preambles_dir)?;
    if preambles.is_empty() {
        return Err(usage(anyhow!("no preamble templates in {}", args.preambles_dir.display())));
    }
    let provider = eval_provider(args, &set, &prompts)?;
    log::info!("scoring {} preambles on {} pairs with {}", preambles.len(), pairs.len(), provider.name());
    let report = evaluate_preambles(&preambles, &pairs, provider.as_ref(), &RetryPolicy::default(), &mut |_| {})?;

    if let Some(path) = &args.report {
        write_file(path, serde_json::to_vec_pretty(&report).expect("report serializes"))?;
    }
    if let Some(path) = &args.export {
        write_file(path, radar_csv(&export_radar_data(&report)?))?;
    }
    let winner = select_best_preamble(&report).ok();
    print_json(&json!({
        "winner": winner,
        "grand_means": report.grand_means,
        "pairs": pairs.len(),
        "partial": report.partial,
        "missing": report.missing,
        "report": args.report,
        "export": args.export,
    }));
    Ok(if report.partial || winner.is_none() { Status::Incomplete } else { Status::Success })
}

pub fn export_radar(report_path: &Path, out: Option<&Path>) -> Outcome {
    let text =
        fs::read_to_string(report_path).with_context(|| format!("reading {}", report_path.display())).map_err(usage)?;
    let report: PreambleReport =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", report_path.display())).map_err(usage)?;
    let csv = radar_csv(&export_radar_data(&report)?);
    match out {
        Some(path) => write_file(path, csv)?,
        None => emit(&csv),
    }
    Ok(Status::Success)
}

fn apply_overrides(config: &mut RunConfig, overrides: &Overrides) {
    if let Some(p) = overrides.parallelism {
        config.parallelism = p;
    }
    if let Some(c) = overrides.checkpoint_every {
        config.checkpoint_every = c;
    }
}

/// Makes every path absolute so the stored copy loads from any directory.
fn absolutize(config: &mut RunConfig) -> Result<(), Failure> {
    let abs = |p: &mut PathBuf| -> Result<(), Failure> {
        *p = std::path::absolute(&*p).with_context(|| format!("resolving {}", p.display())).map_err(usage)?;
        Ok(())
    };
    abs(&mut config.input)?;
    abs(&mut config.output_dir)?;
    if let Some(p) = config.preamble.as_mut() {
        abs(p)?;
    }
    if let Some(p) = config.blocklist.as_mut() {
        abs(p)?;
    }
    if let ProviderSettings::Dictionary { path } = &mut config.provider {
        abs(path)?;
    }
    Ok(())
}

fn run_status(manifest: &RunManifest) -> Status {
    if manifest.balanced && manifest.failures.is_empty() && manifest.review_queue.is_empty() {
        Status::Success
    } else {
        Status::Incomplete
    }
}

fn execute(config: &RunConfig, overrides: &Overrides, resuming: bool) -> Outcome {
    config.validate()?;
    let samples = load_dataset(&config.input)?;
    let spec = config.run_spec()?;
    let filter = config.content_filter()?;
    let provider = config.provider.build()?;
    let run_dir = config.run_dir();
    let options = RunOptions { abort_after: overrides.abort_after, ..Default::default() };
    let filter = filter.as_ref().map(|f| f as &dyn ContentFilter);

    let result = if resuming {
        pipeline::resume(&spec, &samples, provider.as_ref(), filter, &run_dir, &options)
    } else {
        if checkpoint::read_record(&run_dir)?.is_some() {
            return Err(PipelineError::RunExists(run_dir).into());
        }
        write_file(&run_dir.join(STORED_CONFIG), config.to_toml())?;
        pipeline::run(&spec, &samples, provider.as_ref(), filter, &run_dir, &options)
    };
    match result {
        Ok(manifest) => {
            log::info!(
                "{}: done {}, failed {}, flagged {}, balanced {}",
                manifest.run_id,
                manifest.done,
                manifest.failed,
                manifest.flagged,
                manifest.balanced
            );
            print_json(&manifest);
            Ok(run_status(&manifest))
        }
        Err(PipelineError::Aborted { completed }) => {
            log::warn!("run stopped after {completed} jobs; continue with `lf resume --run-id {}`", config.run_id);
            print_json(&json!({"run_id": config.run_id, "aborted": true, "completed": completed}));
            Ok(Status::Incomplete)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn translate(
    config_path: &Path,
    overrides: &Overrides,
    run_id: Option<String>,
    output_dir: Option<PathBuf>,
    languages: Option<Vec<LanguageCode>>,
    threshold: Option<f64>,
) -> Outcome {
    let mut config = RunConfig::load(config_path)?;
    if let Some(id) = run_id {
        config.run_id = id;
    }
    if let Some(dir) = output_dir {
        config.output_dir = dir;
    }
    if let Some(langs) = languages {
        config.languages = langs;
    }
    if let Some(t) = threshold {
        config.threshold = t;
    }
    apply_overrides(&mut config, overrides);
    absolutize(&mut config)?;
    execute(&config, overrides, false)
}

pub fn resume(run_id: &str, config_path: Option<&Path>, output_dir: &Path, overrides: &Overrides) -> Outcome {
    let mut config = match config_path {
        Some(path) => {
            let mut c = RunConfig::load(path)?;
            c.run_id = run_id.to_string();
            c
        }
        None => {
            let stored = output_dir.join(run_id).join(STORED_CONFIG);
            if !stored.exists() {
                return Err(usage(anyhow!(
                    "no run {run_id:?} under {} (missing {STORED_CONFIG})",
                    output_dir.display()
                )));
            }
            RunConfig::load(&stored)?
        }
    };
    apply_overrides(&mut config, overrides);
    absolutize(&mut config)?;
    execute(&config, overrides, true)
}

pub fn verify(run_dir: &Path) -> Outcome {
    if !run_dir.join(pipeline::MANIFEST_FILE).exists() {
        return Err(usage(anyhow!("{} has no {}", run_dir.display(), pipeline::MANIFEST_FILE)));
    }
    let report = pipeline::verify_run(run_dir)?;
    for f in report.files.iter().filter(|f| !(f.hash_ok && f.count_ok && f.round_trip_ok)) {
        log::warn!("{}: hash ok {}, count ok {}, round trip ok {}", f.path, f.hash_ok, f.count_ok, f.round_trip_ok);
    }
    print_json(&report);
    Ok(if report.ok { Status::Success } else { Status::Incomplete })
}
