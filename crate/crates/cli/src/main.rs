//! `lf`: operator front end for the dataset pipeline.
//!
//! Machine-readable JSON summaries go to stdout, logs to stderr.
//! Exit codes: 0 success, 1 completed with failures, 2 usage or input error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use linguaforge::LanguageCode;

#[derive(Parser)]
#[command(name = "lf", version, about = "Multilingual image-text dataset pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a LLaVA-style dataset and report counts and anomalies.
    Ingest { path: PathBuf },
    /// Pick a metric-diverse calibration set from a dataset.
    Sample {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 30)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the selection manifest here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score every preamble by per-order BLEU against reference translations.
    EvalPreambles(EvalArgs),
    /// Start a new run from a config file.
    Translate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        run_id: Option<String>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        languages: Option<Vec<LanguageCode>>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Continue an interrupted run, or re-assemble outputs after review.
    Resume {
        #[arg(long)]
        run_id: String,
        /// Defaults to the config stored in the run directory.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "runs")]
        output_dir: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Re-check a finished run's outputs against its manifest.
    Verify {
        #[arg(long)]
        run_id: String,
        #[arg(long, default_value = "runs")]
        output_dir: PathBuf,
    },
    /// Turn a preamble report into radar-chart CSV.
    ExportRadar {
        #[arg(long)]
        report: PathBuf,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
pub struct EvalArgs {
    #[arg(long)]
    preambles_dir: PathBuf,
    /// Eval set: prompts and reference translations.
    #[arg(long)]
    pairs: PathBuf,
    /// Take prompts from a selection manifest instead of the eval set.
    #[arg(long)]
    selection: Option<PathBuf>,
    /// Defaults to the seven standard targets.
    #[arg(long, value_delimiter = ',')]
    languages: Option<Vec<LanguageCode>>,
    /// echo | tagging | rigged:<preamble id> | http
    #[arg(long, default_value = "tagging")]
    provider: String,
    /// Endpoint for the http provider.
    #[arg(long)]
    base_url: Option<String>,
    /// Model name for the http provider.
    #[arg(long)]
    model: Option<String>,
    /// Write the full report JSON here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the radar CSV here.
    #[arg(long)]
    export: Option<PathBuf>,
}

/// Settings that may change between a run and its resumption.
#[derive(clap::Args)]
pub struct Overrides {
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    checkpoint_every: Option<usize>,
    /// Stop after this many completed jobs (for testing interruption).
    #[arg(long, hide = true)]
    abort_after: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Ingest { path } => commands::ingest(&path),
        Command::Sample { input, k, seed, out } => commands::sample(&input, k, seed, out.as_deref()),
        Command::EvalPreambles(args) => commands::eval_preambles(&args),
        Command::Translate { config, overrides, run_id, output_dir, languages, threshold } => {
            commands::translate(&config, &overrides, run_id, output_dir, languages, threshold)
        }
        Command::Resume { run_id, config, output_dir, overrides } => {
            commands::resume(&run_id, config.as_deref(), &output_dir, &overrides)
        }
        Command::Verify { run_id, output_dir } => commands::verify(&output_dir.join(run_id)),
        Command::ExportRadar { report, out } => commands::export_radar(&report, out.as_deref()),
    };
    match outcome {
        Ok(status) => ExitCode::from(status as u8),
        Err(e) => {
            log::error!("{:#}", e.error);
            ExitCode::from(e.status as u8)
        }
    }
}
