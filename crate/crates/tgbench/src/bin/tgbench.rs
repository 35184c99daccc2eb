use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use tgbench::formats::{
    read_features_path, read_gold_path, read_predictions_path, read_profiles_path, write_records, write_records_path,
    Config, FormatError, GOLD_SCHEMA,
};
use tgbench::harness::{batch_rewards, evaluate, HarnessError, RunReport};
use tgbench::report::render_table;
use tgbench_core::qagen::{generate, TrackFeatures};
use tgbench_core::sampling::{allocate_tokens, token_budget, SamplingError};
use tgbench_core::Task;

#[derive(Parser)]
#[command(
    name = "tgbench",
    version,
    about = "Score and build music temporal-grounding benchmarks"
)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Hit tolerance in seconds; overrides the config.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a prediction file against a gold file.
    Evaluate {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Only score items of this task (TSG, LTR, TAD, GTO, MTR).
        #[arg(long)]
        task: Option<Task>,
        /// Write the full JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Row label in the printed table.
        #[arg(long, default_value = "run")]
        name: String,
    },
    /// Rewards for rollouts; items may repeat. Writes JSONL to stdout or --out.
    Reward {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Token allocation for each transition profile.
    Sample {
        #[arg(long)]
        profiles: PathBuf,
        /// Fixed budget; by default derived from duration and config.
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a gold file from feature tables.
    GenQa {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-render saved JSON reports as a table.
    Report {
        /// Report files written by `evaluate --out`.
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("track {track}: {source}")]
    Sampling { track: String, source: SamplingError },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        let format_code = |f: &FormatError| match f {
            FormatError::Schema(_) | FormatError::SchemaIn { .. } => 2,
            FormatError::Io { .. } => 3,
            FormatError::Config(_) => 4,
        };
        match self {
            CliError::Harness(HarnessError::Format(f)) | CliError::Format(f) => format_code(f),
            CliError::Harness(
                HarnessError::DuplicatePrediction { .. }
                | HarnessError::UnknownItem { .. }
                | HarnessError::DuplicateGold { .. },
            ) => 2,
            CliError::Json { .. } => 2,
            CliError::Io(_) => 3,
            _ => 1,
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(t) = cli.tolerance {
        cfg.metrics.tolerance = t;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn emit<T: Serialize>(out: Option<&Path>, schema: &str, records: &[T]) -> Result<(), CliError> {
    match out {
        Some(p) => write_records_path(p, schema, records)?,
        None => write_records(io::stdout().lock(), schema, records)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct Allocation {
    track_id: String,
    budget: usize,
    indices: Vec<usize>,
    times: Vec<f64>,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Evaluate {
            gold,
            pred,
            task,
            out,
            name,
        } => {
            let gold = read_gold_path(gold)?;
            let preds = read_predictions_path(pred)?;
            let report = evaluate(&gold, &preds, &cfg, *task)?;
            if let Some(p) = out {
                let file = std::fs::File::create(p)?;
                serde_json::to_writer_pretty(io::BufWriter::new(file), &report).map_err(io::Error::from)?;
            }
            let mut stdout = io::stdout().lock();
            write!(stdout, "{}", render_table(&[(name.clone(), report.metrics.clone())]))?;
            writeln!(
                stdout,
                "items {}  format errors {:.1}%  out of range {:.1}%",
                report.per_item.len(),
                100.0 * report.format_error_rate,
                100.0 * report.out_of_range_rate
            )?;
        }
        Command::Reward { gold, pred, out } => {
            let gold = read_gold_path(gold)?;
            let preds = read_predictions_path(pred)?;
            let rewards = batch_rewards(&gold, &preds, &cfg)?;
            emit(out.as_deref(), "tgbench.reward", &rewards)?;
        }
        Command::Sample { profiles, budget, out } => {
            let profiles = read_profiles_path(profiles)?;
            let allocations = profiles
                .into_iter()
                .map(|(_, rec)| {
                    let p = &rec.profile;
                    let b = budget
                        .unwrap_or_else(|| token_budget(p.duration(), &cfg.sampling))
                        .min(p.frames());
                    let indices = allocate_tokens(p, b, &cfg.sampling).map_err(|source| CliError::Sampling {
                        track: rec.track_id.clone(),
                        source,
                    })?;
                    Ok(Allocation {
                        times: indices.iter().map(|&i| p.time_of(i)).collect(),
                        track_id: rec.track_id,
                        budget: b,
                        indices,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            emit(out.as_deref(), "tgbench.allocation", &allocations)?;
        }
        Command::GenQa { features, out, seed } => {
            let tracks: Vec<TrackFeatures> = read_features_path(features)?.into_iter().map(|(_, t)| t).collect();
            let items = generate(&tracks, &cfg.qagen, *seed);
            write_records_path(out, GOLD_SCHEMA, &items)?;
            eprintln!("wrote {} items for {} tracks", items.len(), tracks.len());
        }
        Command::Report { reports } => {
            let mut rows = Vec::new();
            for path in reports {
                let text = std::fs::read_to_string(path)?;
                let report: RunReport = serde_json::from_str(&text).map_err(|source| CliError::Json {
                    path: path.display().to_string(),
                    source,
                })?;
                let name = path
                    .file_stem()
                    .map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
                rows.push((name, report.metrics));
            }
            print!("{}", render_table(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tgbench: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
