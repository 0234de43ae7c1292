//! `kpa`: corpus preparation, key point mining, summaries and evaluation.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 scorer backend error.

mod commands;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use kpa_core::config::{BackendKind, PipelineConfig, Preset};
use kpa_core::sentiment::Polarity;

use failure::Failure;

#[derive(Debug, Parser)]
#[command(name = "kpa", version, about = "Key point analysis of business reviews")]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// kpa-vanilla | rkpa-base | rkpa-ft | rkpa-manual. kpa-vanilla turns off
    /// sentiment filtering and collective mining (per-business extraction,
    /// top 60); it cannot turn off the scorers' domain pre-training, which
    /// lives outside this tool.
    #[arg(long, global = true)]
    preset: Option<Preset>,
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// table | lexical | lexical-table | remote
    #[arg(long, global = true, value_parser = parse_backend)]
    backend: Option<BackendKind>,
    /// Score table (JSON) for the table backends.
    #[arg(long, global = true)]
    table: Option<PathBuf>,
    /// Remote scorer base URL.
    #[arg(long, global = true, env = "KPA_SCORER_ENDPOINT")]
    endpoint: Option<String>,
    #[command(subcommand)]
    command: Command,
}

fn parse_backend(s: &str) -> Result<BackendKind, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown backend {s:?} (expected table, lexical, lexical-table or remote)"))
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Parse, segment and filter raw review and business files.
    Ingest(IngestArgs),
    /// Split businesses into train/dev/test.
    Split(SplitArgs),
    /// Label short reviews from their stars and split off a held-out set.
    WeakLabel(WeakLabelArgs),
    /// Choose the sentiment threshold on labeled predictions.
    SelectThreshold(SelectThresholdArgs),
    /// Mine key points.
    Mine(MineArgs),
    /// Apply a curation script to mined key points.
    Curate(CurateArgs),
    /// Match business reviews to key points and summarize.
    Summarize(SummarizeArgs),
    /// Draw the precision-annotation sample.
    Sample(SampleArgs),
    /// Attach annotator judgments and label sampled pairs.
    Aggregate(AggregateArgs),
    /// Precision/coverage curve.
    Curve(CurveArgs),
    /// Build the key point quality dataset from crowd confidences.
    KpqDataset(KpqDatasetArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Split(_) => "split",
            Command::WeakLabel(_) => "weak-label",
            Command::SelectThreshold(_) => "select-threshold",
            Command::Mine(_) => "mine",
            Command::Curate(_) => "curate",
            Command::Summarize(_) => "summarize",
            Command::Sample(_) => "sample",
            Command::Aggregate(_) => "aggregate",
            Command::Curve(_) => "curve",
            Command::KpqDataset(_) => "kpq-dataset",
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct IngestArgs {
    #[arg(long)]
    reviews: PathBuf,
    #[arg(long)]
    businesses: PathBuf,
    /// Keep only businesses with this category.
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SplitArgs {
    /// Directory written by `ingest`.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct WeakLabelArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SelectThresholdArgs {
    /// Line records `{label, pos, neg, neut}` or `{label, text}` (scored with the backend).
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    min_recall: Option<f64>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
struct CorpusSelection {
    #[arg(long)]
    corpus: PathBuf,
    /// Split manifest written by `split`.
    #[arg(long)]
    split: Option<PathBuf>,
    /// train | dev | test; needs --split.
    #[arg(long, requires = "split")]
    part: Option<String>,
}

#[derive(Debug, Args, Serialize)]
struct MineArgs {
    #[command(flatten)]
    input: CorpusSelection,
    #[arg(long)]
    domain: Option<String>,
    /// pos | neg; both when omitted. Ignored by kpa-vanilla.
    #[arg(long)]
    polarity: Option<Polarity>,
    #[arg(long)]
    t_s: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Defaults to out/<preset>/mine.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct CurateArgs {
    /// keypoints.json written by `mine`.
    #[arg(long)]
    kps: PathBuf,
    /// Line records `{op: keep|drop|rephrase, kp_id, new_text?}`.
    #[arg(long)]
    script: PathBuf,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SummarizeArgs {
    #[command(flatten)]
    input: CorpusSelection,
    #[arg(long)]
    kps: PathBuf,
    /// Print this business's summary.
    #[arg(long)]
    business: Option<String>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    t_match: Option<f64>,
    #[arg(long)]
    t_s: Option<f64>,
    /// text | json, for the printed summary.
    #[arg(long, default_value = "text")]
    format: String,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SampleArgs {
    #[command(flatten)]
    input: CorpusSelection,
    #[arg(long)]
    kps: PathBuf,
    /// matches.jsonl written by `summarize`.
    #[arg(long)]
    matches: PathBuf,
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct AggregateArgs {
    /// sample.jsonl written by `sample`.
    #[arg(long)]
    sample: PathBuf,
    /// Line records `{pair_id, annotator_id, judgment: yes|no|faulty_kp}`.
    #[arg(long)]
    judgments: PathBuf,
    /// Also run the split-half consistency check (16 judgments per pair).
    #[arg(long)]
    consistency: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct CurveArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// labeled.jsonl written by `aggregate`.
    #[arg(long)]
    sample: PathBuf,
    #[arg(long)]
    matches: PathBuf,
    /// eval_businesses.json written by `sample`.
    #[arg(long)]
    businesses: PathBuf,
    /// Comma-separated ascending thresholds; default is an even grid from t_min.
    #[arg(long, value_delimiter = ',')]
    thresholds: Vec<f64>,
    #[arg(long, default_value_t = 0.99)]
    to: f64,
    #[arg(long, default_value_t = 20)]
    points: usize,
    /// tsv | csv
    #[arg(long, default_value = "tsv")]
    format: String,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct KpqDatasetArgs {
    /// Line records with the five annotation confidences.
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

/// Resolved global settings shared by the commands.
pub(crate) struct Globals {
    pub config: PipelineConfig,
    pub workers: Option<usize>,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, Failure> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(p) = cli.preset {
        config.preset = p;
    }
    if let Some(b) = &cli.backend {
        config.backend.kind = b.clone();
    }
    if let Some(t) = &cli.table {
        config.backend.table = Some(t.clone());
    }
    if let Some(e) = &cli.endpoint {
        config.backend.endpoint = Some(e.clone());
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = load_config(&cli)?;
    let globals = Globals {
        config,
        workers: cli.workers,
    };
    let name = cli.command.name();
    let args = serde_json::to_value(&cli.command).expect("arguments serialize");
    let args = args
        .as_object()
        .and_then(|o| o.values().next().cloned())
        .unwrap_or(args);
    let work = || match &cli.command {
        Command::Ingest(a) => commands::ingest(&globals, a, name, &args),
        Command::Split(a) => commands::split(&globals, a, name, &args),
        Command::WeakLabel(a) => commands::weak_label(&globals, a, name, &args),
        Command::SelectThreshold(a) => commands::select_threshold(&globals, a, name, &args),
        Command::Mine(a) => commands::mine(&globals, a, name, &args),
        Command::Curate(a) => commands::curate(&globals, a, name, &args),
        Command::Summarize(a) => commands::summarize(&globals, a, name, &args),
        Command::Sample(a) => commands::sample(&globals, a, name, &args),
        Command::Aggregate(a) => commands::aggregate(&globals, a, name, &args),
        Command::Curve(a) => commands::curve(&globals, a, name, &args),
        Command::KpqDataset(a) => commands::kpq_dataset(&globals, a, name, &args),
    };
    match globals.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Failure::Usage(format!("cannot start {n} workers: {e}")))?
            .install(work),
        None => work(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("kpa: {f}");
            ExitCode::from(f.code())
        }
    }
}
