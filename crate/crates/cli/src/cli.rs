use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mmref::datamodel::LabelPreset;

/// Synthesize corpora, train text and multimodal reference models, evaluate
/// and compare them.
#[derive(Debug, Parser)]
#[command(name = "mmref", version, about)]
pub struct Cli {
    /// Root for default output directories.
    #[arg(long, global = true, env = "MMREF_OUT", default_value = "runs")]
    pub out_root: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus and audit it.
    Synth(SynthArgs),
    /// Train a text (trr) or multimodal (mrr) model.
    Train(TrainArgs),
    /// Evaluate a multimodal checkpoint on a corpus.
    Eval(EvalArgs),
    /// Compare evaluation reports against a baseline and plot them.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one config key; repeatable, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Output directory (default: <out-root>/synth).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub dialogues: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Task {
    Trr,
    Mrr,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Trr => "trr",
            Task::Mrr => "mrr",
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(value_enum)]
    pub task: Task,
    /// Corpus JSONL file.
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Named model preset supplying defaults.
    #[arg(long, default_value = "desk")]
    pub preset: String,
    /// Active relation labels.
    #[arg(long, value_parser = parse_preset)]
    pub labels: Option<LabelPreset>,
    /// Text checkpoint whose encoder initializes a multimodal model.
    #[arg(long)]
    pub init_encoder: Option<PathBuf>,
    /// Number of consecutive seeds to train, starting at the config seed.
    #[arg(long, default_value_t = 1)]
    pub seeds: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Held-out corpus evaluated after each mrr seed; recalls go into the summary.
    #[arg(long)]
    pub eval_corpus: Option<PathBuf>,
    /// Output directory (default: <out-root>/train-<task>).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Labels to evaluate (default: those the checkpoint was trained on).
    #[arg(long, value_parser = parse_preset)]
    pub labels: Option<LabelPreset>,
    /// Comma-separated window lengths for the utterance-length sweep.
    #[arg(long, value_delimiter = ',')]
    pub ablate_utterance_length: Vec<usize>,
    /// Add confidence statistics over top-k, bottom-k and all predictions.
    #[arg(long)]
    pub confidence: bool,
    /// Output directory (default: <out-root>/eval).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report JSON files; the first is the baseline unless `--baseline` is given.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Skip writing SVG plots.
    #[arg(long)]
    pub no_plots: bool,
    /// Output directory (default: <out-root>/report).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_preset(s: &str) -> Result<LabelPreset, String> {
    s.parse()
}
