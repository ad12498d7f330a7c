use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "readorder", version, about = "Reading-order detection for document pages")]
pub struct Cli {
    /// JSON config file; command-line flags take precedence over it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Seed for every random choice the command makes.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for page-parallel work. Output does not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic pages with known reading order.
    Gen(GenArgs),
    /// Word counts and heuristic BLEU distribution of a page file.
    Stats(StatsArgs),
    /// Rebuild pages from a reading-sequence stream and a colored layout stream.
    Align(AlignArgs),
    /// Train a model on a page file.
    Train(TrainArgs),
    /// Predict reading orders with a trained model or the heuristic.
    Predict(PredictArgs),
    /// Score predictions against gold pages.
    Eval(EvalArgs),
    /// Turn token orders into text-line orders.
    AdaptLines(AdaptArgs),
    /// Draw a page and its predicted (or gold) order as SVG.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// single_column, two_column, three_column, table or mixed.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub count: usize,
    #[arg(long)]
    pub tokens_min: Option<usize>,
    #[arg(long)]
    pub tokens_max: Option<usize>,
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    #[arg(long)]
    pub font_height: Option<u32>,
    #[arg(long)]
    pub column_gap: Option<u32>,
    /// Page JSONL output.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Text-line JSONL output.
    #[arg(long)]
    pub lines_out: Option<PathBuf>,
    /// Reading-sequence record JSONL output.
    #[arg(long)]
    pub sequence_out: Option<PathBuf>,
    /// Colored layout record JSONL output, shuffled per page.
    #[arg(long)]
    pub layout_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(short, long, visible_alias = "data")]
    pub input: PathBuf,
    /// JSON report path; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    #[arg(long)]
    pub sequence: PathBuf,
    #[arg(long)]
    pub layout: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    /// Checkpoint output.
    #[arg(short, long)]
    pub output: PathBuf,
    /// full, text_only or layout_only.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub clip_norm: Option<f64>,
    /// Fraction of training pages whose source order is shuffled.
    #[arg(long)]
    pub shuffle_rate: Option<f64>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
    #[arg(long)]
    pub ffn_dim: Option<usize>,
    #[arg(long)]
    pub max_tokens: Option<usize>,
    #[arg(long)]
    pub coord_grid: Option<u32>,
    #[arg(long)]
    pub vocab_size: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    /// JSON file receiving per-epoch losses.
    #[arg(long)]
    pub report_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Trained checkpoint.
    #[arg(long, conflicts_with = "heuristic", required_unless_present = "heuristic")]
    pub model: Option<PathBuf>,
    /// Use the left-to-right, top-to-bottom baseline instead of a model.
    #[arg(long)]
    pub heuristic: bool,
    #[arg(long)]
    pub beam: Option<usize>,
    /// Allow pointing at a token more than once.
    #[arg(long)]
    pub unconstrained: bool,
    /// Fraction of pages whose tokens are shown to the model shuffled.
    #[arg(long)]
    pub shuffle_rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    /// Only score generated pages of this layout kind.
    #[arg(long)]
    pub kind: Option<String>,
    /// JSON report path; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AdaptArgs {
    #[arg(short, long, visible_alias = "tokens")]
    pub input: PathBuf,
    #[arg(long)]
    pub lines: PathBuf,
    /// Token orders to lift; gold order when omitted.
    #[arg(long, visible_alias = "order")]
    pub pred: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(short, long, visible_alias = "data")]
    pub input: PathBuf,
    /// Page to draw; the first page when omitted.
    #[arg(long)]
    pub page_id: Option<String>,
    /// Predictions to color; draws gold order arrows when omitted.
    #[arg(long)]
    pub pred: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
}
