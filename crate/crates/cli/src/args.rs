use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use snore::Metric;

#[derive(Debug, Parser)]
#[command(name = "snore", version, about = "Sparse symbolic node embeddings")]
pub struct Cli {
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print node, edge, component and class counts as one JSON line.
    Stats(StatsArgs),
    /// PageRank scores in descending order, `node<TAB>score`.
    Rank(RankArgs),
    /// Build an embedding and write it to a directory.
    Embed(EmbedArgs),
    /// Score an embedding (or a baseline) under the classification protocol.
    Eval(EvalArgs),
    /// Embed and evaluate a named dataset and compare with published numbers.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Edge list, `src<TAB>dst[<TAB>weight]` per line.
    #[arg(long)]
    pub edges: PathBuf,
    /// Treat each line as one directed arc.
    #[arg(long)]
    pub directed: bool,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct RankFlags {
    /// PageRank damping factor.
    #[arg(long, conflicts_with = "pure_power")]
    pub damping: Option<f64>,
    /// Undamped power iteration (damping 1).
    #[arg(long)]
    pub pure_power: bool,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub rank: RankFlags,
    /// `name<TAB>node_id` file; names replace ids in the output.
    #[arg(long)]
    pub names: Option<PathBuf>,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Embedding parameters. Unset flags keep the values from `--config` or the
/// defaults.
#[derive(Debug, Args, Default)]
pub struct EmbedFlags {
    /// JSON file with `embedding` and/or `protocol` sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Hash pruning threshold, relative to the visit total.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Walk lengths are drawn uniformly from 1..=max-len.
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long)]
    pub num_walks: Option<usize>,
    /// Number of pivot columns (fixed mode).
    #[arg(long, conflicts_with = "sdf")]
    pub dim: Option<usize>,
    /// Size-dependent mode: pivots until the nonzero budget is spent.
    #[arg(long)]
    pub sdf: bool,
    /// Budget per node in size-dependent mode.
    #[arg(long)]
    pub budget_dim: Option<usize>,
    /// Digitization sub-intervals, 0 to disable.
    #[arg(long)]
    pub bins: Option<u32>,
    #[arg(long, value_parser = parse_metric)]
    pub metric: Option<Metric>,
    #[command(flatten)]
    pub rank: RankFlags,
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse().map_err(|e: snore::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub embed: EmbedFlags,
    /// Also write the node hashes to this file.
    #[arg(long)]
    pub hash_dump: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct ProtocolFlags {
    /// Comma-separated training fractions.
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,
    #[arg(long)]
    pub shuffles: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    Lp,
    Random,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// `node<TAB>class[,class...]` file.
    #[arg(long)]
    pub labels: PathBuf,
    /// Embedding directory written by `embed`.
    #[arg(long, required_unless_present = "baseline")]
    pub embedding: Option<PathBuf>,
    #[arg(long)]
    pub baseline: Option<Baseline>,
    /// Edge list, needed by the label propagation baseline.
    #[arg(long, required_if_eq("baseline", "lp"))]
    pub edges: Option<PathBuf>,
    #[arg(long)]
    pub directed: bool,
    /// Label propagation mixing weight.
    #[arg(long, default_value_t = 0.9)]
    pub alpha: f64,
    /// Width of the random baseline.
    #[arg(long, default_value_t = snore::eval::RANDOM_DIM)]
    pub dim: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for report.json and report.tsv.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub protocol: ProtocolFlags,
    /// JSON file with a `protocol` section.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Snore,
    SnoreSdf,
    Lp,
    Random,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Dataset name, e.g. `cora`.
    #[arg(long)]
    pub dataset: String,
    /// Directory holding `<dataset>/edges.tsv` and `<dataset>/labels.tsv`.
    #[arg(long, env = "SNORE_DATA_DIR", default_value = "data")]
    pub data_dir: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "snore,snore-sdf,lp,random")]
    pub methods: Vec<Method>,
    /// Evaluate one embedding for all repetitions instead of re-walking.
    #[arg(long)]
    pub reuse_embedding: bool,
    #[arg(long, default_value_t = 0.9)]
    pub alpha: f64,
    #[command(flatten)]
    pub embed: EmbedFlags,
    #[command(flatten)]
    pub protocol: ProtocolFlags,
}
