use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use labeldist::Task;

#[derive(Debug, Parser)]
#[command(name = "labeldist", version, about = "Node classification from local label distributions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the APPR matrix of every node and write it in binary form.
    Appr(ApprArgs),
    /// Build classifier input features and write a text dump.
    Featurize(FeaturizeArgs),
    /// Train one classifier, evaluate it and append a report row.
    TrainEval(TrainEvalArgs),
    /// Run a grid of methods, alphas and split seeds.
    Sweep(SweepArgs),
    /// Write a synthetic dataset as edge and label TSV files.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Multiclass,
    Multilabel,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Task {
        match t {
            TaskArg::Multiclass => Task::Multiclass,
            TaskArg::Multilabel => Task::Multilabel,
        }
    }
}

/// Either a Planetoid-style `.content`/`.cites` pair or an edge list plus a
/// `node<TAB>label[,label...]` file.
#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    #[arg(long, requires = "cites", conflicts_with_all = ["edges", "labels"])]
    pub content: Option<PathBuf>,
    #[arg(long, requires = "content")]
    pub cites: Option<PathBuf>,
    #[arg(long, requires = "labels")]
    pub edges: Option<PathBuf>,
    #[arg(long, requires = "edges")]
    pub labels: Option<PathBuf>,
    /// Label mode of the edge/label files. Content files are always multiclass.
    #[arg(long, value_enum, default_value = "multiclass")]
    pub task: TaskArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitMode {
    /// Planetoid counts for multiclass, 70/10/20 ratios for multilabel.
    Auto,
    Planetoid,
    Ratio,
}

#[derive(Debug, Clone, Args)]
pub struct SplitArgs {
    /// Read the split from a JSON file instead of drawing one.
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "auto")]
    pub split_mode: SplitMode,
    /// Seed of the drawn split. Also offsets the model seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 5e-4)]
    pub l2: f64,
    #[arg(long, default_value_t = 0.5)]
    pub keep_prob: f64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 10)]
    pub patience: usize,
    /// Hidden width; 0 drops the hidden layer.
    #[arg(long, default_value_t = 16)]
    pub hidden: usize,
    /// Positive-instance weight of the multilabel loss (default 10).
    #[arg(long)]
    pub pos_weight: Option<f64>,
    /// Multilabel decision threshold (default 0.5).
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub model_seed: u64,
    /// Feed raw feature rows to the classifier.
    #[arg(long)]
    pub no_row_normalize: bool,
}

#[derive(Debug, Args)]
pub struct ApprArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub epsilon: f64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeatureMode {
    Ld,
    Adj,
    Labelconv,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    #[arg(long, value_enum, default_value = "ld")]
    pub mode: FeatureMode,
    /// Precomputed APPR matrix; otherwise computed from --alpha/--epsilon.
    #[arg(long, conflicts_with = "alpha")]
    pub appr: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 1e-5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Also write the split used, as JSON.
    #[arg(long)]
    pub split_out: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainEvalArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    /// ld, ld+emb, adj or labelconv.
    #[arg(long, default_value = "ld")]
    pub method: String,
    /// Feature dump from `featurize`; otherwise built for --method.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 1e-5)]
    pub epsilon: f64,
    /// Embedding width; switches the method to ld+emb.
    #[arg(long)]
    pub emb_dim: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Report CSV to append to.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    /// Per-epoch training log CSV.
    #[arg(long)]
    pub log_out: Option<PathBuf>,
    #[arg(long)]
    pub record_timing: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    #[arg(long, value_delimiter = ',', default_value = "ld")]
    pub methods: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
    pub alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5,6,7,8,9")]
    pub seeds: Vec<u64>,
    #[arg(long, value_enum, default_value = "auto")]
    pub split_mode: SplitMode,
    #[arg(long, default_value_t = 1e-5)]
    pub epsilon: f64,
    /// Embedding width used by ld+emb cells.
    #[arg(long, default_value_t = 16)]
    pub emb_dim: usize,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Directory for cached APPR matrices.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to the report path with a `.summary.csv` suffix.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    pub record_timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// Disconnected copies of a small network with users, servers,
    /// printers and databases.
    Figure1,
    /// Multilabel planted communities.
    Communities,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "figure1")]
    pub kind: SynthKind,
    /// Number of components (figure1) or communities.
    #[arg(long, default_value_t = 10)]
    pub components: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Writes `<prefix>.edges.tsv`, `<prefix>.labels.tsv` and for figure1
    /// `<prefix>.components.tsv`.
    #[arg(long)]
    pub out_prefix: PathBuf,
}
