use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kgjoint::literal::MissingPolicy;

/// Knowledge graph embeddings with literal fusion.
///
/// Every option can also come from `--config FILE` (flat `key=value` lines or
/// a flat JSON object, keys named like the long flags). Flags win over the file.
#[derive(Debug, Parser)]
#[command(name = "kgjoint", version, propagate_version = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print entity/relation/split counts as JSON.
    Stats(StatsArgs),
    /// Generate a synthetic dataset (planted lattice or literal clusters).
    MakeSynthetic(SyntheticArgs),
    /// Train structural embeddings and save a checkpoint.
    TrainStructural(StructuralArgs),
    /// Fuse literals into a structural checkpoint and train the joint model.
    TrainJoint(JointArgs),
    /// Structural then joint training, with optional test evaluation.
    TrainAll(AllArgs),
    /// Link-prediction evaluation of a checkpoint.
    Eval(EvalArgs),
    /// Compare analytic gradients with finite differences on toy instances.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args, Default)]
pub struct ConfigArg {
    /// Settings file (key=value lines or a JSON object).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct SplitArgs {
    #[arg(long, value_name = "FILE")]
    pub train: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub valid: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub test: Option<PathBuf>,
}

/// Optimizer settings. Defaults: lr 0.0005, batch 256, margin 1, dim 50.
#[derive(Debug, Args, Default)]
pub struct SgdArgs {
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub margin: Option<f64>,
    /// Embedding dimension k.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Distance order: 2 (squared L2) or 1 (L1).
    #[arg(long)]
    pub norm: Option<u8>,
}

#[derive(Debug, Args, Default)]
pub struct EarlyStopArgs {
    /// Evaluate on the validation split every N epochs.
    #[arg(long, value_name = "N")]
    pub valid_every: Option<usize>,
    /// Stop after this many evaluations without improvement.
    #[arg(long, value_name = "N")]
    pub patience: Option<usize>,
    /// Train for all epochs even when a validation split is given.
    #[arg(long)]
    pub no_early_stop: bool,
}

#[derive(Debug, Args, Default)]
pub struct LiteralArgs {
    /// Literal vectors (LEB1 binary or TSV).
    #[arg(long, value_name = "FILE")]
    pub literals: Option<PathBuf>,
    /// Fill for names without a literal: zeros or mean.
    #[arg(long, value_name = "POLICY")]
    pub missing_policy: Option<MissingPolicy>,
    /// Joint dimension; defaults to the literal dimension.
    #[arg(long)]
    pub joint_dim: Option<usize>,
    #[arg(long)]
    pub freeze_literals: bool,
    #[arg(long)]
    pub freeze_structural: bool,
    #[arg(long)]
    pub freeze_projection: bool,
    /// Run without a literal file, using all-zero literal vectors.
    #[arg(long)]
    pub allow_zero_literals: bool,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(flatten)]
    pub splits: SplitArgs,
    /// Directory with train.txt, valid.txt and test.txt.
    #[arg(long, value_name = "DIR")]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SyntheticKind {
    Lattice,
    Clusters,
}

impl std::str::FromStr for SyntheticKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Args)]
pub struct SyntheticArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long, value_enum)]
    pub kind: Option<SyntheticKind>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub entities: Option<usize>,
    #[arg(long)]
    pub relations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Lattice dimensionality.
    #[arg(long)]
    pub grid_dim: Option<usize>,
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub tails_per_query: Option<usize>,
    #[arg(long)]
    pub literal_dim: Option<usize>,
    #[arg(long)]
    pub literal_noise: Option<f64>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub valid_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct StructuralArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(flatten)]
    pub splits: SplitArgs,
    #[command(flatten)]
    pub sgd: SgdArgs,
    #[command(flatten)]
    pub early_stop: EarlyStopArgs,
    /// Checkpoint to write.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Cap on evaluation worker threads.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct JointArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Structural checkpoint to start from.
    #[arg(long, value_name = "FILE")]
    pub checkpoint: Option<PathBuf>,
    /// Start from random structural embeddings instead of a checkpoint.
    #[arg(long)]
    pub skip_structural: bool,
    #[command(flatten)]
    pub splits: SplitArgs,
    #[command(flatten)]
    pub literals: LiteralArgs,
    #[command(flatten)]
    pub sgd: SgdArgs,
    #[command(flatten)]
    pub early_stop: EarlyStopArgs,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AllArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(flatten)]
    pub splits: SplitArgs,
    #[command(flatten)]
    pub literals: LiteralArgs,
    #[command(flatten)]
    pub sgd: SgdArgs,
    #[command(flatten)]
    pub early_stop: EarlyStopArgs,
    /// Learning rate of the joint phase (defaults to --lr).
    #[arg(long)]
    pub joint_lr: Option<f64>,
    /// Epochs of the joint phase (defaults to --epochs).
    #[arg(long)]
    pub joint_epochs: Option<usize>,
    /// Directory for checkpoints, reports and the manifest.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long, value_name = "FILE")]
    pub checkpoint: Option<PathBuf>,
    /// Test triples plus optional train/valid files for the filter set.
    #[command(flatten)]
    pub splits: SplitArgs,
    /// Write the JSON report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
    /// Per-query ranks (TSV). Defaults to `<report>.ranks.tsv` when --report is set.
    #[arg(long, value_name = "FILE")]
    pub ranks: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Check the structural loss.
    #[arg(long)]
    pub structural: bool,
    /// Check a single GRU cell.
    #[arg(long)]
    pub gru: bool,
    /// Check the full joint loss. With no target flag, all three run.
    #[arg(long)]
    pub joint: bool,
    /// Joint dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Structural dimension k.
    #[arg(long)]
    pub structural_dim: Option<usize>,
    /// Literal dimension (a projection is checked when it differs from --dim).
    #[arg(long)]
    pub literal_dim: Option<usize>,
    #[arg(long)]
    pub triples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Print the per-group JSON report.
    #[arg(long)]
    pub json: bool,
}
