use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use npcrank_core::{BandwidthRule, Kernel};

#[derive(Debug, Parser)]
#[command(
    name = "npcrank",
    version,
    about = "Rank features by classical and Neyman-Pearson criteria"
)]
pub struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Log progress to stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank the features of a labeled CSV file.
    Rank(RankArgs),
    /// Run a rank-frequency / average-rank simulation on a built-in model.
    Simulate(SimulateArgs),
    /// Evaluate population-level criteria.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Compare rank lists, or measure robustness to class subsampling.
    Consistency(ConsistencyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    Cc,
    Npc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Gaussian,
    Epanechnikov,
}

impl From<KernelArg> for Kernel {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Gaussian => Kernel::Gaussian,
            KernelArg::Epanechnikov => Kernel::Epanechnikov,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BandwidthArg {
    PaperRate,
    Silverman,
}

impl From<BandwidthArg> for BandwidthRule {
    fn from(b: BandwidthArg) -> Self {
        match b {
            BandwidthArg::PaperRate => BandwidthRule::PaperRate,
            BandwidthArg::Silverman => BandwidthRule::Silverman,
        }
    }
}

/// Settings shared by every density-ratio criterion.
#[derive(Debug, Clone, Args)]
pub struct ScoringArgs {
    /// Number of random splits B.
    #[arg(long, default_value_t = 11)]
    pub splits: usize,
    /// Allowed probability that the type I error exceeds alpha.
    #[arg(long, default_value_t = 0.05)]
    pub delta1: f64,
    #[arg(long, value_enum, default_value_t = KernelArg::Gaussian)]
    pub kernel: KernelArg,
    #[arg(long, value_enum, default_value_t = BandwidthArg::PaperRate)]
    pub bandwidth: BandwidthArg,
    /// Known pi0/pi1 used as the s-CC threshold instead of the split's m1/n1.
    #[arg(long)]
    pub prior_ratio: Option<f64>,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Name of the 0/1 label column.
    #[arg(long)]
    pub label_col: String,
    #[arg(long, value_enum)]
    pub criterion: CriterionArg,
    /// Type I error level (required for npc).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Exchange the roles of class 0 and class 1.
    #[arg(long)]
    pub swap_labels: bool,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    /// Output TSV (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model id: toy, gauss30, chisq30, gauss500 or mixture.
    pub model: String,
    /// Sample size per replicate (default depends on the model).
    #[arg(long)]
    pub n: Option<usize>,
    /// Replicates (default 200, or 50 for gauss500).
    #[arg(long, conflicts_with = "full")]
    pub reps: Option<usize>,
    /// Use 1000 replicates.
    #[arg(long)]
    pub full: bool,
    /// Comma-separated rankers, e.g. `cc,npc:0.05,pearson,dcor,welch-t,wilcoxon`.
    #[arg(long, value_delimiter = ',')]
    pub criteria: Option<Vec<String>>,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    /// Write `<prefix>.tsv` and `<prefix>.json` instead of printing the TSV.
    #[arg(long)]
    pub output_prefix: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GaussianArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub mu0: f64,
    #[arg(long)]
    pub sigma0: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub mu1: f64,
    #[arg(long)]
    pub sigma1: f64,
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    /// Type II error of the level-alpha threshold rule for one Gaussian feature.
    GaussianNp {
        #[command(flatten)]
        feature: GaussianArgs,
        #[arg(long)]
        alpha: f64,
    },
    /// Bayes risk for one Gaussian feature.
    Classical {
        #[command(flatten)]
        feature: GaussianArgs,
        #[arg(long, default_value_t = 0.5)]
        pi0: f64,
    },
    /// Monte Carlo population criterion of every feature of a built-in model.
    Population {
        model: String,
        #[arg(long, value_enum)]
        criterion: CriterionArg,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        sample_size: usize,
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    /// Halve class 1 in one copy and class 0 in the other.
    Paper,
}

#[derive(Debug, Args)]
pub struct ConsistencyArgs {
    /// Two rank files written by `npcrank rank`.
    #[arg(num_args = 2, value_names = ["RANKS_A", "RANKS_B"], conflicts_with = "input")]
    pub rank_files: Vec<PathBuf>,
    /// Labeled CSV to subsample.
    #[arg(long, requires_all = ["label_col", "alpha", "seed"])]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub label_col: Option<String>,
    #[arg(long, value_enum, default_value_t = ProtocolArg::Paper)]
    pub protocol: ProtocolArg,
    /// Type I error level of the s-NPC side.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 11)]
    pub splits: usize,
    #[arg(long, default_value_t = 0.05)]
    pub delta1: f64,
    #[arg(long, value_enum, default_value_t = KernelArg::Gaussian)]
    pub kernel: KernelArg,
    #[arg(long, value_enum, default_value_t = BandwidthArg::PaperRate)]
    pub bandwidth: BandwidthArg,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output TSV (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}
