use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "wmh",
    version,
    about = "WMH segmentation preprocessing, fusion and evaluation"
)]
pub struct Cli {
    /// Worker threads for case-level parallelism; 0 uses all available cores.
    #[arg(long, global = true, env = "WMH_WORKERS", default_value_t = 0)]
    pub workers: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clamp, filter masks, z-standardize and optionally resample or trim FLAIR volumes.
    Preprocess(PreprocessArgs),
    /// Compute per-case metrics, summaries, statistics and size-stratified detection.
    Evaluate(EvaluateArgs),
    /// Fuse several candidate masks with STAPLE or majority vote.
    Fuse(FuseArgs),
    /// Foreground intensity histograms grouped by scanner label.
    Distribution(DistributionArgs),
    /// Write synthetic FLAIR/mask pairs and optional degraded predictions.
    Phantom(PhantomArgs),
    /// Friedman and pairwise tests from an existing per-case CSV.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConnectivityArg {
    #[value(name = "6")]
    Six,
    #[value(name = "18")]
    Eighteen,
    #[value(name = "26")]
    TwentySix,
}

impl From<ConnectivityArg> for wmh_core::Connectivity {
    fn from(c: ConnectivityArg) -> Self {
        match c {
            ConnectivityArg::Six => Self::Six,
            ConnectivityArg::Eighteen => Self::Eighteen,
            ConnectivityArg::TwentySix => Self::TwentySix,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorrectionArg {
    Bonferroni,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PairwiseArg {
    Wilcoxon,
    Sign,
}

#[derive(Debug, Args)]
pub struct StatsOptions {
    /// Multiple-comparison correction for the pairwise tests.
    #[arg(long, value_enum, default_value = "bonferroni")]
    pub correction: CorrectionArg,
    /// Paired test used between models.
    #[arg(long, value_enum, default_value = "wilcoxon")]
    pub pairwise: PairwiseArg,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// CSV with columns case_id, flair_path (or path) and optionally mask_path.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Components of the mask smaller than this many voxels along every axis are removed.
    #[arg(long, default_value_t = wmh_core::morphology::DEFAULT_MIN_DIAMETER)]
    pub min_diameter: usize,
    #[arg(long, value_enum, default_value = "26")]
    pub connectivity: ConnectivityArg,
    /// Target spacing in mm as x,y,z (a single value applies to all axes).
    #[arg(long, value_delimiter = ',')]
    pub resample: Option<Vec<f64>>,
    /// Fraction of slices removed from each end of every axis.
    #[arg(long)]
    pub trim: Option<f64>,
    /// Use the n-1 divisor for the standard deviation.
    #[arg(long)]
    pub sample_std: bool,
    /// Leave background voxels at zero after standardization.
    #[arg(long)]
    pub keep_background_zero: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// CSV with columns case_id, model, path.
    #[arg(long)]
    pub pred: PathBuf,
    /// CSV with columns case_id, path (or mask_path).
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "26")]
    pub connectivity: ConnectivityArg,
    /// Lesion size bin edges in voxels; "inf" closes the last bin.
    #[arg(long, value_delimiter = ',', default_value = "1,5,15,50,150,500,inf")]
    pub bin_edges: Vec<f64>,
    #[command(flatten)]
    pub stats: StatsOptions,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// Input masks, all on the same grid.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Directory receiving fused.nii.gz, weights.nii.gz and fusion.json.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Majority vote instead of STAPLE.
    #[arg(long)]
    pub majority: bool,
    /// Initial sensitivity and specificity of every rater.
    #[arg(long, default_value_t = wmh_core::staple::DEFAULT_INIT_PERFORMANCE)]
    pub init_performance: f64,
    #[arg(long, default_value_t = wmh_core::staple::DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    #[arg(long, default_value_t = wmh_core::staple::DEFAULT_TOL)]
    pub tol: f64,
    /// Estimate over the whole grid instead of the bounding box of all votes.
    #[arg(long)]
    pub full_volume: bool,
}

#[derive(Debug, Args)]
pub struct DistributionArgs {
    /// CSV with columns case_id, path (or flair_path), scanner_label.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output CSV with columns scanner_label, bin_center, density.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub bins: usize,
    /// Histogram raw intensities instead of z-standardized ones.
    #[arg(long)]
    pub no_standardize: bool,
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub n_cases: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Grid size as x,y,z.
    #[arg(long, value_delimiter = ',', default_value = "64,64,64")]
    pub dims: Vec<usize>,
    /// Voxel spacing in mm as x,y,z.
    #[arg(long, value_delimiter = ',', default_value = "1,1,1")]
    pub spacing: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    pub n_lesions: usize,
    /// Smallest and largest lesion semi-axis in voxels.
    #[arg(long, value_delimiter = ',', default_value = "1,4")]
    pub radius: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    /// Number of scanner labels assigned round-robin.
    #[arg(long, default_value_t = 1)]
    pub scanners: usize,
    /// Degraded prediction model as name=erode,dilate,fp_rate; repeatable.
    #[arg(long = "model")]
    pub models: Vec<String>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Per-case CSV as written by `evaluate`.
    #[arg(long)]
    pub per_case: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub stats: StatsOptions,
}
