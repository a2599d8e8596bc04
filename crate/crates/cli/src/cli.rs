use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "ballconv", version, about = "Volumetric convolution and 3D Zernike moments on the unit ball")]
pub struct Cli {
    /// Seed for every random draw; printed in each report header.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (default: hardware parallelism). Results do not depend on it.
    #[arg(long, global = true, env = "BALLCONV_THREADS")]
    pub threads: Option<usize>,

    /// TOML file of defaults; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit Zernike moments to a shape file and write a moment file.
    Moments(MomentsArgs),
    /// Convolve a shape with an axially symmetric kernel over S² or shell-wise over B³.
    Convolve(ConvolveArgs),
    /// Axial symmetry of a shape about a set of axes, as CSV.
    Symmetry(SymmetryArgs),
    /// Train the single-layer pipeline and write a checkpoint.
    Train(TrainArgs),
    /// Predict classes with a trained checkpoint.
    Classify(ClassifyArgs),
    /// Write a JSON-lines descriptor store.
    Descriptor(DescriptorArgs),
    /// Rank a descriptor store against a query by cosine similarity.
    Retrieve(RetrieveArgs),
    /// Run the numerical verification suites.
    Verify(VerifyArgs),
    /// Export experiment series as CSV (experiment,param,value).
    PlotData(PlotDataArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Lsq,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvKind {
    Volumetric,
    Spherical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    Conv,
    AxialSymmetry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    Local,
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisSet {
    Tetrahedral,
    Pole,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    ReconVsN,
    Dataloss,
}

#[derive(Debug, Args)]
pub struct SamplingArgs {
    /// Maximum Zernike order N.
    #[arg(long)]
    pub n_order: Option<usize>,
    /// Surface samples drawn from a mesh.
    #[arg(long)]
    pub k_samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    /// Mesh (.off, .obj) or point cloud (.csv, .json).
    pub input: PathBuf,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Newton–Schulz step: a positive number or "auto".
    #[arg(long)]
    pub alpha: Option<String>,
    /// Newton–Schulz iterations.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Output moment file; JSON for a .json extension, binary otherwise.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Azimuthal grid size.
    #[arg(long, default_value_t = 32)]
    pub azimuth: usize,
    /// Polar grid size.
    #[arg(long, default_value_t = 16)]
    pub polar: usize,
}

#[derive(Debug, Args)]
pub struct ConvolveArgs {
    pub input: PathBuf,
    /// Kernel moment file.
    #[arg(long)]
    pub kernel: PathBuf,
    /// Drop the kernel's non-zonal content instead of rejecting it.
    #[arg(long)]
    pub project: bool,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Convolve shell-wise over this many radial shells.
    #[arg(long)]
    pub shells: Option<usize>,
    #[arg(long, value_enum)]
    pub frame: Option<Frame>,
    /// CSV output (alpha,beta,shell,value); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SymmetryArgs {
    pub input: PathBuf,
    /// Treat the input as a moment file rather than a shape.
    #[arg(long)]
    pub moments: bool,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long, value_enum, default_value_t = AxisSet::Tetrahedral)]
    pub axes: AxisSet,
    #[command(flatten)]
    pub grid: GridArgs,
    /// CSV output (alpha,beta,power,normalized); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset directory with one subdirectory of shape files per class.
    /// The synthetic three-class dataset is used when omitted.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Fraction of each class held out for testing (dataset directories only).
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long)]
    pub train_per_class: Option<usize>,
    #[arg(long)]
    pub test_per_class: Option<usize>,
    /// Points per synthetic shape.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub jitter: Option<f64>,
    /// Surface samples drawn from each mesh.
    #[arg(long)]
    pub k_samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub n_order: Option<usize>,
    #[arg(long)]
    pub kernels: Option<usize>,
    #[arg(long)]
    pub shells: Option<usize>,
    #[arg(long, value_enum)]
    pub frame: Option<Frame>,
    #[arg(long, value_enum)]
    pub conv: Option<ConvKind>,
    #[arg(long, value_enum)]
    pub features: Option<FeatureKind>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub pinv_iters: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Checkpoint path; JSON for a .json extension, binary otherwise.
    #[arg(long)]
    pub out: PathBuf,
    /// Training history as JSON.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Shape files; when none are given the dataset's test split is scored.
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Args)]
pub struct DescriptorArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Shape files, labelled by their parent directory; the whole dataset when none are given.
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    /// JSON-lines descriptor store.
    #[arg(long)]
    pub store: PathBuf,
    /// Use a stored descriptor as the query.
    #[arg(long, conflicts_with = "query")]
    pub query_id: Option<String>,
    /// Shape file to describe with --checkpoint and use as the query.
    #[arg(long, requires = "checkpoint")]
    pub query: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub k_samples: Option<usize>,
    /// Number of ranked results.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// orthogonality, moments, pinv, equivariance, conv, radial, symmetry, gradcheck,
    /// spherical, classification or all.
    #[arg(long, default_value = "all")]
    pub suite: String,
    /// JSON report path.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, hide = true)]
    pub corrupt_q: bool,
}

#[derive(Debug, Args)]
pub struct PlotDataArgs {
    #[arg(long, value_enum)]
    pub experiment: Experiment,
    /// Orders for recon-vs-n.
    #[arg(long, value_delimiter = ',', default_value = "2,4,6,8")]
    pub orders: Vec<usize>,
    /// Shapes in the recon-vs-n suite.
    #[arg(long, default_value_t = 10)]
    pub shapes: usize,
    /// Trained checkpoint, required for dataloss.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Removal percentages for dataloss.
    #[arg(long, value_delimiter = ',', default_value = "0,10,20,30,40,50")]
    pub percents: Vec<u32>,
    #[command(flatten)]
    pub data: DataArgs,
    /// CSV output; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
