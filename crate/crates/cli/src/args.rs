//! Command-line flags. Every flag can also be set through an `MSC_*`
//! environment variable; explicit flags win.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::output::Precision;
use crate::table::LabelColumn;

#[derive(Debug, Parser)]
#[command(name = "msc", version, about = "Multi-point spectral clustering with Jensen-Tsallis kernels")]
pub struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = "MSC_THREADS", default_value_t = 0)]
    pub threads: usize,

    /// Numeric output precision.
    #[arg(long, global = true, env = "MSC_PRECISION", value_enum, default_value_t = Precision::Six)]
    pub precision: Precision,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster the rows of a delimiter-separated file.
    Cluster(ClusterArgs),
    /// Segment a PGM image.
    Segment(SegmentArgs),
    /// Write the two-arcs dataset.
    GenArcs(GenArcsArgs),
    /// Run the closed-form, PSD and permutation property suites.
    Verify(VerifyArgs),
    /// Purity over a grid of kernel parameters.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelName {
    /// Jensen-Tsallis multi-point kernel.
    Jt,
    /// Multi-point linear kernel.
    Linear,
    /// Two-point Gaussian baseline.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeName {
    Auto,
    Brute,
    Sampled,
    ClosedForm,
    /// Use the two-point kernel matrix itself as the affinity.
    KernelMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeatureName {
    Intensity,
    Texture16,
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[arg(long, env = "MSC_KERNEL", value_enum, default_value_t = KernelName::Jt)]
    pub kernel: KernelName,

    /// Tsallis index in [0, 2].
    #[arg(long, env = "MSC_Q", default_value_t = 1.0)]
    pub q: f64,

    /// Kernel order (points per kernel evaluation).
    #[arg(long = "n", env = "MSC_N", default_value_t = 2)]
    pub order: usize,

    /// Gaussian bandwidth.
    #[arg(long, env = "MSC_SIGMA", default_value_t = 1.0)]
    pub sigma: f64,
}

#[derive(Debug, Clone, Args)]
pub struct AffinityArgs {
    #[arg(long, env = "MSC_MODE", value_enum, default_value_t = ModeName::Auto)]
    pub mode: ModeName,

    /// Sampled unfolding columns (sampled mode).
    #[arg(long, env = "MSC_COLUMNS")]
    pub columns: Option<usize>,

    /// Visit every column once instead of sampling (sampled mode).
    #[arg(long, env = "MSC_EXHAUSTIVE")]
    pub exhaustive: bool,

    /// Maximum N^(n+1) kernel evaluations for brute force.
    #[arg(long, env = "MSC_BUDGET", default_value_t = 1e10)]
    pub budget: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SpectralArgs {
    #[arg(long, env = "MSC_SEED", default_value_t = 0)]
    pub seed: u64,

    #[arg(long, env = "MSC_RESTARTS", default_value_t = 10)]
    pub restarts: usize,

    #[arg(long, env = "MSC_MAX_ITERS", default_value_t = 300)]
    pub max_iters: usize,

    /// Relative distortion change that stops Lloyd iterations.
    #[arg(long, env = "MSC_KMEANS_TOL", default_value_t = 1e-6)]
    pub kmeans_tol: f64,

    #[arg(long, env = "MSC_DEGREE_FLOOR", default_value_t = 1e-12)]
    pub degree_floor: f64,
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    /// Input file, one point per row.
    #[arg(short, long, env = "MSC_INPUT")]
    pub input: PathBuf,

    /// Field delimiter (a single character; `tab` for tabs).
    #[arg(long, env = "MSC_DELIMITER", default_value = ",")]
    pub delimiter: String,

    /// Skip the first row.
    #[arg(long, env = "MSC_HEADER")]
    pub header: bool,

    /// Column with integer class labels: a 1-based position or `last`.
    #[arg(long, env = "MSC_LABEL_COLUMN")]
    pub label_column: Option<LabelColumn>,

    /// Min-max scale every feature into [0, 1].
    #[arg(long, env = "MSC_NORMALIZE")]
    pub normalize: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub table: TableArgs,

    /// Predicted labels, one 1-based label per row.
    #[arg(short, long, env = "MSC_OUTPUT")]
    pub output: PathBuf,

    #[arg(short = 'm', long, env = "MSC_CLUSTERS", default_value_t = 2)]
    pub clusters: usize,

    #[command(flatten)]
    pub kernel: KernelArgs,

    #[command(flatten)]
    pub affinity: AffinityArgs,

    #[command(flatten)]
    pub spectral: SpectralArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SegmentArgs {
    /// Grayscale PGM (P2 or P5).
    #[arg(short, long, env = "MSC_INPUT")]
    pub input: PathBuf,

    /// Label grid output, one image row per line.
    #[arg(short, long, env = "MSC_OUTPUT")]
    pub output: PathBuf,

    /// False-color PPM output [default: the label grid path with a .ppm extension].
    #[arg(long, env = "MSC_PPM")]
    pub ppm: Option<PathBuf>,

    #[arg(long, env = "MSC_SEGMENTS", default_value_t = 2)]
    pub segments: usize,

    /// Spectral clusters before merging.
    #[arg(long, env = "MSC_INITIAL_CLUSTERS", default_value_t = 10)]
    pub initial_clusters: usize,

    /// Weight of the location similarity.
    #[arg(long, env = "MSC_LAMBDA", default_value_t = 0.008)]
    pub lambda: f64,

    /// Location cutoff radius in pixels.
    #[arg(long, env = "MSC_RADIUS", default_value_t = 5.0)]
    pub radius: f64,

    #[arg(long, env = "MSC_FEATURE", value_enum, default_value_t = FeatureName::Intensity)]
    pub feature: FeatureName,

    /// Largest accepted width x height.
    #[arg(long, env = "MSC_MAX_PIXELS", default_value_t = msc_core::MAX_PIXELS)]
    pub max_pixels: usize,

    #[command(flatten)]
    pub kernel: KernelArgs,

    #[command(flatten)]
    pub affinity: AffinityArgs,

    #[command(flatten)]
    pub spectral: SpectralArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GenArcsArgs {
    #[arg(short, long, env = "MSC_OUTPUT")]
    pub output: PathBuf,

    #[arg(long, env = "MSC_POINTS", default_value_t = 100)]
    pub points: usize,

    #[arg(long, env = "MSC_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Standard deviation of the radial noise.
    #[arg(long, env = "MSC_NOISE", default_value_t = 0.01)]
    pub noise: f64,

    #[arg(long, env = "MSC_INNER_RADIUS", default_value_t = 0.2)]
    pub inner_radius: f64,

    #[arg(long, env = "MSC_OUTER_RADIUS", default_value_t = 0.4)]
    pub outer_radius: f64,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, env = "MSC_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Random cases in the closed-form suite.
    #[arg(long, env = "MSC_CASES", default_value_t = 100)]
    pub cases: usize,

    /// Corrupt one closed-form result to exercise the failure path.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub table: TableArgs,

    /// Results table [default: standard output].
    #[arg(short, long, env = "MSC_OUTPUT")]
    pub output: Option<PathBuf>,

    #[arg(long, env = "MSC_KERNEL", value_enum, default_value_t = KernelName::Jt)]
    pub kernel: KernelName,

    /// q values: a comma list or `start:stop:step`.
    #[arg(long, env = "MSC_Q_GRID", default_value = "0:2:0.25")]
    pub q_grid: String,

    /// Kernel orders: a comma list or `start:stop:step`.
    #[arg(long, env = "MSC_N_GRID", default_value = "2")]
    pub n_grid: String,

    /// Gaussian bandwidths: a comma list or `start:stop:step`.
    #[arg(long, env = "MSC_SIGMA_GRID", default_value = "0.1,0.2,0.5,1")]
    pub sigma_grid: String,

    /// Clusters [default: number of classes in the label column].
    #[arg(short = 'm', long, env = "MSC_CLUSTERS")]
    pub clusters: Option<usize>,

    /// k-means repeats per kernel, seeds seed, seed+1, ...
    #[arg(long, env = "MSC_REPEATS", default_value_t = 10)]
    pub repeats: usize,

    #[command(flatten)]
    pub affinity: AffinityArgs,

    #[command(flatten)]
    pub spectral: SpectralArgs,
}
