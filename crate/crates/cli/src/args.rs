use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "netdmap", version, about = "Diffusion maps over graph ensembles and coarse projective integration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Write a graph dataset (ER, Chung–Lu, or evolving-graph snapshots).
    Generate(GenerateArgs),
    /// Subgraph-census densities of every graph.
    Census(CensusArgs),
    /// Spectral features S(λ) of every graph on a λ grid.
    Spectral(SpectralArgs),
    /// Pairwise distances and Gaussian kernel from a feature stage.
    Kernel(KernelArgs),
    /// Diffusion map from a kernel stage.
    Dmap(DmapArgs),
    /// Nyström coordinates of graphs against a fitted diffusion map.
    Nystrom(NystromArgs),
    /// PCA of normalized degree histograms.
    Pca(PcaArgs),
    /// Local Jacobian of targets with respect to a diffusion-coordinate pair.
    Jacobian(JacobianArgs),
    /// Coarse projective integration of the add/remove model.
    Cpi(CpiArgs),
    /// Re-run the command recorded in a manifest and compare outputs.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OutputArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Overwrite a non-empty output directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKind {
    Er,
    ChungLu,
    Evolve,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub kind: GraphKind,
    /// Graphs (er, chung-lu) or trajectories (evolve).
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 0.0)]
    pub p_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p_max: f64,
    /// Chung–Lu skew interval.
    #[arg(long, default_value_t = 0.0)]
    pub r_min: f64,
    #[arg(long, default_value_t = 0.5)]
    pub r_max: f64,
    /// Rule iterations per trajectory (evolve).
    #[arg(long, default_value_t = 15_000)]
    pub steps: u64,
    #[arg(long, default_value_t = 750)]
    pub snapshot_every: u64,
    #[arg(long, default_value_t = 0.1)]
    pub r_remove: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricArg {
    Subgraph,
    Spectral,
}

impl MetricArg {
    pub fn tag(self) -> &'static str {
        match self {
            MetricArg::Subgraph => "subgraph",
            MetricArg::Spectral => "spectral",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CensusArgs {
    /// Graph dataset: a `generate` output directory or a .jsonl file.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Count by ESU enumeration instead of closed-form identities.
    #[arg(long)]
    pub exact: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SpectralArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Grid start; without --lambda-min/--lambda-max the grid is
    /// (0, 5/(n-1)].
    #[arg(long, requires = "lambda_max")]
    pub lambda_min: Option<f64>,
    #[arg(long, requires = "lambda_min")]
    pub lambda_max: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub lambda_count: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct KernelArgs {
    /// A `census` or `spectral` output directory.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Kernel scale; defaults to the median pairwise distance.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Expected metric of the input features.
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DmapArgs {
    /// A `kernel` output directory.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub k_eigs: usize,
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    /// Polynomial degree of the harmonic diagnostic.
    #[arg(long, default_value_t = 5)]
    pub harmonic_degree: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct NystromArgs {
    /// A `dmap` output directory.
    #[arg(long)]
    pub model: PathBuf,
    /// Graphs to embed.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    /// 1-based eigenvector numbers; default all non-trivial ones.
    #[arg(long, value_delimiter = ',')]
    pub components: Vec<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PcaArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long)]
    pub uncentered: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct JacobianArgs {
    /// A `dmap` output directory.
    #[arg(long)]
    pub model: PathBuf,
    /// The graph dataset the model was fitted to (source of --params).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Two generation parameters to use as targets.
    #[arg(long, value_delimiter = ',', conflicts_with = "pca")]
    pub params: Vec<String>,
    /// A `pca` output directory; the first two scores are the targets.
    #[arg(long)]
    pub pca: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [2, 3])]
    pub pair: Vec<usize>,
    #[arg(long, default_value_t = 15)]
    pub k_nn: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CpiArgs {
    /// A `dmap` output directory fitted to the reference snapshots.
    #[arg(long)]
    pub model: PathBuf,
    /// The reference snapshots.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [2, 3])]
    pub pair: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub t_burst: u64,
    #[arg(long, default_value_t = 10)]
    pub t_project: u64,
    #[arg(long, default_value_t = 10)]
    pub steps_per_timestep: u64,
    #[arg(long, default_value_t = 4)]
    pub k_runs: usize,
    #[arg(long, default_value_t = 10)]
    pub neighbors: usize,
    #[arg(long, default_value_t = 50)]
    pub coarse_steps: usize,
    #[arg(long, default_value_t = 0.1)]
    pub r_remove: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Edge probability of the ER initial graph.
    #[arg(long, default_value_t = 0.05)]
    pub initial_p: f64,
    #[arg(long, default_value_t = 0)]
    pub initial_seed: u64,
    /// Replicas of a direct simulation to compare against (0 = none).
    #[arg(long, default_value_t = 0)]
    pub fine_replicas: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    /// Manifest to reproduce.
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

impl Command {
    pub fn output(&self) -> &OutputArgs {
        match self {
            Command::Generate(a) => &a.output,
            Command::Census(a) => &a.output,
            Command::Spectral(a) => &a.output,
            Command::Kernel(a) => &a.output,
            Command::Dmap(a) => &a.output,
            Command::Nystrom(a) => &a.output,
            Command::Pca(a) => &a.output,
            Command::Jacobian(a) => &a.output,
            Command::Cpi(a) => &a.output,
            Command::Rerun(a) => &a.output,
        }
    }

    pub fn output_mut(&mut self) -> &mut OutputArgs {
        match self {
            Command::Generate(a) => &mut a.output,
            Command::Census(a) => &mut a.output,
            Command::Spectral(a) => &mut a.output,
            Command::Kernel(a) => &mut a.output,
            Command::Dmap(a) => &mut a.output,
            Command::Nystrom(a) => &mut a.output,
            Command::Pca(a) => &mut a.output,
            Command::Jacobian(a) => &mut a.output,
            Command::Cpi(a) => &mut a.output,
            Command::Rerun(a) => &mut a.output,
        }
    }

    pub fn stage(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Census(_) => "census",
            Command::Spectral(_) => "spectral",
            Command::Kernel(_) => "kernel",
            Command::Dmap(_) => "dmap",
            Command::Nystrom(_) => "nystrom",
            Command::Pca(_) => "pca",
            Command::Jacobian(_) => "jacobian",
            Command::Cpi(_) => "cpi",
            Command::Rerun(_) => "rerun",
        }
    }
}
