use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use piv_core::{BoundaryMode, Regularizer};

#[derive(Debug, Parser)]
#[command(
    name = "pivctl",
    version,
    about = "Synthetic PIV pairs, flow estimation and turbulence diagnostics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write synthetic image pairs with their ground-truth flow.
    #[command(args_override_self = true)]
    Generate(GenerateArgs),
    /// Estimate the displacement field between two images.
    #[command(args_override_self = true)]
    Estimate(EstimateArgs),
    /// Turbulence statistics of flow and density snapshots.
    #[command(args_override_self = true)]
    Diagnose(DiagnoseArgs),
    /// Accuracy and timing of the estimators over a set of pairs.
    #[command(args_override_self = true)]
    Bench(BenchArgs),
}

impl Command {
    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Generate(a) => &a.common,
            Command::Estimate(a) => &a.common,
            Command::Diagnose(a) => &a.common,
            Command::Bench(a) => &a.common,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Worker threads; defaults to one per core.
    #[arg(long)]
    pub threads: Option<usize>,
    /// File of `key = value` lines supplying default flag values.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowKind {
    Uniform(f64, f64),
    Random,
}

impl std::str::FromStr for FlowKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "random" {
            return Ok(FlowKind::Random);
        }
        let parts = s
            .strip_prefix("uniform:")
            .ok_or_else(|| format!("expected `uniform:DX,DY` or `random`, got `{s}`"))?;
        let comps: Vec<f64> = parse_list(parts)?;
        match comps[..] {
            [dx, dy] => Ok(FlowKind::Uniform(dx, dy)),
            _ => Err(format!("uniform flow needs two components, got `{parts}`")),
        }
    }
}

/// Comma-separated list; blanks around items are ignored.
pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|item| {
            let item = item.trim();
            item.parse().map_err(|e| format!("`{item}`: {e}"))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Boundary {
    Clamp,
    Periodic,
}

impl From<Boundary> for BoundaryMode {
    fn from(b: Boundary) -> Self {
        match b {
            Boundary::Clamp => BoundaryMode::Clamp,
            Boundary::Periodic => BoundaryMode::Periodic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Multi-pass window-deformation cross-correlation.
    Cc,
    /// Coarse-to-fine Horn-Schunck.
    Hs,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Cc => "cc",
            Method::Hs => "hs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegularizerArg {
    Grad,
    Div,
}

impl From<RegularizerArg> for Regularizer {
    fn from(r: RegularizerArg) -> Self {
        match r {
            RegularizerArg::Grad => Regularizer::Gradient,
            RegularizerArg::Div => Regularizer::Divergence,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 256)]
    pub height: usize,
    /// Peak displacement of random flows, px.
    #[arg(long, default_value_t = 5.0)]
    pub max_disp: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub synth: SynthArgs,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// `uniform:DX,DY` or `random`.
    #[arg(long)]
    pub flow: FlowKind,
    /// Number of pairs.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// File name prefix.
    #[arg(long, default_value = "pair")]
    pub stem: String,
}

/// Estimator selection and tuning shared by `estimate` and `bench`.
#[derive(Debug, Clone, Args)]
pub struct MethodArgs {
    /// Boundary handling applied to the input images.
    #[arg(long, value_enum, default_value_t = Boundary::Clamp)]
    pub boundary: Boundary,
    /// Cross-correlation window sizes per pass (odd, px), e.g. `33,25,13`.
    #[arg(long)]
    pub windows: Option<String>,
    /// Window strides per pass.
    #[arg(long)]
    pub strides: Option<String>,
    /// Search radii per pass.
    #[arg(long)]
    pub search: Option<String>,
    /// Skip the normalized-median outlier test.
    #[arg(long)]
    pub no_validate: bool,
    /// Keep integer correlation peaks.
    #[arg(long)]
    pub no_subpixel: bool,
    /// Gaussian width applied to each correction field; 0 disables.
    #[arg(long)]
    pub correction_smoothing: Option<f64>,
    /// Horn-Schunck smoothness weight.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Pyramid levels.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Jacobi iterations per linearization.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Warps at full resolution; doubled at each coarser level.
    #[arg(long)]
    pub warps: Option<usize>,
    #[arg(long, value_enum)]
    pub regularizer: Option<RegularizerArg>,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub img1: PathBuf,
    #[arg(long)]
    pub img2: PathBuf,
    /// Output `.flo`; defaults to `<img1 stem>_pred.flo` beside the input.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Ground-truth `.flo`; prints the RMSE when given.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Cc)]
    pub method: Method,
    #[command(flatten)]
    pub tuning: MethodArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Velocity snapshots.
    #[arg(long, num_args = 1..)]
    pub flo: Vec<PathBuf>,
    /// Density snapshots, paired in order with `--flo` for the flux.
    #[arg(long, num_args = 1..)]
    pub pgm: Vec<PathBuf>,
    /// Subset of `spectrum,div,sf,qr,density,flux`; defaults to every test
    /// the inputs allow.
    #[arg(long)]
    pub tests: Option<String>,
    /// Output directory for the CSV tables.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Prefix for output file names.
    #[arg(long, default_value = "")]
    pub prefix: String,
    #[arg(long, default_value_t = 32)]
    pub bins: usize,
    /// Separations for structure functions and flux, px.
    #[arg(long, default_value = "1,2,3,4,8,16")]
    pub radii: String,
    /// Structure-function orders.
    #[arg(long, default_value = "1,2,3,4,5,6")]
    pub orders: String,
    /// Directions averaged per separation.
    #[arg(long, default_value_t = piv_core::turbdiag::DEFAULT_ORIENTATIONS)]
    pub orientations: usize,
    /// Coarse-graining width for the gradient invariants, px.
    #[arg(long, default_value_t = 2.0)]
    pub scale: f64,
    #[arg(long, value_enum, default_value_t = Boundary::Periodic)]
    pub boundary: Boundary,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub synth: SynthArgs,
    /// Generate the pairs in memory.
    #[arg(long, conflicts_with = "suite")]
    pub synthetic: bool,
    /// Directory of `*_img1.pgm`, `*_img2.pgm`, `*_flow.flo` triples.
    #[arg(long)]
    pub suite: Option<PathBuf>,
    /// Synthetic flow cases.
    #[arg(long, default_value = "uniform,random")]
    pub cases: String,
    #[arg(long, default_value = "cc,hs")]
    pub methods: String,
    /// Pairs per synthetic case.
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    /// Directory for `bench_rows.csv` and `bench_summary.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub tuning: MethodArgs,
}
