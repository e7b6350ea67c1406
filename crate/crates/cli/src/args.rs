use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stiefel_fourier::evaluate::{EvalConfig, MethodChoice};
use stiefel_fourier::exact::QuadratureSpec;
use stiefel_fourier::Normalization;

#[derive(Debug, Parser)]
#[command(name = "stiefel-fourier", version, about = "Fourier transform of the surface measure of Stiefel manifolds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the transform at one frequency.
    Eval(EvalArgs),
    /// Run every applicable method and compare them.
    Compare(CompareArgs),
    /// Exact value against the leading asymptotic term along a ray.
    Sweep(SweepArgs),
    /// Trace moments of Haar-random orthogonal matrices.
    Moments(MomentsArgs),
    /// Run the numerical self-checks.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    Mc,
    Quadrature,
    Recursive,
    Asymptotic,
    ClosedForm,
}

impl From<MethodArg> for MethodChoice {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Auto => MethodChoice::Auto,
            MethodArg::Mc => MethodChoice::MonteCarlo,
            MethodArg::Quadrature => MethodChoice::Quadrature,
            MethodArg::Recursive => MethodChoice::Recursive,
            MethodArg::Asymptotic => MethodChoice::Asymptotic,
            MethodArg::ClosedForm => MethodChoice::ClosedForm,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Surface,
    Probability,
    Riemannian,
}

impl NormArg {
    pub fn as_str(self) -> &'static str {
        match self {
            NormArg::Surface => "surface",
            NormArg::Probability => "probability",
            NormArg::Riemannian => "riemannian",
        }
    }
}

impl From<NormArg> for Normalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Surface => Normalization::Surface,
            NormArg::Probability => Normalization::Probability,
            NormArg::Riemannian => Normalization::Riemannian,
        }
    }
}

/// Where the frequency comes from: a singular spectrum or a matrix file.
#[derive(Debug, Args)]
pub struct InputArgs {
    /// Ambient dimension.
    #[arg(long)]
    pub n: Option<usize>,
    /// Frame size.
    #[arg(long)]
    pub k: Option<usize>,
    /// Singular values, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "matrix")]
    pub spectrum: Option<Vec<f64>>,
    /// n x k frequency matrix as a JSON nested array or a headerless CSV file.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NumericArgs {
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Relative threshold below which a singular value counts as zero.
    #[arg(long, default_value_t = 1e-3)]
    pub tol_zero: f64,
    /// Relative threshold below which two singular values count as equal.
    #[arg(long, default_value_t = 1e-3)]
    pub tol_gap: f64,
    /// Target relative accuracy of the quadratures.
    #[arg(long, default_value_t = 1e-12)]
    pub quad_tol: f64,
}

impl NumericArgs {
    pub fn config(&self) -> EvalConfig {
        EvalConfig {
            tol_zero: self.tol_zero,
            tol_gap: self.tol_gap,
            samples: self.samples,
            seed: self.seed,
            quadrature: QuadratureSpec::default().with_tol(self.quad_tol),
            ..EvalConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[arg(long, value_enum, default_value_t = NormArg::Surface)]
    pub normalization: NormArg,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    #[command(flatten)]
    pub numeric: NumericArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub numeric: NumericArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    /// Direction spectrum; row i evaluates at tau times it.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub direction: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64,128")]
    pub taus: Vec<f64>,
    /// Method for the exact column; by default the best exact one available.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[command(flatten)]
    pub numeric: NumericArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 4)]
    pub max_m: u32,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Deterministic checks only.
    #[arg(long)]
    pub quick: bool,
    /// Compare both amplitude sign conventions against exact values.
    #[arg(long)]
    pub sign_check: bool,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}
