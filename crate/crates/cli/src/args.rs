use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(
    name = "khessian",
    version,
    about = "Radial solutions of S_k(D²u) = λ(1-u)^q on the unit ball"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Critical exponents and, given q, the phase-plane constants and regime.
    Exponents(ExponentsArgs),
    /// Emden-Fowler orbit (t, y, z) with regime and winding summary.
    Orbit(OrbitArgs),
    /// Branch s ↦ (λ, u(0)) sampled on a logarithmic grid.
    Bifurcation(BifurcationArgs),
    /// Every radial solution at a given λ.
    Solve(SolveArgs),
    /// Residuals of a profile file produced by `solve` or elsewhere.
    Verify(VerifyArgs),
    /// Extremal λ estimated from the maximal-solution iteration.
    LambdaStar(LambdaStarArgs),
    /// Solution counts over a grid of (q, λ), optionally in parallel.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// `q` as a number or the literal `qstar` for the critical exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QArg {
    Value(f64),
    Critical,
}

impl Serialize for QArg {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            QArg::Value(v) => s.serialize_f64(*v),
            QArg::Critical => s.serialize_str("qstar"),
        }
    }
}

impl std::str::FromStr for QArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "qstar" | "q*" => Ok(QArg::Critical),
            _ => s
                .parse::<f64>()
                .map(QArg::Value)
                .map_err(|_| format!("expected a number or `qstar`, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProblemArgs {
    #[arg(long)]
    pub n: i64,
    #[arg(long)]
    pub k: i64,
    /// Exponent, or `qstar`.
    #[arg(long)]
    pub q: QArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Data file; standard output when absent.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ExponentsArgs {
    #[arg(long)]
    pub n: i64,
    #[arg(long)]
    pub k: i64,
    #[arg(long)]
    pub q: Option<QArg>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OrbitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: ProblemArgs,
    /// Integrate the rescaled profile on s ≤ s_max.
    #[arg(long, default_value_t = 1e8)]
    pub s_max: f64,
    #[arg(long, env = "HF_TOL", default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BifurcationArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 1e-3)]
    pub s_min: f64,
    #[arg(long, default_value_t = 1e6)]
    pub s_max: f64,
    #[arg(long, default_value_t = 20)]
    pub per_decade: usize,
    #[arg(long, env = "HF_TOL", default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: ProblemArgs,
    /// Physical λ.
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1e12)]
    pub s_max: f64,
    #[arg(long, env = "HF_TOL", default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Directory for one profile file per solution.
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    /// JSON solution document or CSV with columns r,u.
    #[serde(skip)]
    pub file: PathBuf,
    /// Overrides the file's parameters.
    #[arg(long)]
    pub n: Option<i64>,
    #[arg(long)]
    pub k: Option<i64>,
    #[arg(long)]
    pub q: Option<QArg>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Largest accepted relative residual.
    #[arg(long, default_value_t = 1e-6)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LambdaStarArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: ProblemArgs,
    /// Relative width of the final bracket.
    #[arg(long, default_value_t = 1e-3)]
    pub rel_tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub n: i64,
    #[arg(long)]
    pub k: i64,
    /// Comma-separated exponents.
    #[arg(long, value_delimiter = ',', required = true)]
    pub q: Vec<QArg>,
    /// Comma-separated physical λ values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambda: Vec<f64>,
    #[arg(long, default_value_t = 1e12)]
    pub s_max: f64,
    #[arg(long, env = "HF_TOL", default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Worker threads; results are ordered regardless.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}
