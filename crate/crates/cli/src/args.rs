use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wiretap_core::solver::DEFAULT_ALPHA;
use wiretap_core::tol::EXT_TOL;

#[derive(Debug, Parser)]
#[command(name = "wiretap-region", version, about = "Capacity-equivocation regions of Gaussian MIMO wiretap channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep boundary points over a common-rate grid and weight pairs.
    Trace(TraceArgs),
    /// Boundary sweep under a total power budget instead of a covariance bound.
    PowerRegion(PowerArgs),
    /// Secrecy capacity of the channel under its constraint.
    SecrecyCapacity(SecrecyArgs),
    /// Build and check a KKT certificate for boundary points.
    VerifyKkt(VerifyArgs),
    /// Enhance the channel from a certificate and check the enhanced channel.
    Enhance(EnhanceArgs),
    /// Compare solver and grid-oracle values cell by cell.
    OracleCompare(CompareArgs),
    /// Convert a triple between (R0, Rp, Rs) and (R0, R1, Re).
    Map(MapArgs),
    /// Decide whether a rate triple lies in the region.
    Membership(MembershipArgs),
}

/// Options shared by the boundary sweeps.
#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Channel JSON file.
    pub channel: PathBuf,
    /// Absolute common rates in nats.
    #[arg(long, value_delimiter = ',', conflicts_with = "r0_relative")]
    pub r0_grid: Option<Vec<f64>>,
    /// Common rates as fractions of the largest feasible one.
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75")]
    pub r0_relative: Vec<f64>,
    /// Weight pairs `mu_p:mu_s`, comma separated.
    #[arg(long, default_value = "0:1,1:1,1:2,2:1")]
    pub weights: String,
    /// Gain perturbation used for channels that are not aligned.
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write JSON records (with K*) instead of CSV.
    #[arg(long)]
    pub json: bool,
    /// Report rates in bits.
    #[arg(long)]
    pub bits: bool,
    /// Seed of the solver's random restarts.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses one per core.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Solve to a projected-gradient norm of 1e-10 instead of 1e-8.
    #[arg(long)]
    pub refined: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PowerArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
    /// Total power budget; overrides any constraint in the channel file.
    #[arg(long)]
    pub power: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SecrecyArgs {
    pub channel: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long)]
    pub bits: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write a JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Point JSON: one record or an array, as written by `trace --json`.
    pub point: PathBuf,
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Certificate JSON output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EnhanceArgs {
    /// Certificate JSON as written by `verify-kkt`.
    pub cert: PathBuf,
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Tolerance for the Loewner and product-identity residuals.
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    /// Tolerance for the extremal inequality.
    #[arg(long, default_value_t = EXT_TOL)]
    pub extremal_tol: f64,
    /// Gaussian test covariances for the extremal inequality.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    pub channel: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75")]
    pub r0_relative: Vec<f64>,
    #[arg(long, default_value = "0:1,1:1,1:2,2:1")]
    pub weights: String,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Largest accepted |solver - oracle| in nats.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long)]
    pub bits: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    /// (R0, Rp, Rs) to (R0, R1, Re).
    PublicToEquivocation,
    /// (R0, R1, Re) to (R0, Rp, Rs).
    EquivocationToPublic,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::PublicToEquivocation => "public-to-equivocation",
            Direction::EquivocationToPublic => "equivocation-to-public",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct MapArgs {
    /// Triple JSON: `{"r0", "rp", "rs"}` or `{"r0", "r1", "re"}`.
    pub triple: PathBuf,
    #[arg(long, value_enum)]
    pub direction: Direction,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MembershipArgs {
    pub triple: PathBuf,
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
