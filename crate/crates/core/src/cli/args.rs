use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "eprenorm",
    version,
    about = "Exceptional points of an optomechanical cavity coupled to a structured mechanical bath"
)]
pub struct Cli {
    /// TOML parameter file (Hz); defaults to the representative parameter set
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Write the data table here instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Emit JSON (next to --out, or on stdout)
    #[arg(long, global = true)]
    pub json: bool,

    /// Suppress human-readable summaries
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Locate the Markovian, leading-order and exact exceptional points
    Ep(EpArgs),
    /// Eigenvalue branches along a coupling sweep
    Eigs(EigsArgs),
    /// Petermann factors along a coupling sweep or at a single point
    Petermann(PetermannArgs),
    /// Cavity reflection spectrum and transparency-dip summary
    Spectrum(SpectrumArgs),
    /// Time-domain check of the pseudomode embedding
    Embedcheck(EmbedArgs),
}

/// Detuning selection for sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaMode {
    /// `-omega_m`, the memoryless EP detuning
    Markovian,
    /// Detuning of the exact EP
    Exact,
    /// Fixed value in kHz
    Value(f64),
}

impl FromStr for DeltaMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "markovian" => Ok(Self::Markovian),
            "exact" => Ok(Self::Exact),
            _ => {
                let v = s
                    .strip_prefix("value:")
                    .ok_or_else(|| format!("expected markovian, exact or value:<kHz>, got `{s}`"))?;
                let x: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| format!("`{v}` is not a number"))?;
                if !x.is_finite() {
                    return Err(format!("detuning must be finite, got `{v}`"));
                }
                Ok(Self::Value(x))
            }
        }
    }
}

impl fmt::Display for DeltaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Markovian => write!(f, "markovian"),
            Self::Exact => write!(f, "exact"),
            Self::Value(v) => write!(f, "value:{v}"),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GSweep {
    /// Lower coupling bound (kHz)
    #[arg(long, default_value_t = 40.0, value_name = "kHz", allow_negative_numbers = true)]
    pub g_min: f64,
    /// Upper coupling bound (kHz)
    #[arg(long, default_value_t = 60.0, value_name = "kHz", allow_negative_numbers = true)]
    pub g_max: f64,
    #[arg(long, default_value_t = 401)]
    pub g_points: usize,
}

#[derive(Debug, Clone, Args)]
pub struct OmegaSweep {
    /// Lower probe frequency (kHz)
    #[arg(long, default_value_t = 900.0, value_name = "kHz", allow_negative_numbers = true)]
    pub omega_min: f64,
    /// Upper probe frequency (kHz)
    #[arg(long, default_value_t = 1100.0, value_name = "kHz", allow_negative_numbers = true)]
    pub omega_max: f64,
    #[arg(long, default_value_t = 2001)]
    pub omega_points: usize,
}

#[derive(Debug, Clone, Args)]
pub struct EpArgs {
    /// Also list every physical root reached from the restart seeds
    #[arg(long)]
    pub candidates: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EigsArgs {
    #[command(flatten)]
    pub sweep: GSweep,
    #[arg(long, value_name = "MODE")]
    pub delta_mode: Option<DeltaMode>,
    /// Add the memoryless 2x2 eigenvalues as reference columns
    #[arg(long)]
    pub markovian_ref: bool,
}

#[derive(Debug, Clone, Args)]
pub struct PetermannArgs {
    #[command(flatten)]
    pub sweep: GSweep,
    /// Without it, both EP calibrations are emitted
    #[arg(long, value_name = "MODE")]
    pub delta_mode: Option<DeltaMode>,
    /// Single coupling value instead of a sweep (kHz)
    #[arg(long, value_name = "kHz", conflicts_with = "at_ep")]
    pub at: Option<f64>,
    /// Evaluate exactly at each calibration's EP coordinates
    #[arg(long)]
    pub at_ep: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub sweep: OmegaSweep,
    /// Put both curves at this detuning instead of each at its own EP
    #[arg(long, value_name = "MODE")]
    pub delta_mode: Option<DeltaMode>,
    /// Only the memoryless curve
    #[arg(long)]
    pub markovian_only: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EmbedArgs {
    /// Integration time (s); defaults to 20/kappa
    #[arg(long, value_name = "SECONDS")]
    pub t_final: Option<f64>,
    /// Step (s); defaults to 1/(100 omega_m)
    #[arg(long, value_name = "SECONDS")]
    pub dt: Option<f64>,
}
