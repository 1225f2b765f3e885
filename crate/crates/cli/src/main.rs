//! `rainbow-lab`: reproduces the rainbow-chain figures and tables as CSV, JSON and PPM artifacts.

mod commands;
mod output;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::output::CliError;
use crate::sweep::Sweep;

#[derive(Debug, Parser, Serialize)]
#[command(name = "rainbow-lab", version, about = "Exact free-fermion laboratory for rainbow chains")]
pub struct Cli {
    /// Worker threads for sweeps (defaults to all cores).
    #[arg(long, global = true, env = "RAINBOW_LAB_JOBS")]
    #[serde(skip)]
    pub jobs: Option<usize>,

    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Artifact format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Ppm,
}

/// Exactly one of `--alpha`, `--h`, `--z` fixes the deformation.
#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct Deformation {
    /// Coupling ratio α in (0, 1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Decay rate h = −2 ln α.
    #[arg(long)]
    pub h: Option<f64>,
    /// Scaling variable z = hL.
    #[arg(long)]
    pub z: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct DeformationSweep {
    #[arg(long)]
    pub alpha: Option<Sweep<f64>>,
    #[arg(long)]
    pub h: Option<Sweep<f64>>,
    #[arg(long)]
    pub z: Option<Sweep<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockArg {
    /// Left `L` sites.
    Half,
    /// Every left block `ℓ = 1 … 2L − 1`.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyArg {
    /// Resolve zero modes in the α → 1⁻ limit.
    Limit,
    /// Fail on zero modes.
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationArg {
    /// s = S/(2L) in bits against the side 2L.
    SideBits,
    /// s = S/L in nats against L.
    HalfSideNats,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Single-particle energies (and optionally orbitals) of one chain.
    Spectrum {
        #[arg(long = "L")]
        #[serde(rename = "L")]
        half_len: usize,
        #[command(flatten)]
        #[serde(flatten)]
        deformation: Deformation,
        /// Also write the orbital matrix as little-endian binary.
        #[arg(long)]
        orbitals: Option<PathBuf>,
    },
    /// Exact orbital of level m beside its continuum prediction.
    Wavefunction {
        #[arg(long = "L")]
        #[serde(rename = "L")]
        half_len: usize,
        #[command(flatten)]
        #[serde(flatten)]
        deformation: Deformation,
        /// Level index relative to the Fermi point (0 is the first level above it).
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        m: i64,
    },
    /// Fermi-velocity factor a(z) against z/(e^z − 1).
    VelocityScan {
        #[arg(long = "L")]
        #[serde(rename = "L")]
        half_len: usize,
        #[arg(long)]
        z: Sweep<f64>,
    },
    /// Many-body overlap between the continuum and exact ground states over an (L, z) grid.
    ValidityMap {
        #[arg(long = "L")]
        #[serde(rename = "L")]
        half_lens: Sweep<usize>,
        #[arg(long)]
        z: Sweep<f64>,
        /// Also write the 0.90 / 0.95 contour table.
        #[arg(long)]
        contours: Option<PathBuf>,
    },
    /// Rényi entropies of half-chain or boundary blocks.
    EntropyScan {
        #[arg(long = "L")]
        #[serde(rename = "L")]
        half_lens: Sweep<usize>,
        #[command(flatten)]
        #[serde(flatten)]
        deformation: DeformationSweep,
        /// Rényi orders.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        n: Vec<f64>,
        #[arg(long, value_enum, default_value = "half")]
        block: BlockArg,
    },
    /// Fits c_n(z), d_n(z), f_n(z) of the half-chain Rényi ansatz.
    RenyiFit {
        #[arg(long = "L")]
        #[serde(rename = "L")]
        half_lens: Sweep<usize>,
        #[arg(long)]
        z: Sweep<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        n: Vec<f64>,
    },
    /// Low-lying entanglement energies scaled by z/(2π²).
    EsCollapse {
        #[arg(long = "L")]
        #[serde(rename = "L")]
        half_lens: Sweep<usize>,
        #[arg(long)]
        z: Sweep<f64>,
        /// Levels kept per (L, z), closest to zero first.
        #[arg(long, default_value_t = 5)]
        levels: usize,
    },
    /// Strong-disorder decimation of a rainbow profile or an explicit coupling list.
    Sdrg {
        #[arg(long = "L", required_unless_present = "couplings", conflicts_with = "couplings")]
        #[serde(rename = "L")]
        half_len: Option<usize>,
        #[arg(long, conflicts_with_all = ["h", "z"])]
        alpha: Option<f64>,
        #[arg(long, conflicts_with = "z")]
        h: Option<f64>,
        #[arg(long)]
        z: Option<f64>,
        /// Comma-separated signed couplings, left to right.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, conflicts_with_all = ["alpha", "h", "z"])]
        couplings: Option<Vec<f64>>,
        /// Also write an ASCII arc diagram.
        #[arg(long)]
        arcs: Option<PathBuf>,
    },
    /// Left-half entropies of the 2D rainbow lattice and the A·x + B·ln x + C fit.
    #[command(name = "entropy-2d")]
    #[serde(rename = "entropy-2d")]
    Entropy2d {
        #[arg(long = "L")]
        #[serde(rename = "L")]
        half_lens: Sweep<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        n: Vec<f64>,
        #[arg(long, value_enum, default_value = "limit")]
        policy: PolicyArg,
        #[arg(long, value_enum, default_value = "side-bits")]
        normalization: NormalizationArg,
        /// Emit fit coefficients per α instead of the data points.
        #[arg(long)]
        fit: bool,
    },
    /// Qubism image (or amplitude table) of a small ground state.
    Qubism {
        /// Number of sites 2L (even, at most 14).
        #[arg(long)]
        sites: usize,
        #[command(flatten)]
        #[serde(flatten)]
        deformation: Deformation,
    },
    /// Oracle-equivalence and invariant checks; exits with status 1 on any violation.
    Validate,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            return output::fail(&CliError::Usage(e.to_string().trim_end().to_string()));
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => output::fail(&e),
    }
}
