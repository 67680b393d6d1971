//! `poroperm` — runs the network, relation and poroelastic experiments and
//! writes their CSV/VTK outputs.
//!
//! Exit status: 0 success, 1 I/O, 2 usage, 3 invalid input, 4 numerical
//! failure.

mod commands;
mod manifest;

use clap::{Parser, Subcommand};
use manifest::Profile;
use poroperm::biot::RunAborted;
use poroperm::network::Topology;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "poroperm",
    version,
    about = "Pore-network percolation and poroelastic flow experiments"
)]
struct Cli {
    /// Master seed for every random choice
    #[arg(long, global = true, default_value_t = 2024)]
    seed: u64,

    /// Problem sizes: desk (minutes) or full (reference sizes)
    #[arg(long, global = true, value_enum, default_value = "desk")]
    profile: Profile,

    /// Output directory; defaults to runs/<experiment id>
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo channel closure: trial records, bin statistics, threshold
    NetworkSweep {
        #[arg(long)]
        topology: Topology,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        ny: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        /// Initial porosity of the network
        #[arg(long, default_value_t = 0.4)]
        theta0: f64,
        /// Smallest open-channel fraction used in the power-law fit
        #[arg(long, default_value_t = 0.5)]
        fit_min_open: f64,
    },
    /// Threshold estimate from an existing records CSV
    ThresholdEstimate {
        #[arg(long)]
        records: PathBuf,
        /// Grid the records came from (for the open-channel count)
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        ny: Option<usize>,
    },
    /// Normalized κ(θ) curves of the closures
    RelationCurve {
        /// Thresholds of the network-inspired curves
        #[arg(long, value_delimiter = ',', default_values_t = [0.4935, 0.3232, 0.3438])]
        p_c: Vec<f64>,
        #[arg(long, default_value_t = 0.4)]
        theta0: f64,
        #[arg(long, default_value_t = 2e-4)]
        grain_diameter: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// One poroelastic run from a TOML config
    BiotRun {
        #[arg(long)]
        config: PathBuf,
        /// Final time; overrides the config and the profile cap
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Mean outflow against the network-inspired threshold
    ThresholdSweep {
        #[arg(long)]
        config: PathBuf,
        /// Mesh spacings to sweep on
        #[arg(long, value_delimiter = ',', default_values_t = [0.02, 0.04])]
        spacing: Vec<f64>,
        /// Number of evenly spaced thresholds on [0, 0.975]
        #[arg(long, default_value_t = 40)]
        points: usize,
        /// Explicit thresholds instead of the even grid
        #[arg(long, value_delimiter = ',')]
        p_c: Option<Vec<f64>>,
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Distance to the saddle-point limit as τκ shrinks
    SaddleCheck {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Mesh spacing (10 × 5 cells on the reference domain at 0.2)
        #[arg(long, default_value_t = 0.2)]
        spacing: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 1e-4, 1e-6])]
        factors: Vec<f64>,
    },
}

pub enum Failure {
    Usage(String),
    Core(poroperm::Error),
    Aborted(Box<RunAborted>),
    Io(std::io::Error),
}

impl From<poroperm::Error> for Failure {
    fn from(e: poroperm::Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl Failure {
    fn report(&self) -> u8 {
        use poroperm::Error as E;
        match self {
            Failure::Usage(msg) => {
                eprintln!("error: {msg}");
                2
            }
            Failure::Aborted(a) => {
                eprintln!("error: {a}");
                4
            }
            Failure::Io(e) => {
                eprintln!("error: {e}");
                1
            }
            Failure::Core(e) => {
                eprintln!("error: {e}");
                match e {
                    E::Io(_) | E::Csv(_) => 1,
                    E::Solver(_) | E::Estimation(_) | E::Fit(_) => 4,
                    E::Parameter(_)
                    | E::Domain(_)
                    | E::Construction(_)
                    | E::Config(_)
                    | E::Parse(_) => 3,
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = commands::dispatch(cli.command, cli.seed, cli.profile, cli.out);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => ExitCode::from(f.report()),
    }
}
