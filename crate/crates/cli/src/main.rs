use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coexist_core::PsnrConvention;

mod commands;
mod config;
mod error;
mod output;

use config::{ModelArgs, MseArgs};

/// Throughput-optimal D2D transmission policies that protect an LTE video
/// uplink.
#[derive(Debug, Parser)]
#[command(name = "coexist", version)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, env = "COEXIST_CONFIG")]
    config: Option<PathBuf>,
    /// Write the resolved configuration to this path.
    #[arg(long, global = true)]
    write_config: Option<PathBuf>,
    /// Significant digits in printed and CSV numbers.
    #[arg(long, global = true, default_value_t = 6)]
    precision: usize,
    /// Worker threads for sweeps and replications.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// PSNR peak: `paper` uses 2^W, `standard` uses (2^W - 1)^2.
    #[arg(long, global = true)]
    psnr_convention: Option<PsnrConvention>,
    /// Random seed (default 1).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    mse: MseArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Failure probabilities from channel parameters.
    Channel {
        /// Also estimate them from this many explicit fading draws.
        #[arg(long, value_name = "DRAWS")]
        sample_fading: Option<u64>,
    },
    /// Solve the LP for one delivery constraint or a sweep of them.
    Solve {
        /// Minimum LTE frame delivery rate.
        #[arg(long, conflicts_with = "sweep")]
        delta: Option<f64>,
        /// Inclusive range `start:stop:step`.
        #[arg(long)]
        sweep: Option<String>,
        /// Policy file, or a directory of policy files for a sweep.
        #[arg(long)]
        out_policy: Option<PathBuf>,
        /// Curve CSV (standard output for a sweep if omitted).
        #[arg(long)]
        out_curve: Option<PathBuf>,
        /// Print the state index map to standard error.
        #[arg(long)]
        list_states: bool,
    },
    /// Analytic delivery rate, throughput and PSNR of a policy.
    Evaluate {
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Monte Carlo estimate of delivery rate and throughput.
    Simulate {
        #[command(flatten)]
        policy: PolicyArgs,
        /// Slots per replication (default 1000000).
        #[arg(long)]
        slots: Option<u64>,
        /// Independent replications (default 1).
        #[arg(long)]
        replications: Option<usize>,
        /// Draw explicit fading gains instead of Bernoulli packet losses.
        #[arg(long)]
        sample_fading: bool,
        /// Per-replication CSV (standard output if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-frame trace with optional forced I-frame losses.
    Trace {
        /// Policy to run; the D2D link stays idle if none is given.
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long, default_value_t = 300)]
        frames: u64,
        /// Comma-separated 1-based I-frame indices whose LTE packet is dropped.
        #[arg(long, value_delimiter = ',')]
        force_loss: Vec<u64>,
        /// Deliver every packet that is not force-dropped.
        #[arg(long)]
        no_channel_loss: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean MSE against D2D throughput for parametric policy families.
    Scatter {
        /// `start:stop:step` or a comma-separated list of transmit probabilities.
        #[arg(long, default_value = "0.1:1.0:0.1")]
        p_grid: String,
        #[arg(long, value_delimiter = ',', default_value = "constant,heuristic")]
        families: Vec<Family>,
        /// Slots per policy.
        #[arg(long, default_value_t = 1_000_000)]
        slots: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Default, Args)]
#[group(multiple = false)]
pub struct PolicyArgs {
    /// Policy file written by `solve`.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    /// Transmit with this probability in every state.
    #[arg(long)]
    pub const_p: Option<f64>,
    /// Idle in the I-frame slot, transmit with this probability otherwise.
    #[arg(long)]
    pub heuristic_p: Option<f64>,
    /// Like --heuristic-p, but always transmit once the I-frame is lost.
    #[arg(long)]
    pub heuristic_aggressive_p: Option<f64>,
    /// Solve for the optimal policy at this delivery constraint.
    #[arg(long)]
    pub optimal_delta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Constant,
    Heuristic,
    HeuristicAggressive,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
