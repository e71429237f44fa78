use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stripnet_core::config::Config;
use stripnet_core::harness::{self, SimArgs, Status, SweepArgs};
use stripnet_core::HarnessError;

/// Connectivity models, Monte Carlo checks and routing simulations for
/// vehicles on a highway strip.
#[derive(Parser, Debug)]
#[command(name = "stripnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Config file of `section.key = value` lines.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output file (CSV).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the analytic connectivity and link-time report.
    Analytic {
        #[command(flatten)]
        common: Common,
    },
    /// Compare analytic values with Monte Carlo estimates; exits 1 if any |z| > 3.
    Mc {
        #[command(flatten)]
        common: Common,
        /// Samples per connectivity estimate; overrides mc.samples.
        #[arg(long)]
        samples: Option<u64>,
        /// Overrides mc.seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run one simulation and append its metrics to --out.
    Sim {
        #[command(flatten)]
        common: Common,
        /// One of aodv, aodv_mod, dsr, dsr_mod, fsr, fsr_mod; overrides sim.protocol.
        #[arg(long)]
        protocol: Option<String>,
        /// Overrides sim.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the event trace to this file.
        #[arg(long, value_name = "PATH")]
        trace: Option<PathBuf>,
    },
    /// Run an experiment plan and write one CSV row per run.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Overrides sweep.base_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Parallel runs; defaults to the number of cores.
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn run(cli: Cli, w: &mut dyn Write) -> Result<Status, HarnessError> {
    match cli.command {
        Command::Analytic { common } => {
            let c = Config::load(&common.config)?;
            harness::cmd_analytic(&c, common.out.as_deref(), w)
        }
        Command::Mc { common, samples, seed } => {
            let c = Config::load(&common.config)?;
            harness::cmd_mc(&c, samples, seed, common.out.as_deref(), w)
        }
        Command::Sim {
            common,
            protocol,
            seed,
            trace,
        } => {
            let c = Config::load(&common.config)?;
            let args = SimArgs {
                protocol: protocol.as_deref(),
                seed,
                trace: trace.as_deref(),
                out: common.out.as_deref(),
            };
            harness::cmd_sim(&c, &args, w)
        }
        Command::Sweep { common, seed, jobs } => {
            let c = Config::load(&common.config)?;
            let args = SweepArgs {
                seed,
                jobs,
                out: common.out.as_deref(),
            };
            harness::cmd_sweep(&c, &args, w).map(|_| Status::Pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(cli, &mut out) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
