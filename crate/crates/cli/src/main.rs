//! `phsim`: validate boundary conditions, run simulations, self-test.

mod config;
mod run;

use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use phsim_core::selftest::Fault;

use config::RunConfig;
use run::{CliError, EXIT_FAIL, EXIT_USAGE};

#[derive(Parser, Debug)]
#[command(
    name = "phsim",
    version,
    about = "Port-Hamiltonian simulations on SBP grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the seed from the config (random initial states, self-test draws).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for dense linear algebra; 1 keeps results reproducible.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the configured system and boundary condition.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the configured simulation and write the energy trace.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// CSV destination; overrides `output.csv` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in invariant suite.
    Selftest {
        #[arg(long, hide = true, value_enum)]
        inject_fault: Option<FaultArg>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FaultArg {
    SbpStencil,
}

fn set_threads(n: usize) {
    match NonZeroUsize::new(n) {
        Some(k) if k.get() > 1 => faer::set_global_parallelism(faer::Par::rayon(k.get())),
        _ => faer::set_global_parallelism(faer::Par::Seq),
    }
}

fn load(path: &PathBuf, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    set_threads(cli.threads);
    let result = match &cli.command {
        Command::Validate { config } => load(config, cli.seed).and_then(|c| run::cmd_validate(&c)),
        Command::Simulate { config, out } => {
            load(config, cli.seed).and_then(|c| run::cmd_simulate(&c, out.as_deref()))
        }
        Command::Selftest { inject_fault } => Ok(run::cmd_selftest(
            cli.seed.unwrap_or(20_240_601),
            inject_fault.map(|FaultArg::SbpStencil| Fault::SbpStencil),
        )),
    };
    let code = match result {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Failed(msg)) => {
            eprintln!("failed: {msg}");
            EXIT_FAIL
        }
    };
    ExitCode::from(code as u8)
}
