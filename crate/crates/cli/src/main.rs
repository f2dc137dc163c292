//! `qft`: batch front end for memory experiments, decoder certificates,
//! resource plans and the exact-simulation demos.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{CertifyArgs, CodeInfoArgs, PlanArgs, PushCheckArgs, TeleportArgs, TruncationArgs};

/// Exit code when a checked property does not hold.
const EXIT_FALSIFIED: u8 = 1;
/// Exit code for usage and configuration errors.
const EXIT_USAGE: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "qft", version, about = "Fault-tolerance experiments on small CSS codes")]
pub struct Cli {
    /// TOML or JSON parameter file; replaces the subcommand's own flags.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; overrides any seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files; standard output when absent.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (falls back to QFT_THREADS, then all cores).
    #[arg(long, global = true, env = "QFT_THREADS")]
    threads: Option<usize>,
    /// Output format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    /// Aligned text, for `plan` and `code-info`.
    Table,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo memory experiment over a noise-rate × rounds grid (needs --config).
    EcSweep,
    /// Exhaustive single-shot budget certificate; exits 1 if a logical residual is found.
    Certify(CertifyArgs),
    /// Block layout, qubit counts and optional schedule for a logical circuit.
    Plan(PlanArgs),
    /// Compares inline propagation against pushing every fault to the end; exits 1 on disagreement.
    PushCheck(PushCheckArgs),
    /// Exact binomial-tail truncation bounds on an (n, δ) grid; exits 1 if any point is uncertified.
    TruncationTable(TruncationArgs),
    /// Noiseless logical gate teleportation by statevector; exits 1 if fidelity falls short.
    TeleportDemo(TeleportArgs),
    /// Parameters, distance and logical operators of a code.
    CodeInfo(CodeInfoArgs),
}

fn setup_threads(threads: Option<usize>) -> Result<(), commands::CliError> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(commands::CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| commands::CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, commands::CliError> {
    setup_threads(cli.threads)?;
    let ctx = output::Context::new(cli.out.clone(), cli.format, cli.seed)?;
    let config = cli.config.as_deref();
    match cli.command {
        Command::EcSweep => commands::ec_sweep(&ctx, config),
        Command::Certify(a) => commands::certify(&ctx, commands::load_args(config, a)?),
        Command::Plan(a) => commands::plan(&ctx, commands::load_args(config, a)?),
        Command::PushCheck(a) => commands::push_check(&ctx, commands::load_args(config, a)?),
        Command::TruncationTable(a) => commands::truncation_table(&ctx, commands::load_args(config, a)?),
        Command::TeleportDemo(a) => commands::teleport_demo(&ctx, commands::load_args(config, a)?),
        Command::CodeInfo(a) => commands::code_info(&ctx, commands::load_args(config, a)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FALSIFIED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
