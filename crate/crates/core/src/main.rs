//! Command-line front end for the federation simulator.
//!
//! Four subcommands: `run` (one experiment, per-round trace), `sweep` (the
//! fixed-batch ladder plus the configured search strategy), `monte-carlo`
//! (search-only ensembles over many seeds), and `validate` (parse a config
//! and print the resolved settings without running anything).
//!
//! Exit codes: 0 on success, 1 for configuration mistakes (the diagnostic
//! names the offending key), 2 for runtime failures. Progress goes to
//! stderr; result data is only ever written to files in the output
//! directory, atomically.

use clap::{Args, Parser, Subcommand};
use fedbatch::config::RunConfig;
use fedbatch::error::Error;
use fedbatch::harness::{
    monte_carlo_csv, run_experiment, run_monte_carlo, run_sweep, summarize_sweep, sweep_csv,
    trace_csv, write_atomic, TrainingMode,
};
use fedbatch::search::Strategy;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "fedbatch",
    version,
    about = "Simulate collaborative batch-size search in a synchronous federation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Config file; omitted means the built-in defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for result files (created if absent)
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the config's master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress progress output
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its per-round trace
    Run(CommonArgs),
    /// Run fixed batches 4..256 plus the configured strategy, and summarize
    Sweep(CommonArgs),
    /// Estimate convergence statistics from search-only runs across seeds
    MonteCarlo {
        #[command(flatten)]
        common: CommonArgs,
        /// Runs per searcher count
        #[arg(long, default_value_t = 1000)]
        seeds: usize,
    },
    /// Check a config file and print the fully-resolved settings
    Validate {
        /// Config file; omitted means the built-in defaults
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the config's master seed
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load_config(path: &Option<PathBuf>, seed: Option<u64>) -> Result<RunConfig, Error> {
    let mut cfg = match path {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// A strategy name safe for file names: `fixed(8)` becomes `fixed_8`.
fn file_label(strategy: Strategy) -> String {
    strategy
        .to_string()
        .replace('(', "_")
        .replace(')', "")
}

fn cmd_run(args: &CommonArgs) -> Result<(), Error> {
    let cfg = load_config(&args.config, args.seed)?;
    if !args.quiet {
        eprintln!(
            "running {}: m={}, window [{}, {}], {} rounds, seed {}",
            cfg.strategy, cfg.m, cfg.b_min, cfg.b_max, cfg.rounds, cfg.seed
        );
    }
    let trace = run_experiment(&cfg, TrainingMode::Full)?;
    write_atomic(&args.out.join("trace.csv"), &trace_csv(&trace))?;
    write_atomic(&args.out.join("resolved.cfg"), &cfg.to_string())?;
    if !args.quiet {
        match (trace.converged_round, trace.converged_batch) {
            (Some(r), Some(b)) => eprintln!("settled on batch {b} after {r} search rounds"),
            _ => eprintln!("window still open after {} rounds", cfg.rounds),
        }
        eprintln!(
            "wrote {}: total simulated time {:.3} s, final accuracy {:.4}",
            args.out.join("trace.csv").display(),
            trace.total_time,
            trace.final_accuracy
        );
    }
    Ok(())
}

fn cmd_sweep(args: &CommonArgs) -> Result<(), Error> {
    let cfg = load_config(&args.config, args.seed)?;
    if !args.quiet {
        eprintln!(
            "sweeping fixed batches 4..256 plus {} on seed {}",
            cfg.strategy, cfg.seed
        );
    }
    let traces = run_sweep(&cfg, TrainingMode::Full)?;
    for trace in &traces {
        let name = format!("trace_{}.csv", file_label(trace.strategy));
        write_atomic(&args.out.join(name), &trace_csv(trace))?;
        if !args.quiet {
            eprintln!(
                "  {}: {:.3} s, accuracy {:.4}",
                trace.strategy, trace.total_time, trace.final_accuracy
            );
        }
    }
    let rows = summarize_sweep(&traces)?;
    write_atomic(&args.out.join("sweep.csv"), &sweep_csv(&rows))?;
    write_atomic(&args.out.join("resolved.cfg"), &cfg.to_string())?;
    if !args.quiet {
        eprintln!("wrote {}", args.out.join("sweep.csv").display());
    }
    Ok(())
}

fn cmd_monte_carlo(common: &CommonArgs, seeds: usize) -> Result<(), Error> {
    let cfg = load_config(&common.config, common.seed)?;
    if !common.quiet {
        eprintln!(
            "monte-carlo: {} search-only runs per searcher count, master seed {}",
            seeds, cfg.seed
        );
    }
    let rows = run_monte_carlo(&cfg, seeds)?;
    write_atomic(&common.out.join("monte_carlo.csv"), &monte_carlo_csv(&rows))?;
    write_atomic(&common.out.join("resolved.cfg"), &cfg.to_string())?;
    if !common.quiet {
        for row in &rows {
            eprintln!(
                "  k={}: median {} rounds (p95 {}), median batch {}",
                row.k, row.rounds_median, row.rounds_p95, row.batch_median
            );
        }
        eprintln!("wrote {}", common.out.join("monte_carlo.csv").display());
    }
    Ok(())
}

fn cmd_validate(config: &Option<PathBuf>, seed: Option<u64>) -> Result<(), Error> {
    let cfg = load_config(config, seed)?;
    cfg.validate()?;
    // A closed pipe (validate | head) is not an error worth a backtrace.
    use std::io::Write;
    match write!(std::io::stdout().lock(), "{cfg}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn dispatch(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::MonteCarlo { common, seeds } => cmd_monte_carlo(common, *seeds),
        Command::Validate { config, seed } => cmd_validate(config, *seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
