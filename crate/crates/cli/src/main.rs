//! `fsfc`: feature selection and construction for intrusion-detection data.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data or I/O
//! error, 3 runtime failure.

mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fsfc_core::ErrorKind;

#[derive(Debug, Parser)]
#[command(name = "fsfc", version, about = "Quantum-inspired bee colony feature selection with GP feature construction")]
struct Cli {
    /// Worker threads for fitness evaluation (default: all cores).
    #[arg(long, global = true, value_name = "INT")]
    workers: Option<usize>,
    /// Emit log records as JSON lines on standard error.
    #[arg(long, global = true)]
    log_json: bool,
    /// Only log warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode, subsample and scale the data; write the processed tables.
    Prep(config::RunArgs),
    /// Run the full pipeline once.
    Run(config::RunArgs),
    /// Repeat the pipeline with derived seeds and aggregate the results.
    Benchmark(commands::BenchmarkArgs),
    /// Compare results against baselines with the exact signed-rank test.
    Stats(commands::StatsArgs),
    /// Summarize a run or benchmark directory as markdown.
    Report(commands::ReportArgs),
}

fn init_logging(json: bool, quiet: bool) {
    let level = if quiet { "warn" } else { "info" };
    let mut builder = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level));
    if json {
        builder.format(|buf, record| {
            let line = serde_json::json!({
                "level": record.level().as_str(),
                "target": record.target(),
                "message": record.args().to_string(),
            });
            writeln!(buf, "{line}")
        });
    }
    let _ = builder.try_init();
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<fsfc_core::Error>() {
            return match e.kind() {
                ErrorKind::Config => 1,
                ErrorKind::Data => 2,
                ErrorKind::Runtime => 3,
            };
        }
    }
    3
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    init_logging(cli.log_json, cli.quiet);
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} workers: {e}");
            return ExitCode::from(3);
        }
    }
    let result = match &cli.command {
        Command::Prep(args) => commands::prep(args),
        Command::Run(args) => commands::run(args),
        Command::Benchmark(args) => commands::benchmark(args),
        Command::Stats(args) => commands::stats(args),
        Command::Report(args) => commands::report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
