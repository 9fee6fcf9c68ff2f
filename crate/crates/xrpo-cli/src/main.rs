//! `xrpo`: simulation runs, allocation planning, advantage scoring,
//! corpus management, and run reports.
//!
//! Exit codes: 0 on success, 2 for configuration or schema errors, 3 for
//! I/O failures, 4 for violated run invariants (audit failures).

mod cmd_advantage;
mod cmd_allocate;
mod cmd_corpus;
mod cmd_report;
mod cmd_simulate;
mod util;

use clap::{Parser, Subcommand};
use xrpo::XrpoError;

#[derive(Parser)]
#[command(name = "xrpo", version, about = "Explore-exploit rollout planning toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a replicated simulation and write logs, metrics, and a manifest.
    Simulate(cmd_simulate::SimulateArgs),
    /// Plan one allocation round from per-prompt summary statistics.
    Allocate(cmd_allocate::AllocateArgs),
    /// Score a rollout log into sharpened advantage records.
    Advantage(cmd_advantage::AdvantageArgs),
    /// Manage the exemplar corpus.
    #[command(subcommand)]
    Corpus(cmd_corpus::CorpusCommand),
    /// Tabulate metrics across run directories.
    Report(cmd_report::ReportArgs),
}

fn exit_code(err: &XrpoError) -> i32 {
    match err {
        XrpoError::Config(_) | XrpoError::Schema { .. } | XrpoError::Domain(_)
        | XrpoError::Json(_) => 2,
        XrpoError::Io(_) | XrpoError::Transport(_) => 3,
        XrpoError::Audit(_) => 4,
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("XRPO_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate::run(args),
        Command::Allocate(args) => cmd_allocate::run(args),
        Command::Advantage(args) => cmd_advantage::run(args),
        Command::Corpus(cmd) => cmd_corpus::run(cmd),
        Command::Report(args) => cmd_report::run(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}
