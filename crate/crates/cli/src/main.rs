use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod error;
mod instance;
mod output;
mod parse;
mod run;
mod serve;
mod tables;

/// Streaming Hidden Matching experiments with a simulated quantum sketch.
#[derive(Parser)]
#[command(name = "hmq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve an instance's update stream over TCP.
    Serve(serve::ServeCmd),
    /// Run sketch shots against a server or a local stream.
    Run(run::RunCmd),
    /// Copies needed to reach a target success from measured or exact outcomes.
    Figure2b(tables::Figure2bCmd),
    /// Logical and physical gate counts.
    Counts(tables::CountsCmd),
    /// Majority-vote success and noise budget.
    Vote(tables::VoteCmd),
    /// Classical space bounds.
    Bound(tables::BoundCmd),
    /// Fault-tolerant resource estimates.
    Estimate(tables::EstimateCmd),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let res = match cli.command {
        Command::Serve(c) => serve::cmd_serve(c),
        Command::Run(c) => run::cmd_run(c),
        Command::Figure2b(c) => tables::cmd_figure2b(c),
        Command::Counts(c) => tables::cmd_counts(c),
        Command::Vote(c) => tables::cmd_vote(c),
        Command::Bound(c) => tables::cmd_bound(c),
        Command::Estimate(c) => tables::cmd_estimate(c),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hmq: {e}");
            e.exit_code()
        }
    }
}
