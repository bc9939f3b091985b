//! Command-line workbench: configure and launch evolutionary trials or
//! batches, replay champions, dump trajectories, and produce the grouped
//! analysis tables.

mod batch;
mod commands;
mod failure;
mod iofs;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "grounding",
    version,
    about = "Evolve embedding-primed robot controllers and analyze zero-shot command generalization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one evolutionary trial end-to-end from a config file.
    Run(commands::RunArgs),
    /// Run every pending trial of a batch manifest, resumably.
    Batch(commands::BatchArgs),
    /// Aggregate completed trials into the grouped comparison tables.
    Analyze(commands::AnalyzeArgs),
    /// Re-evaluate a stored champion under one command word.
    Replay(commands::ReplayArgs),
    /// Embedding utilities (synthesis, cosine queries).
    #[command(subcommand)]
    Embed(commands::EmbedCmd),
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => commands::run(args),
        Command::Batch(args) => commands::batch(args),
        Command::Analyze(args) => commands::analyze(args),
        Command::Replay(args) => commands::replay(args),
        Command::Embed(cmd) => commands::embed(cmd),
    };
    match outcome {
        Ok(()) => {}
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            std::process::exit(failure.exit_code());
        }
    }
}
