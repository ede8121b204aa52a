//! `crossmin` — dataset preparation, training, per-graph optimization,
//! benchmarking, statistics, and rendering in one binary.
//!
//! All randomness flows from one root seed through named substreams
//! (layout, env, agent, sampling), so any stage can be reproduced in
//! isolation. Every subcommand writes its resolved configuration as a
//! JSON sidecar next to its primary output.

mod commands;

use anyhow::Result;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "crossmin", version, about = "Crossing-minimization toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load/generate graphs, filter and preprocess them, split
    /// train/test, and write a dataset manifest plus embedding caches.
    Prepare(commands::PrepareArgs),
    /// Compute a single layout (kk or fr) for one graph.
    Layout(commands::LayoutArgs),
    /// Train a PPO policy on the train split of a manifest.
    Train(commands::TrainArgs),
    /// Post-process one graph with a trained policy.
    Optimize(commands::OptimizeArgs),
    /// Benchmark harness: run, stats, render.
    #[command(subcommand)]
    Bench(commands::BenchCommand),
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match cli.command {
        Command::Prepare(args) => commands::prepare(args),
        Command::Layout(args) => commands::layout(args),
        Command::Train(args) => commands::train(args),
        Command::Optimize(args) => commands::optimize(args),
        Command::Bench(cmd) => commands::bench(cmd),
    }
}
