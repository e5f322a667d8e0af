mod bench;
mod build;
mod eval;
mod opts;
mod query;
mod synth;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "anytime",
    version,
    about = "Anytime top-k retrieval over a cluster-skipping index"
)]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cluster, reorder and index a JSON-lines collection.
    Build(build::BuildArgs),
    /// Describe an index on disk.
    Info(build::InfoArgs),
    /// Run a query file and write a run file and latency log.
    Query(query::QueryArgs),
    /// Closed-loop multi-worker throughput benchmark.
    Bench(bench::BenchArgs),
    /// Compare runs and summarize latency logs.
    #[command(subcommand)]
    Eval(eval::EvalCommand),
    /// Generate a synthetic topical collection and query log.
    Synth(synth::SynthArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Build(a) => build::run(a),
        Command::Info(a) => build::info(a),
        Command::Query(a) => query::run(a),
        Command::Bench(a) => bench::run(a),
        Command::Eval(c) => eval::run(c),
        Command::Synth(a) => synth::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
