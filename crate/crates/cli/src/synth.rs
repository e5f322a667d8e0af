use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;

use anytime_core::synth::{TopicalConfig, TopicalCorpus};

use crate::opts::output;

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Collection to write as JSON lines.
    #[arg(long)]
    output: PathBuf,

    /// Query file to write as `qid<TAB>text`.
    #[arg(long)]
    queries_output: Option<PathBuf>,

    #[arg(long, default_value_t = TopicalConfig::default().docs)]
    docs: usize,

    #[arg(long, default_value_t = TopicalConfig::default().topics)]
    topics: usize,

    #[arg(long, default_value_t = TopicalConfig::default().vocab)]
    vocab: usize,

    #[arg(long, default_value_t = 1000)]
    num_queries: usize,

    #[arg(long, default_value_t = TopicalConfig::default().seed)]
    seed: u64,
}

pub fn run(a: SynthArgs) -> Result<()> {
    let corpus = TopicalCorpus::generate(TopicalConfig {
        docs: a.docs,
        topics: a.topics,
        vocab: a.vocab,
        seed: a.seed,
        ..Default::default()
    });
    if let Some(path) = &a.queries_output {
        let mut out = output(Some(path))?;
        for (i, q) in corpus.queries(a.num_queries, a.seed ^ 1).iter().enumerate() {
            writeln!(out, "q{i}\t{q}")?;
        }
        out.flush()?;
    }
    let mut out = output(Some(&a.output))?;
    for doc in corpus.docs() {
        serde_json::to_writer(&mut out, doc)?;
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}
