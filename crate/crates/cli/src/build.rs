use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use anytime_core::arrangement::read_assignment_tsv;
use anytime_core::corpus::parse_collection;
use anytime_core::{
    build_pipeline, BuildOptions, Index, OrderingMode, ScoreParams, Tokenizer, TokenizerConfig,
};

use crate::opts::open;

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// JSON-lines collection with `id`, `text` and optional `url` fields.
    #[arg(long)]
    input: PathBuf,

    /// Index directory to create.
    #[arg(long)]
    output: PathBuf,

    /// Number of clusters, and so of document ranges.
    #[arg(short = 'r', long, default_value_t = 50)]
    ranges: usize,

    #[arg(long, default_value_t = 128)]
    block_size: usize,

    /// Order within each cluster: none, key-order or url-order.
    #[arg(long, default_value_t = OrderingMode::None)]
    ordering: OrderingMode,

    /// `doc-key<TAB>cluster-id` file used instead of k-means.
    #[arg(long, value_name = "FILE")]
    clusters: Option<PathBuf>,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value_t = ScoreParams::default().k1)]
    k1: f64,

    #[arg(long, default_value_t = ScoreParams::default().b)]
    b: f64,

    /// Apply English Porter stemming.
    #[arg(long)]
    stem: bool,

    /// Stopword file, one word per line.
    #[arg(long, value_name = "FILE")]
    stopwords: Option<PathBuf>,
}

pub fn run(a: BuildArgs) -> Result<()> {
    let stopwords = match &a.stopwords {
        Some(p) => Tokenizer::parse_stoplist(
            &fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        ),
        None => Vec::new(),
    };
    let config = TokenizerConfig {
        stem: a.stem,
        stopwords,
    };
    let tokenizer = Tokenizer::new(config.clone());
    let fwd = parse_collection(open(&a.input)?, &tokenizer)
        .with_context(|| format!("reading collection {}", a.input.display()))?;
    let assignment = match &a.clusters {
        Some(p) => {
            Some(read_assignment_tsv(open(p)?, &fwd).with_context(|| format!("reading {}", p.display()))?)
        }
        None => None,
    };
    let options = BuildOptions {
        num_clusters: assignment.as_ref().map_or(a.ranges, |c| c.num_clusters()),
        block_size: a.block_size,
        ordering: a.ordering,
        params: ScoreParams::new(a.k1, a.b)?,
        seed: a.seed,
    };
    anyhow::ensure!(options.block_size > 0, "--block-size must be positive");
    let index = build_pipeline(&fwd, &options, assignment, config)?;
    index
        .write_dir(&a.output)
        .with_context(|| format!("writing index to {}", a.output.display()))?;
    eprintln!(
        "indexed {} documents, {} terms, {} ranges into {}",
        index.num_docs(),
        index.num_terms(),
        index.num_ranges(),
        a.output.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    #[arg(long)]
    index: PathBuf,
}

pub fn info(a: InfoArgs) -> Result<()> {
    let index = Index::read_dir(&a.index).with_context(|| format!("loading index {}", a.index.display()))?;
    let info = index.build_info();
    let space = index.space();
    let p = index.params();
    println!("documents\t{}", index.num_docs());
    println!("terms\t{}", index.num_terms());
    println!("ranges\t{}", index.num_ranges());
    println!("avgdl\t{:.4}", index.avgdl());
    println!("block_size\t{}", index.block_size());
    println!("k1\t{}", p.k1);
    println!("b\t{}", p.b);
    println!("ordering\t{}", info.ordering);
    println!("seed\t{}", info.seed);
    println!("bytes_postings\t{}", space.postings);
    println!("bytes_skip_data\t{}", space.skip_data);
    println!("bytes_block_maxima\t{}", space.block_maxima);
    println!("bytes_range_bounds\t{}", space.range_bounds);
    println!("bytes_doc_map\t{}", space.doc_map);
    println!("bytes_lexicon\t{}", space.lexicon);
    println!("bytes_total\t{}", space.total());
    Ok(())
}
