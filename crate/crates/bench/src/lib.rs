//! Shared fixtures for the criterion benchmarks.

use anytime_core::corpus::TermId;
use anytime_core::synth::{TopicalConfig, TopicalCorpus};
use anytime_core::{build_pipeline, BuildOptions, ForwardIndex, Index, Tokenizer};

/// A topical corpus indexed into `ranges` clusters, with parsed queries.
pub fn topical_fixture(docs: usize, ranges: usize, queries: usize) -> (Index, Vec<Vec<TermId>>) {
    let corpus = TopicalCorpus::generate(TopicalConfig {
        docs,
        ..Default::default()
    });
    let texts = corpus.queries(queries, 17);
    let fwd = ForwardIndex::from_documents(corpus.into_docs(), &Tokenizer::default())
        .expect("synthetic documents are valid");
    let opts = BuildOptions {
        num_clusters: ranges,
        seed: 1,
        ..Default::default()
    };
    let index = build_pipeline(&fwd, &opts, None, Default::default()).expect("build");
    let parsed = texts.iter().map(|q| index.parse_query(q)).collect();
    (index, parsed)
}
