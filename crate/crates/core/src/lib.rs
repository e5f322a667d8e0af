//! Anytime top-k retrieval over a cluster-skipping inverted index.
//!
//! Documents are clustered by topic and laid out so every cluster occupies a
//! contiguous range of internal doc ids. Each postings list carries per-range
//! score bounds, which lets a query visit ranges in descending order of their
//! summed bounds, stop as soon as no remaining range can enter the top-k, or
//! stop earlier still when a latency budget runs out.

pub mod anytime;
pub mod arrangement;
pub mod bench;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod index;
pub mod scoring;
pub mod synth;
pub mod traversal;

/// Internal document identifier, dense in `0..N` after reordering.
pub type DocId = u32;

pub use arrangement::{ClusterAssignment, ClusterMap, OrderingMode, RangeWindow, Remap};
pub use corpus::{ForwardIndex, RawDocument, TermId, Tokenizer, TokenizerConfig};
pub use error::{Error, Result};
pub use index::{build_pipeline, BuildOptions, Index};
pub use scoring::ScoreParams;
