//! The cluster-skipping inverted index.
//!
//! Postings are document-ordered and split into fixed-size blocks. Alongside
//! each list the index keeps three tiers of score upper bounds, all computed
//! from exact BM25 contributions:
//!
//! * `U_t`, the largest contribution of term `t` anywhere;
//! * one maximum per postings block (used by block-max WAND);
//! * `U_{t,i}`, the largest contribution of `t` inside document range `i`,
//!   stored sparsely: ranges where `t` does not occur have no entry.
//!
//! Blocks are not aligned to range boundaries. A block may straddle two
//! ranges; range-restricted traversal clamps cursors to the range window.

pub mod codec;
mod cursor;
mod store;

use std::collections::HashMap;

pub use codec::{decode_block, encode_block, PostingsBlock};
pub use cursor::{Cursor, CursorStats, END};
pub use store::{BuildInfo, FORMAT_VERSION, MAGIC};

use crate::arrangement::{ClusterMap, OrderingMode, Remap};
use crate::corpus::{ForwardIndex, TermId, Tokenizer, TokenizerConfig};
use crate::error::{Error, Result};
use crate::scoring::{ScoreParams, TermScorer};
use crate::DocId;

pub const DEFAULT_BLOCK_SIZE: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockMeta {
    pub last_docid: DocId,
    /// Byte offset of the block inside its list's data.
    pub offset: u32,
    pub max_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostingList {
    data: Vec<u8>,
    blocks: Vec<BlockMeta>,
    len: u32,
}

impl PostingList {
    fn build(postings: &[(DocId, u32)], block_size: usize) -> Self {
        let mut data = Vec::new();
        let mut blocks = Vec::with_capacity(postings.len().div_ceil(block_size));
        for chunk in postings.chunks(block_size) {
            let block = PostingsBlock {
                docids: chunk.iter().map(|p| p.0).collect(),
                tfs: chunk.iter().map(|p| p.1).collect(),
            };
            let offset = data.len() as u32;
            encode_block(&block, &mut data);
            blocks.push(BlockMeta {
                last_docid: chunk[chunk.len() - 1].0,
                offset,
                max_score: 0.0,
            });
        }
        Self {
            data,
            blocks,
            len: postings.len() as u32,
        }
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn blocks(&self) -> &[BlockMeta] {
        &self.blocks
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn block_bytes(&self, block: usize) -> &[u8] {
        let start = self.blocks[block].offset as usize;
        let end = self
            .blocks
            .get(block + 1)
            .map_or(self.data.len(), |b| b.offset as usize);
        &self.data[start..end]
    }

    pub fn decode(&self, block: usize) -> Result<PostingsBlock> {
        Ok(decode_block(self.block_bytes(block))?.0)
    }

    /// Every posting of the list, decoded.
    pub fn postings(&self) -> Result<Vec<(DocId, u32)>> {
        let mut out = Vec::with_capacity(self.len());
        for b in 0..self.blocks.len() {
            let block = self.decode(b)?;
            out.extend(block.docids.into_iter().zip(block.tfs));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermMeta {
    pub df: u32,
    /// `U_t`.
    pub max_score: f64,
    /// `(range, U_{t,range})`, ascending by range, only for ranges holding
    /// at least one posting.
    pub range_bounds: Vec<(u32, f64)>,
}

impl TermMeta {
    pub fn range_bound(&self, range: u32) -> Option<f64> {
        self.range_bounds
            .binary_search_by_key(&range, |&(r, _)| r)
            .ok()
            .map(|i| self.range_bounds[i].1)
    }
}

/// Bytes used by each index component, in the on-disk encoding.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SpaceReport {
    pub postings: u64,
    pub skip_data: u64,
    pub block_maxima: u64,
    pub range_bounds: u64,
    pub doc_map: u64,
    pub lexicon: u64,
}

impl SpaceReport {
    pub fn total(&self) -> u64 {
        self.postings + self.skip_data + self.block_maxima + self.range_bounds + self.doc_map + self.lexicon
    }
}

#[derive(Debug)]
pub struct Index {
    params: ScoreParams,
    block_size: u32,
    avgdl: f64,
    terms: Vec<String>,
    lexicon: HashMap<String, TermId>,
    metas: Vec<TermMeta>,
    lists: Vec<PostingList>,
    doc_keys: Vec<String>,
    doc_len: Vec<u32>,
    doc_norm: Vec<f64>,
    cluster_map: ClusterMap,
    tokenizer: Tokenizer,
    info: BuildInfo,
}

/// Builds the index over the remapped document space.
pub fn build_index(
    fwd: &ForwardIndex,
    remap: &Remap,
    cluster_map: &ClusterMap,
    block_size: usize,
    params: ScoreParams,
) -> Result<Index> {
    let n = fwd.num_docs();
    if block_size == 0 {
        return Err(Error::Format("block size must be >= 1".into()));
    }
    if remap.len() != n || cluster_map.num_docs() != n {
        return Err(Error::Format(format!(
            "remap covers {} docs and cluster map {}, collection has {n}",
            remap.len(),
            cluster_map.num_docs()
        )));
    }
    params.validate()?;

    let mut doc_keys = vec![String::new(); n];
    let mut doc_len = vec![0u32; n];
    let mut postings: Vec<Vec<(DocId, u32)>> = vec![Vec::new(); fwd.vocab().len()];
    let mut counts: Vec<(TermId, u32)> = Vec::new();
    for (old, doc) in fwd.docs().iter().enumerate() {
        let new = remap.new_id(old);
        doc_keys[new as usize] = doc.key.clone();
        doc_len[new as usize] = doc.tokens.len() as u32;
        let mut toks = doc.tokens.clone();
        toks.sort_unstable();
        counts.clear();
        for t in toks {
            match counts.last_mut() {
                Some((last, c)) if *last == t => *c += 1,
                _ => counts.push((t, 1)),
            }
        }
        for &(t, tf) in &counts {
            postings[t as usize].push((new, tf));
        }
    }
    let lists = postings
        .iter_mut()
        .map(|p| {
            p.sort_unstable_by_key(|&(d, _)| d);
            PostingList::build(p, block_size)
        })
        .collect();
    let terms = fwd.vocab().terms().to_vec();
    let lexicon = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i as TermId))
        .collect();
    let mut index = Index {
        params,
        block_size: block_size as u32,
        avgdl: fwd.avgdl(),
        terms,
        lexicon,
        metas: Vec::new(),
        lists,
        doc_keys,
        doc_len,
        doc_norm: Vec::new(),
        cluster_map: cluster_map.clone(),
        tokenizer: Tokenizer::default(),
        info: BuildInfo::default(),
    };
    index.compute_bounds()?;
    Ok(index)
}

impl Index {
    /// Recomputes document norms and every score bound from the postings.
    fn compute_bounds(&mut self) -> Result<()> {
        let params = self.params;
        let avgdl = self.avgdl;
        self.doc_norm = self
            .doc_len
            .iter()
            .map(|&l| params.length_norm(l, avgdl))
            .collect();
        let n = self.num_docs() as u32;
        let ends = self.cluster_map.ends().to_vec();
        let mut metas = Vec::with_capacity(self.lists.len());
        let mut buf = PostingsBlock::default();
        for list in &mut self.lists {
            let scorer = TermScorer::new(list.len, n, &params);
            let mut meta = TermMeta {
                df: list.len,
                max_score: 0.0,
                range_bounds: Vec::new(),
            };
            let mut range = 0usize;
            for b in 0..list.blocks.len() {
                let start = list.blocks[b].offset as usize;
                let end = list
                    .blocks
                    .get(b + 1)
                    .map_or(list.data.len(), |m| m.offset as usize);
                codec::decode_into(&list.data[start..end], &mut buf.docids, &mut buf.tfs)?;
                let mut block_max = 0.0f64;
                for (&d, &tf) in buf.docids.iter().zip(&buf.tfs) {
                    let s = scorer.score(tf, self.doc_norm[d as usize]);
                    block_max = block_max.max(s);
                    while ends[range] < d {
                        range += 1;
                    }
                    match meta.range_bounds.last_mut() {
                        Some((r, u)) if *r as usize == range => *u = u.max(s),
                        _ => meta.range_bounds.push((range as u32, s)),
                    }
                }
                list.blocks[b].max_score = block_max;
                meta.max_score = meta.max_score.max(block_max);
            }
            metas.push(meta);
        }
        self.metas = metas;
        Ok(())
    }

    /// Switches the scoring parameters, recomputing all bounds so pruning
    /// stays safe under the new parameters.
    pub fn set_params(&mut self, params: ScoreParams) -> Result<()> {
        params.validate()?;
        if params != self.params {
            self.params = params;
            self.compute_bounds()?;
        }
        Ok(())
    }

    pub fn with_tokenizer(mut self, config: TokenizerConfig) -> Self {
        self.tokenizer = Tokenizer::new(config);
        self
    }

    pub fn with_build_info(mut self, info: BuildInfo) -> Self {
        self.info = info;
        self
    }

    pub fn build_info(&self) -> &BuildInfo {
        &self.info
    }

    pub fn tokenizer(&self) -> &Tokenizer {
        &self.tokenizer
    }

    pub fn params(&self) -> &ScoreParams {
        &self.params
    }

    pub fn block_size(&self) -> usize {
        self.block_size as usize
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn num_docs(&self) -> usize {
        self.doc_len.len()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn term_id(&self, term: &str) -> Option<TermId> {
        self.lexicon.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.terms[id as usize]
    }

    pub fn meta(&self, t: TermId) -> &TermMeta {
        &self.metas[t as usize]
    }

    pub fn list(&self, t: TermId) -> &PostingList {
        &self.lists[t as usize]
    }

    pub fn cursor(&self, t: TermId) -> Cursor<'_> {
        Cursor::new(&self.lists[t as usize])
    }

    pub fn scorer(&self, t: TermId) -> TermScorer {
        TermScorer::new(self.metas[t as usize].df, self.num_docs() as u32, &self.params)
    }

    pub fn doc_key(&self, d: DocId) -> &str {
        &self.doc_keys[d as usize]
    }

    pub fn doc_keys(&self) -> &[String] {
        &self.doc_keys
    }

    pub fn doc_len(&self, d: DocId) -> u32 {
        self.doc_len[d as usize]
    }

    pub fn doc_norms(&self) -> &[f64] {
        &self.doc_norm
    }

    pub fn cluster_map(&self) -> &ClusterMap {
        &self.cluster_map
    }

    pub fn num_ranges(&self) -> usize {
        self.cluster_map.num_ranges()
    }

    /// Tokenizes query text, drops terms outside the lexicon, and returns the
    /// remaining term ids ascending and deduplicated.
    pub fn parse_query(&self, text: &str) -> Vec<TermId> {
        let mut ids: Vec<TermId> = self
            .tokenizer
            .tokenize(text)
            .iter()
            .filter_map(|t| self.term_id(t))
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn space(&self) -> SpaceReport {
        let mut s = SpaceReport::default();
        for (term, (list, meta)) in self.terms.iter().zip(self.lists.iter().zip(&self.metas)) {
            s.postings += list.data.len() as u64;
            s.skip_data += list.blocks.len() as u64 * 8;
            s.block_maxima += list.blocks.len() as u64 * 8;
            s.range_bounds += 8 + 4 + meta.range_bounds.len() as u64 * 12;
            s.lexicon += 4 + term.len() as u64 + 4 + 8 + 8 + 4;
        }
        s.doc_map = self.doc_keys.iter().map(|k| 4 + k.len() as u64 + 4).sum::<u64>()
            + 4 * self.cluster_map.num_ranges() as u64;
        s
    }
}

/// Everything needed to go from a forward index to a searchable index.
#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub num_clusters: usize,
    pub block_size: usize,
    pub ordering: OrderingMode,
    pub params: ScoreParams,
    pub seed: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            num_clusters: 1,
            block_size: DEFAULT_BLOCK_SIZE,
            ordering: OrderingMode::None,
            params: ScoreParams::default(),
            seed: 0,
        }
    }
}

/// Full pipeline: cluster (unless an assignment is supplied), order within
/// clusters, concatenate, and build.
pub fn build_pipeline(
    fwd: &ForwardIndex,
    options: &BuildOptions,
    assignment: Option<crate::arrangement::ClusterAssignment>,
    tokenizer: TokenizerConfig,
) -> Result<Index> {
    use crate::arrangement::{cluster_documents, concatenate, order_within_cluster};
    let requested = options.num_clusters;
    let (remap, map) = if fwd.num_docs() == 0 {
        (Remap::identity(0), ClusterMap::single(0))
    } else {
        let assignment = match assignment {
            Some(a) => a,
            None => cluster_documents(fwd, options.num_clusters, options.seed)?,
        };
        let orders = order_within_cluster(fwd, &assignment, options.ordering);
        concatenate(&assignment, &orders)?
    };
    let index = build_index(fwd, &remap, &map, options.block_size, options.params)?;
    Ok(index.with_tokenizer(tokenizer).with_build_info(BuildInfo {
        requested_clusters: requested as u32,
        ordering: options.ordering,
        seed: options.seed,
    }))
}
