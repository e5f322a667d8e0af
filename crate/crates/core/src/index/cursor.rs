use super::codec::{decode_into, peek_first};
use super::PostingList;
use crate::DocId;

/// Exhausted-cursor sentinel.
pub const END: DocId = DocId::MAX;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CursorStats {
    pub postings_decoded: u64,
    pub blocks_decoded: u64,
    pub blocks_skipped: u64,
}

impl std::ops::AddAssign for CursorStats {
    fn add_assign(&mut self, o: Self) {
        self.postings_decoded += o.postings_decoded;
        self.blocks_decoded += o.blocks_decoded;
        self.blocks_skipped += o.blocks_skipped;
    }
}

/// A position in one postings list. The skip table (`last_docid` per block)
/// lets both `next_geq` and `seek_geq` pass over blocks without decoding
/// them. Landing on the first posting of a block reads only the block
/// header; the block is decoded when a frequency or a later posting in it is
/// needed.
#[derive(Debug, Clone)]
pub struct Cursor<'a> {
    list: &'a PostingList,
    block: usize,
    decoded: Option<usize>,
    pos: usize,
    docids: Vec<DocId>,
    tfs: Vec<u32>,
    doc: DocId,
    stats: CursorStats,
}

impl<'a> Cursor<'a> {
    pub fn new(list: &'a PostingList) -> Self {
        let mut c = Self {
            list,
            block: 0,
            decoded: None,
            pos: 0,
            docids: Vec::new(),
            tfs: Vec::new(),
            doc: END,
            stats: CursorStats::default(),
        };
        c.seek_geq(0);
        c
    }

    #[inline]
    pub fn doc(&self) -> DocId {
        self.doc
    }

    #[inline]
    pub fn tf(&mut self) -> u32 {
        debug_assert!(self.doc != END);
        self.load(self.block);
        self.tfs[self.pos]
    }

    pub fn stats(&self) -> CursorStats {
        self.stats
    }

    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    fn load(&mut self, block: usize) {
        if self.decoded != Some(block) {
            decode_into(self.list.block_bytes(block), &mut self.docids, &mut self.tfs)
                .expect("index postings failed to decode");
            self.decoded = Some(block);
            self.stats.blocks_decoded += 1;
            self.stats.postings_decoded += self.docids.len() as u64;
        }
    }

    // Counts the current block as skipped if it is left undecoded.
    fn leave(&mut self, target: usize) {
        if target != self.block && self.block < self.list.blocks.len() && self.decoded != Some(self.block) {
            self.stats.blocks_skipped += 1;
        }
    }

    fn land(&mut self, block: usize, from: usize, d: DocId) -> DocId {
        self.leave(block);
        if block == self.list.blocks.len() {
            self.block = block;
            self.doc = END;
            return END;
        }
        if self.decoded != Some(block) {
            let first = peek_first(self.list.block_bytes(block)).expect("index postings failed to decode");
            if d <= first {
                self.block = block;
                self.pos = 0;
                self.doc = first;
                return first;
            }
        }
        let from = if self.decoded == Some(block) { from } else { 0 };
        self.load(block);
        self.block = block;
        self.pos = from + self.docids[from..].partition_point(|&x| x < d);
        self.doc = self.docids[self.pos];
        self.doc
    }

    /// Moves forward to the first posting `>= d`. `d` must not precede the
    /// current position.
    pub fn next_geq(&mut self, d: DocId) -> DocId {
        if self.doc == END {
            return END;
        }
        assert!(d >= self.doc, "next_geq moved backwards");
        if d == self.doc {
            return d;
        }
        let blocks = &self.list.blocks;
        let target = if blocks[self.block].last_docid >= d {
            self.block
        } else {
            self.block + 1 + blocks[self.block + 1..].partition_point(|b| b.last_docid < d)
        };
        if target > self.block + 1 {
            self.stats.blocks_skipped += (target - self.block - 1) as u64;
        }
        let from = self.pos;
        self.land(target, from, d)
    }

    /// Positions on the first posting `>= d` from anywhere in the list,
    /// forwards or backwards.
    pub fn seek_geq(&mut self, d: DocId) -> DocId {
        let target = self.list.blocks.partition_point(|b| b.last_docid < d);
        self.land(target, 0, d)
    }

    /// Max score and last doc id of the block that would hold the first
    /// posting `>= d`, without decoding it. `(0.0, END)` past the end.
    pub fn block_max(&self, d: DocId) -> (f64, DocId) {
        let blocks = &self.list.blocks;
        let start = self.block.min(blocks.len());
        let b = start + blocks[start..].partition_point(|m| m.last_docid < d);
        match blocks.get(b) {
            Some(m) => (m.max_score, m.last_docid),
            None => (0.0, END),
        }
    }
}
