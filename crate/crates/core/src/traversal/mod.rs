//! Document-at-a-time top-k traversal.
//!
//! Every algorithm runs over a [`RangeWindow`] with a caller-supplied bound
//! per query term, so the same code serves whole-collection evaluation
//! (window = everything, bounds = `U_t`) and range-at-a-time evaluation
//! (window = one range, bounds = `U_{t,i}`). The heap is passed in and may
//! already hold results from earlier windows.
//!
//! Scores are always summed in query-slot order. Pruning tests build their
//! upper bounds the same way, slot by slot, so a bound can never round below
//! the score it covers.

mod maxscore;
mod topk;
mod wand;

use std::fmt;
use std::str::FromStr;

pub use maxscore::maxscore;
pub use topk::{Hit, TopK};
pub use wand::{bmw, wand};

use crate::arrangement::RangeWindow;
use crate::corpus::TermId;
use crate::error::Error;
use crate::index::{Cursor, CursorStats, Index, END};
use crate::scoring::{slot_sum, TermScorer};
use crate::DocId;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub postings_decoded: u64,
    pub blocks_decoded: u64,
    pub blocks_skipped: u64,
    /// Documents whose score was computed in full and offered to the heap.
    pub docs_scored: u64,
    pub ranges_visited: u64,
}

impl std::ops::AddAssign for Counters {
    fn add_assign(&mut self, o: Self) {
        self.postings_decoded += o.postings_decoded;
        self.blocks_decoded += o.blocks_decoded;
        self.blocks_skipped += o.blocks_skipped;
        self.docs_scored += o.docs_scored;
        self.ranges_visited += o.ranges_visited;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Algorithm {
    Or,
    #[default]
    MaxScore,
    Wand,
    Bmw,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Self::Or, Self::MaxScore, Self::Wand, Self::Bmw];
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "or" => Ok(Self::Or),
            "maxscore" => Ok(Self::MaxScore),
            "wand" => Ok(Self::Wand),
            "bmw" => Ok(Self::Bmw),
            _ => Err(Error::Format(format!(
                "unknown algorithm {s:?} (expected or, maxscore, wand or bmw)"
            ))),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Or => "or",
            Self::MaxScore => "maxscore",
            Self::Wand => "wand",
            Self::Bmw => "bmw",
        })
    }
}

/// One query term: its cursor and scorer. The term's position in the query
/// is its slot.
#[derive(Debug, Clone)]
pub struct TermCursor<'a> {
    pub term: TermId,
    pub cursor: Cursor<'a>,
    pub scorer: TermScorer,
}

/// Per-query traversal state over a shared index.
#[derive(Debug, Clone)]
pub struct Query<'a> {
    index: &'a Index,
    terms: Vec<TermCursor<'a>>,
}

impl<'a> Query<'a> {
    pub fn new(index: &'a Index, terms: &[TermId]) -> Self {
        let terms = terms
            .iter()
            .map(|&t| TermCursor {
                term: t,
                cursor: index.cursor(t),
                scorer: index.scorer(t),
            })
            .collect();
        Self { index, terms }
    }

    pub fn index(&self) -> &'a Index {
        self.index
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term_ids(&self) -> Vec<TermId> {
        self.terms.iter().map(|t| t.term).collect()
    }

    /// `U_t` per slot.
    pub fn global_bounds(&self) -> Vec<f64> {
        self.terms
            .iter()
            .map(|t| self.index.meta(t.term).max_score)
            .collect()
    }

    /// `U_{t,range}` per slot, 0 where the term is absent from the range.
    pub fn range_bounds(&self, range: usize) -> Vec<f64> {
        self.terms
            .iter()
            .map(|t| self.index.meta(t.term).range_bound(range as u32).unwrap_or(0.0))
            .collect()
    }

    /// The whole collection as one window, or `None` when it is empty.
    pub fn full_window(&self) -> Option<RangeWindow> {
        match self.index.num_docs() {
            0 => None,
            n => Some(RangeWindow::new(0, n as DocId - 1)),
        }
    }

    /// Positions every cursor on its first posting inside `w`.
    pub fn enter(&mut self, w: RangeWindow) {
        for t in &mut self.terms {
            t.cursor.seek_geq(w.lo);
        }
    }

    pub fn cursor_stats(&self) -> CursorStats {
        let mut s = CursorStats::default();
        for t in &self.terms {
            s += t.cursor.stats();
        }
        s
    }

    #[inline]
    fn score(&mut self, slot: usize, doc: DocId) -> f64 {
        let t = &mut self.terms[slot];
        t.scorer
            .score(t.cursor.tf(), self.index.doc_norms()[doc as usize])
    }

    /// Current doc of `slot`, with anything past the window reported as END.
    #[inline]
    fn doc_in(&self, slot: usize, w: RangeWindow) -> DocId {
        let d = self.terms[slot].cursor.doc();
        if d > w.hi {
            END
        } else {
            d
        }
    }
}

/// Runs `algo` over window `w`. Cursors are positioned by this call.
pub fn process(
    algo: Algorithm,
    q: &mut Query<'_>,
    w: RangeWindow,
    bounds: &[f64],
    topk: &mut TopK,
    counters: &mut Counters,
) {
    q.enter(w);
    match algo {
        Algorithm::Or => ranked_or(q, w, topk, counters),
        Algorithm::MaxScore => maxscore(q, w, bounds, topk, counters),
        Algorithm::Wand => wand(q, w, bounds, topk, counters),
        Algorithm::Bmw => bmw(q, w, bounds, topk, counters),
    }
}

/// Exhaustive disjunctive traversal: every document in `w` holding any query
/// term is scored and offered to the heap. Cursors must already be entered.
pub fn ranked_or(q: &mut Query<'_>, w: RangeWindow, topk: &mut TopK, counters: &mut Counters) {
    let m = q.len();
    let mut vals = vec![0.0; m];
    loop {
        let d = (0..m).map(|s| q.doc_in(s, w)).min().unwrap_or(END);
        if d == END {
            break;
        }
        for (s, v) in vals.iter_mut().enumerate() {
            *v = 0.0;
            if q.terms[s].cursor.doc() == d {
                *v = q.score(s, d);
                q.terms[s].cursor.next_geq(d + 1);
            }
        }
        counters.docs_scored += 1;
        topk.insert(slot_sum(&vals), d);
    }
}

/// Whole-collection top-k with global bounds.
pub fn search(index: &Index, terms: &[TermId], k: usize, algo: Algorithm) -> (Vec<Hit>, Counters) {
    let mut q = Query::new(index, terms);
    let mut topk = TopK::new(k);
    let mut counters = Counters::default();
    if let Some(w) = q.full_window() {
        let bounds = q.global_bounds();
        process(algo, &mut q, w, &bounds, &mut topk, &mut counters);
    }
    finish_counters(&q, &mut counters);
    (topk.into_sorted_vec(), counters)
}

/// Folds the cursors' decode statistics into `counters`.
pub fn finish_counters(q: &Query<'_>, counters: &mut Counters) {
    let s = q.cursor_stats();
    counters.postings_decoded += s.postings_decoded;
    counters.blocks_decoded += s.blocks_decoded;
    counters.blocks_skipped += s.blocks_skipped;
}

#[cfg(test)]
mod tests;
