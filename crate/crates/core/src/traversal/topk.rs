use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::DocId;

/// A scored document.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub doc: DocId,
    pub score: f64,
}

impl Hit {
    /// Total ranking order: higher score first, then smaller doc id.
    pub fn rank_cmp(&self, other: &Hit) -> Ordering {
        other.score.total_cmp(&self.score).then(self.doc.cmp(&other.doc))
    }
}

// Heap order puts the worst entry on top.
#[derive(Debug, Clone, Copy)]
struct Entry(Hit);

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.rank_cmp(&other.0)
    }
}

/// The best `k` documents seen so far.
///
/// Ties on score go to the smaller doc id, so the retained set is a pure
/// function of the offered documents, independent of the order they arrive
/// in. A candidate enters a full heap only if it ranks strictly ahead of the
/// current worst entry; an equal score with a larger doc id does not evict.
#[derive(Debug, Clone)]
pub struct TopK {
    k: usize,
    heap: BinaryHeap<Entry>,
}

impl TopK {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k.saturating_add(1).min(4096)),
        }
    }

    /// A heap pre-filled with `entries`, keeping the best `k`.
    pub fn from_entries(k: usize, entries: impl IntoIterator<Item = Hit>) -> Self {
        let mut t = Self::new(k);
        for h in entries {
            t.insert(h.score, h.doc);
        }
        t
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.heap.len() >= self.k
    }

    /// θ: the lowest retained score once the heap is full, else 0.
    pub fn threshold(&self) -> f64 {
        match self.heap.peek() {
            Some(e) if self.is_full() => e.0.score,
            _ => 0.0,
        }
    }

    /// The entry the next admission would evict, once full.
    pub fn worst(&self) -> Option<Hit> {
        if self.is_full() {
            self.heap.peek().map(|e| e.0)
        } else {
            None
        }
    }

    pub fn would_enter(&self, score: f64, doc: DocId) -> bool {
        if self.k == 0 {
            return false;
        }
        match self.worst() {
            None => true,
            Some(w) => Hit { doc, score }.rank_cmp(&w) == Ordering::Less,
        }
    }

    /// Offers a document; returns whether it was admitted.
    pub fn insert(&mut self, score: f64, doc: DocId) -> bool {
        if !self.would_enter(score, doc) {
            return false;
        }
        if self.is_full() {
            self.heap.pop();
        }
        self.heap.push(Entry(Hit { doc, score }));
        true
    }

    /// True when no document with id `>= first_doc` and score `<= bound`
    /// can be admitted.
    pub fn prunes(&self, bound: f64, first_doc: DocId) -> bool {
        if self.k == 0 {
            return true;
        }
        match self.worst() {
            None => false,
            Some(w) => bound < w.score || (bound == w.score && first_doc > w.doc),
        }
    }

    /// Entries best first.
    pub fn to_sorted_vec(&self) -> Vec<Hit> {
        let mut v: Vec<Hit> = self.heap.iter().map(|e| e.0).collect();
        v.sort_by(Hit::rank_cmp);
        v
    }

    pub fn into_sorted_vec(self) -> Vec<Hit> {
        self.to_sorted_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn threshold_is_zero_until_full() {
        let mut t = TopK::new(2);
        assert_eq!(t.threshold(), 0.0);
        t.insert(3.0, 1);
        assert_eq!(t.threshold(), 0.0);
        t.insert(1.0, 2);
        assert_eq!(t.threshold(), 1.0);
        t.insert(2.0, 3);
        assert_eq!(t.threshold(), 2.0);
        assert_eq!(
            t.into_sorted_vec(),
            vec![Hit { doc: 1, score: 3.0 }, Hit { doc: 3, score: 2.0 }]
        );
    }

    #[test]
    fn equal_score_does_not_evict_larger_id() {
        let mut t = TopK::new(1);
        t.insert(2.0, 5);
        assert!(!t.insert(2.0, 9));
        assert!(t.insert(2.0, 4));
        assert_eq!(t.worst(), Some(Hit { doc: 4, score: 2.0 }));
    }

    #[test]
    fn prunes_respects_tie_break() {
        let t = TopK::from_entries(1, [Hit { doc: 5, score: 2.0 }]);
        assert!(t.prunes(1.9, 0));
        assert!(!t.prunes(2.0, 3));
        assert!(t.prunes(2.0, 6));
        assert!(!t.prunes(2.1, 100));
        assert!(!TopK::new(3).prunes(0.0, 0));
    }

    #[test]
    fn zero_k_admits_nothing() {
        let mut t = TopK::new(0);
        assert!(!t.insert(1.0, 0));
        assert!(t.is_empty());
        assert!(t.prunes(f64::INFINITY, 0));
    }

    proptest! {
        #[test]
        fn matches_sort_oracle(
            scores in prop::collection::vec(0u8..6, 0..60),
            k in 1usize..8,
        ) {
            let mut t = TopK::new(k);
            let mut last_theta = 0.0;
            for (d, &s) in scores.iter().enumerate() {
                t.insert(s as f64, d as DocId);
                prop_assert!(t.threshold() >= last_theta);
                last_theta = t.threshold();
                prop_assert!(t.len() <= k);
            }
            let mut all: Vec<Hit> = scores
                .iter()
                .enumerate()
                .map(|(d, &s)| Hit { doc: d as DocId, score: s as f64 })
                .collect();
            all.sort_by(Hit::rank_cmp);
            all.truncate(k);
            prop_assert_eq!(t.into_sorted_vec(), all);
        }

        #[test]
        fn insertion_order_is_irrelevant(
            scores in prop::collection::vec(0u8..4, 0..40),
            k in 1usize..6,
            seed in any::<u64>(),
        ) {
            let hits: Vec<Hit> = scores
                .iter()
                .enumerate()
                .map(|(d, &s)| Hit { doc: d as DocId, score: s as f64 })
                .collect();
            let mut shuffled = hits.clone();
            let n = shuffled.len();
            for i in (1..n).rev() {
                let j = (seed.wrapping_mul(i as u64 + 7) % (i as u64 + 1)) as usize;
                shuffled.swap(i, j);
            }
            prop_assert_eq!(
                TopK::from_entries(k, hits).into_sorted_vec(),
                TopK::from_entries(k, shuffled).into_sorted_vec()
            );
        }
    }
}
