use super::{Counters, Query, TopK};
use crate::arrangement::RangeWindow;
use crate::index::END;
use crate::scoring::slot_sum;

/// WAND: cursors sorted by current doc; the pivot is the first doc at which
/// the bounds of all cursors up to it could reach the heap.
pub fn wand(q: &mut Query<'_>, w: RangeWindow, bounds: &[f64], topk: &mut TopK, counters: &mut Counters) {
    pivoting(q, w, bounds, topk, counters, false)
}

/// Block-max WAND: a WAND pivot is accepted only if the block maxima of the
/// cursors involved also clear the heap; otherwise the whole shared block
/// span is skipped without decoding.
pub fn bmw(q: &mut Query<'_>, w: RangeWindow, bounds: &[f64], topk: &mut TopK, counters: &mut Counters) {
    pivoting(q, w, bounds, topk, counters, true)
}

fn pivoting(
    q: &mut Query<'_>,
    w: RangeWindow,
    bounds: &[f64],
    topk: &mut TopK,
    counters: &mut Counters,
    block_max: bool,
) {
    let m = q.len();
    debug_assert_eq!(bounds.len(), m);
    let mut order: Vec<usize> = (0..m).collect();
    let mut ub = vec![0.0; m];
    loop {
        order.sort_by_key(|&s| (q.doc_in(s, w), s));

        ub.fill(0.0);
        let mut pivot = None;
        for (i, &s) in order.iter().enumerate() {
            let d = q.doc_in(s, w);
            if d == END {
                break;
            }
            ub[s] = bounds[s];
            if !topk.prunes(slot_sum(&ub), d) {
                pivot = Some(i);
                break;
            }
        }
        let Some(p) = pivot else { break };
        let pd = q.doc_in(order[p], w);
        let mut last = p;
        while last + 1 < m && q.doc_in(order[last + 1], w) == pd {
            last += 1;
        }

        if block_max {
            ub.fill(0.0);
            let mut next = END;
            for &s in &order[..=last] {
                let (bm, end) = q.terms[s].cursor.block_max(pd);
                ub[s] = bm;
                next = next.min(end.saturating_add(1));
            }
            if topk.prunes(slot_sum(&ub), pd) {
                if last + 1 < m {
                    next = next.min(q.terms[order[last + 1]].cursor.doc());
                }
                for &s in &order[..=last] {
                    let c = &mut q.terms[s].cursor;
                    if c.doc() < next {
                        c.next_geq(next);
                    }
                }
                continue;
            }
        }

        if q.terms[order[0]].cursor.doc() == pd {
            ub.fill(0.0);
            for &s in &order[..=last] {
                ub[s] = q.score(s, pd);
            }
            counters.docs_scored += 1;
            topk.insert(slot_sum(&ub), pd);
            for &s in &order[..=last] {
                q.terms[s].cursor.next_geq(pd + 1);
            }
        } else {
            for &s in &order[..p] {
                let c = &mut q.terms[s].cursor;
                if c.doc() < pd {
                    c.next_geq(pd);
                }
            }
        }
    }
}
