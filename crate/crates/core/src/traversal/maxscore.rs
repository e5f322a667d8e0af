use super::{Counters, Query, TopK};
use crate::arrangement::RangeWindow;
use crate::index::END;
use crate::scoring::slot_sum;

/// MaxScore. Terms are ranked by bound; the longest low-bound prefix whose
/// summed bounds cannot reach the heap is non-essential and only probed for
/// candidates produced by the essential terms.
pub fn maxscore(q: &mut Query<'_>, w: RangeWindow, bounds: &[f64], topk: &mut TopK, counters: &mut Counters) {
    let m = q.len();
    debug_assert_eq!(bounds.len(), m);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| bounds[a].total_cmp(&bounds[b]).then(a.cmp(&b)));

    // Per-slot values; `ub` is a scratch copy used for bound checks.
    let mut vals = vec![0.0; m];
    let mut ub = vec![0.0; m];
    let mut n_non_essential = 0;
    let prefix_bound = |p: usize, ub: &mut [f64]| {
        ub.fill(0.0);
        for &s in &order[..p] {
            ub[s] = bounds[s];
        }
        slot_sum(ub)
    };
    let grow = |p: &mut usize, first: u32, topk: &TopK, ub: &mut [f64]| {
        while *p < m && topk.prunes(prefix_bound(*p + 1, ub), first) {
            *p += 1;
        }
    };
    grow(&mut n_non_essential, w.lo, topk, &mut ub);

    loop {
        let essential = &order[n_non_essential..];
        let d = essential.iter().map(|&s| q.doc_in(s, w)).min().unwrap_or(END);
        if d == END {
            break;
        }
        vals.fill(0.0);
        for &s in essential {
            if q.terms[s].cursor.doc() == d {
                vals[s] = q.score(s, d);
                q.terms[s].cursor.next_geq(d + 1);
            }
        }
        // Probe non-essential terms, highest bound first, while the
        // candidate can still make it.
        let mut pruned = false;
        for j in (0..n_non_essential).rev() {
            ub.copy_from_slice(&vals);
            for &s in &order[..=j] {
                ub[s] = bounds[s];
            }
            if topk.prunes(slot_sum(&ub), d) {
                pruned = true;
                break;
            }
            let s = order[j];
            let c = &mut q.terms[s].cursor;
            if c.doc() < d {
                c.next_geq(d);
            }
            if c.doc() == d {
                vals[s] = q.score(s, d);
            }
        }
        if pruned {
            continue;
        }
        counters.docs_scored += 1;
        if topk.insert(slot_sum(&vals), d) {
            grow(&mut n_non_essential, d + 1, topk, &mut ub);
        }
    }
}
