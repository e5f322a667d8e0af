//! Range-at-a-time query execution.
//!
//! A query's ranges are ordered by the sum of their per-term bounds
//! ([`bound_sum`]) and processed best-first with one heap shared across
//! ranges. Before each range the executor first checks whether the range can
//! still contribute (safe skip) and then asks the termination policy whether
//! time allows another range.

mod clock;
mod policy;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

pub use clock::{Clock, CostModel, Event, RealClock, SimulatedClock};
pub use policy::{reactive_update, Decision, PolicyKind, PolicyState};

use crate::corpus::TermId;
use crate::error::{Error, Result};
use crate::index::Index;
use crate::traversal::{finish_counters, process, Algorithm, Counters, Hit, Query, TopK};

/// One range and its summed bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeScore {
    pub range: u32,
    pub bound: f64,
}

/// Ranges in processing order: descending bound, ties to the smaller id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RangeOrder(pub Vec<RangeScore>);

impl RangeOrder {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, RangeScore> {
        self.0.iter()
    }

    pub fn ranges(&self) -> Vec<u32> {
        self.0.iter().map(|r| r.range).collect()
    }

    /// An order over explicitly given ranges, keeping their sequence.
    pub fn from_ranges(ranges: impl IntoIterator<Item = u32>, bounds: impl Fn(u32) -> f64) -> Self {
        Self(
            ranges
                .into_iter()
                .map(|r| RangeScore {
                    range: r,
                    bound: bounds(r),
                })
                .collect(),
        )
    }
}

/// Sums sparse per-term range bounds, one list per query term in slot
/// order, and sorts the ranges that appear in any list.
pub fn bound_sum_lists(lists: &[&[(u32, f64)]], num_ranges: usize) -> RangeOrder {
    let mut acc = vec![0.0f64; num_ranges];
    let mut seen = vec![false; num_ranges];
    for list in lists {
        for &(r, u) in list.iter() {
            acc[r as usize] += u;
            seen[r as usize] = true;
        }
    }
    let mut order: Vec<RangeScore> = (0..num_ranges)
        .filter(|&r| seen[r])
        .map(|r| RangeScore {
            range: r as u32,
            bound: acc[r],
        })
        .collect();
    order.sort_by(|a, b| b.bound.total_cmp(&a.bound).then(a.range.cmp(&b.range)));
    RangeOrder(order)
}

/// The query's range order from the index's stored range bounds.
pub fn bound_sum(index: &Index, terms: &[TermId]) -> RangeOrder {
    let lists: Vec<&[(u32, f64)]> = terms
        .iter()
        .map(|&t| index.meta(t).range_bounds.as_slice())
        .collect();
    bound_sum_lists(&lists, index.num_ranges())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Skip {
    Process,
    BypassAllRemaining,
}

/// A range whose bound does not exceed θ, and every range after it in
/// descending order, cannot improve the heap.
pub fn safe_skip(bound: f64, theta: f64) -> Skip {
    if bound <= theta {
        Skip::BypassAllRemaining
    } else {
        Skip::Process
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Every range in the order was processed.
    Exhausted,
    /// Stopped because no remaining range could change the result.
    SafeTerminated,
    /// Stopped by the termination policy.
    BudgetTerminated,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exhausted => "exhausted",
            Self::SafeTerminated => "safe",
            Self::BudgetTerminated => "budget",
        })
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhausted" => Ok(Self::Exhausted),
            "safe" => Ok(Self::SafeTerminated),
            "budget" => Ok(Self::BudgetTerminated),
            _ => Err(Error::Format(format!("unknown outcome {s:?}"))),
        }
    }
}

/// What happened while executing one query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryTimeline {
    /// The order the query was planned with.
    pub order: RangeOrder,
    /// Ranges processed, in processing order.
    pub processed: Vec<u32>,
    /// Time spent inside each processed range.
    pub range_times: Vec<Duration>,
    /// Elapsed time since query start after each processed range.
    pub cumulative: Vec<Duration>,
    /// Ranges passed over by the safe-skip test.
    pub bypassed: Vec<u32>,
    pub elapsed: Duration,
    pub outcome: Outcome,
}

impl QueryTimeline {
    fn new(order: RangeOrder) -> Self {
        Self {
            order,
            processed: Vec::new(),
            range_times: Vec::new(),
            cumulative: Vec::new(),
            bypassed: Vec::new(),
            elapsed: Duration::ZERO,
            outcome: Outcome::Exhausted,
        }
    }

    pub fn ranges_processed(&self) -> usize {
        self.processed.len()
    }

    pub fn elapsed_ms(&self) -> f64 {
        self.elapsed.as_secs_f64() * 1e3
    }
}

#[derive(Debug, Clone)]
pub struct QueryResult {
    pub hits: Vec<Hit>,
    pub timeline: QueryTimeline,
    pub counters: Counters,
}

/// Range-at-a-time execution in BoundSum order.
pub fn execute_anytime<C: Clock + ?Sized>(
    index: &Index,
    terms: &[TermId],
    algo: Algorithm,
    k: usize,
    policy: &PolicyState,
    clock: &mut C,
) -> QueryResult {
    let start = clock.now();
    clock.charge(Event::QueryStart);
    let order = bound_sum(index, terms);
    execute_order(index, terms, order, algo, k, policy, clock, start)
}

/// Range-at-a-time execution over a caller-supplied order. `start` is the
/// clock reading the query's elapsed time is measured from.
#[allow(clippy::too_many_arguments)]
pub fn execute_order<C: Clock + ?Sized>(
    index: &Index,
    terms: &[TermId],
    order: RangeOrder,
    algo: Algorithm,
    k: usize,
    policy: &PolicyState,
    clock: &mut C,
    start: Duration,
) -> QueryResult {
    let mut q = Query::new(index, terms);
    let mut topk = TopK::new(k);
    let mut counters = Counters::default();
    let mut tl = QueryTimeline::new(order);
    let map = index.cluster_map();

    let mut idx = 0;
    while idx < tl.order.len() {
        let RangeScore { range, bound } = tl.order.0[idx];
        let window = map.window(range as usize);
        // Ties with θ are resolved by doc id, so a range whose bound equals
        // θ can still hold a winner if it starts before the worst entry.
        if topk.prunes(bound, window.lo) {
            if bound < topk.threshold() {
                tl.bypassed.extend(tl.order.0[idx..].iter().map(|r| r.range));
                tl.outcome = Outcome::SafeTerminated;
                break;
            }
            tl.bypassed.push(range);
            idx += 1;
            continue;
        }
        let before = clock.now();
        if policy.decide(tl.processed.len(), before - start) == Decision::Terminate {
            tl.outcome = Outcome::BudgetTerminated;
            break;
        }
        let decoded = q.cursor_stats().postings_decoded;
        let bounds = q.range_bounds(range as usize);
        process(algo, &mut q, window, &bounds, &mut topk, &mut counters);
        counters.ranges_visited += 1;
        clock.charge(Event::Range {
            postings: q.cursor_stats().postings_decoded - decoded,
        });
        let after = clock.now();
        tl.processed.push(range);
        tl.range_times.push(after - before);
        tl.cumulative.push(after - start);
        idx += 1;
    }
    if tl.outcome == Outcome::Exhausted && !tl.bypassed.is_empty() {
        tl.outcome = Outcome::SafeTerminated;
    }
    finish_counters(&q, &mut counters);
    tl.elapsed = clock.now() - start;
    QueryResult {
        hits: topk.into_sorted_vec(),
        timeline: tl,
        counters,
    }
}

/// Whole-collection traversal with global bounds, timed like a single range.
pub fn execute_full<C: Clock + ?Sized>(
    index: &Index,
    terms: &[TermId],
    algo: Algorithm,
    k: usize,
    clock: &mut C,
) -> QueryResult {
    let start = clock.now();
    clock.charge(Event::QueryStart);
    let mut q = Query::new(index, terms);
    let mut topk = TopK::new(k);
    let mut counters = Counters::default();
    if let (Some(w), false) = (q.full_window(), terms.is_empty()) {
        let bounds = q.global_bounds();
        process(algo, &mut q, w, &bounds, &mut topk, &mut counters);
        counters.ranges_visited = index.num_ranges() as u64;
    }
    finish_counters(&q, &mut counters);
    clock.charge(Event::Full {
        ranges: counters.ranges_visited,
        postings: counters.postings_decoded,
    });
    let mut tl = QueryTimeline::new(RangeOrder::default());
    tl.elapsed = clock.now() - start;
    tl.processed = (0..counters.ranges_visited as u32).collect();
    QueryResult {
        hits: topk.into_sorted_vec(),
        timeline: tl,
        counters,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Whole collection at once, global bounds.
    Full,
    /// Range at a time with safe skipping, no budget.
    #[default]
    RangeSafe,
    /// Range at a time with safe skipping and a termination policy.
    Anytime,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "range-safe" => Ok(Self::RangeSafe),
            "anytime" => Ok(Self::Anytime),
            _ => Err(Error::Format(format!(
                "unknown mode {s:?} (expected full, range-safe or anytime)"
            ))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Full => "full",
            Self::RangeSafe => "range-safe",
            Self::Anytime => "anytime",
        })
    }
}

/// Runs one query in `mode`. The policy is consulted only in anytime mode.
pub fn run_query<C: Clock + ?Sized>(
    index: &Index,
    terms: &[TermId],
    mode: Mode,
    algo: Algorithm,
    k: usize,
    policy: &PolicyState,
    clock: &mut C,
) -> QueryResult {
    match mode {
        Mode::Full => execute_full(index, terms, algo, k, clock),
        Mode::RangeSafe => execute_anytime(index, terms, algo, k, &PolicyState::unbounded(), clock),
        Mode::Anytime => execute_anytime(index, terms, algo, k, policy, clock),
    }
}
