use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Work reported to a clock so a simulated one can advance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    /// A query has started; fixed per-query overhead.
    QueryStart,
    /// One range was processed, decoding `postings` postings.
    Range { postings: u64 },
    /// A whole-collection traversal spanning `ranges` ranges.
    Full { ranges: u64, postings: u64 },
}

/// A monotonic time source.
pub trait Clock {
    /// Time since an arbitrary fixed origin.
    fn now(&mut self) -> Duration;

    /// Reports completed work. Real clocks ignore it.
    fn charge(&mut self, _event: Event) {}
}

#[derive(Debug, Clone, Copy)]
pub struct RealClock {
    origin: Instant,
}

impl Default for RealClock {
    fn default() -> Self {
        Self {
            origin: Instant::now(),
        }
    }
}

impl Clock for RealClock {
    fn now(&mut self) -> Duration {
        self.origin.elapsed()
    }
}

/// Costs charged by a [`SimulatedClock`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostModel {
    pub per_query_ms: f64,
    pub per_range_ms: f64,
    pub per_posting_ns: f64,
    /// Extra per-range costs, taken in turn for every range processed.
    pub range_costs_ms: Vec<f64>,
}

impl CostModel {
    pub fn per_range(ms: f64) -> Self {
        Self {
            per_range_ms: ms,
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn ms_to_ns(ms: f64) -> u64 {
    (ms * 1e6).round().max(0.0) as u64
}

/// Deterministic clock that only moves when work is charged to it. Time is
/// kept in whole nanoseconds.
#[derive(Debug, Clone)]
pub struct SimulatedClock {
    model: CostModel,
    now_ns: u64,
    ranges_charged: usize,
}

impl SimulatedClock {
    pub fn new(model: CostModel) -> Self {
        Self {
            model,
            now_ns: 0,
            ranges_charged: 0,
        }
    }

    pub fn model(&self) -> &CostModel {
        &self.model
    }

    pub fn now_ns(&self) -> u64 {
        self.now_ns
    }

    pub fn advance(&mut self, d: Duration) {
        self.now_ns += d.as_nanos() as u64;
    }

    fn next_cycle_cost(&mut self) -> u64 {
        let costs = &self.model.range_costs_ms;
        if costs.is_empty() {
            return 0;
        }
        let c = costs[self.ranges_charged % costs.len()];
        self.ranges_charged += 1;
        ms_to_ns(c)
    }

    fn range_cost(&mut self, postings: u64) -> u64 {
        ms_to_ns(self.model.per_range_ms)
            + (self.model.per_posting_ns * postings as f64).round() as u64
            + self.next_cycle_cost()
    }
}

impl Clock for SimulatedClock {
    fn now(&mut self) -> Duration {
        Duration::from_nanos(self.now_ns)
    }

    fn charge(&mut self, event: Event) {
        self.now_ns += match event {
            Event::QueryStart => ms_to_ns(self.model.per_query_ms),
            Event::Range { postings } => self.range_cost(postings),
            Event::Full { ranges, postings } => {
                let mut ns = (self.model.per_posting_ns * postings as f64).round() as u64;
                for _ in 0..ranges {
                    ns += ms_to_ns(self.model.per_range_ms) + self.next_cycle_cost();
                }
                ns
            }
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simulated_clock_charges_model() {
        let mut c = SimulatedClock::new(CostModel {
            per_query_ms: 0.5,
            per_range_ms: 1.0,
            per_posting_ns: 10.0,
            range_costs_ms: vec![2.0, 0.0],
        });
        c.charge(Event::QueryStart);
        assert_eq!(c.now_ns(), 500_000);
        c.charge(Event::Range { postings: 100 });
        assert_eq!(c.now_ns(), 500_000 + 1_000_000 + 1_000 + 2_000_000);
        c.charge(Event::Range { postings: 0 });
        assert_eq!(c.now(), Duration::from_nanos(4_501_000));
        c.charge(Event::Full {
            ranges: 2,
            postings: 0,
        });
        assert_eq!(c.now_ns(), 4_501_000 + 2_000_000 + 2_000_000);
    }

    #[test]
    fn cost_model_json() {
        let m = CostModel::from_json(r#"{"per_range_ms": 10}"#).unwrap();
        assert_eq!(m, CostModel::per_range(10.0));
        assert!(CostModel::from_json(r#"{"per_rnage_ms": 10}"#).is_err());
    }

    #[test]
    fn real_clock_is_monotonic() {
        let mut c = RealClock::default();
        let a = c.now();
        let b = c.now();
        assert!(b >= a);
    }
}
