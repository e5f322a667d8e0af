//! Closed-loop multi-worker throughput harness.
//!
//! Every worker runs its own seeded permutation of the whole query log
//! against the shared index, issuing the next query as soon as the previous
//! one finishes. Workers warm up, meet at a barrier, then run timed.

use std::sync::{Barrier, Mutex};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::anytime::{run_query, Clock, CostModel, Mode, PolicyState, RealClock, SimulatedClock};
use crate::corpus::TermId;
use crate::error::Result;
use crate::eval::{latency_report, LatencyReport};
use crate::index::Index;
use crate::traversal::{Algorithm, Hit};

#[derive(Debug, Clone, PartialEq)]
pub enum ClockKind {
    Real,
    Simulated(CostModel),
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub workers: usize,
    pub seed: u64,
    /// Untimed queries each worker runs before the barrier.
    pub warmup: usize,
    pub mode: Mode,
    pub algo: Algorithm,
    pub k: usize,
    pub policy: PolicyState,
    /// Share one Reactive `α` across workers instead of one per worker.
    pub shared_alpha: bool,
    /// Latency target for miss accounting; defaults to the policy budget.
    pub sla_ms: Option<f64>,
    pub clock: ClockKind,
    /// Keep every query's hits in the report.
    pub keep_results: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            workers: 1,
            seed: 0,
            warmup: 0,
            mode: Mode::RangeSafe,
            algo: Algorithm::MaxScore,
            k: 10,
            policy: PolicyState::unbounded(),
            shared_alpha: false,
            sla_ms: None,
            clock: ClockKind::Real,
            keep_results: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WorkerReport {
    pub worker: usize,
    pub queries: usize,
    pub busy: Duration,
    pub latency: LatencyReport,
    pub final_alpha: f64,
    /// `(query index, hits)` in execution order, when kept.
    pub results: Vec<(usize, Vec<Hit>)>,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub wall: Duration,
    pub total_queries: usize,
    pub throughput_qps: f64,
    pub workers: Vec<WorkerReport>,
    pub aggregate: LatencyReport,
}

impl BenchReport {
    /// Tab-separated summary, one row per worker and a final `all` row.
    pub fn to_tsv(&self) -> String {
        let mut out =
            String::from("worker\tqueries\tp50_ms\tp95_ms\tp99_ms\tmean_ms\tmisses\tmiss_pct\tfinal_alpha\n");
        let row = |out: &mut String, name: &str, q: usize, l: &LatencyReport, a: String| {
            out.push_str(&format!(
                "{name}\t{q}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{}\t{:.2}\t{a}\n",
                l.p50, l.p95, l.p99, l.mean, l.misses, l.miss_pct
            ));
        };
        for w in &self.workers {
            row(
                &mut out,
                &w.worker.to_string(),
                w.queries,
                &w.latency,
                format!("{:.6}", w.final_alpha),
            );
        }
        row(&mut out, "all", self.total_queries, &self.aggregate, "-".into());
        out
    }
}

struct Outcome {
    report: WorkerReport,
    samples: Vec<f64>,
    start: Option<Instant>,
    end: Option<Instant>,
}

pub fn run_bench(index: &Index, queries: &[Vec<TermId>], config: &BenchConfig) -> Result<BenchReport> {
    let workers = config.workers.max(1);
    config.policy.validate()?;
    let sla = config.sla_ms.unwrap_or(config.policy.budget_ms);
    let barrier = Barrier::new(workers);
    let shared_alpha = Mutex::new(config.policy.alpha);

    let outcomes: Vec<Outcome> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let barrier = &barrier;
                let shared_alpha = &shared_alpha;
                scope.spawn(move || match &config.clock {
                    ClockKind::Real => worker(
                        index,
                        queries,
                        config,
                        w,
                        barrier,
                        shared_alpha,
                        RealClock::default(),
                    ),
                    ClockKind::Simulated(m) => worker(
                        index,
                        queries,
                        config,
                        w,
                        barrier,
                        shared_alpha,
                        SimulatedClock::new(m.clone()),
                    ),
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("bench worker panicked"))
            .collect()
    });

    let wall = match config.clock {
        ClockKind::Real => {
            let start = outcomes.iter().filter_map(|o| o.start).min();
            let end = outcomes.iter().filter_map(|o| o.end).max();
            match (start, end) {
                (Some(s), Some(e)) => e - s,
                _ => Duration::ZERO,
            }
        }
        // Simulated workers run in parallel by construction.
        ClockKind::Simulated(_) => outcomes.iter().map(|o| o.report.busy).max().unwrap_or_default(),
    };
    let total_queries: usize = outcomes.iter().map(|o| o.report.queries).sum();
    let all: Vec<f64> = outcomes.iter().flat_map(|o| o.samples.iter().copied()).collect();
    let aggregate = latency_report(&all, sla)?;
    let throughput_qps = if wall.is_zero() {
        0.0
    } else {
        total_queries as f64 / wall.as_secs_f64()
    };
    Ok(BenchReport {
        wall,
        total_queries,
        throughput_qps,
        workers: outcomes.into_iter().map(|o| o.report).collect(),
        aggregate,
    })
}

fn worker<C: Clock>(
    index: &Index,
    queries: &[Vec<TermId>],
    config: &BenchConfig,
    id: usize,
    barrier: &Barrier,
    shared_alpha: &Mutex<f64>,
    mut clock: C,
) -> Outcome {
    let mut order: Vec<usize> = (0..queries.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ (id as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    order.shuffle(&mut rng);
    let mut policy = config.policy.clone();

    let warm = config.warmup.min(order.len());
    for &qi in order.iter().cycle().take(warm) {
        let _ = run_query(
            index,
            &queries[qi],
            config.mode,
            config.algo,
            config.k,
            &policy,
            &mut RealClock::default(),
        );
    }
    barrier.wait();

    let mut samples = Vec::with_capacity(order.len());
    let mut results = Vec::new();
    let begin = clock.now();
    let start = Instant::now();
    for &qi in &order {
        if config.shared_alpha {
            policy.alpha = *shared_alpha.lock().unwrap();
        }
        let res = run_query(
            index,
            &queries[qi],
            config.mode,
            config.algo,
            config.k,
            &policy,
            &mut clock,
        );
        let elapsed = res.timeline.elapsed;
        if config.shared_alpha {
            let mut a = shared_alpha.lock().unwrap();
            policy.alpha = *a;
            policy.after_query(elapsed);
            *a = policy.alpha;
        } else {
            policy.after_query(elapsed);
        }
        samples.push(elapsed.as_secs_f64() * 1e3);
        if config.keep_results {
            results.push((qi, res.hits));
        }
    }
    let end = Instant::now();
    let busy = clock.now() - begin;
    let latency = latency_report(
        if samples.is_empty() { &[0.0] } else { &samples },
        config.sla_ms.unwrap_or(policy.budget_ms),
    )
    .expect("non-empty samples");
    Outcome {
        report: WorkerReport {
            worker: id,
            queries: samples.len(),
            busy,
            latency,
            final_alpha: policy.alpha,
            results,
        },
        samples,
        start: Some(start),
        end: Some(end),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ForwardIndex, Tokenizer};
    use crate::index::{build_pipeline, BuildOptions};
    use crate::synth::{random_collection, random_query};

    fn fixture() -> (Index, Vec<Vec<TermId>>) {
        let fwd =
            ForwardIndex::from_documents(random_collection(3, 400, 40, 12), &Tokenizer::default()).unwrap();
        let opts = BuildOptions {
            num_clusters: 6,
            block_size: 16,
            ..Default::default()
        };
        let idx = build_pipeline(&fwd, &opts, None, Default::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let qs = (0..60)
            .map(|_| idx.parse_query(&random_query(&mut rng, 40, 4)))
            .collect();
        (idx, qs)
    }

    #[test]
    fn simulated_two_workers_double_throughput() {
        let (idx, qs) = fixture();
        let model = CostModel {
            per_query_ms: 0.5,
            per_range_ms: 0.25,
            per_posting_ns: 20.0,
            ..Default::default()
        };
        let run = |workers| {
            let cfg = BenchConfig {
                workers,
                clock: ClockKind::Simulated(model.clone()),
                ..Default::default()
            };
            run_bench(&idx, &qs, &cfg).unwrap()
        };
        let one = run(1);
        let two = run(2);
        assert_eq!(one.total_queries, 60);
        assert_eq!(two.total_queries, 120);
        assert_eq!(two.wall, one.wall);
        assert_eq!(two.throughput_qps, 2.0 * one.throughput_qps);
    }

    #[test]
    fn results_are_independent_of_concurrency() {
        let (idx, qs) = fixture();
        let cfg = BenchConfig {
            workers: 3,
            warmup: 5,
            keep_results: true,
            algo: Algorithm::Bmw,
            ..Default::default()
        };
        let rep = run_bench(&idx, &qs, &cfg).unwrap();
        for w in &rep.workers {
            assert_eq!(w.results.len(), qs.len());
            for (qi, hits) in &w.results {
                let (expect, _) = crate::traversal::search(&idx, &qs[*qi], 10, Algorithm::Or);
                assert_eq!(hits, &expect);
            }
        }
        // Each worker saw its own permutation.
        let perm = |w: &WorkerReport| w.results.iter().map(|r| r.0).collect::<Vec<_>>();
        assert_ne!(perm(&rep.workers[0]), perm(&rep.workers[1]));
    }

    #[test]
    fn single_worker_throughput_is_queries_over_wall() {
        let (idx, qs) = fixture();
        let rep = run_bench(&idx, &qs, &BenchConfig::default()).unwrap();
        let expect = rep.total_queries as f64 / rep.wall.as_secs_f64();
        assert!((rep.throughput_qps - expect).abs() <= 1e-9 * expect);
        assert!(rep.to_tsv().lines().count() == 3);
    }

    #[test]
    fn reactive_alpha_per_worker_or_shared() {
        let (idx, qs) = fixture();
        let mut cfg = BenchConfig {
            workers: 2,
            mode: Mode::Anytime,
            policy: PolicyState::new(crate::anytime::PolicyKind::Reactive, 1.0),
            clock: ClockKind::Simulated(CostModel::per_range(0.4)),
            ..Default::default()
        };
        let own = run_bench(&idx, &qs, &cfg).unwrap();
        // Same log, same costs: independent workers end with the same α.
        assert_eq!(own.workers[0].final_alpha, own.workers[1].final_alpha);
        cfg.shared_alpha = true;
        let shared = run_bench(&idx, &qs, &cfg).unwrap();
        assert_eq!(shared.total_queries, 120);
    }
}
