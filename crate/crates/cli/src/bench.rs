use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;

use anytime_core::bench::{run_bench, BenchConfig, ClockKind};

use crate::opts::{output, QueryOpts};

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    opts: QueryOpts,

    /// Worker threads, each running its own shuffled copy of the log.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    threads: u32,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Untimed queries per worker before measuring.
    #[arg(long, default_value_t = 0)]
    warmup: usize,

    /// Latency target for miss counts (defaults to --budget-ms).
    #[arg(long)]
    sla_ms: Option<f64>,

    /// One reactive `α` shared by all workers.
    #[arg(long)]
    shared_alpha: bool,

    /// TSV report path (stdout when omitted).
    #[arg(long)]
    report: Option<PathBuf>,
}

pub fn run(a: BenchArgs) -> Result<()> {
    let index = a.opts.load_index()?;
    let queries: Vec<_> = a
        .opts
        .load_queries()?
        .iter()
        .map(|(_, text)| index.parse_query(text))
        .collect();
    let config = BenchConfig {
        workers: a.threads as usize,
        seed: a.seed,
        warmup: a.warmup,
        mode: a.opts.mode,
        algo: a.opts.algo,
        k: a.opts.k,
        policy: a.opts.policy()?,
        shared_alpha: a.shared_alpha,
        sla_ms: a.sla_ms,
        clock: match a.opts.cost_model()? {
            Some(m) => ClockKind::Simulated(m),
            None => ClockKind::Real,
        },
        keep_results: false,
    };
    let report = run_bench(&index, &queries, &config)?;

    let mut out = output(a.report.as_deref())?;
    out.write_all(report.to_tsv().as_bytes())?;
    out.flush()?;

    let agg = &report.aggregate;
    eprintln!(
        "{} workers, {} queries in {:.3}s: {:.1} queries/s",
        config.workers,
        report.total_queries,
        report.wall.as_secs_f64(),
        report.throughput_qps
    );
    eprintln!(
        "latency ms: p50 {:.3}  p95 {:.3}  p99 {:.3}  mean {:.3}  max {:.3}",
        agg.p50, agg.p95, agg.p99, agg.mean, agg.max
    );
    if agg.misses > 0 {
        eprintln!(
            "SLA misses: {} ({:.2}%), mean overshoot {:.3}ms, max {:.3}ms",
            agg.misses, agg.miss_pct, agg.mean_overshoot, agg.max_overshoot
        );
    }
    Ok(())
}
