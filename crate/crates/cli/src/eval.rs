use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Subcommand};

use anytime_core::anytime::{RangeOrder, RangeScore};
use anytime_core::eval::{failure_row, latency_report, rbo, read_latency_log, RunFile};
use anytime_core::{DocId, Index};

use crate::opts::{open, output};
use crate::query::TraceRecord;

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Per-query RBO of a run against a reference run.
    Rbo(RboArgs),
    /// Percentiles and SLA misses of a latency log.
    Latency(LatencyArgs),
    /// Where each query's reference answers sat in its range order.
    Failures(FailureArgs),
}

#[derive(Debug, Args)]
pub struct RboArgs {
    #[arg(long)]
    run: PathBuf,

    /// Usually the exhaustive run.
    #[arg(long)]
    reference: PathBuf,

    #[arg(long, default_value_t = 0.99)]
    phi: f64,

    #[arg(long, default_value_t = 10)]
    depth: usize,
}

#[derive(Debug, Args)]
pub struct LatencyArgs {
    #[arg(long)]
    log: PathBuf,

    #[arg(long, default_value_t = f64::INFINITY)]
    sla_ms: f64,
}

#[derive(Debug, Args)]
pub struct FailureArgs {
    /// Index the runs were produced from.
    #[arg(long)]
    index: PathBuf,

    /// Exhaustive run supplying each query's answers.
    #[arg(long)]
    reference: PathBuf,

    /// Range trace of the anytime run.
    #[arg(long)]
    trace: PathBuf,

    /// Anytime run; adds an RBO column.
    #[arg(long)]
    run: Option<PathBuf>,

    #[arg(long, default_value_t = 0.99)]
    phi: f64,

    #[arg(long, default_value_t = 10)]
    depth: usize,
}

pub fn run(cmd: EvalCommand) -> Result<()> {
    match cmd {
        EvalCommand::Rbo(a) => eval_rbo(a),
        EvalCommand::Latency(a) => eval_latency(a),
        EvalCommand::Failures(a) => eval_failures(a),
    }
}

fn read_run(path: &Path) -> Result<RunFile> {
    RunFile::read(open(path)?).with_context(|| format!("reading run {}", path.display()))
}

fn eval_rbo(a: RboArgs) -> Result<()> {
    let run = read_run(&a.run)?;
    let reference = read_run(&a.reference)?;
    let mut out = output(None)?;
    writeln!(out, "qid\trbo")?;
    let mut sum = 0.0;
    for list in &reference.lists {
        let v = rbo(&run.keys(&list.qid), &reference.keys(&list.qid), a.phi, a.depth)?;
        sum += v;
        writeln!(out, "{}\t{v:.6}", list.qid)?;
    }
    let n = reference.lists.len().max(1) as f64;
    writeln!(out, "mean\t{:.6}", sum / n)?;
    out.flush()?;
    Ok(())
}

fn eval_latency(a: LatencyArgs) -> Result<()> {
    let rows = read_latency_log(open(&a.log)?).with_context(|| format!("reading {}", a.log.display()))?;
    let samples: Vec<f64> = rows.iter().map(|r| r.elapsed_ms).collect();
    let r = latency_report(&samples, a.sla_ms)?;
    let mut out = output(None)?;
    for (name, v) in [
        ("p50_ms", r.p50),
        ("p95_ms", r.p95),
        ("p99_ms", r.p99),
        ("mean_ms", r.mean),
        ("max_ms", r.max),
    ] {
        writeln!(out, "{name}\t{v:.6}")?;
    }
    writeln!(out, "queries\t{}", r.count)?;
    writeln!(out, "misses\t{}", r.misses)?;
    writeln!(out, "miss_pct\t{:.4}", r.miss_pct)?;
    writeln!(out, "mean_overshoot_ms\t{:.6}", r.mean_overshoot)?;
    writeln!(out, "max_overshoot_ms\t{:.6}", r.max_overshoot)?;
    out.flush()?;
    Ok(())
}

fn eval_failures(a: FailureArgs) -> Result<()> {
    let index = Index::read_dir(&a.index).with_context(|| format!("loading index {}", a.index.display()))?;
    let reference = read_run(&a.reference)?;
    let run = a.run.as_deref().map(read_run).transpose()?;
    let ids: HashMap<&str, DocId> = index
        .doc_keys()
        .iter()
        .enumerate()
        .map(|(i, k)| (k.as_str(), i as DocId))
        .collect();
    let map = index.cluster_map();

    let mut out = output(None)?;
    write!(
        out,
        "qid\tanswers_hit\tanswers_total\tprocessed\tdeepest\tmean_position"
    )?;
    writeln!(out, "{}", if run.is_some() { "\trbo" } else { "" })?;
    for (i, line) in open(&a.trace)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TraceRecord =
            serde_json::from_str(&line).with_context(|| format!("{} line {}", a.trace.display(), i + 1))?;
        let answers = reference
            .keys(&rec.qid)
            .iter()
            .map(|k| {
                ids.get(k)
                    .copied()
                    .with_context(|| format!("unknown document {k:?}"))
            })
            .collect::<Result<Vec<_>>>()?;
        let order = RangeOrder(
            rec.order
                .iter()
                .map(|&(range, bound)| RangeScore { range, bound })
                .collect(),
        );
        let row = failure_row(&answers, |d| map.range_of(d) as u32, &order, &rec.processed);
        write!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{:.2}",
            rec.qid, row.answer_hit, row.answer_total, row.processed, row.deepest, row.mean_position
        )?;
        match &run {
            Some(run) => {
                let v = rbo(&run.keys(&rec.qid), &reference.keys(&rec.qid), a.phi, a.depth)?;
                writeln!(out, "\t{v:.4}")?;
            }
            None => writeln!(out)?,
        }
    }
    out.flush()?;
    Ok(())
}
