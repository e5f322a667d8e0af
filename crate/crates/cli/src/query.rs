use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};

use anytime_core::anytime::{run_query, QueryResult};
use anytime_core::eval::{write_run_block, LatencyRow};
use anytime_core::Index;

use crate::opts::{output, QueryOpts};

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[command(flatten)]
    opts: QueryOpts,

    /// Run file to write (stdout when omitted).
    #[arg(long)]
    run: Option<PathBuf>,

    /// Latency log: `qid elapsed_ms ranges_processed outcome`.
    #[arg(long)]
    latency_log: Option<PathBuf>,

    /// Per-query `α` before and after the reactive update.
    #[arg(long)]
    alpha_trace: Option<PathBuf>,

    /// JSON lines with each query's range order and the ranges processed.
    #[arg(long)]
    range_trace: Option<PathBuf>,

    /// Run tag in the last run-file column.
    #[arg(long, default_value = "anytime")]
    tag: String,
}

/// One line of a range trace file.
#[derive(Debug, Serialize, Deserialize)]
pub struct TraceRecord {
    pub qid: String,
    /// `(range, bound)` in planned order.
    pub order: Vec<(u32, f64)>,
    pub processed: Vec<u32>,
    pub bypassed: Vec<u32>,
    pub outcome: String,
    pub elapsed_ms: f64,
}

impl TraceRecord {
    fn new(qid: &str, res: &QueryResult) -> Self {
        let tl = &res.timeline;
        Self {
            qid: qid.to_string(),
            order: tl.order.iter().map(|r| (r.range, r.bound)).collect(),
            processed: tl.processed.clone(),
            bypassed: tl.bypassed.clone(),
            outcome: tl.outcome.to_string(),
            elapsed_ms: tl.elapsed_ms(),
        }
    }
}

pub fn run(a: QueryArgs) -> Result<()> {
    let index = a.opts.load_index()?;
    let queries = a.opts.load_queries()?;
    let mut policy = a.opts.policy()?;
    let mut clock = a.opts.clock()?;

    let mut run_out = output(a.run.as_deref())?;
    let mut log = a.latency_log.as_deref().map(|p| output(Some(p))).transpose()?;
    let mut alpha = a.alpha_trace.as_deref().map(|p| output(Some(p))).transpose()?;
    let mut trace = a.range_trace.as_deref().map(|p| output(Some(p))).transpose()?;
    if let Some(w) = alpha.as_mut() {
        writeln!(w, "qid\talpha\telapsed_ms\tnext_alpha")?;
    }

    for (qid, text) in &queries {
        let terms = index.parse_query(text);
        let before = policy.alpha;
        let res = run_query(
            &index,
            &terms,
            a.opts.mode,
            a.opts.algo,
            a.opts.k,
            &policy,
            clock.as_mut(),
        );
        policy.after_query(res.timeline.elapsed);

        write_hits(&mut run_out, &index, qid, &res, &a.tag)?;
        if let Some(w) = log.as_mut() {
            LatencyRow {
                qid: qid.clone(),
                elapsed_ms: res.timeline.elapsed_ms(),
                ranges_processed: res.timeline.ranges_processed(),
                outcome: res.timeline.outcome,
            }
            .write(w)?;
        }
        if let Some(w) = alpha.as_mut() {
            writeln!(
                w,
                "{qid}\t{before:.9}\t{:.6}\t{:.9}",
                res.timeline.elapsed_ms(),
                policy.alpha
            )?;
        }
        if let Some(w) = trace.as_mut() {
            serde_json::to_writer(&mut *w, &TraceRecord::new(qid, &res))?;
            writeln!(w)?;
        }
    }
    run_out.flush()?;
    for w in [log, alpha, trace].iter_mut().flatten() {
        w.flush()?;
    }
    Ok(())
}

fn write_hits(out: &mut dyn Write, index: &Index, qid: &str, res: &QueryResult, tag: &str) -> Result<()> {
    let entries: Vec<(&str, f64)> = res.hits.iter().map(|h| (index.doc_key(h.doc), h.score)).collect();
    write_run_block(out, qid, &entries, tag)?;
    Ok(())
}
