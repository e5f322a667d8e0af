use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;

use anytime_core::anytime::{Clock, CostModel, Mode, PolicyKind, PolicyState, RealClock, SimulatedClock};
use anytime_core::eval::read_queries;
use anytime_core::traversal::Algorithm;
use anytime_core::{Index, ScoreParams};

/// Flags shared by every command that executes queries.
#[derive(Debug, Clone, Args)]
pub struct QueryOpts {
    /// Index directory written by `build`.
    #[arg(long)]
    pub index: PathBuf,

    /// Query file, `qid<TAB>text` per line.
    #[arg(long)]
    pub queries: PathBuf,

    #[arg(short, long, default_value_t = 10)]
    pub k: usize,

    /// or, maxscore, wand or bmw.
    #[arg(long, default_value_t = Algorithm::MaxScore)]
    pub algo: Algorithm,

    /// full, range-safe or anytime.
    #[arg(long, default_value_t = Mode::RangeSafe)]
    pub mode: Mode,

    /// fixed:N, fixed:all, overshoot, undershoot, predictive or reactive.
    #[arg(long, default_value = "fixed:all")]
    pub policy: PolicyKind,

    #[arg(long)]
    pub budget_ms: Option<f64>,

    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,

    #[arg(long, default_value_t = 1.5)]
    pub beta: f64,

    #[arg(long, default_value_t = 0.01)]
    pub q_tolerance: f64,

    /// Worst-case single range cost assumed by `undershoot`.
    #[arg(long, default_value_t = 5.0)]
    pub tmax_ms: f64,

    /// JSON cost model; replaces the wall clock with a deterministic one.
    #[arg(long, value_name = "FILE")]
    pub simulated_clock: Option<PathBuf>,

    /// Override the index's BM25 k1.
    #[arg(long)]
    pub k1: Option<f64>,

    /// Override the index's BM25 b.
    #[arg(long)]
    pub b: Option<f64>,
}

impl QueryOpts {
    pub fn load_index(&self) -> Result<Index> {
        let mut index = Index::read_dir(&self.index)
            .with_context(|| format!("loading index {}", self.index.display()))?;
        if self.k1.is_some() || self.b.is_some() {
            let cur = *index.params();
            let params = ScoreParams::new(self.k1.unwrap_or(cur.k1), self.b.unwrap_or(cur.b))?;
            index.set_params(params)?;
        }
        Ok(index)
    }

    pub fn load_queries(&self) -> Result<Vec<(String, String)>> {
        let f = File::open(&self.queries).with_context(|| format!("opening {}", self.queries.display()))?;
        Ok(read_queries(BufReader::new(f))?)
    }

    pub fn policy(&self) -> Result<PolicyState> {
        let needs_budget = !matches!(self.policy, PolicyKind::Fixed(_));
        if self.mode == Mode::Anytime && needs_budget && self.budget_ms.is_none() {
            bail!("policy {} needs --budget-ms", self.policy);
        }
        if self.mode != Mode::Anytime && self.policy != PolicyKind::Fixed(usize::MAX) {
            eprintln!("warning: --policy only applies with --mode anytime");
        }
        let p = PolicyState {
            kind: self.policy,
            budget_ms: self.budget_ms.unwrap_or(f64::INFINITY),
            alpha: self.alpha,
            beta: self.beta,
            q_tolerance: self.q_tolerance,
            t_max_ms: self.tmax_ms,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn cost_model(&self) -> Result<Option<CostModel>> {
        self.simulated_clock
            .as_deref()
            .map(|p| CostModel::load(p).with_context(|| format!("reading cost model {}", p.display())))
            .transpose()
    }

    pub fn clock(&self) -> Result<Box<dyn Clock>> {
        Ok(match self.cost_model()? {
            Some(m) => Box::new(SimulatedClock::new(m)),
            None => Box::new(RealClock::default()),
        })
    }
}

/// A buffered writer to `path`, or to stdout when absent.
pub fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}
