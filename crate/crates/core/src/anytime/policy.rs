use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    /// Process at most `n` ranges.
    Fixed(usize),
    /// Stop once the budget has been used up.
    Overshoot,
    /// Stop unless a worst-case range still fits in the budget.
    Undershoot,
    /// Stop unless `α` mean ranges still fit in the budget.
    Predictive,
    /// As `Predictive`, with `α` adapted after every query.
    Reactive,
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "overshoot" => Ok(Self::Overshoot),
            "undershoot" => Ok(Self::Undershoot),
            "predictive" => Ok(Self::Predictive),
            "reactive" => Ok(Self::Reactive),
            _ => {
                let n = s
                    .strip_prefix("fixed:")
                    .ok_or_else(|| Error::Policy(format!("unknown policy {s:?}")))?;
                match n {
                    "all" | "inf" => Ok(Self::Fixed(usize::MAX)),
                    _ => n
                        .parse()
                        .map(Self::Fixed)
                        .map_err(|_| Error::Policy(format!("bad range count in {s:?}"))),
                }
            }
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed(usize::MAX) => f.write_str("fixed:all"),
            Self::Fixed(n) => write!(f, "fixed:{n}"),
            Self::Overshoot => f.write_str("overshoot"),
            Self::Undershoot => f.write_str("undershoot"),
            Self::Predictive => f.write_str("predictive"),
            Self::Reactive => f.write_str("reactive"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Continue,
    Terminate,
}

/// A termination policy and its parameters. Times are in milliseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyState {
    pub kind: PolicyKind,
    pub budget_ms: f64,
    pub alpha: f64,
    pub beta: f64,
    pub q_tolerance: f64,
    pub t_max_ms: f64,
}

impl Default for PolicyState {
    fn default() -> Self {
        Self {
            kind: PolicyKind::Fixed(usize::MAX),
            budget_ms: f64::INFINITY,
            alpha: 1.0,
            beta: 1.5,
            q_tolerance: 0.01,
            t_max_ms: 5.0,
        }
    }
}

impl PolicyState {
    pub fn new(kind: PolicyKind, budget_ms: f64) -> Self {
        Self {
            kind,
            budget_ms,
            ..Self::default()
        }
    }

    /// Never terminates on time or count.
    pub fn unbounded() -> Self {
        Self::default()
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Policy(what.to_string()));
        if self.budget_ms.is_nan() || self.budget_ms < 0.0 {
            return bad("budget must be >= 0");
        }
        if self.alpha.is_nan() || self.alpha < 0.0 {
            return bad("alpha must be >= 0");
        }
        if self.beta.is_nan() || self.beta <= 1.0 {
            return bad("beta must be > 1");
        }
        if self.q_tolerance.is_nan() || self.q_tolerance < 0.0 {
            return bad("q tolerance must be >= 0");
        }
        if self.t_max_ms.is_nan() || self.t_max_ms < 0.0 {
            return bad("t_max must be >= 0");
        }
        Ok(())
    }

    /// Go/no-go before starting another range, given `done` ranges already
    /// processed and `elapsed` time since the query started.
    ///
    /// Comparisons are made in nanoseconds so whole-nanosecond simulated
    /// times compare exactly.
    pub fn decide(&self, done: usize, elapsed: Duration) -> Decision {
        let t = elapsed.as_nanos() as f64;
        let b = self.budget_ms * 1e6;
        let go = match self.kind {
            PolicyKind::Fixed(n) => done < n,
            PolicyKind::Overshoot => t < b,
            PolicyKind::Undershoot => t + self.t_max_ms * 1e6 < b,
            PolicyKind::Predictive | PolicyKind::Reactive => {
                done == 0 || t + self.alpha * (t / done as f64) < b
            }
        };
        if go {
            Decision::Continue
        } else {
            Decision::Terminate
        }
    }

    /// Adapts `α` after a query that took `elapsed`; only Reactive changes.
    pub fn after_query(&mut self, elapsed: Duration) {
        if self.kind == PolicyKind::Reactive {
            let t = elapsed.as_nanos() as f64;
            self.alpha = reactive_update(self.alpha, self.beta, self.q_tolerance, t, self.budget_ms * 1e6);
        }
    }
}

/// Feedback step for `α`: grow by `β` after a budget overrun, otherwise
/// shrink by `(1/β)^Q`. `t` and `budget` share a unit.
pub fn reactive_update(alpha: f64, beta: f64, q: f64, t: f64, budget: f64) -> f64 {
    if t > budget {
        alpha * beta
    } else {
        alpha * (1.0 / beta).powf(q)
    }
}
