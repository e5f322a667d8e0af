//! BM25 term contributions and additive document scores.
//!
//! Every score and every bound in the crate is produced by [`TermScorer`], and
//! multi-term sums are always taken in query-slot order (see
//! [`slot_sum`]). Floating-point addition is monotone in each operand, so a sum
//! of per-slot upper bounds taken in that order is never below the document
//! score it bounds, bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreParams {
    pub k1: f64,
    pub b: f64,
}

impl Default for ScoreParams {
    fn default() -> Self {
        Self { k1: 0.4, b: 0.9 }
    }
}

impl ScoreParams {
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        let p = Self { k1, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k1 >= 0.0 && self.k1.is_finite()) {
            return Err(Error::ScoringDomain(format!("k1 must be >= 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::ScoringDomain(format!(
                "b must be in [0, 1], got {}",
                self.b
            )));
        }
        Ok(())
    }

    /// The document-dependent part of the BM25 denominator.
    #[inline]
    pub fn length_norm(&self, doc_len: u32, avgdl: f64) -> f64 {
        self.k1 * (1.0 - self.b + self.b * doc_len as f64 / avgdl)
    }
}

/// Non-negative idf: `ln(1 + (N - df + 0.5) / (df + 0.5))`.
#[inline]
pub fn idf(df: u32, num_docs: u32) -> f64 {
    let df = df as f64;
    (1.0 + (num_docs as f64 - df + 0.5) / (df + 0.5)).ln()
}

/// Per-term scoring state: the idf and saturation constant of one term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermScorer {
    idf: f64,
    k1_plus_1: f64,
}

impl TermScorer {
    pub fn new(df: u32, num_docs: u32, params: &ScoreParams) -> Self {
        Self {
            idf: idf(df, num_docs),
            k1_plus_1: params.k1 + 1.0,
        }
    }

    pub fn idf(&self) -> f64 {
        self.idf
    }

    /// Contribution of a posting with frequency `tf` in a document whose
    /// [`ScoreParams::length_norm`] is `norm`.
    #[inline]
    pub fn score(&self, tf: u32, norm: f64) -> f64 {
        let tf = tf as f64;
        self.idf * (tf * self.k1_plus_1 / (tf + norm))
    }
}

/// `C(t, d)` with the full domain check.
pub fn contribution(
    tf: u32,
    df: u32,
    doc_len: u32,
    avgdl: f64,
    num_docs: u32,
    params: &ScoreParams,
) -> Result<f64> {
    params.validate()?;
    if tf == 0 {
        return Err(Error::ScoringDomain("tf must be >= 1".into()));
    }
    if df == 0 || df > num_docs {
        return Err(Error::ScoringDomain(format!(
            "df must be in 1..={num_docs}, got {df}"
        )));
    }
    if doc_len == 0 {
        return Err(Error::ScoringDomain("doc_len must be >= 1".into()));
    }
    if !(avgdl > 0.0 && avgdl.is_finite()) {
        return Err(Error::ScoringDomain(format!("avgdl must be > 0, got {avgdl}")));
    }
    let norm = params.length_norm(doc_len, avgdl);
    Ok(TermScorer::new(df, num_docs, params).score(tf, norm))
}

/// `S(Q, d)`: contributions summed in query-slot order. Absent terms are 0.
#[inline]
pub fn slot_sum(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |acc, v| acc + v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hand_evaluated_example() {
        // N=4, df=2: idf = ln(1 + 2.5/2.5) = ln 2; doc_len = avgdl makes the
        // norm k1, so the tf part is 1.4/1.4.
        let c = contribution(1, 2, 10, 10.0, 4, &ScoreParams::default()).unwrap();
        assert_abs_diff_eq!(c, std::f64::consts::LN_2, epsilon = 1e-12);
    }

    #[test]
    fn saturation_bound() {
        let p = ScoreParams::default();
        let cap = idf(3, 100) * (p.k1 + 1.0);
        let mut prev = 0.0;
        for tf in [1, 2, 5, 50, 10_000, 1_000_000] {
            let c = contribution(tf, 3, 7, 9.0, 100, &p).unwrap();
            assert!(c < cap);
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn idf_positive_when_df_equals_n() {
        for n in [1u32, 2, 10, 1000] {
            let expect = (1.0 + 0.5 / (n as f64 + 0.5)).ln();
            assert_eq!(idf(n, n), expect);
            assert!(contribution(1, n, 1, 1.0, n, &ScoreParams::default()).unwrap() > 0.0);
        }
    }

    #[test]
    fn domain_errors() {
        let p = ScoreParams::default();
        assert!(contribution(0, 1, 1, 1.0, 1, &p).is_err());
        assert!(contribution(1, 0, 1, 1.0, 1, &p).is_err());
        assert!(contribution(1, 2, 1, 1.0, 1, &p).is_err());
        assert!(contribution(1, 1, 0, 1.0, 1, &p).is_err());
        assert!(contribution(1, 1, 1, 0.0, 1, &p).is_err());
        assert!(ScoreParams::new(-0.1, 0.5).is_err());
        assert!(ScoreParams::new(0.9, 1.5).is_err());
        assert!(ScoreParams::new(0.0, 0.0).is_ok());
    }

    #[test]
    fn slot_sum_is_left_fold() {
        assert_eq!(slot_sum(&[]), 0.0);
        assert_eq!(slot_sum(&[1.5]), 1.5);
        assert_eq!(slot_sum(&[0.1, 0.2, 0.3]), (0.1 + 0.2) + 0.3);
    }
}
