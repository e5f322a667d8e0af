//! Effectiveness and latency measurement, plus the text formats they read
//! and write.
//!
//! * Run files: `qid Q0 dockey rank score tag`, whitespace separated.
//! * Latency logs: `qid<TAB>elapsed_ms<TAB>ranges_processed<TAB>outcome`.
//! * Query files: `qid<TAB>text`.

use std::collections::{HashMap, HashSet};
use std::hash::Hash;
use std::io::{BufRead, Write};

use crate::anytime::{Outcome, RangeOrder};
use crate::error::{Error, Result};
use crate::DocId;

/// Extrapolated rank-biased overlap of two rankings, evaluated at
/// `min(depth, |a|, |b|)`.
///
/// Two empty rankings agree perfectly (1.0); one empty ranking against a
/// non-empty one scores 0.0.
pub fn rbo<T: Eq + Hash>(a: &[T], b: &[T], phi: f64, depth: usize) -> Result<f64> {
    if !(phi > 0.0 && phi < 1.0) {
        return Err(Error::Rbo("phi must lie in (0, 1)"));
    }
    let distinct = |v: &[T]| v.iter().collect::<HashSet<_>>().len() == v.len();
    if !distinct(a) || !distinct(b) {
        return Err(Error::Rbo("ranking contains a duplicate item"));
    }
    let s = depth.min(a.len()).min(b.len());
    if s == 0 {
        return Ok(if a.is_empty() && b.is_empty() { 1.0 } else { 0.0 });
    }
    let mut seen_a: HashSet<&T> = HashSet::with_capacity(s);
    let mut seen_b: HashSet<&T> = HashSet::with_capacity(s);
    let mut overlap = 0usize;
    let mut identical = true;
    let mut sum = 0.0;
    let mut weight = 1.0;
    for d in 1..=s {
        let (x, y) = (&a[d - 1], &b[d - 1]);
        if x == y {
            overlap += 1;
        } else {
            identical = false;
            overlap += seen_b.contains(x) as usize + seen_a.contains(y) as usize;
            seen_a.insert(x);
            seen_b.insert(y);
        }
        weight *= phi;
        sum += overlap as f64 / d as f64 * weight;
    }
    if identical {
        // The closed form is exactly 1 here; skip the rounding.
        return Ok(1.0);
    }
    Ok(overlap as f64 / s as f64 * weight + (1.0 - phi) / phi * sum)
}

/// Rank-biased weight of every range under a gold ranking:
/// `(1 - φ) Σ_i [range_of(gold_i) = j] φ^(i-1)`.
///
/// Returns all `num_ranges` ranges, heaviest first, ties to the smaller id.
/// Gold documents with no range are ignored.
pub fn oracle_range_order(
    gold: &[DocId],
    range_of: impl Fn(DocId) -> Option<usize>,
    num_ranges: usize,
    phi: f64,
) -> Vec<(u32, f64)> {
    let mut w = vec![0.0; num_ranges];
    let mut p = 1.0;
    for &d in gold {
        if let Some(r) = range_of(d) {
            w[r] += (1.0 - phi) * p;
        }
        p *= phi;
    }
    let mut order: Vec<(u32, f64)> = w.into_iter().enumerate().map(|(r, x)| (r as u32, x)).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    order
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyReport {
    pub count: usize,
    pub p50: f64,
    pub p95: f64,
    pub p99: f64,
    pub mean: f64,
    pub max: f64,
    pub misses: usize,
    pub miss_pct: f64,
    /// Mean of `sample - sla` over the violating samples only.
    pub mean_overshoot: f64,
    pub max_overshoot: f64,
}

/// The `pct`-th percentile by nearest rank: the `ceil(pct n / 100)`-th
/// smallest sample. `sorted` must be ascending and non-empty.
pub fn nearest_rank(sorted: &[f64], pct: usize) -> f64 {
    let n = sorted.len();
    let rank = (pct * n).div_ceil(100).max(1);
    sorted[rank - 1]
}

pub fn latency_report(samples_ms: &[f64], sla_ms: f64) -> Result<LatencyReport> {
    if samples_ms.is_empty() {
        return Err(Error::NoSamples);
    }
    let mut s = samples_ms.to_vec();
    s.sort_by(f64::total_cmp);
    let over: Vec<f64> = s.iter().filter(|&&x| x > sla_ms).map(|&x| x - sla_ms).collect();
    let n = s.len();
    Ok(LatencyReport {
        count: n,
        p50: nearest_rank(&s, 50),
        p95: nearest_rank(&s, 95),
        p99: nearest_rank(&s, 99),
        mean: s.iter().sum::<f64>() / n as f64,
        max: s[n - 1],
        misses: over.len(),
        miss_pct: 100.0 * over.len() as f64 / n as f64,
        mean_overshoot: if over.is_empty() {
            0.0
        } else {
            over.iter().sum::<f64>() / over.len() as f64
        },
        max_overshoot: over.iter().cloned().fold(0.0, f64::max),
    })
}

/// Where a query's answers lived relative to how far it got.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureRow {
    /// Answer-bearing ranges that were processed.
    pub answer_hit: usize,
    /// Distinct ranges holding a reference answer.
    pub answer_total: usize,
    pub processed: usize,
    /// 1-based position in the range order of the deepest answer range.
    pub deepest: usize,
    /// Mean 1-based position of the answer ranges (0 with no answers).
    pub mean_position: f64,
}

/// Compares the reference answers of a query with what an anytime run
/// processed. Answer ranges missing from `order` count at position
/// `order.len() + 1`.
pub fn failure_row(
    answers: &[DocId],
    range_of: impl Fn(DocId) -> u32,
    order: &RangeOrder,
    processed: &[u32],
) -> FailureRow {
    let mut ranges: Vec<u32> = answers.iter().map(|&d| range_of(d)).collect();
    ranges.sort_unstable();
    ranges.dedup();
    let position: HashMap<u32, usize> = order.iter().enumerate().map(|(i, r)| (r.range, i + 1)).collect();
    let done: HashSet<u32> = processed.iter().copied().collect();
    let positions: Vec<usize> = ranges
        .iter()
        .map(|r| position.get(r).copied().unwrap_or(order.len() + 1))
        .collect();
    FailureRow {
        answer_hit: ranges.iter().filter(|r| done.contains(r)).count(),
        answer_total: ranges.len(),
        processed: processed.len(),
        deepest: positions.iter().copied().max().unwrap_or(0),
        mean_position: if positions.is_empty() {
            0.0
        } else {
            positions.iter().sum::<usize>() as f64 / positions.len() as f64
        },
    }
}

/// One query's ranked list in a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub qid: String,
    pub entries: Vec<(String, f64)>,
}

/// A run: ranked lists in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunFile {
    pub lists: Vec<RankedList>,
}

impl RunFile {
    pub fn get(&self, qid: &str) -> Option<&RankedList> {
        self.lists.iter().find(|l| l.qid == qid)
    }

    pub fn keys(&self, qid: &str) -> Vec<&str> {
        self.get(qid)
            .map(|l| l.entries.iter().map(|e| e.0.as_str()).collect())
            .unwrap_or_default()
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut run = RunFile::default();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let n = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: &str| Error::RunFile {
                line: n,
                reason: reason.to_string(),
            };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 {
                return Err(bad("expected 6 columns"));
            }
            let rank: usize = f[3].parse().map_err(|_| bad("bad rank"))?;
            let score: f64 = f[4].parse().map_err(|_| bad("bad score"))?;
            let new_query = run.lists.last().is_none_or(|l| l.qid != f[0]);
            if new_query {
                if run.get(f[0]).is_some() {
                    return Err(bad("query block is not contiguous"));
                }
                run.lists.push(RankedList {
                    qid: f[0].to_string(),
                    entries: Vec::new(),
                });
            }
            let list = run.lists.last_mut().unwrap();
            if rank != list.entries.len() + 1 {
                return Err(bad("ranks must run 1, 2, 3, ..."));
            }
            if list.entries.last().is_some_and(|e| score > e.1) {
                return Err(bad("scores must be nonincreasing"));
            }
            list.entries.push((f[2].to_string(), score));
        }
        Ok(run)
    }
}

pub fn write_run_block<W: Write + ?Sized>(
    out: &mut W,
    qid: &str,
    entries: &[(&str, f64)],
    tag: &str,
) -> std::io::Result<()> {
    for (i, (key, score)) in entries.iter().enumerate() {
        writeln!(out, "{qid} Q0 {key} {} {score:.6} {tag}", i + 1)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyRow {
    pub qid: String,
    pub elapsed_ms: f64,
    pub ranges_processed: usize,
    pub outcome: Outcome,
}

impl LatencyRow {
    pub fn write<W: Write + ?Sized>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(
            out,
            "{}\t{:.6}\t{}\t{}",
            self.qid, self.elapsed_ms, self.ranges_processed, self.outcome
        )
    }
}

pub fn read_latency_log<R: BufRead>(input: R) -> Result<Vec<LatencyRow>> {
    let mut rows = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: &str| Error::MalformedRecord {
            line: i + 1,
            reason: reason.to_string(),
        };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(bad("expected 4 tab-separated columns"));
        }
        rows.push(LatencyRow {
            qid: f[0].to_string(),
            elapsed_ms: f[1].parse().map_err(|_| bad("bad elapsed time"))?,
            ranges_processed: f[2].parse().map_err(|_| bad("bad range count"))?,
            outcome: f[3].parse().map_err(|_| bad("bad outcome"))?,
        });
    }
    Ok(rows)
}

/// Reads `qid<TAB>text` lines. The text may be empty.
pub fn read_queries<R: BufRead>(input: R) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (qid, text) = line.split_once('\t').unwrap_or((line.as_str(), ""));
        if qid.is_empty() {
            return Err(Error::MalformedRecord {
                line: i + 1,
                reason: "empty query id".into(),
            });
        }
        out.push((qid.to_string(), text.to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anytime::RangeScore;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct evaluation of the extrapolated sum from overlap counts.
    fn rbo_direct(a: &[&str], b: &[&str], phi: f64) -> f64 {
        let k = a.len().min(b.len());
        let x = |d: usize| {
            let sa: HashSet<_> = a[..d].iter().collect();
            b[..d].iter().filter(|y| sa.contains(y)).count() as f64
        };
        let mut sum = 0.0;
        for d in 1..=k {
            sum += x(d) / d as f64 * phi.powi(d as i32);
        }
        x(k) / k as f64 * phi.powi(k as i32) + (1.0 - phi) / phi * sum
    }

    #[test]
    fn rbo_edge_cases() {
        let a = ["a", "b", "c", "d"];
        assert_eq!(rbo(&a, &a, 0.9, 10).unwrap(), 1.0);
        assert_eq!(rbo(&a, &["w", "x", "y", "z"], 0.9, 4).unwrap(), 0.0);
        let e: [&str; 0] = [];
        assert_eq!(rbo(&e, &e, 0.9, 10).unwrap(), 1.0);
        assert_eq!(rbo(&a, &e, 0.9, 10).unwrap(), 0.0);
        assert!(rbo(&["a", "a"], &["a", "b"], 0.9, 2).is_err());
        assert!(rbo(&a, &a, 1.0, 2).is_err());
    }

    #[test]
    fn rbo_hand_cases() {
        let cases: [(&[&str], &[&str], f64); 3] = [
            (&["a", "b", "c"], &["b", "a", "c"], 0.9),
            (&["a", "b", "c", "d"], &["a", "c", "e", "b"], 0.8),
            (&["a", "b"], &["c", "a"], 0.5),
        ];
        for (a, b, phi) in cases {
            assert_abs_diff_eq!(
                rbo(a, b, phi, 100).unwrap(),
                rbo_direct(a, b, phi),
                epsilon = 1e-12
            );
        }
        // a,b,c vs b,a,c at 0.9: X = 0, 2, 3.
        let expect = 0.9f64.powi(3) + 0.1 / 0.9 * (0.0 + 2.0 / 2.0 * 0.81 + 3.0 / 3.0 * 0.729);
        assert_abs_diff_eq!(
            rbo(&["a", "b", "c"], &["b", "a", "c"], 0.9, 3).unwrap(),
            expect,
            epsilon = 1e-12
        );
    }

    #[test]
    fn rbo_depth_truncates() {
        let a = ["a", "b", "x"];
        let b = ["a", "b", "y"];
        assert_eq!(rbo(&a, &b, 0.9, 2).unwrap(), 1.0);
        assert!(rbo(&a, &b, 0.9, 3).unwrap() < 1.0);
    }

    proptest! {
        #[test]
        fn rbo_symmetric_and_bounded(
            a in prop::sample::subsequence((0..30u32).collect::<Vec<_>>(), 0..20).prop_shuffle(),
            b in prop::sample::subsequence((0..30u32).collect::<Vec<_>>(), 0..20).prop_shuffle(),
            phi in 0.05f64..0.99,
        ) {
            let x = rbo(&a, &b, phi, 50).unwrap();
            let y = rbo(&b, &a, phi, 50).unwrap();
            prop_assert!((x - y).abs() <= 1e-12);
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&x));
            prop_assert_eq!(rbo(&a, &a, phi, 50).unwrap(), 1.0);
        }

        #[test]
        fn rbo_invariant_under_shared_swap(
            a in prop::sample::subsequence((0..30u32).collect::<Vec<_>>(), 2..20).prop_shuffle(),
            b in prop::sample::subsequence((0..30u32).collect::<Vec<_>>(), 2..20).prop_shuffle(),
            i in 0usize..100,
        ) {
            // Swap the same two items wherever they sit adjacently in both.
            let n = a.len().min(b.len());
            let i = i % (n - 1);
            let (mut a2, mut b2) = (a.clone(), b.clone());
            a2.swap(i, i + 1);
            b2.swap(i, i + 1);
            if a[i] == b[i] && a[i + 1] == b[i + 1] {
                let x = rbo(&a, &b, 0.9, 50).unwrap();
                let y = rbo(&a2, &b2, 0.9, 50).unwrap();
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn oracle_weights() {
        let one = oracle_range_order(&[7], |_| Some(2), 4, 0.99);
        assert_eq!(one[0].0, 2);
        assert_abs_diff_eq!(one[0].1, 0.01, epsilon = 1e-15);
        assert!(one[1..].iter().all(|r| r.1 == 0.0));
        assert_eq!(one.iter().map(|r| r.0).collect::<Vec<_>>(), vec![2, 0, 1, 3]);

        let gold: Vec<DocId> = (0..50).collect();
        let all = oracle_range_order(&gold, |_| Some(1), 3, 0.9);
        assert_abs_diff_eq!(all[0].1, 1.0 - 0.9f64.powi(50), epsilon = 1e-12);
    }

    #[test]
    fn oracle_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let r = rng.random_range(1..8);
            let k = rng.random_range(1..40);
            let assign: Vec<usize> = (0..k).map(|_| rng.random_range(0..r)).collect();
            let gold: Vec<DocId> = (0..k as DocId).collect();
            let phi = 0.95;
            let got = oracle_range_order(&gold, |d| Some(assign[d as usize]), r, phi);
            let mut expect: Vec<(u32, f64)> = (0..r)
                .map(|j| {
                    let w: f64 = (1..=k)
                        .filter(|&i| assign[i - 1] == j)
                        .map(|i| (1.0 - phi) * phi.powi(i as i32 - 1))
                        .sum();
                    (j as u32, w)
                })
                .collect();
            expect.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            let total: f64 = got.iter().map(|x| x.1).sum();
            assert!(total <= 1.0 - phi.powi(k as i32) + 1e-12);
            assert_eq!(got.len(), expect.len());
            for (r, w) in &got {
                let e = expect.iter().find(|x| x.0 == *r).unwrap();
                assert_abs_diff_eq!(*w, e.1, epsilon = 1e-12);
            }
            assert!(got
                .windows(2)
                .all(|p| p[0].1 > p[1].1 || (p[0].1 == p[1].1 && p[0].0 < p[1].0)));
        }
    }

    #[test]
    fn latency_examples() {
        let s: Vec<f64> = (1..=100).map(|x| x as f64).collect();
        let r = latency_report(&s, 99.0).unwrap();
        assert_eq!((r.p50, r.p95, r.p99), (50.0, 95.0, 99.0));
        assert_eq!(r.misses, 1);
        assert_eq!(r.mean_overshoot, 1.0);
        assert_eq!(r.max_overshoot, 1.0);
        let r = latency_report(&[5.0; 7], 10.0).unwrap();
        assert_eq!((r.p50, r.p95, r.p99, r.misses), (5.0, 5.0, 5.0, 0));
        assert!(matches!(latency_report(&[], 1.0), Err(Error::NoSamples)));
    }

    #[test]
    fn percentiles_match_sort_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s: Vec<f64> = (0..5000).map(|_| rng.random_range(0.0..100.0)).collect();
        let r = latency_report(&s, 50.0).unwrap();
        let mut sorted = s.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let pick = |p: f64| sorted[((p * sorted.len() as f64).ceil() as usize) - 1];
        assert_eq!(r.p50, pick(0.50));
        assert_eq!(r.p95, pick(0.95));
        assert_eq!(r.p99, pick(0.99));
        assert!(r.p50 <= r.p95 && r.p95 <= r.p99);
    }

    fn order(ranges: &[u32]) -> RangeOrder {
        RangeOrder(
            ranges
                .iter()
                .enumerate()
                .map(|(i, &r)| RangeScore {
                    range: r,
                    bound: 10.0 - i as f64,
                })
                .collect(),
        )
    }

    #[test]
    fn failure_rows() {
        // Docs 0..10 live in range d / 2.
        let ord = order(&[3, 0, 4, 1, 2]);
        let answers = [0, 1, 6, 9];
        let full = failure_row(&answers, |d| d / 2, &ord, &[3, 0, 4, 1, 2]);
        assert_eq!((full.answer_hit, full.answer_total, full.processed), (3, 3, 5));
        assert_eq!(full.deepest, 3);
        assert_abs_diff_eq!(full.mean_position, (2.0 + 1.0 + 3.0) / 3.0);
        let none = failure_row(&answers, |d| d / 2, &ord, &[]);
        assert_eq!(none.answer_hit, 0);
        let some = failure_row(&answers, |d| d / 2, &ord, &[3, 0]);
        assert_eq!(some.answer_hit, 2);
    }

    #[test]
    fn run_file_roundtrip_and_validation() {
        let mut buf = Vec::new();
        write_run_block(&mut buf, "q1", &[("d3", 2.5), ("d1", 1.25)], "x").unwrap();
        write_run_block(&mut buf, "q2", &[("d2", 0.5)], "x").unwrap();
        let run = RunFile::read(buf.as_slice()).unwrap();
        assert_eq!(run.keys("q1"), vec!["d3", "d1"]);
        assert_eq!(run.get("q2").unwrap().entries, vec![("d2".to_string(), 0.5)]);
        assert!(run.get("q3").is_none());

        let bad_rank = "q1 Q0 a 2 1.0 x\n";
        assert!(matches!(
            RunFile::read(bad_rank.as_bytes()),
            Err(Error::RunFile { line: 1, .. })
        ));
        let rising = "q1 Q0 a 1 1.0 x\nq1 Q0 b 2 2.0 x\n";
        assert!(matches!(
            RunFile::read(rising.as_bytes()),
            Err(Error::RunFile { line: 2, .. })
        ));
        let split = "q1 Q0 a 1 1.0 x\nq2 Q0 b 1 2.0 x\nq1 Q0 c 1 1.0 x\n";
        assert!(RunFile::read(split.as_bytes()).is_err());
        assert!(RunFile::read("q1 Q0 a 1\n".as_bytes()).is_err());
    }

    #[test]
    fn latency_log_roundtrip() {
        let rows = vec![
            LatencyRow {
                qid: "7".into(),
                elapsed_ms: 1.5,
                ranges_processed: 3,
                outcome: Outcome::BudgetTerminated,
            },
            LatencyRow {
                qid: "8".into(),
                elapsed_ms: 0.25,
                ranges_processed: 0,
                outcome: Outcome::Exhausted,
            },
        ];
        let mut buf = Vec::new();
        for r in &rows {
            r.write(&mut buf).unwrap();
        }
        assert_eq!(read_latency_log(buf.as_slice()).unwrap(), rows);
        assert!(read_latency_log("1\t2\n".as_bytes()).is_err());
    }

    #[test]
    fn query_file() {
        let q = read_queries("1\tcats and dogs\n\n2\t\n3\n".as_bytes()).unwrap();
        assert_eq!(q[0], ("1".to_string(), "cats and dogs".to_string()));
        assert_eq!(q[1].1, "");
        assert_eq!(q[2], ("3".to_string(), String::new()));
    }
}
