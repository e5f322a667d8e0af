use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::arrangement::ClusterMap;
use crate::corpus::{ForwardIndex, RawDocument, Tokenizer};
use crate::index::{build_index, build_pipeline, BuildOptions};
use crate::scoring::{contribution, ScoreParams};
use crate::synth::{random_collection, random_query};
use crate::Remap;

fn index_of(docs: Vec<RawDocument>, ranges: usize, block: usize) -> (ForwardIndex, Index) {
    let fwd = ForwardIndex::from_documents(docs, &Tokenizer::default()).unwrap();
    let opts = BuildOptions {
        num_clusters: ranges.min(fwd.num_docs()),
        block_size: block,
        seed: 1,
        ..Default::default()
    };
    let idx = build_pipeline(&fwd, &opts, None, Default::default()).unwrap();
    (fwd, idx)
}

/// Top-k by scoring every document from the forward index.
fn brute_force(fwd: &ForwardIndex, idx: &Index, terms: &[TermId], k: usize) -> Vec<(String, f64)> {
    let p = ScoreParams::default();
    let n = fwd.num_docs() as u32;
    let mut scored: Vec<(String, f64)> = Vec::new();
    for doc in fwd.docs() {
        let mut s = 0.0;
        let mut any = false;
        for &t in terms {
            let id = fwd.vocab().id(idx.term(t)).unwrap();
            let tf = doc.tokens.iter().filter(|&&x| x == id).count() as u32;
            if tf > 0 {
                any = true;
                let df = idx.meta(t).df;
                s += contribution(tf, df, doc.tokens.len() as u32, fwd.avgdl(), n, &p).unwrap();
            }
        }
        if any {
            scored.push((doc.key.clone(), s));
        }
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    scored.truncate(k);
    scored
}

fn keys(idx: &Index, hits: &[Hit]) -> Vec<(String, f64)> {
    hits.iter()
        .map(|h| (idx.doc_key(h.doc).to_string(), h.score))
        .collect()
}

#[test]
fn ranked_or_matches_forward_index() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..40 {
        let (fwd, idx) = index_of(random_collection(seed, 150, 30, 12), 3, 4);
        for k in [1, 3, 10] {
            let q = idx.parse_query(&random_query(&mut rng, 30, 4));
            let (hits, _) = search(&idx, &q, k, Algorithm::Or);
            let oracle = brute_force(&fwd, &idx, &q, k);
            assert_eq!(hits.len(), oracle.len());
            for (h, o) in hits.iter().zip(&oracle) {
                assert!((h.score - o.1).abs() < 1e-9);
            }
            // Every returned doc carries its true score.
            let all = brute_force(&fwd, &idx, &q, usize::MAX);
            for (key, s) in keys(&idx, &hits) {
                let truth = all.iter().find(|o| o.0 == key).unwrap().1;
                assert!((s - truth).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn empty_window_and_empty_query() {
    let (_, idx) = index_of(random_collection(1, 30, 10, 5), 1, 4);
    assert!(search(&idx, &[], 5, Algorithm::Wand).0.is_empty());
    let mut q = Query::new(&idx, &[0]);
    let mut topk = TopK::from_entries(2, [Hit { doc: 3, score: 9.0 }]);
    let mut c = Counters::default();
    // A window past every posting leaves the heap alone.
    let w = RangeWindow::new(idx.num_docs() as DocId, idx.num_docs() as DocId + 5);
    process(Algorithm::Or, &mut q, w, &[1.0], &mut topk, &mut c);
    assert_eq!(topk.len(), 1);
    assert_eq!(c.docs_scored, 0);
}

#[test]
fn large_k_returns_every_candidate() {
    let (fwd, idx) = index_of(random_collection(5, 60, 15, 6), 1, 4);
    let q = idx.parse_query("wb wc");
    let matching = fwd
        .docs()
        .iter()
        .filter(|d| {
            q.iter()
                .any(|&t| d.tokens.contains(&fwd.vocab().id(idx.term(t)).unwrap()))
        })
        .count();
    for algo in Algorithm::ALL {
        assert_eq!(search(&idx, &q, 1000, algo).0.len(), matching, "{algo}");
    }
}

#[test]
fn single_term_pruners_match_or() {
    let (_, idx) = index_of(random_collection(8, 200, 20, 10), 1, 8);
    for t in 0..idx.num_terms() as TermId {
        let or = search(&idx, &[t], 5, Algorithm::Or).0;
        for algo in [Algorithm::MaxScore, Algorithm::Wand, Algorithm::Bmw] {
            assert_eq!(search(&idx, &[t], 5, algo).0, or, "{algo} term {t}");
        }
    }
}

#[test]
fn high_incoming_threshold_prunes_everything() {
    let (_, idx) = index_of(random_collection(2, 100, 10, 8), 1, 4);
    let terms = idx.parse_query("wa wb wc");
    let mut q = Query::new(&idx, &terms);
    let bounds = q.global_bounds();
    let total: f64 = bounds.iter().sum();
    let w = q.full_window().unwrap();
    for algo in [Algorithm::MaxScore, Algorithm::Wand, Algorithm::Bmw] {
        let seed = (0..3).map(|i| Hit {
            doc: 1000 + i,
            score: total + 1.0,
        });
        let mut topk = TopK::from_entries(3, seed);
        let mut c = Counters::default();
        process(algo, &mut q, w, &bounds, &mut topk, &mut c);
        assert_eq!(c.docs_scored, 0, "{algo}");
    }
}

#[test]
fn bmw_skips_blocks_below_threshold() {
    // Equal-length docs: tf 5 in docs 0..8, tf 3 in doc 8, tf 1 elsewhere.
    // With k = 9 the heap's θ after doc 8 exceeds every later block max but
    // stays below U_t, so only block-max pruning can skip.
    let docs = (0..400).map(|i| {
        let text = match i {
            0..=7 => "wa wa wa wa wa",
            8 => "wa wa wa wx wx",
            _ => "wa wx wx wx wx",
        };
        RawDocument::new(format!("d{i}"), text)
    });
    let fwd = ForwardIndex::from_documents(docs, &Tokenizer::default()).unwrap();
    let idx = build_index(
        &fwd,
        &Remap::identity(400),
        &ClusterMap::single(400),
        8,
        ScoreParams::default(),
    )
    .unwrap();
    let terms = idx.parse_query("wa");
    let (or, _) = search(&idx, &terms, 9, Algorithm::Or);
    let (wand_hits, wand_c) = search(&idx, &terms, 9, Algorithm::Wand);
    let (bmw_hits, bmw_c) = search(&idx, &terms, 9, Algorithm::Bmw);
    assert_eq!(wand_hits, or);
    assert_eq!(bmw_hits, or);
    assert_eq!(wand_c.docs_scored, 400);
    assert_eq!(bmw_c.docs_scored, 9);
    assert_eq!(bmw_c.blocks_decoded, 2);
    assert_eq!(bmw_c.postings_decoded, 16);
    assert_eq!(bmw_c.blocks_skipped, 48);
}

#[test]
fn wand_scores_fewer_docs_as_threshold_rises() {
    // Uniform documents: the heap fills early, then most docs are bypassed.
    let docs = random_collection(77, 4000, 12, 12);
    let (_, idx) = index_of(docs, 1, 64);
    let terms = idx.parse_query("wa wb wc wd");
    let n = idx.num_docs() as DocId;
    let mut q = Query::new(&idx, &terms);
    let bounds = q.global_bounds();
    let mut topk = TopK::new(10);
    let mut first = Counters::default();
    let mut second = Counters::default();
    q.enter(RangeWindow::new(0, n - 1));
    wand(
        &mut q,
        RangeWindow::new(0, n / 2 - 1),
        &bounds,
        &mut topk,
        &mut first,
    );
    wand(
        &mut q,
        RangeWindow::new(n / 2, n - 1),
        &bounds,
        &mut topk,
        &mut second,
    );
    assert!(second.docs_scored <= first.docs_scored);
    assert!(second.docs_scored < n as u64 / 2);
}

#[test]
fn sequential_ranges_equal_whole_collection() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..30 {
        let (_, idx) = index_of(random_collection(seed, 200, 25, 10), 5, 4);
        let terms = idx.parse_query(&random_query(&mut rng, 25, 5));
        let exhaustive = search(&idx, &terms, 10, Algorithm::Or).0;
        for algo in Algorithm::ALL {
            let mut q = Query::new(&idx, &terms);
            let mut topk = TopK::new(10);
            let mut c = Counters::default();
            // Reverse order on purpose.
            for r in (0..idx.num_ranges()).rev() {
                let b = q.range_bounds(r);
                process(algo, &mut q, idx.cluster_map().window(r), &b, &mut topk, &mut c);
            }
            assert_eq!(topk.into_sorted_vec(), exhaustive, "{algo} seed {seed}");
        }
    }
}

fn arb_instance() -> impl Strategy<Value = (u64, usize, usize, usize, u64)> {
    (any::<u64>(), 10usize..500, 2usize..50, 1usize..5, any::<u64>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pruners_equal_ranked_or((seed, n, vocab, ranges, qseed) in arb_instance(), k in prop::sample::select(vec![1usize, 3, 10])) {
        let (_, idx) = index_of(random_collection(seed, n, vocab, 10), ranges, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(qseed);
        let terms = idx.parse_query(&random_query(&mut rng, vocab, 5));
        let or = search(&idx, &terms, k, Algorithm::Or).0;
        for algo in [Algorithm::MaxScore, Algorithm::Wand, Algorithm::Bmw] {
            prop_assert_eq!(&search(&idx, &terms, k, algo).0, &or);
        }
    }

    #[test]
    fn higher_seeded_threshold_scores_no_more((seed, n, vocab, _r, qseed) in arb_instance(), lo in 0.0f64..3.0, extra in 0.0f64..3.0) {
        let (_, idx) = index_of(random_collection(seed, n, vocab, 10), 1, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(qseed);
        let terms = idx.parse_query(&random_query(&mut rng, vocab, 5));
        for algo in [Algorithm::MaxScore, Algorithm::Wand, Algorithm::Bmw] {
            let mut scored = Vec::new();
            for theta in [lo, lo + extra] {
                let mut q = Query::new(&idx, &terms);
                let Some(w) = q.full_window() else { return Ok(()) };
                let b = q.global_bounds();
                let seed_hits = (0..3).map(|i| Hit { doc: DocId::MAX - 1 - i, score: theta });
                let mut topk = TopK::from_entries(3, seed_hits);
                let mut c = Counters::default();
                process(algo, &mut q, w, &b, &mut topk, &mut c);
                scored.push(c.docs_scored);
            }
            prop_assert!(scored[1] <= scored[0], "{} {:?}", algo, scored);
        }
    }
}
