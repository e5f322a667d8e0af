//! Seeded synthetic collections.
//!
//! [`random_collection`] produces small unstructured corpora for property
//! tests. [`TopicalCorpus`] produces a larger collection with topical
//! structure (documents mix a topic-specific Zipfian vocabulary with a
//! shared background one), so clustering finds real clusters and range
//! bounds are informative.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Zipf};

use crate::corpus::RawDocument;

fn word(id: usize) -> String {
    // Letters only, so neither stemming nor splitting alters the term.
    let mut s = String::from("w");
    let mut v = id;
    loop {
        s.push((b'a' + (v % 26) as u8) as char);
        v /= 26;
        if v == 0 {
            break;
        }
    }
    s
}

/// `n` documents over a vocabulary of `vocab` words, each 1..=`max_len`
/// tokens drawn with a mild skew towards low word ids.
pub fn random_collection(seed: u64, n: usize, vocab: usize, max_len: usize) -> Vec<RawDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let len = rng.random_range(1..=max_len);
            let text = (0..len)
                .map(|_| {
                    let a = rng.random_range(0..vocab);
                    let b = rng.random_range(0..vocab);
                    word(a.min(b))
                })
                .collect::<Vec<_>>()
                .join(" ");
            RawDocument::new(format!("doc{i}"), text)
        })
        .collect()
}

/// Random query of 1..=`max_terms` words from the same vocabulary.
pub fn random_query(rng: &mut impl Rng, vocab: usize, max_terms: usize) -> String {
    let n = rng.random_range(1..=max_terms);
    (0..n)
        .map(|_| word(rng.random_range(0..vocab)))
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone)]
pub struct TopicalConfig {
    pub docs: usize,
    pub topics: usize,
    pub vocab: usize,
    /// Distinct words per topic.
    pub topic_vocab: usize,
    /// Probability that a token comes from the document's topic.
    pub topicality: f64,
    /// Median document length in tokens.
    pub median_len: f64,
    pub seed: u64,
}

impl Default for TopicalConfig {
    fn default() -> Self {
        Self {
            docs: 50_000,
            topics: 50,
            vocab: 30_000,
            topic_vocab: 600,
            topicality: 0.45,
            median_len: 90.0,
            seed: 0x5eed,
        }
    }
}

/// A generated topical collection plus the generator state needed to draw
/// matching queries.
#[derive(Debug, Clone)]
pub struct TopicalCorpus {
    config: TopicalConfig,
    topic_words: Vec<Vec<usize>>,
    docs: Vec<RawDocument>,
}

impl TopicalCorpus {
    pub fn generate(config: TopicalConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut all: Vec<usize> = (0..config.vocab).collect();
        let topic_words: Vec<Vec<usize>> = (0..config.topics)
            .map(|_| {
                all.shuffle(&mut rng);
                all[..config.topic_vocab].to_vec()
            })
            .collect();
        let background = Zipf::new(config.vocab as f64, 1.05).unwrap();
        let topical = Zipf::new(config.topic_vocab as f64, 0.9).unwrap();
        let lengths = LogNormal::new(config.median_len.ln(), 0.6).unwrap();
        let docs = (0..config.docs)
            .map(|i| {
                let topic = rng.random_range(0..config.topics);
                let len = (lengths.sample(&mut rng) as usize).clamp(5, 2000);
                let mut text = String::with_capacity(len * 6);
                for j in 0..len {
                    let w = if rng.random_bool(config.topicality) {
                        topic_words[topic][topical.sample(&mut rng) as usize - 1]
                    } else {
                        background.sample(&mut rng) as usize - 1
                    };
                    if j > 0 {
                        text.push(' ');
                    }
                    text.push_str(&word(w));
                }
                let mut d = RawDocument::new(format!("D{i:06}"), text);
                d.url = Some(format!("http://t{topic}.example/{i}"));
                d
            })
            .collect();
        Self {
            config,
            topic_words,
            docs,
        }
    }

    pub fn config(&self) -> &TopicalConfig {
        &self.config
    }

    pub fn docs(&self) -> &[RawDocument] {
        &self.docs
    }

    pub fn into_docs(self) -> Vec<RawDocument> {
        self.docs
    }

    /// `n` queries of 1..=5 words. Each picks a topic and draws most words
    /// from its head; some words come from the background head, giving the
    /// occasional long, expensive posting list.
    pub fn queries(&self, n: usize, seed: u64) -> Vec<String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let topical = Zipf::new(100.0, 0.8).unwrap();
        let background = Zipf::new(2000.0, 0.9).unwrap();
        (0..n)
            .map(|_| {
                let topic = rng.random_range(0..self.config.topics);
                let len = rng.random_range(1..=5);
                let mut words: Vec<String> = Vec::with_capacity(len);
                while words.len() < len {
                    let w = if rng.random_bool(0.8) {
                        self.topic_words[topic][topical.sample(&mut rng) as usize - 1]
                    } else {
                        background.sample(&mut rng) as usize - 1
                    };
                    let w = word(w);
                    if !words.contains(&w) {
                        words.push(w);
                    }
                }
                words.join(" ")
            })
            .collect()
    }
}
