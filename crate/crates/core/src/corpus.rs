//! Collection ingest: tokenization and the forward index.
//!
//! A collection is a stream of JSON records, one per line, each carrying an
//! `id` and a `text` field and optionally a `url`. Ingest assigns dense term
//! ids in first-come order and dense document ids in input order.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::BufRead;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

pub type TermId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    #[serde(rename = "id")]
    pub key: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
}

impl RawDocument {
    pub fn new(key: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            text: text.into(),
            url: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub stem: bool,
    pub stopwords: Vec<String>,
}

/// Lowercasing, accent-folding tokenizer splitting on non-alphanumeric runs.
pub struct Tokenizer {
    config: TokenizerConfig,
    stopwords: HashSet<String>,
    stemmer: Option<Stemmer>,
}

impl fmt::Debug for Tokenizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tokenizer").field("config", &self.config).finish()
    }
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self::new(TokenizerConfig::default())
    }
}

impl Tokenizer {
    pub fn new(config: TokenizerConfig) -> Self {
        let stopwords = config
            .stopwords
            .iter()
            .flat_map(|w| fold(w))
            .collect::<HashSet<_>>();
        let stemmer = config.stem.then(|| Stemmer::create(Algorithm::English));
        Self {
            config,
            stopwords,
            stemmer,
        }
    }

    /// Reads a stoplist with one word per line; `#` starts a comment.
    pub fn parse_stoplist(text: &str) -> Vec<String> {
        text.lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::to_owned)
            .collect()
    }

    pub fn config(&self) -> &TokenizerConfig {
        &self.config
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        fold(text)
            .into_iter()
            .filter(|t| !self.stopwords.contains(t))
            .map(|t| match &self.stemmer {
                Some(s) => s.stem(&t).into_owned(),
                None => t,
            })
            .collect()
    }
}

/// Tokenizes with the default configuration (no stemming, no stopping).
pub fn tokenize(text: &str) -> Vec<String> {
    fold(text)
}

fn fold(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.nfd() {
        if is_combining_mark(c) {
            continue;
        }
        if c.is_alphanumeric() {
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    ids: HashMap<String, TermId>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<TermId> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.terms[id as usize]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    fn intern(&mut self, term: String) -> TermId {
        if let Some(&id) = self.ids.get(&term) {
            return id;
        }
        let id = self.terms.len() as TermId;
        self.ids.insert(term.clone(), id);
        self.terms.push(term);
        id
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub key: String,
    pub url: Option<String>,
    pub tokens: Vec<TermId>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ForwardIndex {
    docs: Vec<Document>,
    vocab: Vocabulary,
    doc_len: Vec<u32>,
    avgdl: f64,
}

impl ForwardIndex {
    /// Ingests documents in order. Keys must be non-empty and unique.
    pub fn from_documents<I>(docs: I, tokenizer: &Tokenizer) -> Result<Self>
    where
        I: IntoIterator<Item = RawDocument>,
    {
        let mut builder = Builder::default();
        for (i, doc) in docs.into_iter().enumerate() {
            builder.push(doc, tokenizer, i + 1)?;
        }
        Ok(builder.finish())
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn doc(&self, id: usize) -> &Document {
        &self.docs[id]
    }

    pub fn doc_len(&self) -> &[u32] {
        &self.doc_len
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Per-term collection frequency, indexed by term id.
    pub fn collection_frequencies(&self) -> Vec<u64> {
        let mut cf = vec![0u64; self.vocab.len()];
        for d in &self.docs {
            for &t in &d.tokens {
                cf[t as usize] += 1;
            }
        }
        cf
    }
}

#[derive(Default)]
struct Builder {
    seen: HashSet<String>,
    fwd: ForwardIndex,
}

impl Builder {
    fn push(&mut self, raw: RawDocument, tokenizer: &Tokenizer, line: usize) -> Result<()> {
        if raw.key.is_empty() {
            return Err(Error::EmptyKey(line));
        }
        if !self.seen.insert(raw.key.clone()) {
            return Err(Error::DuplicateKey(raw.key));
        }
        let tokens: Vec<TermId> = tokenizer
            .tokenize(&raw.text)
            .into_iter()
            .map(|t| self.fwd.vocab.intern(t))
            .collect();
        self.fwd.doc_len.push(tokens.len() as u32);
        self.fwd.docs.push(Document {
            key: raw.key,
            url: raw.url,
            tokens,
        });
        Ok(())
    }

    fn finish(mut self) -> ForwardIndex {
        let n = self.fwd.docs.len();
        self.fwd.avgdl = if n == 0 {
            0.0
        } else {
            self.fwd.doc_len.iter().map(|&l| l as u64).sum::<u64>() as f64 / n as f64
        };
        self.fwd
    }
}

/// Parses a line-delimited JSON collection. Blank lines are ignored.
pub fn parse_collection<R: BufRead>(input: R, tokenizer: &Tokenizer) -> Result<ForwardIndex> {
    let mut builder = Builder::default();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawDocument = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line: lineno,
            reason: e.to_string(),
        })?;
        builder.push(raw, tokenizer, lineno)?;
    }
    Ok(builder.finish())
}
