//! Document arrangement: topical clustering, within-cluster ordering, and
//! concatenation of the clusters into one document-id space.
//!
//! The output is a remapping of ingest ids to internal ids together with the
//! [`ClusterMap`] that records where each range ends.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::ForwardIndex;
use crate::error::{Error, Result};
use crate::DocId;

const KMEANS_MAX_ITERS: usize = 20;

/// Cluster membership of every ingest-order document. Never holds an empty
/// cluster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    num_clusters: usize,
    member_of: Vec<u32>,
}

impl ClusterAssignment {
    /// Builds an assignment from raw labels, dropping labels that are unused
    /// and renumbering the rest in ascending label order.
    pub fn from_labels(labels: &[u32]) -> Self {
        let mut used: BTreeMap<u32, u32> = labels.iter().map(|&l| (l, 0)).collect();
        for (next, slot) in used.values_mut().enumerate() {
            *slot = next as u32;
        }
        Self {
            num_clusters: used.len(),
            member_of: labels.iter().map(|l| used[l]).collect(),
        }
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn num_docs(&self) -> usize {
        self.member_of.len()
    }

    pub fn cluster_of(&self, doc: usize) -> u32 {
        self.member_of[doc]
    }

    pub fn labels(&self) -> &[u32] {
        &self.member_of
    }

    /// Members of each cluster in ascending ingest order.
    pub fn members(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.num_clusters];
        for (doc, &c) in self.member_of.iter().enumerate() {
            out[c as usize].push(doc as u32);
        }
        out
    }
}

/// Last internal doc id of each range. Range `i` spans
/// `[ends[i-1] + 1, ends[i]]`, with the first range starting at 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterMap {
    ends: Vec<DocId>,
}

/// Inclusive internal doc-id window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RangeWindow {
    pub lo: DocId,
    pub hi: DocId,
}

impl RangeWindow {
    pub fn new(lo: DocId, hi: DocId) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi }
    }

    pub fn contains(&self, d: DocId) -> bool {
        self.lo <= d && d <= self.hi
    }
}

impl ClusterMap {
    pub fn new(ends: Vec<DocId>) -> Result<Self> {
        if ends.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Format("cluster map must be strictly increasing".into()));
        }
        Ok(Self { ends })
    }

    /// A single range covering `num_docs` documents.
    pub fn single(num_docs: usize) -> Self {
        if num_docs == 0 {
            Self { ends: vec![] }
        } else {
            Self {
                ends: vec![num_docs as DocId - 1],
            }
        }
    }

    pub fn num_ranges(&self) -> usize {
        self.ends.len()
    }

    pub fn ends(&self) -> &[DocId] {
        &self.ends
    }

    pub fn num_docs(&self) -> usize {
        self.ends.last().map_or(0, |&e| e as usize + 1)
    }

    pub fn window(&self, range: usize) -> RangeWindow {
        let lo = if range == 0 { 0 } else { self.ends[range - 1] + 1 };
        RangeWindow::new(lo, self.ends[range])
    }

    pub fn windows(&self) -> impl Iterator<Item = RangeWindow> + '_ {
        (0..self.ends.len()).map(|i| self.window(i))
    }

    pub fn range_of(&self, doc: DocId) -> usize {
        self.ends.partition_point(|&e| e < doc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum OrderingMode {
    #[default]
    None,
    KeyOrder,
    UrlOrder,
}

impl FromStr for OrderingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "key-order" | "key" => Ok(Self::KeyOrder),
            "url-order" | "url" => Ok(Self::UrlOrder),
            other => Err(Error::UnknownOrdering(other.to_owned())),
        }
    }
}

impl fmt::Display for OrderingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::KeyOrder => "key-order",
            Self::UrlOrder => "url-order",
        })
    }
}

/// Spherical k-means over l2-normalized tf-idf vectors, seeded with k-means++.
pub fn cluster_documents(fwd: &ForwardIndex, r: usize, seed: u64) -> Result<ClusterAssignment> {
    let n = fwd.num_docs();
    if r == 0 || r > n {
        return Err(Error::ClusterCount {
            requested: r,
            docs: n,
        });
    }
    if r == 1 {
        return Ok(ClusterAssignment::from_labels(&vec![0; n]));
    }
    let vectors = tfidf_vectors(fwd);
    let mut km = KMeans::new(fwd.vocab().len(), r);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    km.seed_plus_plus(&vectors, &mut rng);

    let mut labels = vec![u32::MAX; n];
    for iter in 0..KMEANS_MAX_ITERS {
        let mut changed = 0usize;
        for (doc, v) in vectors.iter().enumerate() {
            let c = km.nearest(v);
            if labels[doc] != c {
                labels[doc] = c;
                changed += 1;
            }
        }
        log::debug!("k-means iteration {iter}: {changed} reassignments");
        if changed == 0 {
            break;
        }
        km.recompute(&vectors, &labels);
    }
    let out = ClusterAssignment::from_labels(&labels);
    if out.num_clusters() < r {
        log::info!(
            "dropped {} empty clusters ({} requested, {} kept)",
            r - out.num_clusters(),
            r,
            out.num_clusters()
        );
    }
    Ok(out)
}

type SparseVec = Vec<(u32, f64)>;

fn tfidf_vectors(fwd: &ForwardIndex) -> Vec<SparseVec> {
    let n = fwd.num_docs() as f64;
    let mut df = vec![0u32; fwd.vocab().len()];
    let mut counted: Vec<SparseVec> = Vec::with_capacity(fwd.num_docs());
    for doc in fwd.docs() {
        let mut toks = doc.tokens.clone();
        toks.sort_unstable();
        let mut v: SparseVec = Vec::new();
        for t in toks {
            match v.last_mut() {
                Some((last, c)) if *last == t => *c += 1.0,
                _ => v.push((t, 1.0)),
            }
        }
        for &(t, _) in &v {
            df[t as usize] += 1;
        }
        counted.push(v);
    }
    for v in &mut counted {
        for (t, w) in v.iter_mut() {
            *w = (1.0 + w.ln()) * (n / df[*t as usize] as f64).ln();
        }
        v.retain(|&(_, w)| w > 0.0);
        let norm = v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|(_, w)| *w /= norm);
        }
    }
    counted
}

/// Dense centroids stored term-major so the per-term inner loop over clusters
/// is contiguous.
struct KMeans {
    r: usize,
    centroids: Vec<f64>,
    scratch: Vec<f64>,
}

impl KMeans {
    fn new(vocab: usize, r: usize) -> Self {
        Self {
            r,
            centroids: vec![0.0; vocab * r],
            scratch: vec![0.0; r],
        }
    }

    fn set_centroid(&mut self, c: usize, v: &SparseVec) {
        for &(t, w) in v {
            self.centroids[t as usize * self.r + c] = w;
        }
    }

    fn dot(&self, c: usize, v: &SparseVec) -> f64 {
        v.iter()
            .map(|&(t, w)| w * self.centroids[t as usize * self.r + c])
            .sum()
    }

    fn seed_plus_plus(&mut self, vectors: &[SparseVec], rng: &mut ChaCha8Rng) {
        let n = vectors.len();
        let first = rng.random_range(0..n);
        self.set_centroid(0, &vectors[first]);
        let mut best_sim: Vec<f64> = vectors.iter().map(|v| self.dot(0, v)).collect();
        let mut chosen = vec![false; n];
        chosen[first] = true;
        for c in 1..self.r {
            let weights: Vec<f64> = best_sim
                .iter()
                .zip(&chosen)
                .map(|(&s, &ch)| if ch { 0.0 } else { (1.0 - s).max(0.0).powi(2) })
                .collect();
            let total: f64 = weights.iter().sum();
            let pick = if total > 0.0 {
                let mut x = rng.random::<f64>() * total;
                let mut pick = n - 1;
                for (i, &w) in weights.iter().enumerate() {
                    if w > 0.0 && x < w {
                        pick = i;
                        break;
                    }
                    x -= w;
                }
                while chosen[pick] {
                    pick = (pick + n - 1) % n;
                }
                pick
            } else {
                let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
                free[rng.random_range(0..free.len())]
            };
            chosen[pick] = true;
            self.set_centroid(c, &vectors[pick]);
            for (s, v) in best_sim.iter_mut().zip(vectors) {
                *s = s.max(self.dot(c, v));
            }
        }
    }

    fn nearest(&mut self, v: &SparseVec) -> u32 {
        let r = self.r;
        self.scratch.iter_mut().for_each(|s| *s = 0.0);
        for &(t, w) in v {
            let row = &self.centroids[t as usize * r..(t as usize + 1) * r];
            for (s, c) in self.scratch.iter_mut().zip(row) {
                *s += w * c;
            }
        }
        let mut best = 0;
        for c in 1..r {
            if self.scratch[c] > self.scratch[best] {
                best = c;
            }
        }
        best as u32
    }

    fn recompute(&mut self, vectors: &[SparseVec], labels: &[u32]) {
        let r = self.r;
        self.centroids.iter_mut().for_each(|x| *x = 0.0);
        for (v, &c) in vectors.iter().zip(labels) {
            for &(t, w) in v {
                self.centroids[t as usize * r + c as usize] += w;
            }
        }
        let mut norms = vec![0.0f64; r];
        for row in self.centroids.chunks_exact(r) {
            for (n, x) in norms.iter_mut().zip(row) {
                *n += x * x;
            }
        }
        norms.iter_mut().for_each(|n| *n = n.sqrt());
        for row in self.centroids.chunks_exact_mut(r) {
            for (x, &n) in row.iter_mut().zip(&norms) {
                if n > 0.0 {
                    *x /= n;
                }
            }
        }
    }
}

/// Orders the members of each cluster. Returned lists hold ingest doc ids.
pub fn order_within_cluster(
    fwd: &ForwardIndex,
    assignment: &ClusterAssignment,
    mode: OrderingMode,
) -> Vec<Vec<u32>> {
    let mut members = assignment.members();
    match mode {
        OrderingMode::None => {}
        OrderingMode::KeyOrder => {
            for m in &mut members {
                m.sort_by(|&a, &b| fwd.doc(a as usize).key.cmp(&fwd.doc(b as usize).key));
            }
        }
        OrderingMode::UrlOrder => {
            // Documents without a url follow those with one, in key order.
            for m in &mut members {
                m.sort_by(|&a, &b| {
                    let (da, db) = (fwd.doc(a as usize), fwd.doc(b as usize));
                    (da.url.is_none(), &da.url, &da.key).cmp(&(db.url.is_none(), &db.url, &db.key))
                });
            }
        }
    }
    members
}

/// Ingest-id to internal-id mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Remap {
    new_of_old: Vec<DocId>,
}

impl Remap {
    pub fn identity(n: usize) -> Self {
        Self {
            new_of_old: (0..n as DocId).collect(),
        }
    }

    pub fn from_vec(new_of_old: Vec<DocId>) -> Result<Self> {
        let mut seen = vec![false; new_of_old.len()];
        for &d in &new_of_old {
            match seen.get_mut(d as usize) {
                Some(s) if !*s => *s = true,
                _ => return Err(Error::Assignment("remap is not a bijection".into())),
            }
        }
        Ok(Self { new_of_old })
    }

    pub fn len(&self) -> usize {
        self.new_of_old.len()
    }

    pub fn is_empty(&self) -> bool {
        self.new_of_old.is_empty()
    }

    pub fn new_id(&self, old: usize) -> DocId {
        self.new_of_old[old]
    }

    pub fn as_slice(&self) -> &[DocId] {
        &self.new_of_old
    }

    pub fn inverse(&self) -> Vec<u32> {
        let mut inv = vec![0u32; self.new_of_old.len()];
        for (old, &new) in self.new_of_old.iter().enumerate() {
            inv[new as usize] = old as u32;
        }
        inv
    }
}

/// Lays the clusters out back to back in cluster-id order.
pub fn concatenate(assignment: &ClusterAssignment, orders: &[Vec<u32>]) -> Result<(Remap, ClusterMap)> {
    let n = assignment.num_docs();
    if orders.len() != assignment.num_clusters() {
        return Err(Error::Assignment(format!(
            "{} orders for {} clusters",
            orders.len(),
            assignment.num_clusters()
        )));
    }
    let mut new_of_old = vec![DocId::MAX; n];
    let mut ends = Vec::with_capacity(orders.len());
    let mut next: DocId = 0;
    for (c, order) in orders.iter().enumerate() {
        if order.is_empty() {
            return Err(Error::Assignment(format!("cluster {c} is empty")));
        }
        for &old in order {
            let slot = new_of_old
                .get_mut(old as usize)
                .ok_or_else(|| Error::Assignment(format!("doc {old} out of range")))?;
            if *slot != DocId::MAX || assignment.cluster_of(old as usize) != c as u32 {
                return Err(Error::Assignment(format!(
                    "order for cluster {c} is not a permutation of its members"
                )));
            }
            *slot = next;
            next += 1;
        }
        ends.push(next - 1);
    }
    if next as usize != n {
        return Err(Error::Assignment("orders do not cover every document".into()));
    }
    Ok((Remap { new_of_old }, ClusterMap { ends }))
}

/// Reads a `doc-key<TAB>cluster-id` file. Every document must be listed once.
pub fn read_assignment_tsv<R: BufRead>(input: R, fwd: &ForwardIndex) -> Result<ClusterAssignment> {
    let index: HashMap<&str, usize> = fwd
        .docs()
        .iter()
        .enumerate()
        .map(|(i, d)| (d.key.as_str(), i))
        .collect();
    let mut labels = vec![None; fwd.num_docs()];
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let (key, label) = match (parts.next(), parts.next(), parts.next()) {
            (Some(k), Some(l), None) => (k, l.trim()),
            _ => {
                return Err(Error::Assignment(format!(
                    "line {}: expected key<TAB>cluster",
                    i + 1
                )))
            }
        };
        let label: u32 = label
            .parse()
            .map_err(|_| Error::Assignment(format!("line {}: bad cluster id {label:?}", i + 1)))?;
        let &doc = index
            .get(key)
            .ok_or_else(|| Error::Assignment(format!("line {}: unknown key {key:?}", i + 1)))?;
        if labels[doc].replace(label).is_some() {
            return Err(Error::Assignment(format!("key {key:?} assigned twice")));
        }
    }
    let labels = labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| Error::Assignment(format!("key {:?} unassigned", fwd.doc(i).key))))
        .collect::<Result<Vec<u32>>>()?;
    Ok(ClusterAssignment::from_labels(&labels))
}
