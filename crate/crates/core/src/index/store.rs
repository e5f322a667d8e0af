//! On-disk index directory.
//!
//! ```text
//! manifest.bin    "ANYT", format version, N, avgdl, block size, BM25
//!                 parameters, range count, build parameters
//! lexicon.bin     per term: string, df, postings offset and length,
//!                 block count
//! postings.bin    encoded blocks of every list, back to back
//! bounds.bin      per term: U_t, skip table (last doc id, offset, block
//!                 max), sparse range bounds
//! docmap.bin      per internal doc id: external key, length
//! clustermap.bin  range count, last doc id of each range
//! stopwords.txt   present only when the build used a stoplist
//! ```
//!
//! Integers are little-endian; floats are stored as their IEEE-754 bits so
//! bounds survive a round trip exactly.

use std::fs;
use std::path::Path;

use super::{BlockMeta, Index, PostingList, TermMeta};
use crate::arrangement::{ClusterMap, OrderingMode};
use crate::corpus::{TermId, Tokenizer, TokenizerConfig};
use crate::error::{Error, Result};
use crate::scoring::ScoreParams;

pub const MAGIC: &[u8; 4] = b"ANYT";
pub const FORMAT_VERSION: u32 = 1;

const MANIFEST: &str = "manifest.bin";
const LEXICON: &str = "lexicon.bin";
const POSTINGS: &str = "postings.bin";
const BOUNDS: &str = "bounds.bin";
const DOCMAP: &str = "docmap.bin";
const CLUSTERMAP: &str = "clustermap.bin";
const STOPWORDS: &str = "stopwords.txt";

/// Build parameters recorded in the manifest for reproducibility.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildInfo {
    pub requested_clusters: u32,
    pub ordering: OrderingMode,
    pub seed: u64,
}

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.0.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    name: &'static str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(name: &'static str, bytes: &'a [u8]) -> Self {
        Self { name, bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end =
            end.ok_or_else(|| Error::Format(format!("{}: truncated at byte {}", self.name, self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        let name = self.name;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Format(format!("{name}: invalid utf-8")))
    }
    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Format(format!("{}: trailing bytes", self.name)));
        }
        Ok(())
    }
}

fn ordering_code(m: OrderingMode) -> u8 {
    match m {
        OrderingMode::None => 0,
        OrderingMode::KeyOrder => 1,
        OrderingMode::UrlOrder => 2,
    }
}

fn ordering_from(code: u8) -> Result<OrderingMode> {
    Ok(match code {
        0 => OrderingMode::None,
        1 => OrderingMode::KeyOrder,
        2 => OrderingMode::UrlOrder,
        c => return Err(Error::Format(format!("unknown ordering code {c}"))),
    })
}

fn read(dir: &Path, name: &str) -> Result<Vec<u8>> {
    let path = dir.join(name);
    fs::read(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingComponent(path),
        _ => Error::Io(e),
    })
}

impl Index {
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;

        let mut m = Writer::default();
        m.0.extend_from_slice(MAGIC);
        m.u32(FORMAT_VERSION);
        m.u32(self.num_docs() as u32);
        m.f64(self.avgdl);
        m.u32(self.block_size);
        m.f64(self.params.k1);
        m.f64(self.params.b);
        m.u32(self.cluster_map.num_ranges() as u32);
        m.u32(self.info.requested_clusters);
        m.u8(ordering_code(self.info.ordering));
        m.u64(self.info.seed);
        m.u8(self.tokenizer.config().stem as u8);
        m.u32(self.terms.len() as u32);

        let mut lex = Writer::default();
        let mut post = Writer::default();
        let mut bounds = Writer::default();
        lex.u32(self.terms.len() as u32);
        for ((term, list), meta) in self.terms.iter().zip(&self.lists).zip(&self.metas) {
            lex.str(term);
            lex.u32(meta.df);
            lex.u64(post.0.len() as u64);
            lex.u64(list.data.len() as u64);
            lex.u32(list.blocks.len() as u32);
            post.0.extend_from_slice(&list.data);

            bounds.f64(meta.max_score);
            for b in &list.blocks {
                bounds.u32(b.last_docid);
                bounds.u32(b.offset);
                bounds.f64(b.max_score);
            }
            bounds.u32(meta.range_bounds.len() as u32);
            for &(r, u) in &meta.range_bounds {
                bounds.u32(r);
                bounds.f64(u);
            }
        }

        let mut docs = Writer::default();
        docs.u32(self.num_docs() as u32);
        for (key, &len) in self.doc_keys.iter().zip(&self.doc_len) {
            docs.str(key);
            docs.u32(len);
        }

        let mut cmap = Writer::default();
        cmap.u32(self.cluster_map.num_ranges() as u32);
        for &e in self.cluster_map.ends() {
            cmap.u32(e);
        }

        fs::write(dir.join(MANIFEST), m.0)?;
        fs::write(dir.join(LEXICON), lex.0)?;
        fs::write(dir.join(POSTINGS), post.0)?;
        fs::write(dir.join(BOUNDS), bounds.0)?;
        fs::write(dir.join(DOCMAP), docs.0)?;
        fs::write(dir.join(CLUSTERMAP), cmap.0)?;
        let stop = dir.join(STOPWORDS);
        let words = &self.tokenizer.config().stopwords;
        if words.is_empty() {
            if stop.exists() {
                fs::remove_file(stop)?;
            }
        } else {
            fs::write(stop, words.join("\n") + "\n")?;
        }
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let manifest = read(dir, MANIFEST)?;
        let mut m = Reader::new(MANIFEST, &manifest);
        if m.take(4)? != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = m.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported format version {version}")));
        }
        let n = m.u32()? as usize;
        let avgdl = m.f64()?;
        let block_size = m.u32()?;
        let params = ScoreParams::new(m.f64()?, m.f64()?)?;
        let num_ranges = m.u32()? as usize;
        let info = BuildInfo {
            requested_clusters: m.u32()?,
            ordering: ordering_from(m.u8()?)?,
            seed: m.u64()?,
        };
        let stem = m.u8()? != 0;
        let num_terms = m.u32()? as usize;
        m.finish()?;

        let lexicon = read(dir, LEXICON)?;
        let postings = read(dir, POSTINGS)?;
        let bounds = read(dir, BOUNDS)?;
        let mut lex = Reader::new(LEXICON, &lexicon);
        let mut bnd = Reader::new(BOUNDS, &bounds);
        if lex.u32()? as usize != num_terms {
            return Err(Error::Format("lexicon size disagrees with manifest".into()));
        }
        let mut terms = Vec::with_capacity(num_terms);
        let mut metas = Vec::with_capacity(num_terms);
        let mut lists = Vec::with_capacity(num_terms);
        for _ in 0..num_terms {
            let term = lex.str()?;
            let df = lex.u32()?;
            let off = lex.u64()? as usize;
            let len = lex.u64()? as usize;
            let nblocks = lex.u32()? as usize;
            let data = postings
                .get(off..off.saturating_add(len))
                .ok_or_else(|| Error::Format(format!("postings of {term:?} out of bounds")))?
                .to_vec();
            let max_score = bnd.f64()?;
            let mut blocks = Vec::with_capacity(nblocks);
            for _ in 0..nblocks {
                blocks.push(BlockMeta {
                    last_docid: bnd.u32()?,
                    offset: bnd.u32()?,
                    max_score: bnd.f64()?,
                });
            }
            let nr = bnd.u32()? as usize;
            let mut range_bounds = Vec::with_capacity(nr);
            for _ in 0..nr {
                range_bounds.push((bnd.u32()?, bnd.f64()?));
            }
            terms.push(term);
            metas.push(TermMeta {
                df,
                max_score,
                range_bounds,
            });
            lists.push(PostingList {
                data,
                blocks,
                len: df,
            });
        }
        lex.finish()?;
        bnd.finish()?;

        let docmap = read(dir, DOCMAP)?;
        let mut dm = Reader::new(DOCMAP, &docmap);
        if dm.u32()? as usize != n {
            return Err(Error::Format("doc map size disagrees with manifest".into()));
        }
        let mut doc_keys = Vec::with_capacity(n);
        let mut doc_len = Vec::with_capacity(n);
        for _ in 0..n {
            doc_keys.push(dm.str()?);
            doc_len.push(dm.u32()?);
        }
        dm.finish()?;

        let cmap = read(dir, CLUSTERMAP)?;
        let mut cm = Reader::new(CLUSTERMAP, &cmap);
        let r = cm.u32()? as usize;
        if r != num_ranges {
            return Err(Error::Format("cluster map size disagrees with manifest".into()));
        }
        let ends = (0..r).map(|_| cm.u32()).collect::<Result<Vec<_>>>()?;
        cm.finish()?;
        let cluster_map = ClusterMap::new(ends)?;
        if cluster_map.num_docs() != n {
            return Err(Error::Format("cluster map does not cover the collection".into()));
        }

        let stopwords = match fs::read_to_string(dir.join(STOPWORDS)) {
            Ok(s) => Tokenizer::parse_stoplist(&s),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e.into()),
        };

        let lexicon = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TermId))
            .collect();
        let doc_norm = doc_len.iter().map(|&l| params.length_norm(l, avgdl)).collect();
        Ok(Index {
            params,
            block_size,
            avgdl,
            terms,
            lexicon,
            metas,
            lists,
            doc_keys,
            doc_len,
            doc_norm,
            cluster_map,
            tokenizer: Tokenizer::new(TokenizerConfig { stem, stopwords }),
            info,
        })
    }
}
