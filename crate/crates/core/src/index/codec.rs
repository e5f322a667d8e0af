//! Block codec: LEB128 varints, doc ids as gaps.
//!
//! Layout of one block: `count`, the first doc id, `count - 1` gaps (each at
//! least 1), then `count` term frequencies (each at least 1). The first doc id
//! is stored absolute so every block decodes on its own, which is what lets a
//! cursor jump straight to any block.

use crate::error::{Error, Result};
use crate::DocId;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PostingsBlock {
    pub docids: Vec<DocId>,
    pub tfs: Vec<u32>,
}

impl PostingsBlock {
    pub fn len(&self) -> usize {
        self.docids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docids.is_empty()
    }

    pub fn last_docid(&self) -> Option<DocId> {
        self.docids.last().copied()
    }
}

#[inline]
pub fn write_varint(out: &mut Vec<u8>, mut v: u32) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

#[inline]
fn read_varint(bytes: &[u8], pos: &mut usize) -> Result<u32> {
    let start = *pos;
    let mut v: u32 = 0;
    let mut shift = 0;
    loop {
        let &b = bytes.get(*pos).ok_or(Error::CorruptBlock {
            offset: *pos,
            reason: "truncated varint",
        })?;
        *pos += 1;
        if shift == 28 && b > 0x0f {
            return Err(Error::CorruptBlock {
                offset: start,
                reason: "varint overflows u32",
            });
        }
        v |= ((b & 0x7f) as u32) << shift;
        if b & 0x80 == 0 {
            return Ok(v);
        }
        shift += 7;
    }
}

/// Appends the encoding of `block` to `out`.
///
/// Panics on an empty block, unequal column lengths, non-increasing doc ids or
/// a zero frequency; those are builder bugs, not data errors.
pub fn encode_block(block: &PostingsBlock, out: &mut Vec<u8>) {
    assert!(!block.is_empty(), "empty block");
    assert_eq!(block.docids.len(), block.tfs.len());
    write_varint(out, block.docids.len() as u32);
    let mut prev = None;
    for &d in &block.docids {
        match prev {
            None => write_varint(out, d),
            Some(p) => {
                assert!(d > p, "doc ids must be strictly increasing");
                write_varint(out, d - p);
            }
        }
        prev = Some(d);
    }
    for &tf in &block.tfs {
        assert!(tf >= 1, "zero term frequency");
        write_varint(out, tf);
    }
}

/// The first doc id of an encoded block, read from its header alone.
pub fn peek_first(bytes: &[u8]) -> Result<DocId> {
    let mut pos = 0;
    if read_varint(bytes, &mut pos)? == 0 {
        return Err(Error::CorruptBlock {
            offset: 0,
            reason: "empty block",
        });
    }
    read_varint(bytes, &mut pos)
}

/// Decodes one block from the front of `bytes`, returning it and the number
/// of bytes consumed.
pub fn decode_block(bytes: &[u8]) -> Result<(PostingsBlock, usize)> {
    let mut block = PostingsBlock::default();
    let used = decode_into(bytes, &mut block.docids, &mut block.tfs)?;
    Ok((block, used))
}

/// Decodes into caller-owned buffers (cleared first).
pub fn decode_into(bytes: &[u8], docids: &mut Vec<DocId>, tfs: &mut Vec<u32>) -> Result<usize> {
    docids.clear();
    tfs.clear();
    let mut pos = 0;
    let count = read_varint(bytes, &mut pos)? as usize;
    if count == 0 {
        return Err(Error::CorruptBlock {
            offset: 0,
            reason: "empty block",
        });
    }
    // Every posting needs at least two bytes; reject absurd counts before
    // reserving.
    if count > bytes.len() {
        return Err(Error::CorruptBlock {
            offset: 0,
            reason: "count exceeds block length",
        });
    }
    docids.reserve(count);
    tfs.reserve(count);
    let mut cur = read_varint(bytes, &mut pos)?;
    docids.push(cur);
    for _ in 1..count {
        let at = pos;
        let gap = read_varint(bytes, &mut pos)?;
        if gap == 0 {
            return Err(Error::CorruptBlock {
                offset: at,
                reason: "zero doc id gap",
            });
        }
        cur = cur.checked_add(gap).ok_or(Error::CorruptBlock {
            offset: at,
            reason: "doc id overflow",
        })?;
        docids.push(cur);
    }
    for _ in 0..count {
        let at = pos;
        let tf = read_varint(bytes, &mut pos)?;
        if tf == 0 {
            return Err(Error::CorruptBlock {
                offset: at,
                reason: "zero term frequency",
            });
        }
        tfs.push(tf);
    }
    Ok(pos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn roundtrip(b: &PostingsBlock) -> Vec<u8> {
        let mut out = Vec::new();
        encode_block(b, &mut out);
        let (back, used) = decode_block(&out).unwrap();
        assert_eq!(&back, b);
        assert_eq!(used, out.len());
        out
    }

    #[test]
    fn single_posting() {
        let b = PostingsBlock {
            docids: vec![7],
            tfs: vec![1],
        };
        assert_eq!(roundtrip(&b), vec![1, 7, 1]);
        assert_eq!(peek_first(&[1, 7, 1]).unwrap(), 7);
        assert_eq!(b.last_docid(), Some(7));
    }

    #[test]
    fn consecutive_ids_are_one_byte_gaps() {
        let b = PostingsBlock {
            docids: (1000..1128).collect(),
            tfs: vec![1; 128],
        };
        let bytes = roundtrip(&b);
        // count (2 bytes) + first id (2 bytes) + 127 unit gaps + 128 tfs
        assert_eq!(bytes.len(), 2 + 2 + 127 + 128);
        assert!(bytes[4..131].iter().all(|&g| g == 1));
    }

    #[test]
    fn large_values() {
        roundtrip(&PostingsBlock {
            docids: vec![0, 1, u32::MAX - 1, u32::MAX],
            tfs: vec![u32::MAX, 1, 300, 2],
        });
    }

    #[test]
    fn corrupt_inputs() {
        assert!(matches!(
            decode_block(&[]),
            Err(Error::CorruptBlock { offset: 0, .. })
        ));
        assert!(matches!(
            decode_block(&[0]),
            Err(Error::CorruptBlock {
                reason: "empty block",
                ..
            })
        ));
        // count 2, first id 5, zero gap
        assert!(matches!(
            decode_block(&[2, 5, 0, 1, 1]),
            Err(Error::CorruptBlock {
                offset: 2,
                reason: "zero doc id gap"
            })
        ));
        // truncated tf column
        assert!(matches!(
            decode_block(&[2, 5, 1, 1]),
            Err(Error::CorruptBlock {
                offset: 4,
                reason: "truncated varint"
            })
        ));
        assert!(matches!(
            decode_block(&[1, 0xff, 0xff, 0xff, 0xff, 0x7f, 1]),
            Err(Error::CorruptBlock {
                reason: "varint overflows u32",
                ..
            })
        ));
        assert!(matches!(
            decode_block(&[1, 3, 0]),
            Err(Error::CorruptBlock {
                reason: "zero term frequency",
                ..
            })
        ));
    }

    fn arb_block() -> impl Strategy<Value = PostingsBlock> {
        prop::collection::btree_set(any::<u32>(), 1..=128).prop_flat_map(|ids| {
            let n = ids.len();
            (
                Just(ids.into_iter().collect::<Vec<_>>()),
                prop::collection::vec(1u32..=u32::MAX, n),
            )
                .prop_map(|(docids, tfs)| PostingsBlock { docids, tfs })
        })
    }

    proptest! {
        #[test]
        fn roundtrip_random_blocks(b in arb_block()) {
            let mut out = Vec::new();
            encode_block(&b, &mut out);
            let (back, used) = decode_block(&out).unwrap();
            prop_assert_eq!(back, b);
            prop_assert_eq!(used, out.len());
        }

        #[test]
        fn decode_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..64)) {
            let _ = decode_block(&bytes);
        }
    }
}
