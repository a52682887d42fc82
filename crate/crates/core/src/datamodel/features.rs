//! Binary sidecar holding detector candidates for one or more frames.
//!
//! Each frame is one block: a little-endian header
//! `{magic "RFNF", version u32, q u32, d_O u32}` followed by `q` records of
//! `4×f32` box, `f32` confidence and `d_O×f32` feature. A sidecar file is a
//! concatenation of blocks; frames point at their block by byte offset.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::geometry::BoundingBox;

pub const MAGIC: &[u8; 4] = b"RFNF";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

/// A detector proposal: box, detector confidence and pooled feature vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectCandidate {
    pub bbox: BoundingBox,
    pub confidence: f32,
    pub feature: Vec<f32>,
}

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported sidecar version {0}")]
    Version(u32),
    #[error("truncated block at offset {offset}: need {need} bytes, have {have}")]
    Truncated {
        offset: usize,
        need: usize,
        have: usize,
    },
    #[error("candidate {index} has feature length {got}, expected {expected}")]
    RaggedFeatures {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("candidate {index} has an invalid box: {message}")]
    BadBox { index: usize, message: String },
}

/// Size in bytes of a block with `q` candidates of width `d`.
pub fn block_len(q: usize, d: usize) -> usize {
    HEADER_LEN + q * (5 + d) * 4
}

pub fn encode_block(cands: &[ObjectCandidate]) -> Result<Vec<u8>, FeatureError> {
    let d = cands.first().map_or(0, |c| c.feature.len());
    let mut out = Vec::with_capacity(block_len(cands.len(), d));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(cands.len() as u32).to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    for (index, c) in cands.iter().enumerate() {
        if c.feature.len() != d {
            return Err(FeatureError::RaggedFeatures {
                index,
                got: c.feature.len(),
                expected: d,
            });
        }
        for v in c.bbox.coords() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
        out.extend_from_slice(&c.confidence.to_le_bytes());
        for v in &c.feature {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

fn read_f32(bytes: &[u8], at: usize) -> f32 {
    f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

/// Decodes the block starting at `offset`; returns the candidates and the
/// block length in bytes.
pub fn decode_block(
    bytes: &[u8],
    offset: usize,
) -> Result<(Vec<ObjectCandidate>, usize), FeatureError> {
    let have = bytes.len().saturating_sub(offset);
    if have < HEADER_LEN {
        return Err(FeatureError::Truncated {
            offset,
            need: HEADER_LEN,
            have,
        });
    }
    let b = &bytes[offset..];
    let magic: [u8; 4] = b[0..4].try_into().unwrap();
    if &magic != MAGIC {
        return Err(FeatureError::BadMagic(magic));
    }
    let version = read_u32(b, 4);
    if version != VERSION {
        return Err(FeatureError::Version(version));
    }
    let q = read_u32(b, 8) as usize;
    let d = read_u32(b, 12) as usize;
    let need = block_len(q, d);
    if have < need {
        return Err(FeatureError::Truncated { offset, need, have });
    }
    let mut cands = Vec::with_capacity(q);
    let mut at = HEADER_LEN;
    for index in 0..q {
        let c: Vec<f64> = (0..4).map(|k| read_f32(b, at + 4 * k) as f64).collect();
        let bbox = BoundingBox::new(c[0], c[1], c[2], c[3]).map_err(|e| FeatureError::BadBox {
            index,
            message: e.to_string(),
        })?;
        let confidence = read_f32(b, at + 16);
        at += 20;
        let feature = (0..d).map(|k| read_f32(b, at + 4 * k)).collect();
        at += 4 * d;
        cands.push(ObjectCandidate {
            bbox,
            confidence,
            feature,
        });
    }
    Ok((cands, need))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(x: f64, f: &[f32]) -> ObjectCandidate {
        ObjectCandidate {
            bbox: BoundingBox::new(x, 1.0, x + 10.0, 21.0).unwrap(),
            confidence: 0.75,
            feature: f.to_vec(),
        }
    }

    #[test]
    fn header_layout() {
        let bytes = encode_block(&[cand(0.0, &[1.0, 2.0, 3.0])]).unwrap();
        assert_eq!(&bytes[0..4], b"RFNF");
        assert_eq!(read_u32(&bytes, 4), 1);
        assert_eq!(read_u32(&bytes, 8), 1);
        assert_eq!(read_u32(&bytes, 12), 3);
        assert_eq!(bytes.len(), block_len(1, 3));
        assert_eq!(read_f32(&bytes, 16), 0.0);
        assert_eq!(read_f32(&bytes, 32), 0.75);
    }

    #[test]
    fn concatenated_blocks_decode_by_offset() {
        let a = vec![cand(0.0, &[1.0, 2.0]), cand(5.0, &[-1.0, 0.5])];
        let b = vec![cand(7.0, &[0.25])];
        let mut file = encode_block(&a).unwrap();
        let off = file.len();
        file.extend(encode_block(&b).unwrap());
        assert_eq!(decode_block(&file, 0).unwrap().0, a);
        assert_eq!(decode_block(&file, off).unwrap().0, b);
    }

    #[test]
    fn ragged_and_truncated_rejected() {
        assert!(matches!(
            encode_block(&[cand(0.0, &[1.0]), cand(1.0, &[1.0, 2.0])]),
            Err(FeatureError::RaggedFeatures { index: 1, .. })
        ));
        let bytes = encode_block(&[cand(0.0, &[1.0])]).unwrap();
        assert!(matches!(
            decode_block(&bytes[..bytes.len() - 1], 0),
            Err(FeatureError::Truncated { .. })
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_block(&bad, 0), Err(FeatureError::BadMagic(_))));
    }
}
