//! Binary cache of extracted cue streams.
//!
//! Layout (little-endian): magic `CUES`, `u32` version, `u32` frame count T,
//! `u32` image side S, then for the left and then the right hand: `T·S·S`
//! image bytes in {0, 1}, `T·2` displacement `f32`s, `T·3` location bytes.

use std::path::Path;

use super::features::{CueSequences, HandCues};
use super::raster::BinaryImage;
use crate::error::{Error, Result};
use crate::nncore::Tensor;

const MAGIC: &[u8; 4] = b"CUES";
const VERSION: u32 = 1;

pub fn encode_cues(cues: &CueSequences) -> Vec<u8> {
    let t = cues.len();
    let s = cues.side;
    let mut out = Vec::with_capacity(16 + 2 * t * (s * s + 11));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(t as u32).to_le_bytes());
    out.extend_from_slice(&(s as u32).to_le_bytes());
    for hand in [&cues.left, &cues.right] {
        for img in &hand.images {
            out.extend_from_slice(img.bits());
        }
        for v in hand.displacement.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend(hand.location.data().iter().map(|&v| v as u8));
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let out = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Input("cue file is truncated".into()))?;
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

pub fn decode_cues(bytes: &[u8]) -> Result<CueSequences> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Input("not a cue file".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Input(format!("cue file version {version} is not supported")));
    }
    let t = r.u32()? as usize;
    let s = r.u32()? as usize;
    let mut hands = Vec::with_capacity(2);
    for _ in 0..2 {
        let images = (0..t)
            .map(|_| BinaryImage::from_bits(s, r.take(s * s)?.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        let disp = r
            .take(t * 8)?
            .chunks(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        let loc = r.take(t * 3)?.iter().map(|&b| b as f32).collect();
        hands.push(HandCues {
            images,
            displacement: Tensor::from_vec(&[t, 2], disp)?,
            location: Tensor::from_vec(&[t, 3], loc)?,
        });
    }
    if r.pos != bytes.len() {
        return Err(Error::Input("trailing bytes after cue payload".into()));
    }
    let right = hands.pop().expect("two hands");
    let left = hands.pop().expect("two hands");
    Ok(CueSequences { side: s, left, right })
}

pub fn write_cues(path: &Path, cues: &CueSequences) -> Result<()> {
    std::fs::write(path, encode_cues(cues)).map_err(|e| Error::io(path, e))
}

pub fn read_cues(path: &Path) -> Result<CueSequences> {
    decode_cues(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}
