use std::path::Path;

use super::raster::BinaryImage;
use crate::error::{Error, Result};

/// Binary PGM (P5), maxval 255, foreground 255.
pub fn encode_pgm(img: &BinaryImage) -> Vec<u8> {
    let s = img.side();
    let mut out = format!("P5\n{s} {s}\n255\n").into_bytes();
    out.extend(img.bits().iter().map(|&b| if b == 1 { 255 } else { 0 }));
    out
}

fn header_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a str> {
    while *pos < bytes.len() && (bytes[*pos].is_ascii_whitespace() || bytes[*pos] == b'#') {
        if bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            *pos += 1;
        }
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    std::str::from_utf8(&bytes[start..*pos]).map_err(|_| Error::Input("PGM header is not ASCII".into()))
}

/// Decodes a square P5 image with values in {0, 255}.
pub fn decode_pgm(bytes: &[u8]) -> Result<BinaryImage> {
    let mut pos = 0;
    if header_token(bytes, &mut pos)? != "P5" {
        return Err(Error::Input("not a binary PGM (P5) file".into()));
    }
    let mut num = |what: &str| -> Result<usize> {
        header_token(bytes, &mut pos)?
            .parse()
            .map_err(|_| Error::Input(format!("bad PGM {what}")))
    };
    let (w, h, max) = (num("width")?, num("height")?, num("maxval")?);
    if w != h || max != 255 {
        return Err(Error::Input(format!("expected a square 8-bit PGM, got {w}x{h} maxval {max}")));
    }
    let data = bytes
        .get(pos + 1..)
        .filter(|d| d.len() == w * h)
        .ok_or_else(|| Error::Input("PGM pixel payload has the wrong size".into()))?;
    let bits = data
        .iter()
        .map(|&v| match v {
            0 => Ok(0),
            255 => Ok(1),
            other => Err(Error::Input(format!("PGM value {other} is not 0 or 255"))),
        })
        .collect::<Result<Vec<u8>>>()?;
    BinaryImage::from_bits(w, bits)
}

pub fn write_pgm(path: &Path, img: &BinaryImage) -> Result<()> {
    std::fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

pub fn read_pgm(path: &Path) -> Result<BinaryImage> {
    decode_pgm(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_values() {
        let img = BinaryImage::from_bits(2, vec![0, 1, 1, 0]).unwrap();
        let bytes = encode_pgm(&img);
        assert!(bytes.starts_with(b"P5\n2 2\n255\n"));
        assert_eq!(&bytes[bytes.len() - 4..], &[0, 255, 255, 0]);
        assert_eq!(decode_pgm(&bytes).unwrap(), img);
    }

    #[test]
    fn rejects_grey_values() {
        let mut bytes = encode_pgm(&BinaryImage::blank(2));
        let n = bytes.len();
        bytes[n - 1] = 7;
        assert!(decode_pgm(&bytes).is_err());
    }
}
