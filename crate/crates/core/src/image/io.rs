//! Binary PGM (P5, 8-bit) and grayscale PFM (`Pf`) readers and writers.

use std::fs;
use std::path::Path;

use super::Image;
use crate::error::{Error, Result};

/// Encodes `img` as binary PGM. Samples are rounded and clamped to `0..=255`.
pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.data().iter().map(|&v| quantize(v)));
    out
}

#[inline]
pub fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Image with every sample replaced by its 8-bit quantized value.
pub fn quantized(img: &Image) -> Image {
    img.map(|v| quantize(v) as f64)
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn token(&mut self, kind: &'static str) -> Result<&'a str> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format(kind, "truncated header"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| Error::format(kind, "non-ASCII header"))
    }

    fn number(&mut self, kind: &'static str) -> Result<usize> {
        let tok = self.token(kind)?;
        tok.parse()
            .map_err(|_| Error::format(kind, format!("bad header field `{tok}`")))
    }

    /// Consumes the single whitespace byte that ends a header.
    fn end_of_header(&mut self, kind: &'static str) -> Result<usize> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => Ok(self.pos + 1),
            _ => Err(Error::format(kind, "missing whitespace after header")),
        }
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let mut cur = HeaderCursor { bytes, pos: 0 };
    if cur.token("PGM")? != "P5" {
        return Err(Error::format("PGM", "only binary P5 files are supported"));
    }
    let width = cur.number("PGM")?;
    let height = cur.number("PGM")?;
    let maxval = cur.number("PGM")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::format("PGM", format!("unsupported maxval {maxval}")));
    }
    let start = cur.end_of_header("PGM")?;
    let n = width * height;
    let raster = bytes
        .get(start..start + n)
        .ok_or_else(|| Error::format("PGM", "raster shorter than header dimensions"))?;
    let scale = 255.0 / maxval as f64;
    let data = raster.iter().map(|&b| b as f64 * scale).collect();
    Image::new(width, height, data).map_err(|e| Error::format("PGM", e.to_string()))
}

/// Encodes `img` as little-endian grayscale PFM (scale `-1.0`, bottom row first).
pub fn encode_pfm(img: &Image) -> Vec<u8> {
    let mut out = format!("Pf\n{} {}\n-1.0\n", img.width(), img.height()).into_bytes();
    for r in (0..img.height()).rev() {
        for &v in img.row(r) {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_pfm(bytes: &[u8]) -> Result<Image> {
    let mut cur = HeaderCursor { bytes, pos: 0 };
    match cur.token("PFM")? {
        "Pf" => {}
        "PF" => return Err(Error::format("PFM", "colour PFM is not supported")),
        other => return Err(Error::format("PFM", format!("bad magic `{other}`"))),
    }
    let width = cur.number("PFM")?;
    let height = cur.number("PFM")?;
    let scale_tok = cur.token("PFM")?;
    let scale: f64 = scale_tok
        .parse()
        .map_err(|_| Error::format("PFM", format!("bad scale `{scale_tok}`")))?;
    if scale == 0.0 {
        return Err(Error::format("PFM", "zero scale"));
    }
    let little = scale < 0.0;
    let start = cur.end_of_header("PFM")?;
    let n = width * height;
    let raster = bytes
        .get(start..start + 4 * n)
        .ok_or_else(|| Error::format("PFM", "raster shorter than header dimensions"))?;
    let mut data = vec![0.0; n];
    for (i, chunk) in raster.chunks_exact(4).enumerate() {
        let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little {
            f32::from_le_bytes(b)
        } else {
            f32::from_be_bytes(b)
        };
        let (r, c) = (height - 1 - i / width, i % width);
        data[r * width + c] = v as f64;
    }
    Image::new(width, height, data).map_err(|e| Error::format("PFM", e.to_string()))
}

pub fn save_pgm(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    decode_pgm(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub fn save_pfm(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pfm(img)).map_err(|e| Error::io(path, e))
}

pub fn load_pfm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    decode_pfm(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pgm_header_with_comments() {
        let mut bytes = b"P5\n# made by hand\n3 2\n# another\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 1, 2, 253, 254, 255]);
        let img = decode_pgm(&bytes).unwrap();
        assert_eq!((img.width(), img.height()), (3, 2));
        assert_eq!(img.data(), &[0.0, 1.0, 2.0, 253.0, 254.0, 255.0]);
        assert_eq!(encode_pgm(&img)[11..], bytes[bytes.len() - 6..]);
    }

    #[test]
    fn pgm_rejects_malformed() {
        assert!(decode_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(decode_pgm(b"P5\n2 2\n255\n\x00").is_err());
        assert!(decode_pgm(b"P5\n1 1\n65535\n\x00\x00").is_err());
        assert!(decode_pgm(b"P5\n1").is_err());
    }

    #[test]
    fn pgm_quantizes_on_save() {
        let img = Image::new(4, 1, vec![-3.0, 12.4, 12.6, 300.0]).unwrap();
        let back = decode_pgm(&encode_pgm(&img)).unwrap();
        assert_eq!(back.data(), &[0.0, 12.0, 13.0, 255.0]);
    }

    #[test]
    fn pfm_orientation_and_values() {
        let img = Image::from_fn(3, 2, |c, r| c as f64 + 10.0 * r as f64 + 0.25);
        let bytes = encode_pfm(&img);
        assert!(bytes.starts_with(b"Pf\n3 2\n-1.0\n"));
        // first stored row is the bottom one
        let first = f32::from_le_bytes(bytes[12..16].try_into().unwrap());
        assert_eq!(first, 10.25);
        assert_eq!(decode_pfm(&bytes).unwrap(), img);
    }

    #[test]
    fn pfm_big_endian_input() {
        let mut bytes = b"Pf\n1 1\n1.0\n".to_vec();
        bytes.extend_from_slice(&2.5f32.to_be_bytes());
        assert_eq!(decode_pfm(&bytes).unwrap().data(), &[2.5]);
    }

    proptest! {
        #[test]
        fn pgm_round_trip_is_bit_exact(w in 1usize..12, h in 1usize..12, seed in any::<u64>()) {
            let mut s = seed;
            let img = Image::from_fn(w, h, |_, _| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 56) as f64
            });
            let once = encode_pgm(&img);
            let back = decode_pgm(&once).unwrap();
            prop_assert_eq!(&back, &img);
            prop_assert_eq!(encode_pgm(&back), once);
        }

        #[test]
        fn pfm_round_trip_is_bit_exact(vals in proptest::collection::vec(-1e6f32..1e6, 1..40)) {
            let img = Image::new(vals.len(), 1, vals.iter().map(|&v| v as f64).collect()).unwrap();
            let bytes = encode_pfm(&img);
            let back = decode_pfm(&bytes).unwrap();
            prop_assert_eq!(&back, &img);
            prop_assert_eq!(encode_pfm(&back), bytes);
        }
    }
}
