//! Binary PGM (P5, maxval 255) with physical metadata in a header comment.
//!
//! Files written here look like
//!
//! ```text
//! P5
//! # scale=1.57 offset=0
//! <width> <height>
//! 255
//! <width*height bytes>
//! ```
//!
//! Other PGM writers omit the metadata comment; such files load with
//! `scale = 1` and `offset = 0`.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{GrayImage, ImageError};

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage, ImageError> {
    let bytes = fs::read(path)?;
    read_pgm(&bytes)
}

pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<(), ImageError> {
    let mut out = Vec::with_capacity(img.data().len() + 64);
    write_pgm(img, &mut out)?;
    fs::write(path, out)?;
    Ok(())
}

pub fn write_pgm(img: &GrayImage, w: &mut impl Write) -> Result<(), ImageError> {
    write!(
        w,
        "P5\n# scale={} offset={}\n{} {}\n255\n",
        img.scale(),
        img.offset(),
        img.width(),
        img.height()
    )?;
    w.write_all(img.data())?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    scale: Option<f64>,
    offset: Option<f64>,
}

impl<'a> Cursor<'a> {
    fn skip_space_and_comments(&mut self) -> Result<(), ImageError> {
        loop {
            match self.bytes.get(self.pos) {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'#') => {
                    let start = self.pos + 1;
                    let end = self.bytes[start..]
                        .iter()
                        .position(|&b| b == b'\n')
                        .map_or(self.bytes.len(), |e| start + e);
                    let line = String::from_utf8_lossy(&self.bytes[start..end]).into_owned();
                    self.parse_metadata(&line)?;
                    self.pos = end;
                }
                _ => return Ok(()),
            }
        }
    }

    fn parse_metadata(&mut self, line: &str) -> Result<(), ImageError> {
        for tok in line.split_whitespace() {
            if let Some(v) = tok.strip_prefix("scale=") {
                self.scale =
                    Some(v.parse().map_err(|_| {
                        ImageError::MalformedHeader(format!("bad scale value {v:?}"))
                    })?);
            } else if let Some(v) = tok.strip_prefix("offset=") {
                self.offset =
                    Some(v.parse().map_err(|_| {
                        ImageError::MalformedHeader(format!("bad offset value {v:?}"))
                    })?);
            }
        }
        Ok(())
    }

    fn number(&mut self, what: &str) -> Result<u32, ImageError> {
        self.skip_space_and_comments()?;
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ImageError::MalformedHeader(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ImageError::MalformedHeader(format!("{what} out of range")))
    }
}

/// Parses an in-memory P5 file.
pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage, ImageError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(ImageError::MalformedHeader("missing P5 magic".into()));
    }
    let mut cur = Cursor {
        bytes,
        pos: 2,
        scale: None,
        offset: None,
    };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(ImageError::UnsupportedMaxval(maxval));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => {
            return Err(ImageError::MalformedHeader(
                "missing whitespace after maxval".into(),
            ))
        }
    }
    let expected = width * height;
    let payload = &bytes[cur.pos..];
    if payload.len() < expected {
        return Err(ImageError::Truncated {
            expected,
            found: payload.len(),
        });
    }
    GrayImage::new(width, height, payload[..expected].to_vec())?
        .with_scale(cur.scale.unwrap_or(1.0), cur.offset.unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_plain_two_by_two() {
        let mut f = b"P5\n2 2\n255\n".to_vec();
        f.extend([0, 255, 128, 64]);
        let img = read_pgm(&f).unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.data(), &[0, 255, 128, 64]);
        assert_eq!(img.scale(), 1.0);
        assert_eq!(img.offset(), 0.0);
    }

    #[test]
    fn rejects_sixteen_bit() {
        let mut f = b"P5\n1 1\n65535\n".to_vec();
        f.extend([0, 0]);
        let err = read_pgm(&f).unwrap_err();
        assert!(matches!(err, ImageError::UnsupportedMaxval(65535)));
        assert!(err.to_string().contains("unsupported maxval"));
    }

    #[test]
    fn distinct_errors() {
        assert!(matches!(
            read_pgm(b"P2\n1 1\n255\n\x00"),
            Err(ImageError::MalformedHeader(_))
        ));
        assert!(matches!(
            read_pgm(b"P5\n1\n"),
            Err(ImageError::MalformedHeader(_))
        ));
        assert!(matches!(
            read_pgm(b"P5\n2 2\n255\n\x01\x02"),
            Err(ImageError::Truncated {
                expected: 4,
                found: 2
            })
        ));
    }

    #[test]
    fn writes_metadata_comment() {
        let img = GrayImage::new(1, 1, vec![7])
            .unwrap()
            .with_scale(1.57, 0.0)
            .unwrap();
        let mut out = Vec::new();
        write_pgm(&img, &mut out).unwrap();
        assert_eq!(out, b"P5\n# scale=1.57 offset=0\n1 1\n255\n\x07");
        let back = read_pgm(&out).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn comment_between_dimensions() {
        let f = b"P5 3 # scale=2 offset=-1\n1 255 \x01\x02\x03";
        let img = read_pgm(f).unwrap();
        assert_eq!(img.data(), &[1, 2, 3]);
        assert_eq!(img.scale(), 2.0);
        assert_eq!(img.offset(), -1.0);
    }
}
