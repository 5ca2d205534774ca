//! Portable greymap (P2 / P5, maxval 255) reading and writing.
//!
//! File samples `p` in `[0, 255]` map to the internal palette as `g = p + 1`,
//! so black is 1 and white is 256; writing applies `p = g - 1`.

use std::io::{self, Read, Write};

use hodiff::GreyImage;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("unsupported maxval {0}, only 255 is accepted")]
    UnsupportedMaxval(u32),
    #[error("image must be square, got {width}x{height}")]
    NotSquare { width: usize, height: usize },
    #[error("truncated pixel data: expected {expected} samples, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("invalid pixel sample: {0}")]
    BadSample(String),
    #[error("image is not quantized to [1, 256]; renormalize before writing")]
    NotQuantized,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmFormat {
    /// P2, whitespace-separated decimal samples.
    Ascii,
    /// P5, one byte per sample.
    Binary,
}

const MAXVAL: u32 = 255;

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.data.len() {
            match self.data[self.pos] {
                b'#' => {
                    while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Option<&'a str> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.data.len() && !self.data[self.pos].is_ascii_whitespace() && self.data[self.pos] != b'#' {
            self.pos += 1;
        }
        (self.pos > start).then(|| std::str::from_utf8(&self.data[start..self.pos]).ok()).flatten()
    }

    fn header_number(&mut self, what: &str) -> Result<usize, PgmError> {
        let tok = self
            .token()
            .ok_or_else(|| PgmError::MalformedHeader(format!("missing {what}")))?;
        tok.parse()
            .map_err(|_| PgmError::MalformedHeader(format!("{what} is not a number: '{tok}'")))
    }
}

/// Parses a P2 or P5 greymap from memory.
pub fn decode(data: &[u8]) -> Result<GreyImage, PgmError> {
    let mut cur = Cursor { data, pos: 0 };
    let format = match cur.token() {
        Some("P2") => PgmFormat::Ascii,
        Some("P5") => PgmFormat::Binary,
        Some(other) => return Err(PgmError::MalformedHeader(format!("unknown magic '{other}'"))),
        None => return Err(PgmError::MalformedHeader("empty file".into())),
    };
    let width = cur.header_number("width")?;
    let height = cur.header_number("height")?;
    let maxval = cur.header_number("maxval")?;
    if maxval != MAXVAL as usize {
        return Err(PgmError::UnsupportedMaxval(maxval.min(u32::MAX as usize) as u32));
    }
    if width != height {
        return Err(PgmError::NotSquare { width, height });
    }
    if width == 0 {
        return Err(PgmError::MalformedHeader("zero-sized image".into()));
    }
    let expected = width * height;
    let mut values = Vec::with_capacity(expected);
    match format {
        PgmFormat::Ascii => {
            while values.len() < expected {
                let Some(tok) = cur.token() else { break };
                let p: u32 = tok.parse().map_err(|_| PgmError::BadSample(tok.to_string()))?;
                if p > MAXVAL {
                    return Err(PgmError::BadSample(format!("{p} exceeds maxval")));
                }
                values.push(f64::from(p + 1));
            }
        }
        PgmFormat::Binary => {
            // exactly one whitespace byte separates maxval from the raster
            let start = cur.pos + 1;
            let raster = data.get(start..).unwrap_or(&[]);
            values.extend(raster.iter().take(expected).map(|&b| f64::from(b) + 1.0));
        }
    }
    if values.len() < expected {
        return Err(PgmError::Truncated {
            expected,
            got: values.len(),
        });
    }
    GreyImage::new(width, values).map_err(|e| PgmError::MalformedHeader(e.to_string()))
}

/// Serializes a quantized image.
pub fn encode(img: &GreyImage, format: PgmFormat) -> Result<Vec<u8>, PgmError> {
    if !img.is_quantized() || img.palette_max() != 256 {
        return Err(PgmError::NotQuantized);
    }
    let n = img.n();
    let samples = img.values().iter().map(|&g| (g - 1.0) as u8);
    let mut out = Vec::new();
    match format {
        PgmFormat::Ascii => {
            writeln!(out, "P2\n{n} {n}\n{MAXVAL}")?;
            let samples: Vec<u8> = samples.collect();
            for row in samples.chunks(n) {
                let line: Vec<String> = row.iter().map(u8::to_string).collect();
                writeln!(out, "{}", line.join(" "))?;
            }
        }
        PgmFormat::Binary => {
            write!(out, "P5\n{n} {n}\n{MAXVAL}\n")?;
            out.extend(samples);
        }
    }
    Ok(out)
}

pub fn read(reader: &mut impl Read) -> Result<GreyImage, PgmError> {
    let mut data = Vec::new();
    reader.read_to_end(&mut data)?;
    decode(&data)
}

pub fn write(img: &GreyImage, writer: &mut impl Write, format: PgmFormat) -> Result<(), PgmError> {
    writer.write_all(&encode(img, format)?)?;
    Ok(())
}

pub fn read_path(path: &std::path::Path) -> Result<GreyImage, PgmError> {
    decode(&std::fs::read(path)?)
}

pub fn write_path(img: &GreyImage, path: &std::path::Path, format: PgmFormat) -> Result<(), PgmError> {
    std::fs::write(path, encode(img, format)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ascii_example() {
        let img = decode(b"P2 2 2 255\n0 255 0 255\n").unwrap();
        assert_eq!(img.values(), &[1.0, 256.0, 1.0, 256.0]);
    }

    #[test]
    fn ascii_with_comments() {
        let img = decode(b"P2\n# made by hand\n2 2\n255\n# pixels\n10 20\n30 40\n").unwrap();
        assert_eq!(img.values(), &[11.0, 21.0, 31.0, 41.0]);
    }

    #[test]
    fn binary_zeros() {
        let mut data = b"P5\n3 3\n255\n".to_vec();
        data.extend([0u8; 9]);
        let img = decode(&data).unwrap();
        assert!(img.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn errors_are_distinct() {
        assert!(matches!(decode(b"P2 3 2 255\n1 2 3 4 5 6"), Err(PgmError::NotSquare { width: 3, height: 2 })));
        assert!(matches!(decode(b"P2 2 2 65535\n1 2 3 4"), Err(PgmError::UnsupportedMaxval(65535))));
        assert!(matches!(decode(b"P2 2 2 255\n1 2 3"), Err(PgmError::Truncated { expected: 4, got: 3 })));
        assert!(matches!(decode(b"P5\n2 2\n255\n\x01\x02"), Err(PgmError::Truncated { .. })));
        assert!(matches!(decode(b"P6 2 2 255\n"), Err(PgmError::MalformedHeader(_))));
        assert!(matches!(decode(b"P2 x 2 255\n"), Err(PgmError::MalformedHeader(_))));
        assert!(matches!(decode(b""), Err(PgmError::MalformedHeader(_))));
        assert!(matches!(decode(b"P2 2 2 255\n1 2 3 300"), Err(PgmError::BadSample(_))));
    }

    #[test]
    fn encode_examples() {
        let white = GreyImage::from_fn(3, |_, _| 256.0).unwrap();
        let bytes = encode(&white, PgmFormat::Binary).unwrap();
        assert!(bytes.ends_with(&[255u8; 9]));

        let checker = GreyImage::from_fn(2, |i, j| if (i + j) % 2 == 0 { 1.0 } else { 256.0 }).unwrap();
        assert_eq!(encode(&checker, PgmFormat::Ascii).unwrap(), b"P2\n2 2\n255\n0 255\n255 0\n");

        let raw = GreyImage::from_fn(2, |_, _| 1.5).unwrap();
        assert!(matches!(encode(&raw, PgmFormat::Ascii), Err(PgmError::NotQuantized)));
    }

    proptest! {
        #[test]
        fn round_trip(n in 1usize..12, seed in proptest::collection::vec(1u32..=256, 144), binary in any::<bool>()) {
            prop_assume!(n >= 2);
            let img = GreyImage::new(n, seed[..n * n].iter().map(|&v| f64::from(v)).collect()).unwrap();
            let format = if binary { PgmFormat::Binary } else { PgmFormat::Ascii };
            let back = decode(&encode(&img, format).unwrap()).unwrap();
            prop_assert_eq!(back, img);
        }
    }
}
