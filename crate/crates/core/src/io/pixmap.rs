//! Portable any-maps: P2/P5 graymaps and P3/P6 pixmaps, read to grayscale.

use std::path::Path;

use crate::edges::GrayImage;
use crate::error::{Error, Result};

const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixmapEncoding {
    /// P2, decimal samples.
    Plain,
    /// P5, binary samples.
    Raw,
}

pub fn read_pixmap(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pixmap(&bytes)
}

/// Header tokenizer that understands `#` comments.
struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_space(&mut self) {
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

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.data.len() && !self.data[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.data[start..self.pos])
    }

    fn header_number(&mut self, what: &str) -> Result<usize> {
        let tok = self
            .token()
            .ok_or_else(|| Error::MalformedHeader(format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedHeader(format!("bad {what} '{}'", String::from_utf8_lossy(tok))))
    }
}

pub fn decode_pixmap(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        let shown = String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned();
        return Err(Error::UnsupportedMagic(shown));
    }
    let (channels, binary) = match bytes[1] {
        b'2' => (1, false),
        b'5' => (1, true),
        b'3' => (3, false),
        b'6' => (3, true),
        other => return Err(Error::UnsupportedMagic(format!("P{}", other as char))),
    };
    let mut cur = Cursor { data: bytes, pos: 2 };
    let width = cur.header_number("width")?;
    let height = cur.header_number("height")?;
    let maxval = cur.header_number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!("zero dimension {width}x{height}")));
    }
    if !(1..=65535).contains(&maxval) {
        return Err(Error::MalformedHeader(format!("maxval {maxval} outside 1..=65535")));
    }
    let count = width * height * channels;
    let maxf = maxval as f64;

    let mut samples = Vec::with_capacity(count);
    if binary {
        // exactly one whitespace byte separates the header from the raster
        if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
            return Err(Error::MalformedHeader("missing separator before raster".into()));
        }
        let raster = &bytes[cur.pos + 1..];
        let wide = maxval > 255;
        let need = count * if wide { 2 } else { 1 };
        if raster.len() < need {
            return Err(Error::TruncatedData(format!(
                "raster has {} bytes, expected {need}",
                raster.len()
            )));
        }
        if wide {
            samples.extend(raster[..need].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as usize));
        } else {
            samples.extend(raster[..need].iter().map(|&b| b as usize));
        }
    } else {
        for i in 0..count {
            let tok = cur
                .token()
                .ok_or_else(|| Error::TruncatedData(format!("{i} of {count} samples present")))?;
            let v: usize = std::str::from_utf8(tok)
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::MalformedData(format!("bad sample '{}'", String::from_utf8_lossy(tok))))?;
            samples.push(v);
        }
    }
    if let Some(&v) = samples.iter().find(|&&v| v > maxval) {
        return Err(Error::MalformedData(format!("sample {v} exceeds maxval {maxval}")));
    }

    let pixels = if channels == 1 {
        samples.iter().map(|&v| v as f64 / maxf).collect()
    } else {
        samples
            .chunks_exact(3)
            .map(|rgb| {
                let y: f64 = rgb.iter().zip(LUMA).map(|(&c, w)| c as f64 / maxf * w).sum();
                y.clamp(0.0, 1.0)
            })
            .collect()
    };
    GrayImage::new(width, height, pixels)
}

/// Quantizes to `maxval` levels and writes a P2 or P5 graymap.
pub fn write_pixmap(img: &GrayImage, path: impl AsRef<Path>, encoding: PixmapEncoding, maxval: u16) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_pixmap(img, encoding, maxval)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_pixmap(img: &GrayImage, encoding: PixmapEncoding, maxval: u16) -> Result<Vec<u8>> {
    if maxval == 0 {
        return Err(Error::InvalidParameter("maxval must be at least 1".into()));
    }
    let magic = match encoding {
        PixmapEncoding::Plain => "P2",
        PixmapEncoding::Raw => "P5",
    };
    let mut out = format!("{magic}\n{} {}\n{maxval}\n", img.width(), img.height()).into_bytes();
    let m = maxval as f64;
    let levels = img.pixels().iter().map(|&p| (p * m).round() as u16);
    match encoding {
        PixmapEncoding::Plain => {
            for (i, v) in levels.enumerate() {
                let sep = if (i + 1) % img.width() == 0 { "\n" } else { " " };
                out.extend_from_slice(format!("{v}{sep}").as_bytes());
            }
        }
        PixmapEncoding::Raw if maxval > 255 => {
            for v in levels {
                out.extend_from_slice(&v.to_be_bytes());
            }
        }
        PixmapEncoding::Raw => out.extend(levels.map(|v| v as u8)),
    }
    Ok(out)
}
