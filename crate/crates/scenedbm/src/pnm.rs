//! Binary PGM (P5) and PPM (P6) images with 8-bit samples.

use std::fs;
use std::path::Path;

use scenedbm_core::image::Image;

use crate::error::{Error, Result};

/// Reads a P5 or P6 file.
pub fn read_pnm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|reason| Error::Image {
        path: path.to_path_buf(),
        reason,
    })
}

/// Writes a P5 file for one-channel images and P6 otherwise.
pub fn write_pnm(path: impl AsRef<Path>, image: &Image) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(image)).map_err(|e| Error::io(path, e))
}

pub fn encode(image: &Image) -> Vec<u8> {
    let magic = if image.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend_from_slice(image.data());
    out
}

/// Writes values in [0, 1] as an 8-bit grayscale P5 image.
pub fn write_gray_f64(path: impl AsRef<Path>, width: usize, height: usize, values: &[f64]) -> Result<()> {
    let data = values
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let image = Image::new(width, height, 1, data)?;
    write_pnm(path, &image)
}

pub fn decode(bytes: &[u8]) -> std::result::Result<Image, String> {
    let mut header = Header { bytes, pos: 0 };
    let channels = match header.token()? {
        b"P5" => 1,
        b"P6" => 3,
        other => return Err(format!("unsupported magic {:?}", String::from_utf8_lossy(other))),
    };
    let width = header.number("width")?;
    let height = header.number("height")?;
    let maxval = header.number("maxval")?;
    if maxval != 255 {
        return Err(format!("maxval {maxval} is not supported, expected 255"));
    }
    if width == 0 || height == 0 {
        return Err("zero-sized image".into());
    }
    // Exactly one whitespace byte separates the header from the samples.
    match bytes.get(header.pos) {
        Some(b) if b.is_ascii_whitespace() => header.pos += 1,
        _ => return Err("missing whitespace after header".into()),
    }
    let len = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or("image dimensions overflow")?;
    let data = bytes
        .get(header.pos..header.pos + len)
        .ok_or_else(|| format!("expected {len} sample bytes, found {}", bytes.len() - header.pos))?;
    Image::new(width, height, channels, data.to_vec()).map_err(|e| e.to_string())
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> std::result::Result<&'a [u8], String> {
        self.skip_space();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err("unexpected end of header".into());
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> std::result::Result<usize, String> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("invalid {what} {:?}", String::from_utf8_lossy(tok)))
    }
}
