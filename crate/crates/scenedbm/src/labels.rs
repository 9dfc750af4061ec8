//! Text label maps: `SLICLABELS v1`, then `<width> <height> <count>`, then
//! one line of space-separated labels per image row.

use std::fmt::Write as _;
use std::path::Path;

use scenedbm_core::slic::SuperpixelMap;

use crate::error::{Error, Result};

pub fn format_labels(map: &SuperpixelMap) -> String {
    let mut out = format!(
        "SLICLABELS v1\n{} {} {}\n",
        map.width,
        map.height,
        map.num_superpixels()
    );
    for row in map.labels.chunks(map.width) {
        for (i, l) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{l}");
        }
        out.push('\n');
    }
    out
}

pub fn write_labels(path: impl AsRef<Path>, map: &SuperpixelMap) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_labels(map)).map_err(|e| Error::io(path, e))
}

/// Parsed label map: `(width, height, count, labels)`.
pub fn parse_labels(text: &str) -> Result<(usize, usize, usize, Vec<u32>)> {
    let bad = |what: &str| Error::Dataset(format!("label map: {what}"));
    let mut lines = text.lines();
    if lines.next() != Some("SLICLABELS v1") {
        return Err(bad("missing SLICLABELS v1 header"));
    }
    let dims: Vec<usize> = lines
        .next()
        .ok_or_else(|| bad("missing size line"))?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad("invalid size")))
        .collect::<Result<_>>()?;
    let [w, h, k] = dims[..] else {
        return Err(bad("size line needs width, height and count"));
    };
    let mut labels = Vec::with_capacity(w * h);
    for _ in 0..h {
        let row: Vec<u32> = lines
            .next()
            .ok_or_else(|| bad("too few rows"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("invalid label")))
            .collect::<Result<_>>()?;
        if row.len() != w {
            return Err(bad("row length differs from width"));
        }
        labels.extend(row);
    }
    if labels.iter().any(|&l| l as usize >= k) {
        return Err(bad("label out of range"));
    }
    Ok((w, h, k, labels))
}
