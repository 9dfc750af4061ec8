//! Raster images: 8-bit gray/RGB input, CIELAB working copies, resizing and
//! block pooling.

use alloc::format;
use alloc::vec::Vec;

use crate::color::{srgb_to_lab, Lab};
use crate::error::{check_len, Error, Result};

/// 8-bit raster image, row-major, 1 (gray) or 3 (RGB) interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidConfig(format!(
                "images have 1 or 3 channels, got {channels}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::Empty("image"));
        }
        check_len("image data", width * height * channels, data.len())?;
        Ok(Image {
            width,
            height,
            channels,
            data,
        })
    }

    /// RGB image filled from a per-pixel closure `(x, y) -> [r, g, b]`.
    pub fn from_rgb_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Image {
            width,
            height,
            channels: 3,
            data,
        }
    }

    pub fn from_gray_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Image {
            width,
            height,
            channels: 1,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// RGB triple at `(x, y)`; gray pixels are replicated across channels.
    #[inline]
    pub fn rgb(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * self.channels;
        if self.channels == 1 {
            let g = self.data[i];
            [g, g, g]
        } else {
            [self.data[i], self.data[i + 1], self.data[i + 2]]
        }
    }

    /// Bilinear resize with pixel-center alignment. Resizing to the same
    /// dimensions is the identity.
    pub fn resize_bilinear(&self, width: usize, height: usize) -> Result<Image> {
        if width == 0 || height == 0 {
            return Err(Error::Empty("resize target"));
        }
        if width == self.width && height == self.height {
            return Ok(self.clone());
        }
        let xs = sample_positions(self.width, width);
        let ys = sample_positions(self.height, height);
        let c = self.channels;
        let mut data = Vec::with_capacity(width * height * c);
        for &(y0, y1, fy) in &ys {
            for &(x0, x1, fx) in &xs {
                for ch in 0..c {
                    let p = |x: usize, y: usize| self.data[(y * self.width + x) * c + ch] as f64;
                    let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
                    let bottom = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
                    let v = top * (1.0 - fy) + bottom * fy;
                    data.push(libm::round(v).clamp(0.0, 255.0) as u8);
                }
            }
        }
        Ok(Image {
            width,
            height,
            channels: c,
            data,
        })
    }
}

fn sample_positions(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|d| {
            let s = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let i0 = libm::floor(s) as usize;
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

/// Image in CIELAB space, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LabImage {
    width: usize,
    height: usize,
    data: Vec<Lab>,
}

impl LabImage {
    pub fn new(width: usize, height: usize, data: Vec<Lab>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Empty("lab image"));
        }
        check_len("lab image data", width * height, data.len())?;
        Ok(LabImage { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> Lab {
        self.data[y * self.width + x]
    }

    pub fn pixels(&self) -> &[Lab] {
        &self.data
    }
}

/// Converts an image to CIELAB. Gray images are replicated to RGB first.
pub fn rgb_to_lab(image: &Image) -> LabImage {
    let mut data = Vec::with_capacity(image.pixel_count());
    for y in 0..image.height {
        for x in 0..image.width {
            let [r, g, b] = image.rgb(x, y);
            data.push(srgb_to_lab(r, g, b));
        }
    }
    LabImage {
        width: image.width,
        height: image.height,
        data,
    }
}

/// Mean luminance (`l / 100`) over non-overlapping blocks, one value per grid
/// cell in row-major order. The image dimensions must be multiples of the grid.
pub fn mean_pool_luminance(lab: &LabImage, grid_w: usize, grid_h: usize) -> Result<Vec<f64>> {
    if grid_w == 0 || grid_h == 0 {
        return Err(Error::Empty("pooling grid"));
    }
    if !lab.width.is_multiple_of(grid_w) {
        return Err(Error::NotDivisible {
            what: "image width",
            size: lab.width,
            grid: grid_w,
        });
    }
    if !lab.height.is_multiple_of(grid_h) {
        return Err(Error::NotDivisible {
            what: "image height",
            size: lab.height,
            grid: grid_h,
        });
    }
    let bw = lab.width / grid_w;
    let bh = lab.height / grid_h;
    let area = (bw * bh) as f64;
    let mut out = Vec::with_capacity(grid_w * grid_h);
    for gy in 0..grid_h {
        for gx in 0..grid_w {
            let mut sum = 0.0;
            for y in gy * bh..(gy + 1) * bh {
                for x in gx * bw..(gx + 1) * bw {
                    sum += lab.at(x, y).l;
                }
            }
            out.push((sum / area / 100.0).clamp(0.0, 1.0));
        }
    }
    Ok(out)
}
