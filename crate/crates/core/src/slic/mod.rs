//! SLIC superpixels: localized k-means over a joint CIELAB + position
//! distance, followed by a connectivity pass and reduction of the superpixels
//! to a fixed-size luminance grid.

mod connectivity;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::color::Lab;
use crate::error::{Error, Result};
use crate::image::{rgb_to_lab, Image, LabImage};

pub use connectivity::{
    compact_labels, components_per_label, connected_components, enforce_connectivity, Component, UNASSIGNED,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SlicConfig {
    /// Desired number of superpixels K.
    pub k: usize,
    /// Compactness m, weighting the spatial term against color.
    pub compactness: f64,
    /// Iteration stops once the L1 center motion E drops below this.
    pub residual_threshold: f64,
    pub max_iters: usize,
    /// Seed centers at a random position inside their cell instead of its
    /// midpoint.
    pub jitter: bool,
    pub seed: u64,
}

impl SlicConfig {
    pub fn new(k: usize) -> Self {
        SlicConfig {
            k,
            compactness: 10.0,
            residual_threshold: 1.0,
            max_iters: 10,
            jitter: false,
            seed: 0,
        }
    }

    pub fn validate(&self, pixels: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("superpixel count k must be at least 1".into()));
        }
        if self.k > pixels {
            return Err(Error::TooManySuperpixels { k: self.k, pixels });
        }
        if !(self.compactness > 0.0 && self.compactness.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "compactness must be positive, got {}",
                self.compactness
            )));
        }
        if self.residual_threshold.is_nan() || self.residual_threshold < 0.0 {
            return Err(Error::InvalidConfig("residual threshold must be non-negative".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterCenter {
    pub color: Lab,
    pub x: f64,
    pub y: f64,
    /// Member pixels after the last update; zero before the first assignment.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperpixelMap {
    pub width: usize,
    pub height: usize,
    /// Per-pixel index into `centers`, row-major.
    pub labels: Vec<u32>,
    pub centers: Vec<ClusterCenter>,
    pub iterations_used: usize,
    pub final_residual: f64,
    /// Residual E after every iteration.
    pub residuals: Vec<f64>,
    /// Grid interval S.
    pub region_size: f64,
}

impl SuperpixelMap {
    pub fn num_superpixels(&self) -> usize {
        self.centers.len()
    }
}

/// Grid interval S = √(N/K).
pub fn region_size(pixels: usize, k: usize) -> f64 {
    libm::sqrt(pixels as f64 / k as f64)
}

fn cells_along(extent: usize, s: f64) -> usize {
    // Guard against 90/15 landing a hair above 6.
    (libm::ceil(extent as f64 / s - 1e-9) as usize).max(1)
}

/// Seeds one center per S×S cell, ⌈width/S⌉ × ⌈height/S⌉ in total.
pub fn init_centers(lab: &LabImage, cfg: &SlicConfig) -> Result<Vec<ClusterCenter>> {
    let (w, h) = (lab.width(), lab.height());
    cfg.validate(w * h)?;
    let s = region_size(w * h, cfg.k);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    if cfg.k == 1 {
        let (x, y) = (w / 2, h / 2);
        return Ok(vec![ClusterCenter {
            color: lab.at(x, y),
            x: x as f64,
            y: y as f64,
            count: 0,
        }]);
    }
    let nx = cells_along(w, s);
    let ny = cells_along(h, s);

    let place = |cell: usize, extent: usize, rng: &mut ChaCha8Rng| -> usize {
        let lo = cell as f64 * s;
        let hi = ((cell + 1) as f64 * s).min(extent as f64);
        let pos = if cfg.jitter && hi > lo {
            rng.gen_range(lo..hi)
        } else {
            0.5 * (lo + hi)
        };
        (libm::floor(pos) as usize).min(extent - 1)
    };

    let mut centers = Vec::with_capacity(nx * ny);
    for gy in 0..ny {
        for gx in 0..nx {
            let x = place(gx, w, &mut rng);
            let y = place(gy, h, &mut rng);
            centers.push(ClusterCenter {
                color: lab.at(x, y),
                x: x as f64,
                y: y as f64,
                count: 0,
            });
        }
    }
    Ok(centers)
}

/// Sum of squared Lab differences between the horizontal and the vertical
/// neighbours of `(x, y)`, clamping at the border.
pub fn gradient_magnitude(lab: &LabImage, x: usize, y: usize) -> f64 {
    let (w, h) = (lab.width(), lab.height());
    let left = lab.at(x.saturating_sub(1), y);
    let right = lab.at((x + 1).min(w - 1), y);
    let up = lab.at(x, y.saturating_sub(1));
    let down = lab.at(x, (y + 1).min(h - 1));
    right.distance_sq(&left) + down.distance_sq(&up)
}

/// Moves a center to the lowest-gradient pixel of its 3×3 neighbourhood.
/// Ties resolve to the first candidate in row-major order.
pub fn perturb_to_lowest_gradient(center: &ClusterCenter, lab: &LabImage) -> ClusterCenter {
    let (w, h) = (lab.width() as i64, lab.height() as i64);
    let cx = (libm::round(center.x) as i64).clamp(0, w - 1);
    let cy = (libm::round(center.y) as i64).clamp(0, h - 1);
    let mut best: Option<(f64, usize, usize)> = None;
    for y in (cy - 1)..=(cy + 1) {
        for x in (cx - 1)..=(cx + 1) {
            if x < 0 || y < 0 || x >= w || y >= h {
                continue;
            }
            let (x, y) = (x as usize, y as usize);
            let g = gradient_magnitude(lab, x, y);
            if best.is_none_or(|(bg, _, _)| g < bg) {
                best = Some((g, x, y));
            }
        }
    }
    let (_, x, y) = best.expect("center lies inside the image");
    ClusterCenter {
        color: lab.at(x, y),
        x: x as f64,
        y: y as f64,
        count: center.count,
    }
}

#[inline]
fn distance_sq(color: &Lab, x: f64, y: f64, center: &ClusterCenter, s: f64, m: f64) -> f64 {
    let dc2 = color.distance_sq(&center.color);
    let dx = x - center.x;
    let dy = y - center.y;
    let ds2 = dx * dx + dy * dy;
    dc2 + ds2 / (s * s) * m * m
}

/// D = √(d_c² + (d_s/S)²·m²).
pub fn slic_distance(color: &Lab, x: f64, y: f64, center: &ClusterCenter, s: f64, m: f64) -> f64 {
    libm::sqrt(distance_sq(color, x, y, center, s, m))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Per-pixel center index, [`UNASSIGNED`] where no 2S×2S window reached.
    pub labels: Vec<u32>,
    pub centers: Vec<ClusterCenter>,
    /// L1 motion of the centers, Σ |Δx| + |Δy|.
    pub residual: f64,
}

/// One local k-means step: each pixel goes to the closest center whose
/// 2S×2S window covers it (lowest index on ties), then centers move to the
/// mean color and position of their members. Centers without members stay put.
pub fn assign_and_update(lab: &LabImage, centers: &[ClusterCenter], cfg: &SlicConfig) -> Result<Assignment> {
    if centers.is_empty() {
        return Err(Error::Empty("cluster centers"));
    }
    let (w, h) = (lab.width(), lab.height());
    cfg.validate(w * h)?;
    let s = region_size(w * h, cfg.k);
    let m = cfg.compactness;

    let mut labels = vec![UNASSIGNED; w * h];
    let mut best = vec![f64::INFINITY; w * h];
    for (k, c) in centers.iter().enumerate() {
        let x0 = libm::floor(c.x - s).max(0.0) as usize;
        let x1 = (libm::ceil(c.x + s) as usize).min(w - 1);
        let y0 = libm::floor(c.y - s).max(0.0) as usize;
        let y1 = (libm::ceil(c.y + s) as usize).min(h - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let i = y * w + x;
                let d = distance_sq(&lab.pixels()[i], x as f64, y as f64, c, s, m);
                if d < best[i] {
                    best[i] = d;
                    labels[i] = k as u32;
                }
            }
        }
    }

    let updated = mean_centers(lab, &labels, centers);
    let residual = centers
        .iter()
        .zip(&updated)
        .map(|(old, new)| (new.x - old.x).abs() + (new.y - old.y).abs())
        .sum();
    Ok(Assignment {
        labels,
        centers: updated,
        residual,
    })
}

/// Member means for every center; centers without members keep their old
/// position and color with `count = 0`.
fn mean_centers(lab: &LabImage, labels: &[u32], previous: &[ClusterCenter]) -> Vec<ClusterCenter> {
    let w = lab.width();
    let mut sums = vec![[0.0f64; 5]; previous.len()];
    let mut counts = vec![0usize; previous.len()];
    for (i, &label) in labels.iter().enumerate() {
        if label == UNASSIGNED {
            continue;
        }
        let k = label as usize;
        let p = lab.pixels()[i];
        let acc = &mut sums[k];
        acc[0] += p.l;
        acc[1] += p.a;
        acc[2] += p.b;
        acc[3] += (i % w) as f64;
        acc[4] += (i / w) as f64;
        counts[k] += 1;
    }
    previous
        .iter()
        .zip(sums.iter().zip(&counts))
        .map(|(old, (acc, &n))| {
            if n == 0 {
                ClusterCenter { count: 0, ..*old }
            } else {
                let n_f = n as f64;
                ClusterCenter {
                    color: Lab::new(acc[0] / n_f, acc[1] / n_f, acc[2] / n_f),
                    x: acc[3] / n_f,
                    y: acc[4] / n_f,
                    count: n,
                }
            }
        })
        .collect()
}

/// Centers recomputed from a complete label map with labels in `0..count`.
pub fn centers_from_labels(lab: &LabImage, labels: &[u32], count: usize) -> Vec<ClusterCenter> {
    let placeholder = ClusterCenter {
        color: Lab::default(),
        x: 0.0,
        y: 0.0,
        count: 0,
    };
    mean_centers(lab, labels, &vec![placeholder; count])
}

/// Full SLIC on an RGB (or gray) image.
pub fn run_slic(image: &Image, cfg: &SlicConfig) -> Result<SuperpixelMap> {
    run_slic_lab(&rgb_to_lab(image), cfg)
}

/// Full SLIC on an image already in CIELAB.
pub fn run_slic_lab(lab: &LabImage, cfg: &SlicConfig) -> Result<SuperpixelMap> {
    let (w, h) = (lab.width(), lab.height());
    cfg.validate(w * h)?;
    let s = region_size(w * h, cfg.k);

    let mut centers: Vec<ClusterCenter> = init_centers(lab, cfg)?
        .iter()
        .map(|c| perturb_to_lowest_gradient(c, lab))
        .collect();

    let mut residuals = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..cfg.max_iters {
        let step = assign_and_update(lab, &centers, cfg)?;
        residuals.push(step.residual);
        labels = step.labels;
        centers = step.centers;
        if step.residual < cfg.residual_threshold {
            break;
        }
    }

    let connected = enforce_connectivity(&labels, w, h, s);
    let (labels, count) = compact_labels(&connected);
    let centers = centers_from_labels(lab, &labels, count);
    Ok(SuperpixelMap {
        width: w,
        height: h,
        labels,
        centers,
        iterations_used: residuals.len(),
        final_residual: *residuals.last().expect("max_iters >= 1"),
        residuals,
        region_size: s,
    })
}

/// Reduces a superpixel map to a `grid_w × grid_h` vector in `[0, 1]`: each
/// cell takes the mean luminance (`l / 100`) of the superpixel whose center
/// lies nearest the cell's midpoint in image space.
pub fn superpixels_to_grid(map: &SuperpixelMap, lab: &LabImage, grid_w: usize, grid_h: usize) -> Result<Vec<f64>> {
    if map.centers.is_empty() {
        return Err(Error::Empty("superpixel map"));
    }
    if grid_w == 0 || grid_h == 0 {
        return Err(Error::Empty("grid"));
    }
    crate::error::check_len("label map", lab.len(), map.labels.len())?;

    let n = map.centers.len();
    let mut sum = vec![0.0; n];
    let mut count = vec![0usize; n];
    for (p, &label) in lab.pixels().iter().zip(&map.labels) {
        let k = label as usize;
        if k >= n {
            return Err(Error::LabelOutOfRange { label: k, classes: n });
        }
        sum[k] += p.l;
        count[k] += 1;
    }
    let luminance: Vec<f64> = sum
        .iter()
        .zip(&count)
        .zip(&map.centers)
        .map(|((&s, &c), center)| {
            let l = if c > 0 { s / c as f64 } else { center.color.l };
            (l / 100.0).clamp(0.0, 1.0)
        })
        .collect();

    let (w, h) = (lab.width() as f64, lab.height() as f64);
    let mut out = Vec::with_capacity(grid_w * grid_h);
    for gy in 0..grid_h {
        let py = (gy as f64 + 0.5) * h / grid_h as f64 - 0.5;
        for gx in 0..grid_w {
            let px = (gx as f64 + 0.5) * w / grid_w as f64 - 0.5;
            let mut nearest = 0;
            let mut best = f64::INFINITY;
            for (k, c) in map.centers.iter().enumerate() {
                let d = (c.x - px) * (c.x - px) + (c.y - py) * (c.y - py);
                if d < best {
                    best = d;
                    nearest = k;
                }
            }
            out.push(luminance[nearest]);
        }
    }
    Ok(out)
}
