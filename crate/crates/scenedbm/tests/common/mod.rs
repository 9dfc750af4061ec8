#![allow(dead_code)]

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scenedbm::pnm::write_pnm;
use scenedbm::scenedbm_core::image::Image;

/// A two-tone scene split by a straight edge whose orientation depends on
/// the class. Edge position, tones, tint and pixel noise vary per image.
pub fn scene_image(class: usize, classes: usize, size: usize, rng: &mut impl Rng) -> Image {
    let angle = std::f64::consts::PI * class as f64 / classes as f64;
    let (nx, ny) = (angle.cos(), angle.sin());
    let half = size as f64 / 2.0;
    let offset = rng.gen_range(-0.15..0.15) * size as f64;
    let bright = rng.gen_range(180.0..235.0);
    let dark = rng.gen_range(25.0..80.0);
    let tint = [
        rng.gen_range(0.85..1.0),
        rng.gen_range(0.85..1.0),
        rng.gen_range(0.85..1.0),
    ];
    let noise: Vec<f64> = (0..size * size).map(|_| rng.gen_range(-12.0..12.0)).collect();
    Image::from_rgb_fn(size, size, |x, y| {
        let d = (x as f64 - half) * ny - (y as f64 - half) * nx - offset;
        let base = if d < 0.0 { bright } else { dark } + noise[y * size + x];
        tint.map(|t| (base * t).clamp(0.0, 255.0) as u8)
    })
}

/// Writes `classes` directories of `per_class` PPM scenes each.
pub fn write_scene_dataset(root: &Path, classes: usize, per_class: usize, size: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for c in 0..classes {
        let dir = root.join(format!("class{c:02}"));
        std::fs::create_dir_all(&dir).unwrap();
        for i in 0..per_class {
            let img = scene_image(c, classes, size, &mut rng);
            write_pnm(dir.join(format!("img{i:03}.ppm")), &img).unwrap();
        }
    }
}
