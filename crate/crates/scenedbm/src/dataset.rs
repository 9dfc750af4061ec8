//! Image datasets laid out as one subdirectory per class.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pnm::read_pnm;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
    /// Left over after the per-class counts were taken.
    Unused,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Item {
    pub path: PathBuf,
    pub class: usize,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    /// Class names, sorted.
    pub classes: Vec<String>,
    /// Items grouped by class, each group in shuffled order.
    pub items: Vec<Item>,
    pub seed: u64,
}

impl Dataset {
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Item> {
        self.items.iter().filter(move |it| it.split == split)
    }

    pub fn train(&self) -> impl Iterator<Item = &Item> {
        self.split(Split::Train)
    }

    pub fn test(&self) -> impl Iterator<Item = &Item> {
        self.split(Split::Test)
    }
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "pgm" | "ppm" | "pnm"))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        out.push(entry.map_err(|e| Error::io(dir, e))?.path());
    }
    out.sort();
    Ok(out)
}

/// Scans `root`, shuffles each class with `seed` and marks the first
/// `train_per_class` images for training and the next `test_per_class` for
/// testing. Every selected image is decoded once so that broken files are
/// reported up front.
pub fn load_dataset(
    root: impl AsRef<Path>,
    train_per_class: usize,
    test_per_class: usize,
    seed: u64,
) -> Result<Dataset> {
    let root = root.as_ref();
    let class_dirs: Vec<PathBuf> = sorted_entries(root)?.into_iter().filter(|p| p.is_dir()).collect();
    if class_dirs.is_empty() {
        return Err(Error::Dataset(format!("no class directories in {}", root.display())));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut classes = Vec::with_capacity(class_dirs.len());
    let mut items = Vec::new();
    for (class, dir) in class_dirs.iter().enumerate() {
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut files: Vec<PathBuf> = sorted_entries(dir)?
            .into_iter()
            .filter(|p| p.is_file() && is_image(p))
            .collect();
        if files.is_empty() {
            return Err(Error::Dataset(format!("class `{name}` has no images")));
        }
        if files.len() < train_per_class + test_per_class {
            return Err(Error::Dataset(format!(
                "insufficient images for class `{name}`: need {}, found {}",
                train_per_class + test_per_class,
                files.len()
            )));
        }
        files.shuffle(&mut rng);
        for (i, path) in files.into_iter().enumerate() {
            let split = if i < train_per_class {
                Split::Train
            } else if i < train_per_class + test_per_class {
                Split::Test
            } else {
                Split::Unused
            };
            if split != Split::Unused {
                read_pnm(&path)?;
            }
            items.push(Item { path, class, split });
        }
        classes.push(name);
    }
    Ok(Dataset { classes, items, seed })
}
