//! Pipeline configuration and its `key = value` text format.
//!
//! ```text
//! # fifteen-scene setup
//! working_size = 200
//! grid_w = 40
//! grid_h = 40
//! dbm.h1 = 1000
//! dbm.h2 = 500
//! layer1.epochs = 50
//! seed = 7
//! ```
//!
//! Keys not listed in [`PipelineConfig::KEYS`] are rejected. The superpixel
//! count and the visible layer size both follow from the grid, and the
//! component seeds all follow from `seed`.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use scenedbm_core::dbm::DbmConfig;
use scenedbm_core::rbm::CdConfig;
use scenedbm_core::slic::SlicConfig;
use scenedbm_core::softmax::SoftmaxConfig;

use crate::error::{Error, Result};

/// How an image becomes a grid vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preprocess {
    /// SLIC superpixels, one grid cell per superpixel.
    Slic,
    /// Block-mean luminance.
    Pool,
}

impl FromStr for Preprocess {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "slic" => Ok(Preprocess::Slic),
            "pool" => Ok(Preprocess::Pool),
            _ => Err(format!("expected `slic` or `pool`, got `{s}`")),
        }
    }
}

impl Preprocess {
    fn name(self) -> &'static str {
        match self {
            Preprocess::Slic => "slic",
            Preprocess::Pool => "pool",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Images are resized to `working_size × working_size` first.
    pub working_size: usize,
    pub grid_w: usize,
    pub grid_h: usize,
    pub preprocess: Preprocess,
    pub slic: SlicConfig,
    pub dbm: DbmConfig,
    pub softmax: SoftmaxConfig,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let mut cfg = PipelineConfig {
            working_size: 200,
            grid_w: 40,
            grid_h: 40,
            preprocess: Preprocess::Slic,
            slic: SlicConfig::new(1600),
            dbm: DbmConfig::new((1600, 1000, 500)),
            softmax: SoftmaxConfig::default(),
            train_per_class: 200,
            test_per_class: 20,
            seed: 0,
        };
        cfg.sync();
        cfg
    }
}

impl PipelineConfig {
    pub const KEYS: &'static [&'static str] = &[
        "working_size",
        "grid_w",
        "grid_h",
        "preprocess",
        "slic.compactness",
        "slic.residual_threshold",
        "slic.max_iters",
        "slic.jitter",
        "dbm.h1",
        "dbm.h2",
        "layer1.cd_steps",
        "layer1.eta_w",
        "layer1.eta_b",
        "layer1.eta_c",
        "layer1.batch_size",
        "layer1.epochs",
        "layer1.weight_decay",
        "layer2.cd_steps",
        "layer2.eta_w",
        "layer2.eta_b",
        "layer2.eta_c",
        "layer2.batch_size",
        "layer2.epochs",
        "layer2.weight_decay",
        "softmax.lambda",
        "softmax.alpha",
        "softmax.iters",
        "train_per_class",
        "test_per_class",
        "seed",
    ];

    /// Small setup for quick runs: 32×32 images, 8×8 grid, 64-32-16 machine.
    pub fn small() -> Self {
        let mut cfg = PipelineConfig {
            working_size: 32,
            grid_w: 8,
            grid_h: 8,
            dbm: DbmConfig::new((64, 32, 16)),
            train_per_class: 20,
            test_per_class: 10,
            ..PipelineConfig::default()
        };
        cfg.sync();
        cfg
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.parse()
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.sync();
    }

    pub fn set_grid(&mut self, grid_w: usize, grid_h: usize) {
        self.grid_w = grid_w;
        self.grid_h = grid_h;
        self.sync();
    }

    /// Grid cell count, which is also the visible layer size.
    pub fn grid_len(&self) -> usize {
        self.grid_w * self.grid_h
    }

    pub fn split_seed(&self) -> u64 {
        self.seed
    }

    /// Re-derives the superpixel count, visible size and seeds.
    fn sync(&mut self) {
        let k = self.grid_len();
        self.slic.k = k;
        self.dbm.sizes.0 = k;
        self.slic.seed = self.seed.wrapping_add(1);
        self.dbm.layer1.seed = self.seed.wrapping_add(2);
        self.dbm.layer2.seed = self.seed.wrapping_add(3);
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Err(Error::Config { line: 0, reason });
        if self.working_size == 0 || self.grid_w == 0 || self.grid_h == 0 {
            return invalid("working_size and grid dimensions must be positive".into());
        }
        if self.grid_w > self.working_size || self.grid_h > self.working_size {
            return invalid(format!(
                "grid {}x{} is larger than the working size {}",
                self.grid_w, self.grid_h, self.working_size
            ));
        }
        if self.dbm.sizes.0 != self.grid_len() || self.slic.k != self.grid_len() {
            return invalid("visible size and superpixel count must equal grid_w * grid_h".into());
        }
        if self.preprocess == Preprocess::Pool
            && (!self.working_size.is_multiple_of(self.grid_w) || !self.working_size.is_multiple_of(self.grid_h))
        {
            return invalid(format!(
                "pooling needs working_size {} divisible by the grid {}x{}",
                self.working_size, self.grid_w, self.grid_h
            ));
        }
        self.slic.validate(self.working_size * self.working_size)?;
        self.dbm.validate()?;
        self.softmax.validate()?;
        Ok(())
    }

    fn apply(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: FromStr>(v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("invalid value `{v}`"))
        }
        fn layer(cd: &mut CdConfig, field: &str, v: &str) -> std::result::Result<(), String> {
            match field {
                "cd_steps" => cd.n = num(v)?,
                "eta_w" => cd.eta_w = num(v)?,
                "eta_b" => cd.eta_b = num(v)?,
                "eta_c" => cd.eta_c = num(v)?,
                "batch_size" => cd.batch_size = num(v)?,
                "epochs" => cd.epochs = num(v)?,
                "weight_decay" => cd.weight_decay = num(v)?,
                _ => return Err(format!("unknown key `{field}`")),
            }
            Ok(())
        }
        match key {
            "working_size" => self.working_size = num(value)?,
            "grid_w" => self.grid_w = num(value)?,
            "grid_h" => self.grid_h = num(value)?,
            "preprocess" => self.preprocess = value.parse()?,
            "slic.compactness" => self.slic.compactness = num(value)?,
            "slic.residual_threshold" => self.slic.residual_threshold = num(value)?,
            "slic.max_iters" => self.slic.max_iters = num(value)?,
            "slic.jitter" => self.slic.jitter = num(value)?,
            "dbm.h1" => self.dbm.sizes.1 = num(value)?,
            "dbm.h2" => self.dbm.sizes.2 = num(value)?,
            "softmax.lambda" => self.softmax.lambda = num(value)?,
            "softmax.alpha" => self.softmax.step = num(value)?,
            "softmax.iters" => self.softmax.iters = num(value)?,
            "train_per_class" => self.train_per_class = num(value)?,
            "test_per_class" => self.test_per_class = num(value)?,
            "seed" => self.seed = num(value)?,
            _ => match key.split_once('.') {
                Some(("layer1", field)) => layer(&mut self.dbm.layer1, field, value)?,
                Some(("layer2", field)) => layer(&mut self.dbm.layer2, field, value)?,
                _ => return Err(format!("unknown key `{key}`")),
            },
        }
        Ok(())
    }

    /// Every key with its current value, in [`Self::KEYS`] order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("working_size", &self.working_size);
        put("grid_w", &self.grid_w);
        put("grid_h", &self.grid_h);
        put("preprocess", &self.preprocess.name());
        put("slic.compactness", &self.slic.compactness);
        put("slic.residual_threshold", &self.slic.residual_threshold);
        put("slic.max_iters", &self.slic.max_iters);
        put("slic.jitter", &self.slic.jitter);
        put("dbm.h1", &self.dbm.sizes.1);
        put("dbm.h2", &self.dbm.sizes.2);
        for (name, cd) in [("layer1", &self.dbm.layer1), ("layer2", &self.dbm.layer2)] {
            put(&format!("{name}.cd_steps"), &cd.n);
            put(&format!("{name}.eta_w"), &cd.eta_w);
            put(&format!("{name}.eta_b"), &cd.eta_b);
            put(&format!("{name}.eta_c"), &cd.eta_c);
            put(&format!("{name}.batch_size"), &cd.batch_size);
            put(&format!("{name}.epochs"), &cd.epochs);
            put(&format!("{name}.weight_decay"), &cd.weight_decay);
        }
        put("softmax.lambda", &self.softmax.lambda);
        put("softmax.alpha", &self.softmax.step);
        put("softmax.iters", &self.softmax.iters);
        put("train_per_class", &self.train_per_class);
        put("test_per_class", &self.test_per_class);
        put("seed", &self.seed);
        out
    }
}

impl FromStr for PipelineConfig {
    type Err = Error;

    /// Starts from the defaults and applies each line in order.
    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split_once('#').map_or(raw, |(before, _)| before).trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| Error::Config { line: i + 1, reason };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            cfg.apply(key.trim(), value.trim()).map_err(err)?;
        }
        cfg.sync();
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_large_setup() {
        let cfg = PipelineConfig::default();
        assert_eq!(cfg.dbm.sizes, (1600, 1000, 500));
        assert_eq!(cfg.slic.k, 1600);
        assert_eq!((cfg.slic.seed, cfg.dbm.layer1.seed, cfg.dbm.layer2.seed), (1, 2, 3));
        cfg.validate().unwrap();
        PipelineConfig::small().validate().unwrap();
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = PipelineConfig::small();
        cfg.softmax.lambda = 0.1 + 0.2;
        cfg.dbm.layer2.eta_w = 1.0 / 3.0;
        cfg.slic.jitter = true;
        cfg.preprocess = Preprocess::Pool;
        cfg.set_seed(u64::MAX);
        let text = cfg.to_text();
        assert_eq!(text.lines().count(), PipelineConfig::KEYS.len());
        for (line, key) in text.lines().zip(PipelineConfig::KEYS) {
            assert!(line.starts_with(&format!("{key} = ")));
        }
        assert_eq!(text.parse::<PipelineConfig>().unwrap(), cfg);
    }

    #[test]
    fn parsing_rules() {
        let cfg: PipelineConfig = "# comment\n\n grid_w = 10 # trailing\ngrid_h=5\nworking_size = 50\nseed = 9\n"
            .parse()
            .unwrap();
        assert_eq!((cfg.grid_w, cfg.grid_h, cfg.slic.k, cfg.dbm.sizes.0), (10, 5, 50, 50));
        assert_eq!((cfg.slic.seed, cfg.dbm.layer1.seed, cfg.dbm.layer2.seed), (10, 11, 12));

        let err = "seed = 1\nlayer3.epochs = 4\n".parse::<PipelineConfig>().unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }), "{err}");
        assert!("bogus = 1".parse::<PipelineConfig>().is_err());
        assert!("grid_w 3".parse::<PipelineConfig>().is_err());
        assert!("grid_w = -3".parse::<PipelineConfig>().is_err());
        assert!("preprocess = conv".parse::<PipelineConfig>().is_err());
        assert!("layer1.epochs = 0".parse::<PipelineConfig>().is_err());
        assert!("preprocess = pool\ngrid_w = 30".parse::<PipelineConfig>().is_err());
    }
}
