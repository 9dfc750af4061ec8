//! Scene recognition from image directories: SLIC grid reduction, a two-layer
//! deep Boltzmann machine for features and a softmax classifier.
//!
//! The numerics live in [`scenedbm_core`]; this crate adds PGM/PPM IO,
//! dataset loading, configuration files, model files and the `scenedbm`
//! command line tool.
//!
//! ```no_run
//! use scenedbm::{config::PipelineConfig, dataset::load_dataset, pipeline};
//!
//! let cfg = PipelineConfig::small();
//! let data = load_dataset("scenes/", cfg.train_per_class, cfg.test_per_class, cfg.split_seed())?;
//! let (_model, _log, report) = pipeline::run_experiment(&data, &cfg)?;
//! println!("{}", report.to_text(&data.classes));
//! # Ok::<(), scenedbm::Error>(())
//! ```

pub mod config;
pub mod dataset;
mod error;
pub mod labels;
pub mod model;
pub mod pipeline;
pub mod pnm;

pub use error::{Error, Result};
pub use scenedbm_core;
