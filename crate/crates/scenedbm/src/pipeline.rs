//! End-to-end training and evaluation: grid reduction, DBM pretraining,
//! feature extraction and softmax classification.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use scenedbm_core::dbm::{self, DbmParams, PretrainLog};
use scenedbm_core::image::{mean_pool_luminance, rgb_to_lab, Image};
use scenedbm_core::slic::{run_slic_lab, superpixels_to_grid};
use scenedbm_core::softmax::{self, LabeledSet, SoftmaxParams};
use scenedbm_core::Error as CoreError;

use crate::config::{PipelineConfig, Preprocess};
use crate::dataset::{Dataset, Item};
use crate::error::{Error, Result, StageExt};
use crate::pnm::read_pnm;

/// A trained DBM and classifier plus the configuration that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: PipelineConfig,
    pub dbm: DbmParams,
    pub softmax: SoftmaxParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageTime {
    pub stage: &'static str,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub timings: Vec<StageTime>,
    pub pretrain: PretrainLog,
    /// Mean per-unit squared error of the DBM reconstruction of the
    /// training grids.
    pub reconstruction_error: f64,
    pub softmax_cost: Vec<f64>,
    pub training_accuracy: f64,
}

impl TrainingLog {
    pub fn total_seconds(&self) -> f64 {
        self.timings.iter().map(|t| t.seconds).sum()
    }

    fn timed<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().stage(stage)?;
        let seconds = start.elapsed().as_secs_f64();
        info!("{stage}: {seconds:.3} s");
        self.timings.push(StageTime { stage, seconds });
        Ok(out)
    }
}

/// Resize to the working size, segment into `grid_w × grid_h` superpixels
/// and read one luminance value per grid cell.
pub fn preprocess(image: &Image, cfg: &PipelineConfig) -> Result<Vec<f64>> {
    let resized = image.resize_bilinear(cfg.working_size, cfg.working_size)?;
    let lab = rgb_to_lab(&resized);
    let map = run_slic_lab(&lab, &cfg.slic)?;
    Ok(superpixels_to_grid(&map, &lab, cfg.grid_w, cfg.grid_h)?)
}

/// Block-mean luminance on the same grid as [`preprocess`].
pub fn mean_pool_baseline(image: &Image, cfg: &PipelineConfig) -> Result<Vec<f64>> {
    let resized = image.resize_bilinear(cfg.working_size, cfg.working_size)?;
    Ok(mean_pool_luminance(&rgb_to_lab(&resized), cfg.grid_w, cfg.grid_h)?)
}

/// The grid vector selected by `cfg.preprocess`.
pub fn grid_vector(image: &Image, cfg: &PipelineConfig) -> Result<Vec<f64>> {
    match cfg.preprocess {
        Preprocess::Slic => preprocess(image, cfg),
        Preprocess::Pool => mean_pool_baseline(image, cfg),
    }
}

fn grid_vectors(items: &[&Item], cfg: &PipelineConfig) -> Result<Vec<Vec<f64>>> {
    items
        .par_iter()
        .map(|item| {
            let image = read_pnm(&item.path)?;
            grid_vector(&image, cfg).map_err(|e| match e {
                Error::Core(source) => Error::Image {
                    path: item.path.clone(),
                    reason: source.to_string(),
                },
                other => other,
            })
        })
        .collect()
}

fn features(dbm: &DbmParams, grids: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    grids
        .par_iter()
        .map(|v| dbm.extract_features(v).map_err(Error::from))
        .collect()
}

/// Greedy pretraining on the training grids. Returns the grids too so
/// callers can reuse them.
pub fn pretrain(dataset: &Dataset, cfg: &PipelineConfig, log: &mut TrainingLog) -> Result<(DbmParams, Vec<Vec<f64>>)> {
    cfg.validate()?;
    let train: Vec<&Item> = dataset.train().collect();
    if train.is_empty() {
        return Err(Error::Dataset("empty training split".into()));
    }
    let grids = log.timed("preprocess", || grid_vectors(&train, cfg))?;
    let (params, pretrain_log) = log.timed("pretrain", || Ok(dbm::pretrain_dbm(&grids, &cfg.dbm)?))?;
    log.reconstruction_error = dbm::reconstruction_error(&grids, &params).stage("pretrain")?;
    info!(
        "pretrain: stage errors {:.5} / {:.5}, dbm reconstruction {:.5}",
        pretrain_log
            .stage1
            .reconstruction_error
            .last()
            .copied()
            .unwrap_or(f64::NAN),
        pretrain_log
            .stage2
            .reconstruction_error
            .last()
            .copied()
            .unwrap_or(f64::NAN),
        log.reconstruction_error
    );
    log.pretrain = pretrain_log;
    Ok((params, grids))
}

/// Preprocess the training split, pretrain the DBM, extract features and
/// fit the softmax classifier.
pub fn run_training(dataset: &Dataset, cfg: &PipelineConfig) -> Result<(Model, TrainingLog)> {
    let mut log = TrainingLog::default();
    let (dbm, grids) = pretrain(dataset, cfg, &mut log)?;
    let feats = log.timed("features", || features(&dbm, &grids))?;
    let labels: Vec<usize> = dataset.train().map(|it| it.class).collect();
    let set = LabeledSet::from_rows(&feats, labels, dataset.num_classes()).stage("softmax")?;
    let fit = log.timed("softmax", || Ok(softmax::train_softmax(&set, &cfg.softmax)?))?;
    log.training_accuracy = softmax::accuracy(&set, &fit.params).stage("softmax")?;
    log.softmax_cost = fit.cost_trace;
    info!(
        "softmax: final cost {:.5}, training accuracy {:.4}",
        log.softmax_cost.last().copied().unwrap_or(f64::NAN),
        log.training_accuracy
    );
    let model = Model {
        config: cfg.clone(),
        dbm,
        softmax: fit.params,
    };
    Ok((model, log))
}

fn check_model(model: &Model, classes: usize) -> Result<()> {
    let cfg = &model.config;
    cfg.validate()?;
    let mismatch = |what, expected, found| Error::Core(CoreError::DimensionMismatch { what, expected, found });
    let (pv, _, ph2) = model.dbm.sizes();
    if pv != cfg.grid_len() {
        return Err(mismatch("dbm visible size vs grid", cfg.grid_len(), pv));
    }
    if model.softmax.features() != ph2 {
        return Err(mismatch(
            "softmax features vs dbm top layer",
            ph2,
            model.softmax.features(),
        ));
    }
    if model.softmax.classes() != classes {
        return Err(mismatch(
            "softmax classes vs dataset classes",
            classes,
            model.softmax.classes(),
        ));
    }
    Ok(())
}

/// Classifies every test item.
pub fn evaluate(dataset: &Dataset, model: &Model) -> Result<EvalReport> {
    let start = Instant::now();
    check_model(model, dataset.num_classes())?;
    let test: Vec<&Item> = dataset.test().collect();
    if test.is_empty() {
        return Err(Error::Dataset("empty test split".into()));
    }
    let grids = grid_vectors(&test, &model.config).stage("preprocess")?;
    let predicted: Vec<usize> = grids
        .par_iter()
        .map(|v| {
            let f = model.dbm.extract_features(v)?;
            model.softmax.predict(&f)
        })
        .collect::<scenedbm_core::Result<_>>()
        .stage("predict")?;
    let actual: Vec<usize> = test.iter().map(|it| it.class).collect();
    let mut report = EvalReport::from_predictions(&actual, &predicted, dataset.num_classes())?;
    report.wall_time_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Trains on the training split and evaluates on the test split. The
/// report's wall time covers both.
pub fn run_experiment(dataset: &Dataset, cfg: &PipelineConfig) -> Result<(Model, TrainingLog, EvalReport)> {
    let start = Instant::now();
    let (model, log) = run_training(dataset, cfg)?;
    let mut report = evaluate(dataset, &model)?;
    report.wall_time_seconds = start.elapsed().as_secs_f64();
    Ok((model, log, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub recognition_rate: f64,
    /// `confusion[actual][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub per_class_rate: Vec<f64>,
    pub wall_time_seconds: f64,
}

impl EvalReport {
    pub fn from_predictions(actual: &[usize], predicted: &[usize], classes: usize) -> Result<Self> {
        if actual.len() != predicted.len() {
            return Err(CoreError::DimensionMismatch {
                what: "prediction count",
                expected: actual.len(),
                found: predicted.len(),
            }
            .into());
        }
        if actual.is_empty() {
            return Err(Error::Dataset("no predictions to score".into()));
        }
        let mut confusion = vec![vec![0usize; classes]; classes];
        for (&a, &p) in actual.iter().zip(predicted) {
            let label = a.max(p);
            if label >= classes {
                return Err(CoreError::LabelOutOfRange { label, classes }.into());
            }
            confusion[a][p] += 1;
        }
        let correct: usize = (0..classes).map(|j| confusion[j][j]).sum();
        let per_class_rate = confusion
            .iter()
            .enumerate()
            .map(|(j, row)| {
                let n: usize = row.iter().sum();
                if n == 0 {
                    0.0
                } else {
                    row[j] as f64 / n as f64
                }
            })
            .collect();
        Ok(EvalReport {
            recognition_rate: correct as f64 / actual.len() as f64,
            confusion,
            per_class_rate,
            wall_time_seconds: 0.0,
        })
    }

    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        (0..self.confusion.len()).map(|j| self.confusion[j][j]).sum()
    }

    /// Human-readable table followed by a `[machine]` section with
    /// `recognition_rate=` and the row-major confusion counts.
    pub fn to_text(&self, class_names: &[String]) -> String {
        let k = self.confusion.len();
        let name = |j: usize| class_names.get(j).cloned().unwrap_or_else(|| j.to_string());
        let width = (0..k).map(|j| name(j).len()).max().unwrap_or(0).max(5);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "recognition rate: {:.4} ({}/{})",
            self.recognition_rate,
            self.correct(),
            self.total()
        );
        let _ = writeln!(out, "wall time: {:.3} s\n", self.wall_time_seconds);
        let _ = writeln!(
            out,
            "{:<width$}  {:>6}  {:>7}  {:>6}",
            "class", "tested", "correct", "rate"
        );
        for j in 0..k {
            let n: usize = self.confusion[j].iter().sum();
            let _ = writeln!(
                out,
                "{:<width$}  {:>6}  {:>7}  {:>6.4}",
                name(j),
                n,
                self.confusion[j][j],
                self.per_class_rate[j]
            );
        }
        let _ = writeln!(out, "\nconfusion (rows: actual, columns: predicted)");
        for (j, row) in self.confusion.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|c| format!("{c:>5}")).collect();
            let _ = writeln!(out, "{:<width$} {}", name(j), cells.join(""));
        }
        let _ = writeln!(out, "\n[machine]");
        let _ = writeln!(out, "recognition_rate={}", self.recognition_rate);
        let _ = writeln!(out, "classes={k}");
        let counts: Vec<String> = self.confusion.iter().flatten().map(|c| c.to_string()).collect();
        let _ = writeln!(out, "confusion={}", counts.join(" "));
        out
    }

    pub fn write(&self, path: impl AsRef<Path>, class_names: &[String]) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text(class_names)).map_err(|e| Error::io(path, e))
    }

    /// Reads the `[machine]` section back. Wall time and class names are not
    /// part of it.
    pub fn parse_machine(text: &str) -> Result<Self> {
        let bad = |what: &str| Error::Dataset(format!("report: {what}"));
        let section = text
            .split_once("[machine]")
            .ok_or_else(|| bad("missing [machine] section"))?
            .1;
        let field = |key: &str| {
            section
                .lines()
                .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
                .ok_or_else(|| bad(&format!("missing {key}")))
        };
        let k: usize = field("classes")?.trim().parse().map_err(|_| bad("invalid classes"))?;
        let counts: Vec<usize> = field("confusion")?
            .split_whitespace()
            .map(|c| c.parse().map_err(|_| bad("invalid confusion count")))
            .collect::<Result<_>>()?;
        if counts.len() != k * k {
            return Err(bad("confusion size does not match classes"));
        }
        let (mut actual, mut predicted) = (Vec::new(), Vec::new());
        for (idx, &c) in counts.iter().enumerate() {
            actual.extend(std::iter::repeat_n(idx / k, c));
            predicted.extend(std::iter::repeat_n(idx % k, c));
        }
        let report = EvalReport::from_predictions(&actual, &predicted, k)?;
        let rate: f64 = field("recognition_rate")?
            .trim()
            .parse()
            .map_err(|_| bad("invalid rate"))?;
        if rate != report.recognition_rate {
            return Err(bad("recognition_rate disagrees with the confusion counts"));
        }
        Ok(report)
    }
}
