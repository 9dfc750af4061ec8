use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use scenedbm::config::PipelineConfig;
use scenedbm::dataset::{load_dataset, Dataset};
use scenedbm::model::{self, ModelFile};
use scenedbm::pipeline::{self, TrainingLog};
use scenedbm::scenedbm_core::image::rgb_to_lab;
use scenedbm::scenedbm_core::slic::{run_slic_lab, superpixels_to_grid, SlicConfig};
use scenedbm::{labels, pnm, Error, Result};

/// Scene recognition with SLIC superpixels and a deep Boltzmann machine.
#[derive(Parser)]
#[command(name = "scenedbm", version)]
struct Cli {
    /// Seed for the split, SLIC and both CD stages. Overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the DBM and the classifier, then write a model file.
    Train {
        /// Directory with one subdirectory of PGM/PPM images per class.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also evaluate on the test split and write the report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Evaluate a trained model on the test split of a dataset.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Greedy DBM pretraining only; the model file has no classifier.
    Pretrain {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Segment one image into superpixels.
    Superpixel {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 10.0)]
        compactness: f64,
        #[arg(long, default_value_t = 10)]
        max_iters: usize,
        /// Label map output.
        #[arg(long)]
        out_labels: Option<PathBuf>,
        /// Print the grid reduction at this size, e.g. `40x40`.
        #[arg(long, value_parser = parse_grid)]
        out_grid: Option<(usize, usize)>,
    },
    /// Reduce an image to its grid and write the DBM reconstruction as PGM.
    Reconstruct {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WxH")?;
    let w = w.parse().map_err(|_| format!("invalid width `{w}`"))?;
    let h = h.parse().map_err(|_| format!("invalid height `{h}`"))?;
    if w == 0 || h == 0 {
        return Err("grid dimensions must be positive".into());
    }
    Ok((w, h))
}

fn load_config(path: Option<&PathBuf>, seed: Option<u64>) -> Result<PipelineConfig> {
    let mut cfg = match path {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.set_seed(seed);
    }
    Ok(cfg)
}

fn load_data(dir: &PathBuf, cfg: &PipelineConfig) -> Result<Dataset> {
    let data = load_dataset(dir, cfg.train_per_class, cfg.test_per_class, cfg.split_seed())?;
    info!("{} classes: {}", data.num_classes(), data.classes.join(", "));
    Ok(data)
}

fn print_timings(log: &TrainingLog) {
    for t in &log.timings {
        println!("{:<10} {:>10.3} s", t.stage, t.seconds);
    }
    println!("reconstruction error {:.6}", log.reconstruction_error);
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            data,
            config,
            out,
            report,
        } => {
            let cfg = load_config(config.as_ref(), cli.seed)?;
            let data = load_data(&data, &cfg)?;
            let (model, log) = pipeline::run_training(&data, &cfg)?;
            model::save_model(&out, &model)?;
            print_timings(&log);
            println!("training accuracy {:.4}", log.training_accuracy);
            if let Some(path) = report {
                let mut rep = pipeline::evaluate(&data, &model)?;
                rep.wall_time_seconds += log.total_seconds();
                rep.write(&path, &data.classes)?;
                println!("recognition_rate={}", rep.recognition_rate);
            }
        }
        Command::Eval { data, model, report } => {
            let model = model::load_model(&model)?;
            let data = load_data(&data, &model.config)?;
            let rep = pipeline::evaluate(&data, &model)?;
            rep.write(&report, &data.classes)?;
            print!("{}", rep.to_text(&data.classes));
        }
        Command::Pretrain { data, config, out } => {
            let cfg = load_config(config.as_ref(), cli.seed)?;
            let data = load_data(&data, &cfg)?;
            let mut log = TrainingLog::default();
            let (dbm, _) = pipeline::pretrain(&data, &cfg, &mut log)?;
            let file = ModelFile {
                config: cfg,
                rbm: None,
                dbm: Some(dbm),
                softmax: None,
            };
            model::save_file(&out, &file)?;
            print_timings(&log);
        }
        Command::Superpixel {
            input,
            k,
            compactness,
            max_iters,
            out_labels,
            out_grid,
        } => {
            let image = pnm::read_pnm(&input)?;
            let lab = rgb_to_lab(&image);
            let cfg = SlicConfig {
                compactness,
                max_iters,
                seed: cli.seed.unwrap_or(0),
                ..SlicConfig::new(k)
            };
            let map = run_slic_lab(&lab, &cfg)?;
            println!(
                "{} superpixels after {} iterations, residual {:.4}",
                map.num_superpixels(),
                map.iterations_used,
                map.final_residual
            );
            if let Some(path) = out_labels {
                labels::write_labels(path, &map)?;
            }
            if let Some((gw, gh)) = out_grid {
                let grid = superpixels_to_grid(&map, &lab, gw, gh)?;
                for row in grid.chunks(gw) {
                    let cells: Vec<String> = row.iter().map(|v| format!("{v:.4}")).collect();
                    println!("{}", cells.join(" "));
                }
            }
        }
        Command::Reconstruct { model, input, out } => {
            let file = model::load_file(&model)?;
            let dbm = file.dbm.ok_or_else(|| Error::Model("missing DBM section".into()))?;
            let cfg = file.config;
            let grid = pipeline::grid_vector(&pnm::read_pnm(&input)?, &cfg)?;
            let recon = dbm.reconstruct(&grid)?;
            pnm::write_gray_f64(&out, cfg.grid_w, cfg.grid_h, &recon)?;
            let err = grid.iter().zip(&recon).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / grid.len() as f64;
            println!("reconstruction error {err:.6}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
