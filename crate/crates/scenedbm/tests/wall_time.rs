mod common;

use scenedbm::config::PipelineConfig;
use scenedbm::dataset::load_dataset;
use scenedbm::pipeline::run_experiment;

/// A 50×50 grid costs more end to end than a 40×40 grid on the same data.
#[test]
fn larger_grid_takes_longer() {
    let dir = tempfile::tempdir().unwrap();
    common::write_scene_dataset(dir.path(), 3, 8, 100, 31);
    let time = |grid: usize| {
        let mut cfg = PipelineConfig {
            train_per_class: 6,
            test_per_class: 2,
            ..PipelineConfig::default()
        };
        cfg.set_grid(grid, grid);
        cfg.dbm.sizes = (grid * grid, 500, 100);
        cfg.dbm.layer1.epochs = 10;
        cfg.dbm.layer2.epochs = 10;
        let data = load_dataset(dir.path(), cfg.train_per_class, cfg.test_per_class, cfg.split_seed()).unwrap();
        // Best of two runs to damp scheduler noise.
        (0..2)
            .map(|_| run_experiment(&data, &cfg).unwrap().2.wall_time_seconds)
            .fold(f64::INFINITY, f64::min)
    };
    let (t40, t50) = (time(40), time(50));
    println!("40x40: {t40:.3} s, 50x50: {t50:.3} s");
    assert!(t50 > t40, "40x40 {t40:.3} s vs 50x50 {t50:.3} s");
}
