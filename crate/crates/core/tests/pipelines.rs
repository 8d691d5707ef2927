//! Small-budget end-to-end runs of every pipeline.

use std::path::{Path, PathBuf};

use cdfmatch::distributions::RngStream;
use cdfmatch::experiments::{
    run_denoise, run_ionosphere, run_polydemo, run_shm, DenoiseConfig, ExperimentReport, IonosphereConfig, PolyConfig,
    Regime, SearchSettings, ShmConfig,
};
use cdfmatch::Error;

fn data_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/ionosphere.data")
}

fn small_search() -> SearchSettings {
    SearchSettings { budget: 8, ..SearchSettings::default() }
}

fn assert_files(dir: &Path, names: &[&str]) {
    for n in names {
        assert!(dir.join(n).is_file(), "missing {}", dir.join(n).display());
    }
}

#[test]
fn shm_small_run_writes_everything() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ShmConfig { n_samples: 120, mc_samples: 1000, test_samples: 1000, search: small_search(), ..ShmConfig::default() };
    let report = run_shm(&cfg, &RngStream::new(4), dir.path()).unwrap();
    assert_eq!(report.regimes.len(), 3);
    for (regime, r) in &report.regimes {
        assert!(r.train_rmse.is_finite() && r.test_rmse.is_finite() && r.cdf_distance_on_fresh_samples >= 0.0);
        assert_eq!(r.search.is_some(), *regime != Regime::Baseline);
        assert!(r.theta.within_bounds() || *regime == Regime::Baseline);
    }
    let trials = report.regimes[&Regime::RmseOptimized].search.as_ref().unwrap();
    assert_eq!(trials.trials, 8);
    assert_files(
        dir.path(),
        &[
            "results.json",
            "cdf_target.csv",
            "cdf_test.csv",
            "cdf_predicted_baseline.csv",
            "convergence_rmse_optimized.csv",
            "convergence_probability_informed.csv",
            "rmse_optimized/trials.csv",
            "probability_informed/history.json",
        ],
    );
    let csv = std::fs::read_to_string(dir.path().join("convergence_rmse_optimized.csv")).unwrap();
    assert_eq!(csv.lines().count(), 9);
    assert_eq!(report.verdicts().len(), 2);
}

#[test]
fn denoise_small_run_writes_images() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = DenoiseConfig {
        synthetic_size: 40,
        train_pixels: 150,
        eval_pixels: 400,
        search: small_search(),
        ..DenoiseConfig::default()
    };
    let report = run_denoise(&cfg, &RngStream::new(4), dir.path()).unwrap();
    assert_eq!((report.width, report.height), (40, 40));
    assert!(report.regimes.values().all(|r| r.psnr.is_finite() && (-1.0..=1.0).contains(&r.ssim)));
    assert_files(
        dir.path(),
        &["clean.pgm", "noisy.pgm", "denoised_baseline.pgm", "denoised_rmse_optimized.pgm", "denoised_probability_informed.pgm"],
    );
    let img = cdfmatch::data_io::load_pgm(&dir.path().join("denoised_baseline.pgm")).unwrap();
    assert_eq!((img.width(), img.height()), (40, 40));
}

#[test]
fn ionosphere_single_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = IonosphereConfig { path: data_path(), seeds: vec![2], search: small_search(), ..IonosphereConfig::default() };
    let report = run_ionosphere(&cfg, dir.path()).unwrap();
    assert_eq!(report.rows, 351);
    let seed = &report.per_seed[0];
    assert_eq!(seed.train_rows + seed.test_rows, 351);
    assert!((seed.train_rows as f64 - 0.2 * 351.0).abs() <= 2.0);
    for r in seed.regimes.values() {
        let c = &r.confusion;
        assert_eq!(c.tp + c.fp + c.tn + c.fn_, seed.test_rows);
        assert!((0.0..=1.0).contains(&r.test.accuracy));
    }
    assert_files(&dir.path().join("seed_2"), &["confusion_baseline.csv", "cdf_target.csv"]);
}

#[test]
fn ionosphere_missing_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = IonosphereConfig { path: dir.path().join("nope.data"), ..IonosphereConfig::default() };
    assert!(matches!(run_ionosphere(&cfg, dir.path()), Err(Error::Io { .. })));
}

#[test]
fn polydemo_prefers_a_high_order() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_polydemo(&PolyConfig::default(), &RngStream::new(1), dir.path()).unwrap();
    assert_eq!(report.candidates.len(), 5);
    // training error can only fall as the order grows
    assert!(report.candidates.windows(2).all(|w| w[1].train_rmse <= w[0].train_rmse + 1e-12));
    assert!(report.selected_order >= 4, "selected {}", report.selected_order);
    assert_files(dir.path(), &["candidates.csv", "cdf_target.csv", "cdf_predicted_order5.csv"]);
}
