//! Synthetic structural-health-monitoring regression.
//!
//! Five uniformly distributed inputs (vibration frequency, strain,
//! displacement, temperature, load) drive a linear damage index with additive
//! Gaussian noise, clamped to `[0, 100]`.

use std::collections::BTreeMap;
use std::path::Path;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{
    cdf_distance, streams, tune_both, write_search_logs, BaselineKind, ExperimentReport, Regime, SearchSettings,
    SearchSummary, Verdicts,
};
use crate::cdf::{ecdf_build, DEFAULT_GRID_SIZE};
use crate::data_io::{ensure_dir, write_json};
use crate::distance::DistanceMode;
use crate::distributions::{InputDistribution, Marginal, RngStream};
use crate::error::{Error, Result};
use crate::hpo::Task;
use crate::loss::{evaluate_regression, DataLossScale, Dataset, LossWeights, ObjectiveConfig, DEFAULT_MC_SAMPLES};
use crate::matrix::Matrix;
use crate::metrics::rmse;
use crate::svm::{HyperParams, SolverOptions};

pub const SHM_INPUT_NAMES: [&str; 5] = ["f_v", "strain", "d", "T", "L"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShmConfig {
    pub n_samples: usize,
    /// Standard deviation of the additive noise.
    pub noise_sd: f64,
    pub ranges: [(f64, f64); 5],
    pub coefficients: [f64; 5],
    pub bias: f64,
    /// `None` disables clamping.
    pub clamp: Option<(f64, f64)>,
    pub weights: LossWeights,
    pub search: SearchSettings,
    /// Size of the frozen input sample used inside the objective.
    pub mc_samples: usize,
    /// Size of the fresh draw used for test metrics.
    pub test_samples: usize,
    pub data_loss_scale: DataLossScale,
    pub baseline: BaselineKind,
}

impl Default for ShmConfig {
    fn default() -> Self {
        ShmConfig {
            n_samples: 400,
            noise_sd: 10.0,
            ranges: [(10.0, 30.0), (50.0, 200.0), (0.5, 2.0), (20.0, 60.0), (10.0, 100.0)],
            coefficients: [0.5, 0.3, -0.2, 0.1, 0.05],
            bias: 0.0,
            clamp: Some((0.0, 100.0)),
            weights: LossWeights { alpha: 0.3, beta: 0.7, gamma: 0.0 },
            search: SearchSettings::default(),
            mc_samples: DEFAULT_MC_SAMPLES,
            test_samples: 10_000,
            data_loss_scale: DataLossScale::Standardized,
            baseline: BaselineKind::default(),
        }
    }
}

impl ShmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 || self.test_samples < 100 {
            return Err(Error::invalid("shm needs n_samples >= 2 and test_samples >= 100"));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::invalid(format!("noise_sd must be >= 0, got {}", self.noise_sd)));
        }
        if let Some((lo, hi)) = self.clamp {
            if !(lo <= hi) {
                return Err(Error::invalid("clamp bounds out of order"));
            }
        }
        self.weights.validate()?;
        self.input_distribution().map(|_| ())
    }

    pub fn input_distribution(&self) -> Result<InputDistribution> {
        InputDistribution::new(self.ranges.iter().map(|&(lo, hi)| Marginal::uniform(lo, hi)).collect::<Result<_>>()?)
    }

    /// Noise-free damage index for one input row.
    pub fn noiseless(&self, row: &[f64]) -> f64 {
        self.bias + self.coefficients.iter().zip(row).map(|(c, x)| c * x).sum::<f64>()
    }

    fn clamp(&self, v: f64) -> f64 {
        match self.clamp {
            Some((lo, hi)) => v.clamp(lo, hi),
            None => v,
        }
    }
}

/// Draws `count` rows: inputs from the stream's first child, noise from the second.
fn generate(cfg: &ShmConfig, count: usize, rng: &RngStream) -> Result<Dataset> {
    let x = cfg.input_distribution()?.sample(count, &rng.derive(0))?;
    let noise = Normal::new(0.0, cfg.noise_sd).map_err(|e| Error::invalid(e.to_string()))?;
    let mut g = rng.derive(1).generator();
    let y = x.iter_rows().map(|row| cfg.clamp(cfg.noiseless(row) + noise.sample(&mut g))).collect();
    Dataset::new(x, y)
}

/// `cfg.n_samples` rows of inputs and noisy, clamped damage levels.
pub fn shm_generate(cfg: &ShmConfig, rng: &RngStream) -> Result<Dataset> {
    cfg.validate()?;
    generate(cfg, cfg.n_samples, rng)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShmRegimeReport {
    pub theta: HyperParams,
    pub train_rmse: f64,
    /// Composite-loss terms of this model under the run's weights.
    pub train_data_loss: f64,
    pub train_prob_loss: f64,
    pub train_total: f64,
    pub test_rmse: f64,
    pub cdf_distance_on_fresh_samples: f64,
    pub support_vectors: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShmReport {
    pub experiment: String,
    pub seed: u64,
    pub config: ShmConfig,
    pub regimes: BTreeMap<Regime, ShmRegimeReport>,
    pub verdicts: Verdicts,
}

impl ExperimentReport for ShmReport {
    fn verdicts(&self) -> &Verdicts {
        &self.verdicts
    }
}

/// Generates the data, runs all three regimes and writes the run directory.
pub fn run_shm(cfg: &ShmConfig, rng: &RngStream, out_dir: &Path) -> Result<ShmReport> {
    cfg.validate()?;
    ensure_dir(out_dir)?;
    let train = generate(cfg, cfg.n_samples, &rng.derive(streams::DATA))?;
    let test = generate(cfg, cfg.test_samples, &rng.derive(streams::TEST))?;
    let target = ecdf_build(&train.y)?;

    let mut objective = ObjectiveConfig::new(target.clone(), cfg.input_distribution()?);
    objective.weights = cfg.weights;
    objective.distance = cfg.search.distance;
    objective.distance_mode = DistanceMode::Masses;
    objective.mc_samples = cfg.mc_samples;
    objective.grid_size = DEFAULT_GRID_SIZE;
    objective.data_loss_scale = cfg.data_loss_scale;
    objective.solver = SolverOptions::default();
    let objective = objective.freeze_inputs(&rng.derive(streams::MC_INPUTS))?;
    let mc_rng = rng.derive(streams::MC_INPUTS);

    let (rmse_run, proposed_run) = tune_both(
        |theta, weights| {
            let cfg = ObjectiveConfig { weights, ..objective.clone() };
            evaluate_regression(theta, &train, &cfg, &mc_rng).map(|e| e.breakdown)
        },
        cfg.weights,
        Task::Regression,
        &cfg.search,
        rng,
    )?;
    write_search_logs(out_dir, Regime::RmseOptimized, &rmse_run)?;
    write_search_logs(out_dir, Regime::ProbabilityInformed, &proposed_run)?;

    let test_target = ecdf_build(&test.y)?;
    target.save_csv(&out_dir.join("cdf_target.csv"))?;
    test_target.save_csv(&out_dir.join("cdf_test.csv"))?;

    let thetas = [
        (Regime::Baseline, cfg.baseline.theta(&train.y, Task::Regression)?, None),
        (Regime::RmseOptimized, rmse_run.best_theta, Some(&rmse_run)),
        (Regime::ProbabilityInformed, proposed_run.best_theta, Some(&proposed_run)),
    ];
    let mut regimes = BTreeMap::new();
    for (regime, theta, search) in thetas {
        let eval = evaluate_regression(&theta, &train, &objective, &mc_rng)?;
        let fitted = eval.model.predict(&train.x)?;
        let predicted = eval.model.predict(&test.x)?;
        let predicted_cdf = ecdf_build(&predicted)?;
        predicted_cdf.save_csv(&out_dir.join(format!("cdf_predicted_{}.csv", regime.name())))?;
        regimes.insert(
            regime,
            ShmRegimeReport {
                theta,
                train_rmse: rmse(&train.y, &fitted)?,
                train_data_loss: eval.breakdown.data_loss,
                train_prob_loss: eval.breakdown.prob_loss,
                train_total: eval.breakdown.total,
                test_rmse: rmse(&test.y, &predicted)?,
                cdf_distance_on_fresh_samples: cdf_distance(cfg.search.distance, &test_target, &predicted_cdf)?,
                support_vectors: eval.model.dual_coef.len(),
                converged: eval.model.converged,
                search: search.map(SearchSummary::from),
            },
        );
    }

    let r = |k: Regime| &regimes[&k];
    let mut verdicts = Verdicts::new();
    verdicts.insert(
        "rmse_optimized_has_lowest_train_rmse".into(),
        r(Regime::RmseOptimized).train_rmse <= r(Regime::Baseline).train_rmse
            && r(Regime::RmseOptimized).train_rmse <= r(Regime::ProbabilityInformed).train_rmse,
    );
    verdicts.insert(
        "probability_informed_cdf_distance_below_rmse_optimized".into(),
        r(Regime::ProbabilityInformed).cdf_distance_on_fresh_samples
            < r(Regime::RmseOptimized).cdf_distance_on_fresh_samples,
    );

    let report =
        ShmReport { experiment: "shm".into(), seed: rng.seed, config: cfg.clone(), regimes, verdicts };
    write_json(&out_dir.join("results.json"), &report)?;
    Ok(report)
}

/// Inputs at their lower (or upper) bounds, for checking the generator by hand.
pub fn corner(cfg: &ShmConfig, upper: bool) -> Matrix {
    Matrix::from_vec(1, 5, cfg.ranges.iter().map(|&(lo, hi)| if upper { hi } else { lo }).collect())
        .expect("five columns")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corners() {
        let cfg = ShmConfig::default();
        assert!((cfg.noiseless(corner(&cfg, false).row(0)) - 22.4).abs() < 1e-12);
        assert!((cfg.noiseless(corner(&cfg, true).row(0)) - 85.6).abs() < 1e-12);
    }

    #[test]
    fn noise_sd_matches() {
        let cfg = ShmConfig { n_samples: 10_000, clamp: None, ..ShmConfig::default() };
        let d = shm_generate(&cfg, &RngStream::new(3)).unwrap();
        let resid: Vec<f64> = d.x.iter_rows().zip(&d.y).map(|(r, y)| y - cfg.noiseless(r)).collect();
        let m = resid.iter().sum::<f64>() / resid.len() as f64;
        let sd = (resid.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (resid.len() - 1) as f64).sqrt();
        assert!((9.7..=10.3).contains(&sd), "sd = {sd}");
    }

    #[test]
    fn inputs_in_ranges_and_clamped() {
        let cfg = ShmConfig { noise_sd: 200.0, ..ShmConfig::default() };
        let d = shm_generate(&cfg, &RngStream::new(1)).unwrap();
        assert_eq!((d.x.rows(), d.x.cols(), d.len()), (400, 5, 400));
        for row in d.x.iter_rows() {
            for (v, &(lo, hi)) in row.iter().zip(&cfg.ranges) {
                assert!(*v >= lo && *v < hi);
            }
        }
        assert!(d.y.iter().all(|v| (0.0..=100.0).contains(v)));
        assert!(d.y.iter().any(|&v| v == 0.0 || v == 100.0));
    }

    #[test]
    fn config_json_round_trip_and_defaults() {
        let cfg = ShmConfig::default();
        let s = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<ShmConfig>(&s).unwrap(), cfg);
        let partial: ShmConfig = serde_json::from_str(r#"{"n_samples": 50}"#).unwrap();
        assert_eq!(partial.n_samples, 50);
        assert_eq!((partial.weights.alpha, partial.weights.beta), (0.3, 0.7));
        assert!(serde_json::from_str::<ShmConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
