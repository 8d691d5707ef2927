//! End-to-end pipelines comparing three training regimes on the same data:
//!
//! - `baseline`: fixed default hyperparameters, no search;
//! - `rmse_optimized`: search minimizing the point-wise error alone;
//! - `probability_informed`: search minimizing the composite loss.
//!
//! Every run writes `results.json` plus per-regime trial logs into its output
//! directory. `results.json` contains no timings or paths, so identical inputs
//! give identical bytes.

pub mod denoise;
pub mod ionosphere;
pub mod polydemo;
pub mod shm;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cdf::{make_grid, EmpiricalCdf};
use crate::data_io::{ensure_dir, write_json, write_text};
use crate::distance::{distance, DistanceKind};
use crate::distributions::RngStream;
use crate::error::{Error, Result};
use crate::hpo::{baseline_theta, optimize, OptResult, SearchSpace, Strategy, Task, TrialRecord, DEFAULT_BUDGET};
use crate::loss::{LossBreakdown, LossWeights};
use crate::svm::{HyperParams, KernelKind, BOX_BOUNDS, EPSILON_BOUNDS};

pub use denoise::{run_denoise, synthetic_image, DenoiseConfig, DenoiseReport};
pub use ionosphere::{run_ionosphere, IonosphereConfig, IonosphereReport};
pub use polydemo::{run_polydemo, PolyConfig, PolyReport};
pub use shm::{run_shm, shm_generate, ShmConfig, ShmReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Baseline,
    RmseOptimized,
    ProbabilityInformed,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Baseline, Regime::RmseOptimized, Regime::ProbabilityInformed];

    pub fn name(self) -> &'static str {
        match self {
            Regime::Baseline => "baseline",
            Regime::RmseOptimized => "rmse_optimized",
            Regime::ProbabilityInformed => "probability_informed",
        }
    }
}

/// How the untuned reference model is configured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    /// Gaussian kernel, scale 1, box 1, tube `IQR(y)/13.49`.
    Gaussian,
    /// The usual toolbox defaults: linear kernel, scale 1; box `IQR(y)/1.349`
    /// for regression and 1 for classification, tube `IQR(y)/13.49`.
    #[default]
    Linear,
}

impl BaselineKind {
    pub fn theta(self, targets: &[f64], task: Task) -> Result<HyperParams> {
        let mut t = baseline_theta(targets, task)?;
        if self == BaselineKind::Linear {
            t.kernel = KernelKind::Linear;
            if task == Task::Regression {
                t.box_constraint = (crate::hpo::iqr(targets)? / 1.349).clamp(BOX_BOUNDS.0, BOX_BOUNDS.1);
                t.epsilon = t.epsilon.map(|e| e.clamp(EPSILON_BOUNDS.0, EPSILON_BOUNDS.1));
            }
        }
        Ok(t)
    }
}

/// Search settings shared by both tuned regimes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSettings {
    pub budget: usize,
    pub strategy: Strategy,
    pub distance: DistanceKind,
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings { budget: DEFAULT_BUDGET, strategy: Strategy::Smbo, distance: DistanceKind::Bhattacharyya }
    }
}

/// Stream ids used by every pipeline, so regimes draw from identical sources.
pub(crate) mod streams {
    pub const DATA: u64 = 1;
    pub const MC_INPUTS: u64 = 2;
    pub const SEARCH: u64 = 3;
    pub const TEST: u64 = 4;
    pub const NOISE: u64 = 5;
}

/// The two searches, run from the same stream so they share an initial design.
pub(crate) fn tune_both<F>(
    objective: F,
    weights: LossWeights,
    task: Task,
    settings: &SearchSettings,
    rng: &RngStream,
) -> Result<(OptResult, OptResult)>
where
    F: Fn(&HyperParams, LossWeights) -> Result<LossBreakdown> + Sync,
{
    let space = SearchSpace::for_task(task);
    let stream = rng.derive(streams::SEARCH);
    let rmse = optimize(|t| objective(t, LossWeights::data_only()), &space, settings.budget, settings.strategy, &stream)?;
    let proposed = optimize(|t| objective(t, weights), &space, settings.budget, settings.strategy, &stream)?;
    Ok((rmse, proposed))
}

/// Distance between two CDFs on the default grid.
pub(crate) fn cdf_distance(kind: DistanceKind, target: &EmpiricalCdf, predicted: &EmpiricalCdf) -> Result<f64> {
    let grid = make_grid(target, predicted, crate::cdf::DEFAULT_GRID_SIZE)?;
    Ok(distance(kind, target, predicted, &grid))
}

/// Writes `<dir>/<regime>/trials.csv`, `<dir>/<regime>/history.json` and
/// `<dir>/convergence_<regime>.csv`.
pub(crate) fn write_search_logs(dir: &Path, regime: Regime, result: &OptResult) -> Result<()> {
    let sub = dir.join(regime.name());
    ensure_dir(&sub)?;
    write_text(&sub.join("trials.csv"), &result.trials_csv())?;
    write_json(&sub.join("history.json"), &result.history)?;
    let mut conv = String::from("index,total,best_so_far\n");
    for t in &result.history {
        conv.push_str(&format!("{},{},{}\n", t.index, t.breakdown.total, t.best_so_far));
    }
    write_text(&dir.join(format!("convergence_{}.csv", regime.name())), &conv)
}

/// Search summary carried in a regime report; absent for the baseline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub best_loss: f64,
    pub trials: usize,
    pub failed_trials: usize,
    pub history: Vec<TrialRecord>,
}

impl From<&OptResult> for SearchSummary {
    fn from(r: &OptResult) -> Self {
        SearchSummary {
            best_loss: r.best_loss,
            trials: r.history.len(),
            failed_trials: r.history.iter().filter(|t| t.error.is_some()).count(),
            history: r.history.clone(),
        }
    }
}

pub type Verdicts = BTreeMap<String, bool>;

/// Common view of every pipeline's report.
pub trait ExperimentReport: Serialize {
    fn verdicts(&self) -> &Verdicts;

    fn passed(&self) -> bool {
        self.verdicts().values().all(|&v| v)
    }
}

pub(crate) fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::NoObservations);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_values() {
        assert_eq!(median(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]).unwrap(), 2.5);
        assert!(median(&[]).is_err());
    }

    #[test]
    fn regime_names_match_serde() {
        for r in Regime::ALL {
            assert_eq!(serde_json::to_string(&r).unwrap(), format!("\"{}\"", r.name()));
        }
    }

    #[test]
    fn baseline_kinds() {
        let y = [-100.0, 0.0, 0.0, 13.49, 100.0];
        let g = BaselineKind::Gaussian.theta(&y, Task::Regression).unwrap();
        assert_eq!(g.kernel, KernelKind::Gaussian);
        let l = BaselineKind::Linear.theta(&y, Task::Regression).unwrap();
        assert_eq!(l.kernel, KernelKind::Linear);
        assert!((l.box_constraint - 10.0).abs() < 1e-12);
        let c = BaselineKind::Linear.theta(&y, Task::Classification).unwrap();
        assert_eq!((c.kernel, c.box_constraint, c.epsilon), (KernelKind::Linear, 1.0, None));
    }
}
