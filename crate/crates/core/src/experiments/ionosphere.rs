//! Radar-return classification on the Ionosphere data, repeated over several
//! stratified splits.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    median, tune_both, write_search_logs, BaselineKind, ExperimentReport, Regime, SearchSettings, SearchSummary,
    Verdicts,
};
use crate::cdf::ecdf_build;
use crate::data_io::{ensure_dir, load_ionosphere, split_indices, write_json, write_text, LabeledDataset, SplitSpec};
use crate::distributions::RngStream;
use crate::error::{Error, Result};
use crate::hpo::Task;
use crate::loss::{evaluate_classification, ClassOutput, LossWeights, ObjectiveConfig};
use crate::metrics::{confusion, report, ClassificationReport, ConfusionMatrix};
use crate::svm::HyperParams;

/// Where the label CDF of a candidate model is measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalInputs {
    /// Every feature row of the data set, labels unused.
    #[default]
    AllRows,
    /// The training rows only.
    TrainingRows,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IonosphereConfig {
    pub path: PathBuf,
    pub train_fraction: f64,
    pub stratified: bool,
    pub seeds: Vec<u64>,
    pub weights: LossWeights,
    pub search: SearchSettings,
    pub eval_inputs: EvalInputs,
    pub class_output: ClassOutput,
    pub baseline: BaselineKind,
}

impl Default for IonosphereConfig {
    fn default() -> Self {
        IonosphereConfig {
            path: PathBuf::from("data/ionosphere.data"),
            train_fraction: 0.2,
            stratified: true,
            seeds: vec![1, 2, 3, 4, 5],
            weights: LossWeights { alpha: 0.3, beta: 0.7, gamma: 0.0 },
            search: SearchSettings::default(),
            eval_inputs: EvalInputs::default(),
            class_output: ClassOutput::Labels,
            baseline: BaselineKind::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassRegimeReport {
    pub theta: HyperParams,
    pub train_error: f64,
    pub train_prob_loss: f64,
    pub train_total: f64,
    pub confusion: ConfusionMatrix,
    pub test: ClassificationReport,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub train_rows: usize,
    pub test_rows: usize,
    pub regimes: BTreeMap<Regime, ClassRegimeReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IonosphereReport {
    pub experiment: String,
    pub config: IonosphereConfig,
    pub rows: usize,
    pub per_seed: Vec<SeedReport>,
    /// Median of each test metric across seeds.
    pub median: BTreeMap<Regime, ClassificationReport>,
    pub verdicts: Verdicts,
}

impl ExperimentReport for IonosphereReport {
    fn verdicts(&self) -> &Verdicts {
        &self.verdicts
    }
}

/// Reference accuracy of the probability-informed model and its tolerance.
pub const REFERENCE_ACCURACY: f64 = 0.91;
pub const REFERENCE_TOLERANCE: f64 = 0.06;

fn run_seed(cfg: &IonosphereConfig, data: &LabeledDataset, seed: u64, out_dir: &Path) -> Result<SeedReport> {
    let spec = SplitSpec { train_fraction: cfg.train_fraction, stratified: cfg.stratified, seed };
    let (tr, te) = split_indices(&data.labels, &spec)?;
    let (train, test) = (data.subset(&tr), data.subset(&te));
    let target = ecdf_build(&train.labels.iter().map(|&l| f64::from(l)).collect::<Vec<_>>())?;
    let eval_rows = match cfg.eval_inputs {
        EvalInputs::AllRows => data.features.clone(),
        EvalInputs::TrainingRows => train.features.clone(),
    };
    if eval_rows.rows() < 100 {
        return Err(Error::invalid(format!("need at least 100 evaluation rows, have {}", eval_rows.rows())));
    }
    let mut objective = ObjectiveConfig::with_frozen_inputs(target, eval_rows);
    objective.weights = cfg.weights;
    objective.distance = cfg.search.distance;
    objective.class_output = cfg.class_output;
    let rng = RngStream::new(seed);

    let (rmse_run, proposed_run) = tune_both(
        |theta, weights| {
            let cfg = ObjectiveConfig { weights, ..objective.clone() };
            evaluate_classification(theta, &train, &cfg, &rng).map(|e| e.breakdown)
        },
        cfg.weights,
        Task::Classification,
        &cfg.search,
        &rng,
    )?;
    let dir = out_dir.join(format!("seed_{seed}"));
    ensure_dir(&dir)?;
    write_search_logs(&dir, Regime::RmseOptimized, &rmse_run)?;
    write_search_logs(&dir, Regime::ProbabilityInformed, &proposed_run)?;

    let labels: Vec<f64> = train.labels.iter().map(|&l| f64::from(l)).collect();
    let thetas = [
        (Regime::Baseline, cfg.baseline.theta(&labels, Task::Classification)?, None),
        (Regime::RmseOptimized, rmse_run.best_theta, Some(&rmse_run)),
        (Regime::ProbabilityInformed, proposed_run.best_theta, Some(&proposed_run)),
    ];
    let mut regimes = BTreeMap::new();
    for (regime, theta, search) in thetas {
        let eval = evaluate_classification(&theta, &train, &objective, &rng)?;
        let predicted: Vec<u8> = eval.model.predict(&test.features)?.iter().map(|&s| u8::from(s > 0.0)).collect();
        let cm = confusion(&test.labels, &predicted)?;
        write_text(&dir.join(format!("confusion_{}.csv", regime.name())), &cm.to_csv_string())?;
        eval.predicted_cdf.save_csv(&dir.join(format!("cdf_predicted_{}.csv", regime.name())))?;
        regimes.insert(
            regime,
            ClassRegimeReport {
                theta,
                train_error: eval.breakdown.data_loss,
                train_prob_loss: eval.breakdown.prob_loss,
                train_total: eval.breakdown.total,
                test: report(&cm),
                confusion: cm,
                converged: eval.model.converged,
                search: search.map(SearchSummary::from),
            },
        );
    }
    objective.target_cdf.save_csv(&dir.join("cdf_target.csv"))?;
    Ok(SeedReport { seed, train_rows: train.len(), test_rows: test.len(), regimes })
}

/// Runs every seed of `cfg.seeds` and summarizes by the median across seeds.
pub fn run_ionosphere(cfg: &IonosphereConfig, out_dir: &Path) -> Result<IonosphereReport> {
    cfg.weights.validate()?;
    if cfg.seeds.is_empty() {
        return Err(Error::invalid("ionosphere needs at least one seed"));
    }
    let data = load_ionosphere(&cfg.path)?;
    ensure_dir(out_dir)?;
    let per_seed = cfg.seeds.iter().map(|&s| run_seed(cfg, &data, s, out_dir)).collect::<Result<Vec<_>>>()?;

    let mut medians = BTreeMap::new();
    for regime in Regime::ALL {
        let pick = |f: fn(&ClassificationReport) -> f64| {
            median(&per_seed.iter().map(|s| f(&s.regimes[&regime].test)).collect::<Vec<_>>())
        };
        medians.insert(
            regime,
            ClassificationReport {
                accuracy: pick(|r| r.accuracy)?,
                precision: pick(|r| r.precision)?,
                recall: pick(|r| r.recall)?,
                f1: pick(|r| r.f1)?,
            },
        );
    }
    let acc = |r: Regime| medians[&r].accuracy;
    let mut verdicts = Verdicts::new();
    verdicts.insert(
        "median_accuracy_proposed_gt_baseline_gt_rmse".into(),
        acc(Regime::ProbabilityInformed) > acc(Regime::Baseline) && acc(Regime::Baseline) > acc(Regime::RmseOptimized),
    );
    verdicts.insert(
        "median_accuracy_proposed_gt_rmse".into(),
        acc(Regime::ProbabilityInformed) > acc(Regime::RmseOptimized),
    );
    verdicts.insert(
        "median_accuracy_proposed_within_reference_band".into(),
        (acc(Regime::ProbabilityInformed) - REFERENCE_ACCURACY).abs() <= REFERENCE_TOLERANCE,
    );

    let report = IonosphereReport {
        experiment: "ionosphere".into(),
        config: cfg.clone(),
        rows: data.len(),
        per_seed,
        median: medians,
        verdicts,
    };
    write_json(&out_dir.join("results.json"), &report)?;
    Ok(report)
}
