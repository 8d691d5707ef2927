//! Composite objective: weighted point-wise error, CDF distance and an
//! optional residual penalty, evaluated for one hyperparameter setting.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cdf::{cdf_of_predictions, make_grid, EmpiricalCdf, DEFAULT_GRID_SIZE};
use crate::data_io::LabeledDataset;
use crate::distance::{distance_with_mode, DistanceKind, DistanceMode};
use crate::distributions::{InputDistribution, RngStream};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics;
use crate::svm::{svc_train, svr_train, HyperParams, SolverOptions, SvcModel, SvrModel};

pub const DEFAULT_MC_SAMPLES: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub gamma: f64,
}

impl LossWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let w = LossWeights { alpha, beta, gamma };
        w.validate()?;
        Ok(w)
    }

    /// Point-wise error only.
    pub fn data_only() -> Self {
        LossWeights { alpha: 1.0, beta: 0.0, gamma: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !(ok(self.alpha) && ok(self.beta) && ok(self.gamma)) || !(self.alpha + self.beta > 0.0) {
            return Err(Error::invalid(format!(
                "loss weights need alpha, beta, gamma >= 0 and alpha + beta > 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { alpha: 0.3, beta: 0.7, gamma: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub data_loss: f64,
    pub prob_loss: f64,
    pub physics_loss: f64,
    pub total: f64,
    /// Square root of `data_loss`.
    pub rmse: f64,
}

impl LossBreakdown {
    pub fn combine(weights: &LossWeights, data_loss: f64, prob_loss: f64, physics_loss: f64) -> Self {
        LossBreakdown {
            data_loss,
            prob_loss,
            physics_loss,
            total: weights.alpha * data_loss + weights.beta * prob_loss + weights.gamma * physics_loss,
            rmse: data_loss.sqrt(),
        }
    }

    /// Placeholder for a trial whose evaluation failed.
    pub fn failed() -> Self {
        LossBreakdown {
            data_loss: f64::INFINITY,
            prob_loss: f64::INFINITY,
            physics_loss: f64::INFINITY,
            total: f64::INFINITY,
            rmse: f64::INFINITY,
        }
    }
}

/// Residual `R(y_hat, x)` whose squared norm is penalized.
pub type Residual = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

pub fn data_loss(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    metrics::mse(y_true, y_pred)
}

/// Mean squared residual norm; 0 without a residual.
pub fn physics_loss(residual: Option<&Residual>, x: &Matrix, y_pred: &[f64]) -> Result<f64> {
    let Some(r) = residual else { return Ok(0.0) };
    if x.rows() != y_pred.len() {
        return Err(Error::LengthMismatch { left: x.rows(), right: y_pred.len() });
    }
    if y_pred.is_empty() {
        return Err(Error::NoObservations);
    }
    let mut sum = 0.0;
    let mut bad = 0;
    for (row, &y) in x.iter_rows().zip(y_pred) {
        let v = r(y, row);
        bad += v.iter().filter(|e| !e.is_finite()).count();
        sum += v.iter().map(|e| e * e).sum::<f64>();
    }
    if bad > 0 {
        return Err(Error::NonFinite { what: "residual values", count: bad });
    }
    Ok(sum / y_pred.len() as f64)
}

/// Which rows the point-wise error is measured on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum DataLossOn {
    /// The rows the model was fitted on.
    #[default]
    Training,
    /// Hold back the last `fraction` of a seeded permutation, fit on the rest.
    Holdout { fraction: f64, seed: u64 },
}

/// Units of the regression error.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataLossScale {
    /// Squared error in target units.
    #[default]
    Raw,
    /// Squared error divided by the training-target variance.
    Standardized,
}

/// What the classifier contributes to the predicted CDF.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassOutput {
    /// Hard labels as 0/1.
    #[default]
    Labels,
    /// Raw decision margins.
    Margins,
}

#[derive(Clone)]
pub struct ObjectiveConfig {
    pub weights: LossWeights,
    pub distance: DistanceKind,
    pub distance_mode: DistanceMode,
    pub mc_samples: usize,
    pub grid_size: usize,
    pub target_cdf: EmpiricalCdf,
    /// Sampled when no frozen inputs are set.
    pub input_dist: Option<InputDistribution>,
    /// Common random numbers shared by every evaluation.
    pub frozen_mc_inputs: Option<Arc<Matrix>>,
    pub residual: Option<Residual>,
    pub data_loss_on: DataLossOn,
    pub data_loss_scale: DataLossScale,
    pub class_output: ClassOutput,
    pub solver: SolverOptions,
}

impl fmt::Debug for ObjectiveConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectiveConfig")
            .field("weights", &self.weights)
            .field("distance", &self.distance)
            .field("distance_mode", &self.distance_mode)
            .field("mc_samples", &self.mc_samples)
            .field("grid_size", &self.grid_size)
            .field("frozen_mc_inputs", &self.frozen_mc_inputs.as_ref().map(|m| (m.rows(), m.cols())))
            .field("residual", &self.residual.is_some())
            .field("data_loss_on", &self.data_loss_on)
            .field("data_loss_scale", &self.data_loss_scale)
            .finish_non_exhaustive()
    }
}

impl ObjectiveConfig {
    /// Defaults: weights 0.3/0.7/0, Bhattacharyya on masses, 10^4 samples, 100 thresholds.
    pub fn new(target_cdf: EmpiricalCdf, input_dist: InputDistribution) -> Self {
        Self::with_source(target_cdf, Some(input_dist), None)
    }

    /// Evaluates on a fixed input set; `mc_samples` follows its row count.
    pub fn with_frozen_inputs(target_cdf: EmpiricalCdf, inputs: Matrix) -> Self {
        Self::with_source(target_cdf, None, Some(Arc::new(inputs)))
    }

    fn with_source(target_cdf: EmpiricalCdf, input_dist: Option<InputDistribution>, frozen: Option<Arc<Matrix>>) -> Self {
        ObjectiveConfig {
            weights: LossWeights::default(),
            distance: DistanceKind::Bhattacharyya,
            distance_mode: DistanceMode::Masses,
            mc_samples: frozen.as_ref().map_or(DEFAULT_MC_SAMPLES, |m| m.rows()),
            grid_size: DEFAULT_GRID_SIZE,
            target_cdf,
            input_dist,
            frozen_mc_inputs: frozen,
            residual: None,
            data_loss_on: DataLossOn::Training,
            data_loss_scale: DataLossScale::Raw,
            class_output: ClassOutput::Labels,
            solver: SolverOptions::default(),
        }
    }

    /// Draws `mc_samples` inputs once and freezes them for all later evaluations.
    pub fn freeze_inputs(mut self, rng: &RngStream) -> Result<Self> {
        let dist = self.input_dist.as_ref().ok_or_else(|| Error::invalid("no input distribution to sample"))?;
        self.frozen_mc_inputs = Some(Arc::new(dist.sample(self.mc_samples, rng)?));
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if self.mc_samples < 100 {
            return Err(Error::invalid(format!("mc_samples must be >= 100, got {}", self.mc_samples)));
        }
        if self.grid_size < 2 {
            return Err(Error::invalid("grid_size must be >= 2"));
        }
        match (&self.frozen_mc_inputs, &self.input_dist) {
            (Some(m), _) if m.rows() != self.mc_samples => Err(Error::invalid(format!(
                "frozen inputs have {} rows but mc_samples is {}",
                m.rows(),
                self.mc_samples
            ))),
            (None, None) => Err(Error::invalid("need an input distribution or frozen inputs")),
            _ => Ok(()),
        }
    }

    /// The evaluation inputs for one objective call.
    pub fn mc_inputs(&self, rng: &RngStream) -> Result<Arc<Matrix>> {
        match (&self.frozen_mc_inputs, &self.input_dist) {
            (Some(m), _) => Ok(Arc::clone(m)),
            (None, Some(d)) => Ok(Arc::new(d.sample(self.mc_samples, rng)?)),
            (None, None) => Err(Error::invalid("need an input distribution or frozen inputs")),
        }
    }

    fn prob_loss(&self, predicted: &EmpiricalCdf) -> Result<f64> {
        let grid = make_grid(&self.target_cdf, predicted, self.grid_size)?;
        Ok(distance_with_mode(self.distance, &self.target_cdf, predicted, &grid, self.distance_mode))
    }
}

/// Features and real-valued targets.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: Matrix, y: Vec<f64>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::LengthMismatch { left: x.rows(), right: y.len() });
        }
        if y.is_empty() {
            return Err(Error::NoObservations);
        }
        Ok(Dataset { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset { x: self.x.select_rows(idx), y: idx.iter().map(|&i| self.y[i]).collect() }
    }
}

fn holdout_split(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    use rand::seq::SliceRandom;
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!("holdout fraction must be in (0, 1), got {fraction}")));
    }
    let n_hold = ((n as f64) * fraction).round() as usize;
    if n_hold == 0 || n_hold >= n - 1 {
        return Err(Error::invalid("holdout leaves too few rows"));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut RngStream::new(seed).generator());
    let (fit, hold) = idx.split_at(n - n_hold);
    let (mut fit, mut hold) = (fit.to_vec(), hold.to_vec());
    fit.sort_unstable();
    hold.sort_unstable();
    Ok((fit, hold))
}

/// Rows the model is fitted on, and the separate rows its error is scored on (if any).
fn error_rows(train: &Dataset, on: DataLossOn) -> Result<(Dataset, Option<Dataset>)> {
    match on {
        DataLossOn::Training => Ok((train.clone(), None)),
        DataLossOn::Holdout { fraction, seed } => {
            let (a, b) = holdout_split(train.len(), fraction, seed)?;
            Ok((train.subset(&a), Some(train.subset(&b))))
        }
    }
}

fn scaled_error(y: &[f64], fitted: &[f64], model: &SvrModel, scale: DataLossScale) -> Result<f64> {
    let mse = data_loss(y, fitted)?;
    let sd = model.standardizer.target_sd;
    Ok(match scale {
        DataLossScale::Standardized if sd > 0.0 => mse / (sd * sd),
        _ => mse,
    })
}

/// Everything produced by one regression evaluation.
#[derive(Clone, Debug)]
pub struct RegressionEval {
    pub breakdown: LossBreakdown,
    pub model: SvrModel,
    pub predicted_cdf: EmpiricalCdf,
}

pub fn evaluate_objective(theta: &HyperParams, train: &Dataset, cfg: &ObjectiveConfig, rng: &RngStream) -> Result<LossBreakdown> {
    evaluate_regression(theta, train, cfg, rng).map(|e| e.breakdown)
}

/// Fits an SVR for `theta`, scores its error, then pushes the evaluation inputs
/// through it and compares the resulting CDF with the target.
pub fn evaluate_regression(theta: &HyperParams, train: &Dataset, cfg: &ObjectiveConfig, rng: &RngStream) -> Result<RegressionEval> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::NoObservations);
    }
    let (fit, scored) = error_rows(train, cfg.data_loss_on)?;
    let model = svr_train(&fit.x, &fit.y, theta, &cfg.solver)?;
    let scored = scored.as_ref().unwrap_or(&fit);
    let fitted = model.predict(&scored.x)?;
    let data = scaled_error(&scored.y, &fitted, &model, cfg.data_loss_scale)?;
    let physics = physics_loss(cfg.residual.as_ref(), &scored.x, &fitted)?;

    let inputs = cfg.mc_inputs(rng)?;
    let (predicted_cdf, _) = cdf_of_predictions(|x: &Matrix| model.predict(x), &inputs)?;
    let prob = cfg.prob_loss(&predicted_cdf)?;
    Ok(RegressionEval { breakdown: LossBreakdown::combine(&cfg.weights, data, prob, physics), model, predicted_cdf })
}

/// Error-only objective: fits the model and scores it, with no CDF or residual
/// term. Matches [`evaluate_objective`] under weights `(1, 0, 0)`.
pub fn evaluate_data_only(theta: &HyperParams, train: &Dataset, cfg: &ObjectiveConfig) -> Result<LossBreakdown> {
    let (fit, scored) = error_rows(train, cfg.data_loss_on)?;
    let model = svr_train(&fit.x, &fit.y, theta, &cfg.solver)?;
    let scored = scored.as_ref().unwrap_or(&fit);
    let data = scaled_error(&scored.y, &model.predict(&scored.x)?, &model, cfg.data_loss_scale)?;
    Ok(LossBreakdown { data_loss: data, prob_loss: 0.0, physics_loss: 0.0, total: data, rmse: data.sqrt() })
}

#[derive(Clone, Debug)]
pub struct ClassificationEval {
    pub breakdown: LossBreakdown,
    pub model: SvcModel,
    pub predicted_cdf: EmpiricalCdf,
}

pub fn evaluate_objective_classification(
    theta: &HyperParams,
    train: &LabeledDataset,
    cfg: &ObjectiveConfig,
    rng: &RngStream,
) -> Result<LossBreakdown> {
    evaluate_classification(theta, train, cfg, rng).map(|e| e.breakdown)
}

/// Error term is the training misclassification rate; the CDF term compares
/// the predicted labels (0/1) on the evaluation inputs against `cfg.target_cdf`.
pub fn evaluate_classification(
    theta: &HyperParams,
    train: &LabeledDataset,
    cfg: &ObjectiveConfig,
    rng: &RngStream,
) -> Result<ClassificationEval> {
    cfg.validate()?;
    let signed = train.signed_labels();
    let model = svc_train(&train.features, &signed, theta, &cfg.solver)?;
    let fitted = model.predict(&train.features)?;
    let wrong = fitted.iter().zip(&signed).filter(|(a, b)| a != b).count();
    let error_rate = wrong as f64 / signed.len() as f64;
    let physics = physics_loss(cfg.residual.as_ref(), &train.features, &fitted)?;

    let inputs = cfg.mc_inputs(rng)?;
    let (predicted_cdf, _) = match cfg.class_output {
        ClassOutput::Labels => cdf_of_predictions(
            |x: &Matrix| Ok(model.predict(x)?.into_iter().map(|s| if s > 0.0 { 1.0 } else { 0.0 }).collect()),
            &inputs,
        )?,
        ClassOutput::Margins => cdf_of_predictions(|x: &Matrix| model.decision(x), &inputs)?,
    };
    let prob = cfg.prob_loss(&predicted_cdf)?;
    Ok(ClassificationEval {
        breakdown: LossBreakdown::combine(&cfg.weights, error_rate, prob, physics),
        model,
        predicted_cdf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdf::ecdf_build;
    use crate::distance::bhattacharyya_masses;
    use crate::distributions::Marginal;
    use crate::svm::KernelKind;

    #[test]
    fn data_loss_values() {
        assert_eq!(data_loss(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(data_loss(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!((data_loss(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(data_loss(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn physics_loss_values() {
        let x = Matrix::column(&[1.0, 1.0]);
        let zero: Residual = Arc::new(|_, _| vec![0.0]);
        assert_eq!(physics_loss(Some(&zero), &x, &[1.0, 1.0]).unwrap(), 0.0);
        let ident: Residual = Arc::new(|y, _| vec![y]);
        assert_eq!(physics_loss(Some(&ident), &x, &[1.0, 1.0]).unwrap(), 1.0);
        let diff: Residual = Arc::new(|y, x| vec![y - x[0]]);
        assert_eq!(physics_loss(Some(&diff), &x, &[2.0, 3.0]).unwrap(), 2.5);
        assert_eq!(physics_loss(None, &x, &[2.0, 3.0]).unwrap(), 0.0);
        let nan: Residual = Arc::new(|_, _| vec![f64::NAN]);
        assert!(physics_loss(Some(&nan), &x, &[2.0, 3.0]).is_err());
    }

    #[test]
    fn weighted_sum() {
        let b = LossBreakdown::combine(&LossWeights { alpha: 0.3, beta: 0.7, gamma: 0.0 }, 2.0, 1.0, 0.0);
        assert!((b.total - 1.3).abs() < 1e-15);
        let one = LossBreakdown::combine(&LossWeights { alpha: 0.0, beta: 0.7, gamma: 0.0 }, 2.0, 0.37, 0.0);
        let two = LossBreakdown::combine(&LossWeights { alpha: 0.0, beta: 1.4, gamma: 0.0 }, 2.0, 0.37, 0.0);
        assert_eq!(two.total, 2.0 * one.total);
        assert!(LossWeights::new(0.0, 0.0, 1.0).is_err());
        assert!(LossWeights::new(-1.0, 1.0, 0.0).is_err());
    }

    fn line_problem() -> (Dataset, InputDistribution) {
        let dist = InputDistribution::new(vec![Marginal::uniform(-1.0, 1.0).unwrap()]).unwrap();
        let x = dist.sample(60, &RngStream::new(4)).unwrap();
        let y = x.col_values(0).iter().map(|v| 3.0 * v - 0.5).collect();
        (Dataset::new(x, y).unwrap(), dist)
    }

    #[test]
    fn perfect_fit_has_tiny_data_loss() {
        let (train, dist) = line_problem();
        let mut cfg = ObjectiveConfig::new(ecdf_build(&train.y).unwrap(), dist);
        cfg.weights = LossWeights::data_only();
        cfg.mc_samples = 1000;
        let theta = HyperParams::regression(KernelKind::Linear, 1.0, 100.0, 1e-3);
        let b = evaluate_objective(&theta, &train, &cfg, &RngStream::new(1)).unwrap();
        assert!(b.total <= 1e-4, "{b:?}");
        assert_eq!(b.total, b.data_loss);
    }

    #[test]
    fn self_matched_cdf_has_small_prob_loss() {
        let (train, dist) = line_problem();
        // target built from the same generator, so only sampling noise separates the CDFs
        let big = dist.sample(20_000, &RngStream::new(77)).unwrap();
        let target: Vec<f64> = big.col_values(0).iter().map(|v| 3.0 * v - 0.5).collect();
        let mut cfg = ObjectiveConfig::new(ecdf_build(&target).unwrap(), dist);
        cfg.weights = LossWeights { alpha: 0.0, beta: 1.0, gamma: 0.0 };
        let theta = HyperParams::regression(KernelKind::Linear, 1.0, 100.0, 1e-3);
        let b = evaluate_objective(&theta, &train, &cfg, &RngStream::new(2)).unwrap();
        assert!(b.prob_loss <= 0.02, "{b:?}");
        assert_eq!(b.total, b.prob_loss);
    }

    #[test]
    fn frozen_inputs_are_shared_and_deterministic() {
        let (train, dist) = line_problem();
        let cfg = ObjectiveConfig::new(ecdf_build(&train.y).unwrap(), dist);
        let cfg = ObjectiveConfig { mc_samples: 500, ..cfg }.freeze_inputs(&RngStream::new(9)).unwrap();
        let a = cfg.mc_inputs(&RngStream::new(1)).unwrap();
        let b = cfg.mc_inputs(&RngStream::new(2)).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        let t1 = HyperParams::regression(KernelKind::Gaussian, 1.0, 1.0, 0.1);
        let t2 = HyperParams::regression(KernelKind::Gaussian, 0.3, 10.0, 0.01);
        let r = RngStream::new(3);
        assert_eq!(evaluate_objective(&t1, &train, &cfg, &r).unwrap(), evaluate_objective(&t1, &train, &cfg, &r).unwrap());
        assert_ne!(evaluate_objective(&t1, &train, &cfg, &r).unwrap(), evaluate_objective(&t2, &train, &cfg, &r).unwrap());
        let bad = ObjectiveConfig { mc_samples: 600, ..cfg };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn eq13_reduction_is_exact() {
        let (train, dist) = line_problem();
        let mut cfg = ObjectiveConfig::new(ecdf_build(&train.y).unwrap(), dist);
        cfg.mc_samples = 300;
        cfg.weights = LossWeights::data_only();
        let theta = HyperParams::regression(KernelKind::Polynomial, 2.0, 3.0, 0.05);
        let b = evaluate_objective(&theta, &train, &cfg, &RngStream::new(5)).unwrap();
        assert!(b.prob_loss > 0.0);
        assert_eq!(b.total, b.data_loss);
        assert_eq!(b.total, evaluate_data_only(&theta, &train, &cfg).unwrap().total);
    }

    #[test]
    fn standardized_scale_and_holdout() {
        let (train, dist) = line_problem();
        let mut cfg = ObjectiveConfig::new(ecdf_build(&train.y).unwrap(), dist);
        cfg.mc_samples = 300;
        let theta = HyperParams::regression(KernelKind::Gaussian, 0.5, 1.0, 0.1);
        let raw = evaluate_objective(&theta, &train, &cfg, &RngStream::new(5)).unwrap();
        cfg.data_loss_scale = DataLossScale::Standardized;
        let std = evaluate_objective(&theta, &train, &cfg, &RngStream::new(5)).unwrap();
        let var = {
            let m = train.y.iter().sum::<f64>() / train.len() as f64;
            train.y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (train.len() - 1) as f64
        };
        assert!((std.data_loss - raw.data_loss / var).abs() <= 1e-12 * raw.data_loss.max(1.0));
        cfg.data_loss_on = DataLossOn::Holdout { fraction: 0.25, seed: 1 };
        assert!(evaluate_objective(&theta, &train, &cfg, &RngStream::new(5)).is_ok());
    }

    fn blobs() -> LabeledDataset {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                vec![2.0 * s + 0.01 * i as f64, 2.0 * s - 0.01 * i as f64]
            })
            .collect();
        LabeledDataset::new(Matrix::from_rows(&rows).unwrap(), (0..20).map(|i| u8::from(i % 2 == 0)).collect()).unwrap()
    }

    #[test]
    fn classification_perfect_fit() {
        let train = blobs();
        let target = ecdf_build(&train.labels.iter().map(|&l| l as f64).collect::<Vec<_>>()).unwrap();
        let cfg = ObjectiveConfig::with_frozen_inputs(target, {
            // 100 evaluation rows with the same 50/50 class layout
            let rows: Vec<Vec<f64>> =
                (0..100).map(|i| if i % 2 == 0 { vec![2.0, 2.0] } else { vec![-2.0, -2.0] }).collect();
            Matrix::from_rows(&rows).unwrap()
        });
        let theta = HyperParams::classification(KernelKind::Linear, 1.0, 1.0);
        let b = evaluate_objective_classification(&theta, &train, &cfg, &RngStream::new(1)).unwrap();
        assert!(b.total.abs() < 1e-12, "{b:?}");

        let cfg = ObjectiveConfig { weights: LossWeights::data_only(), ..cfg };
        let b = evaluate_objective_classification(&theta, &train, &cfg, &RngStream::new(1)).unwrap();
        assert_eq!(b.total, b.data_loss);
    }

    #[test]
    fn all_positive_classifier_pays_prob_loss() {
        // every evaluation row lies deep in the positive blob
        let train = blobs();
        let target = ecdf_build(&train.labels.iter().map(|&l| l as f64).collect::<Vec<_>>()).unwrap();
        let eval = Matrix::from_rows(&vec![vec![2.0, 2.0]; 100]).unwrap();
        let mut cfg = ObjectiveConfig::with_frozen_inputs(target.clone(), eval);
        cfg.weights = LossWeights { alpha: 0.0, beta: 1.0, gamma: 0.0 };
        let theta = HyperParams::classification(KernelKind::Linear, 1.0, 1.0);
        let b = evaluate_objective_classification(&theta, &train, &cfg, &RngStream::new(1)).unwrap();

        // hand-built: a point mass at 1 against the training-label CDF
        let step = ecdf_build(&[1.0]).unwrap();
        let grid = make_grid(&target, &step, 100).unwrap();
        let p = crate::distance::cdf_to_masses(&target, &grid);
        let q = crate::distance::cdf_to_masses(&step, &grid);
        let expected = bhattacharyya_masses(&p, &q).unwrap();
        assert!((b.prob_loss - expected).abs() < 1e-12 && b.prob_loss > 0.0);
    }
}
