//! One-dimensional model-order selection: polynomials of several orders are
//! fitted by least squares and ranked by training error, by output-CDF
//! distance, and by the sum of both after normalization.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{cdf_distance, streams, ExperimentReport, Verdicts};
use crate::cdf::ecdf_build;
use crate::data_io::{ensure_dir, write_json, write_text};
use crate::distance::DistanceKind;
use crate::distributions::{InputDistribution, Marginal, RngStream};
use crate::error::{Error, Result};
use crate::metrics::rmse;

/// Coefficients (constant term first) of the generating polynomial, truncated
/// to `order_truth + 1` terms.
pub const TRUTH_COEFFICIENTS: [f64; 8] = [0.5, 1.2, -0.8, -2.0, 0.6, 1.5, -0.4, 0.3];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolyConfig {
    pub order_truth: usize,
    pub orders: Vec<usize>,
    pub n_train: usize,
    pub noise_sd: f64,
    /// Fresh inputs per candidate for its output CDF.
    pub mc_samples: usize,
    /// Draws of the generator used for the target CDF.
    pub target_samples: usize,
    pub distance: DistanceKind,
}

impl Default for PolyConfig {
    fn default() -> Self {
        PolyConfig {
            order_truth: 5,
            orders: vec![1, 2, 3, 4, 5],
            n_train: 40,
            noise_sd: 0.05,
            mc_samples: 10_000,
            target_samples: 100_000,
            distance: DistanceKind::Bhattacharyya,
        }
    }
}

impl PolyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.orders.is_empty() {
            return Err(Error::invalid("polydemo needs at least one candidate order"));
        }
        if self.order_truth >= TRUTH_COEFFICIENTS.len() {
            return Err(Error::invalid(format!("order_truth must be < {}", TRUTH_COEFFICIENTS.len())));
        }
        if let Some(&o) = self.orders.iter().find(|&&o| o + 1 > self.n_train) {
            return Err(Error::invalid(format!("order {o} needs more than {} training points", self.n_train)));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::invalid("noise_sd must be >= 0"));
        }
        if self.mc_samples < 100 || self.target_samples < 100 {
            return Err(Error::invalid("polydemo needs at least 100 samples for each CDF"));
        }
        Ok(())
    }

    pub fn truth(&self) -> &[f64] {
        &TRUTH_COEFFICIENTS[..=self.order_truth]
    }
}

/// Horner evaluation; `coef[0]` is the constant term.
pub fn poly_eval(coef: &[f64], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Least-squares polynomial of the given order.
pub fn poly_fit(x: &[f64], y: &[f64], order: usize) -> Result<Vec<f64>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() <= order {
        return Err(Error::invalid(format!("order {order} needs more than {} points", x.len())));
    }
    let a = DMatrix::from_fn(x.len(), order + 1, |i, j| x[i].powi(j as i32));
    let b = DVector::from_column_slice(y);
    let sol = a.svd(true, true).solve(&b, 1e-12).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(sol.iter().copied().collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub order: usize,
    pub coefficients: Vec<f64>,
    pub train_rmse: f64,
    pub cdf_distance: f64,
    /// `train_rmse / max train_rmse + cdf_distance / max cdf_distance`.
    pub combined: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyReport {
    pub experiment: String,
    pub seed: u64,
    pub config: PolyConfig,
    pub candidates: Vec<Candidate>,
    pub selected_order: usize,
    pub rmse_selected_order: usize,
    pub distance_selected_order: usize,
    pub selected_matches_truth: bool,
    pub verdicts: Verdicts,
}

impl ExperimentReport for PolyReport {
    fn verdicts(&self) -> &Verdicts {
        &self.verdicts
    }
}

fn argmin_by(c: &[Candidate], f: impl Fn(&Candidate) -> f64) -> usize {
    (0..c.len()).fold(0, |b, i| if f(&c[i]) < f(&c[b]) { i } else { b })
}

pub fn run_polydemo(cfg: &PolyConfig, rng: &RngStream, out_dir: &Path) -> Result<PolyReport> {
    cfg.validate()?;
    ensure_dir(out_dir)?;
    let dist = InputDistribution::new(vec![Marginal::uniform(-1.0, 1.0)?])?;
    let noise = Normal::new(0.0, cfg.noise_sd).map_err(|e| Error::invalid(e.to_string()))?;
    let truth = cfg.truth();
    let draw = |count: usize, stream: u64| -> Result<(Vec<f64>, Vec<f64>)> {
        let s = rng.derive(stream);
        let x = dist.sample(count, &s.derive(0))?.col_values(0);
        let mut g = s.derive(1).generator();
        let y = x.iter().map(|&v| poly_eval(truth, v) + noise.sample(&mut g)).collect();
        Ok((x, y))
    };
    let (x_train, y_train) = draw(cfg.n_train, streams::DATA)?;
    let (_, y_target) = draw(cfg.target_samples, streams::TEST)?;
    let target = ecdf_build(&y_target)?;
    target.save_csv(&out_dir.join("cdf_target.csv"))?;
    let x_mc = dist.sample(cfg.mc_samples, &rng.derive(streams::MC_INPUTS))?.col_values(0);

    let mut candidates = Vec::with_capacity(cfg.orders.len());
    for &order in &cfg.orders {
        let coefficients = poly_fit(&x_train, &y_train, order)?;
        let fitted: Vec<f64> = x_train.iter().map(|&v| poly_eval(&coefficients, v)).collect();
        let predicted = ecdf_build(&x_mc.iter().map(|&v| poly_eval(&coefficients, v)).collect::<Vec<_>>())?;
        predicted.save_csv(&out_dir.join(format!("cdf_predicted_order{order}.csv")))?;
        candidates.push(Candidate {
            order,
            train_rmse: rmse(&y_train, &fitted)?,
            cdf_distance: cdf_distance(cfg.distance, &target, &predicted)?,
            coefficients,
            combined: 0.0,
        });
    }
    let norm = |m: f64| if m > 0.0 { m } else { 1.0 };
    let max_rmse = norm(candidates.iter().map(|c| c.train_rmse).fold(0.0, f64::max));
    let max_dist = norm(candidates.iter().map(|c| c.cdf_distance).fold(0.0, f64::max));
    for c in &mut candidates {
        c.combined = c.train_rmse / max_rmse + c.cdf_distance / max_dist;
    }

    let mut table = String::from("order,train_rmse,cdf_distance,combined\n");
    for c in &candidates {
        table.push_str(&format!("{},{},{},{}\n", c.order, c.train_rmse, c.cdf_distance, c.combined));
    }
    write_text(&out_dir.join("candidates.csv"), &table)?;

    let selected_order = candidates[argmin_by(&candidates, |c| c.combined)].order;
    let rmse_selected_order = candidates[argmin_by(&candidates, |c| c.train_rmse)].order;
    let distance_selected_order = candidates[argmin_by(&candidates, |c| c.cdf_distance)].order;
    let mut verdicts = Verdicts::new();
    verdicts.insert("selected_order_is_a_candidate".into(), cfg.orders.contains(&selected_order));

    let report = PolyReport {
        experiment: "polydemo".into(),
        seed: rng.seed,
        config: cfg.clone(),
        selected_matches_truth: selected_order == cfg.order_truth,
        candidates,
        selected_order,
        rmse_selected_order,
        distance_selected_order,
        verdicts,
    };
    write_json(&out_dir.join("results.json"), &report)?;
    Ok(report)
}
