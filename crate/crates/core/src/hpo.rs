//! Hyperparameter search over kernel family, kernel scale, box constraint and
//! tube width.
//!
//! The categorical kernel choice is handled by splitting the budget evenly
//! across the enabled families; inside a family the continuous dimensions are
//! searched in log10 space. The `Smbo` strategy seeds each family with a Latin
//! hypercube and then proposes points that maximize expected improvement under
//! a Gaussian-process surrogate.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::distributions::RngStream;
use crate::error::{Error, Result};
use crate::loss::LossBreakdown;
use crate::svm::{HyperParams, KernelKind, BOX_BOUNDS, EPSILON_BOUNDS, KERNEL_SCALE_BOUNDS};

/// Candidates screened per acquisition step.
pub const EI_CANDIDATES: usize = 2048;
pub const DEFAULT_BUDGET: usize = 60;
pub const MIN_BUDGET: usize = 5;

const MAX_INITIAL_DESIGN: usize = 10;
const LENGTHSCALE_GRID: [f64; 6] = [0.05, 0.1, 0.2, 0.35, 0.6, 1.0];
const NUGGET: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[default]
    Smbo,
    Random,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "smbo" => Ok(Strategy::Smbo),
            "random" => Ok(Strategy::Random),
            other => Err(Error::invalid(format!("unknown strategy {other:?} (expected smbo or random)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Classification,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub kernel_scale_log10: (f64, f64),
    pub box_log10: (f64, f64),
    pub epsilon_log10: (f64, f64),
    pub kernels: Vec<KernelKind>,
    pub include_epsilon: bool,
}

impl SearchSpace {
    pub fn regression() -> Self {
        SearchSpace {
            kernel_scale_log10: log_bounds(KERNEL_SCALE_BOUNDS),
            box_log10: log_bounds(BOX_BOUNDS),
            epsilon_log10: log_bounds(EPSILON_BOUNDS),
            kernels: KernelKind::ALL.to_vec(),
            include_epsilon: true,
        }
    }

    pub fn classification() -> Self {
        SearchSpace { include_epsilon: false, ..Self::regression() }
    }

    pub fn for_task(task: Task) -> Self {
        match task {
            Task::Regression => Self::regression(),
            Task::Classification => Self::classification(),
        }
    }

    /// Number of continuous dimensions.
    pub fn dim(&self) -> usize {
        if self.include_epsilon {
            3
        } else {
            2
        }
    }

    fn intervals(&self) -> Vec<(f64, f64)> {
        let mut v = vec![self.kernel_scale_log10, self.box_log10];
        if self.include_epsilon {
            v.push(self.epsilon_log10);
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernels.is_empty() {
            return Err(Error::invalid("search space has no kernels"));
        }
        for (lo, hi) in self.intervals() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::invalid(format!("bad search interval [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Maps a point of the unit cube to hyperparameters. Coordinates are clamped
    /// into `[0, 1]` first, so the result always lies inside the bounds.
    pub fn theta_from_unit(&self, kernel: KernelKind, u: &[f64]) -> HyperParams {
        let at = |i: usize, (lo, hi): (f64, f64)| {
            let t = u.get(i).copied().unwrap_or(0.5).clamp(0.0, 1.0);
            10f64.powf(lo + t * (hi - lo)).clamp(10f64.powf(lo), 10f64.powf(hi))
        };
        HyperParams {
            kernel,
            kernel_scale: at(0, self.kernel_scale_log10),
            box_constraint: at(1, self.box_log10),
            epsilon: self.include_epsilon.then(|| at(2, self.epsilon_log10)),
        }
    }
}

fn log_bounds((lo, hi): (f64, f64)) -> (f64, f64) {
    (lo.log10(), hi.log10())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub theta: HyperParams,
    pub breakdown: LossBreakdown,
    pub best_so_far: f64,
    /// Set when the objective failed; `breakdown.total` is then `+inf`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub best_theta: HyperParams,
    pub best_loss: f64,
    pub history: Vec<TrialRecord>,
}

impl OptResult {
    pub fn best_trial(&self) -> &TrialRecord {
        self.history
            .iter()
            .find(|t| t.breakdown.total == self.best_loss && t.theta == self.best_theta)
            .expect("best trial is part of the history")
    }

    /// `index,kernel,K,B,eps,data_loss,prob_loss,total,best_so_far`
    pub fn trials_csv(&self) -> String {
        let mut s = String::from("index,kernel,K,B,eps,data_loss,prob_loss,total,best_so_far\n");
        for t in &self.history {
            let eps = t.theta.epsilon.map_or(String::new(), |e| e.to_string());
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                t.index,
                t.theta.kernel,
                t.theta.kernel_scale,
                t.theta.box_constraint,
                eps,
                t.breakdown.data_loss,
                t.breakdown.prob_loss,
                t.breakdown.total,
                t.best_so_far
            ));
        }
        s
    }
}

/// Budget share per kernel family; the remainder goes to the first families.
fn shares(budget: usize, families: usize) -> Vec<usize> {
    (0..families).map(|i| budget / families + usize::from(i < budget % families)).collect()
}

fn latin_hypercube(n: usize, dim: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    use rand::seq::SliceRandom;
    let mut pts = vec![vec![0.0; dim]; n];
    for d in 0..dim {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        for (p, s) in pts.iter_mut().zip(strata) {
            p[d] = (s as f64 + rng.random::<f64>()) / n as f64;
        }
    }
    pts
}

/// Evaluates one point, turning errors and NaN totals into the `+inf` sentinel.
fn run_trial<F>(objective: &F, theta: &HyperParams) -> (LossBreakdown, Option<String>)
where
    F: Fn(&HyperParams) -> Result<LossBreakdown> + Sync,
{
    match objective(theta) {
        Ok(b) if !b.total.is_nan() => (b, None),
        Ok(_) => (LossBreakdown::failed(), Some("objective returned NaN".into())),
        Err(e) => (LossBreakdown::failed(), Some(e.to_string())),
    }
}

struct Family {
    kernel: KernelKind,
    share: usize,
    units: Vec<Vec<f64>>,
    totals: Vec<f64>,
}

/// Minimizes `objective` over `space` with at most `budget` evaluations.
///
/// Trials are indexed in evaluation order: first every family's initial design
/// (evaluated as one parallel batch), then one proposal per family in turn.
/// The result does not depend on the rayon pool size.
pub fn optimize<F>(objective: F, space: &SearchSpace, budget: usize, strategy: Strategy, rng: &RngStream) -> Result<OptResult>
where
    F: Fn(&HyperParams) -> Result<LossBreakdown> + Sync,
{
    space.validate()?;
    if budget < MIN_BUDGET {
        return Err(Error::invalid(format!("budget must be >= {MIN_BUDGET}, got {budget}")));
    }
    let dim = space.dim();
    let mut families: Vec<Family> = space
        .kernels
        .iter()
        .zip(shares(budget, space.kernels.len()))
        .map(|(&kernel, share)| Family { kernel, share, units: Vec::new(), totals: Vec::new() })
        .collect();

    let mut history: Vec<TrialRecord> = Vec::with_capacity(budget);
    let push = |history: &mut Vec<TrialRecord>, theta: HyperParams, (breakdown, error): (LossBreakdown, Option<String>)| {
        let prev = history.last().map_or(f64::INFINITY, |t| t.best_so_far);
        let best_so_far = if breakdown.total < prev { breakdown.total } else { prev };
        history.push(TrialRecord { index: history.len(), theta, breakdown, best_so_far, error });
        breakdown.total
    };

    // initial designs
    let mut batch: Vec<(usize, Vec<f64>)> = Vec::new();
    for (fi, fam) in families.iter().enumerate() {
        let n_init = match strategy {
            Strategy::Smbo => (fam.share / 3).clamp(1, MAX_INITIAL_DESIGN).min(fam.share),
            Strategy::Random => fam.share,
        };
        let mut g = rng.derive(fi as u64).generator();
        let pts = match strategy {
            Strategy::Smbo => latin_hypercube(n_init, dim, &mut g),
            Strategy::Random => (0..n_init).map(|_| (0..dim).map(|_| g.random::<f64>()).collect()).collect(),
        };
        batch.extend(pts.into_iter().map(|u| (fi, u)));
    }
    let thetas: Vec<HyperParams> = batch.iter().map(|(fi, u)| space.theta_from_unit(families[*fi].kernel, u)).collect();
    let results: Vec<_> = thetas.par_iter().map(|t| run_trial(&objective, t)).collect();
    for (((fi, u), theta), r) in batch.into_iter().zip(thetas).zip(results) {
        let total = push(&mut history, theta, r);
        families[fi].units.push(u);
        families[fi].totals.push(total);
    }

    // surrogate-guided proposals, one family at a time
    let mut step = 0u64;
    loop {
        let mut progressed = false;
        for fi in 0..families.len() {
            if families[fi].totals.len() >= families[fi].share {
                continue;
            }
            progressed = true;
            let mut g = rng.derive(1_000_000 + step).generator();
            step += 1;
            let u = propose(&families[fi].units, &families[fi].totals, dim, &mut g);
            let theta = space.theta_from_unit(families[fi].kernel, &u);
            let total = push(&mut history, theta, run_trial(&objective, &theta));
            families[fi].units.push(u);
            families[fi].totals.push(total);
        }
        if !progressed {
            break;
        }
    }

    let best = history
        .iter()
        .filter(|t| t.breakdown.total.is_finite())
        .fold(None::<&TrialRecord>, |b, t| match b {
            Some(b) if b.breakdown.total <= t.breakdown.total => Some(b),
            _ => Some(t),
        })
        .ok_or(Error::AllTrialsFailed(history.len()))?;
    Ok(OptResult { best_theta: best.theta, best_loss: best.breakdown.total, history })
}

/// Expected-improvement maximizer over random and incumbent-local candidates.
fn propose(units: &[Vec<f64>], totals: &[f64], dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut candidates: Vec<Vec<f64>> = (0..EI_CANDIDATES * 3 / 4).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect();

    let finite_max = totals.iter().copied().filter(|t| t.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if !finite_max.is_finite() {
        // nothing succeeded yet: explore uniformly
        return candidates.swap_remove(0);
    }
    let mut y: Vec<f64> = totals.iter().map(|&t| if t.is_finite() { t } else { finite_max }).collect();
    // non-negative losses often span decades; the surrogate sees them on a log scale
    if y.iter().all(|&v| v >= 0.0) {
        let shift = 1e-9 * (1.0 + finite_max);
        y.iter_mut().for_each(|v| *v = (*v + shift).ln());
    }
    let best_idx = (0..y.len()).fold(0, |b, i| if y[i] < y[b] { i } else { b });
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    // local moves at three scales, plus the incumbent snapped onto each face
    let inc = &units[best_idx];
    for d in 0..dim {
        for edge in [0.0, 1.0] {
            let mut c = inc.clone();
            c[d] = edge;
            candidates.push(c);
        }
    }
    for k in 0..EI_CANDIDATES.saturating_sub(candidates.len()) {
        let scale = [0.02, 0.08, 0.25][k % 3];
        candidates.push(inc.iter().map(|&c| (c + scale * normal_draw(rng)).clamp(0.0, 1.0)).collect());
    }

    let Some(gp) = Gp::fit(units, &y) else {
        return candidates.swap_remove(0);
    };
    let y_best = y[best_idx];
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, c) in candidates.iter().enumerate() {
        let (mu, sd) = gp.predict(c);
        let ei = if sd > 1e-12 {
            let z = (y_best - mu) / sd;
            (y_best - mu) * normal.cdf(z) + sd * normal.pdf(z)
        } else {
            (y_best - mu).max(0.0)
        };
        if ei > best.0 {
            best = (ei, i);
        }
    }
    candidates.swap_remove(best.1)
}

fn normal_draw(rng: &mut impl Rng) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

/// Zero-mean GP with an ARD Matérn-5/2 kernel on standardized targets.
struct Gp {
    x: Vec<Vec<f64>>,
    lengthscales: Vec<f64>,
    alpha: DVector<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    y_mean: f64,
    y_sd: f64,
}

fn matern52(a: &[f64], b: &[f64], ls: &[f64]) -> f64 {
    let r = a.iter().zip(b).zip(ls).map(|((x, z), l)| ((x - z) / l).powi(2)).sum::<f64>().sqrt();
    let s = 5f64.sqrt() * r;
    (1.0 + s + s * s / 3.0) * (-s).exp()
}

impl Gp {
    fn fit(x: &[Vec<f64>], y: &[f64]) -> Option<Gp> {
        let n = y.len();
        if n < 2 {
            return None;
        }
        let y_mean = y.iter().sum::<f64>() / n as f64;
        let var = y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n as f64;
        let y_sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        let ys = DVector::from_iterator(n, y.iter().map(|v| (v - y_mean) / y_sd));

        // coordinate ascent on the marginal likelihood over a lengthscale grid
        let dim = x[0].len();
        let mut ls = vec![0.35; dim];
        let mut best = Self::log_likelihood(x, &ys, &ls)?;
        for _ in 0..2 {
            for d in 0..dim {
                for &cand in &LENGTHSCALE_GRID {
                    let mut trial = ls.clone();
                    trial[d] = cand;
                    if let Some(ll) = Self::log_likelihood(x, &ys, &trial) {
                        if ll.0 > best.0 {
                            best = ll;
                            ls = trial;
                        }
                    }
                }
            }
        }
        let (_, chol, alpha) = best;
        Some(Gp { x: x.to_vec(), lengthscales: ls, alpha, chol, y_mean, y_sd })
    }

    fn gram(x: &[Vec<f64>], ls: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        DMatrix::from_fn(n, n, |i, j| matern52(&x[i], &x[j], ls) + if i == j { NUGGET } else { 0.0 })
    }

    #[allow(clippy::type_complexity)]
    fn log_likelihood(
        x: &[Vec<f64>],
        ys: &DVector<f64>,
        ls: &[f64],
    ) -> Option<(f64, nalgebra::Cholesky<f64, nalgebra::Dyn>, DVector<f64>)> {
        let chol = Self::gram(x, ls).cholesky()?;
        let alpha = chol.solve(ys);
        let log_det: f64 = chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
        let ll = -0.5 * ys.dot(&alpha) - 0.5 * log_det;
        ll.is_finite().then_some((ll, chol, alpha))
    }

    /// Posterior mean and sd in the original target units.
    fn predict(&self, u: &[f64]) -> (f64, f64) {
        let k = DVector::from_iterator(self.x.len(), self.x.iter().map(|xi| matern52(xi, u, &self.lengthscales)));
        let mu = k.dot(&self.alpha);
        let v = self.chol.solve(&k);
        let var = (1.0 + NUGGET - k.dot(&v)).max(0.0);
        (self.y_mean + self.y_sd * mu, self.y_sd * var.sqrt())
    }
}

/// Interquartile range with linear interpolation between order statistics.
pub fn iqr(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::NoObservations);
    }
    let mut v = values.to_vec();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { what: "iqr input", count: v.iter().filter(|x| !x.is_finite()).count() });
    }
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let h = p * (v.len() - 1) as f64;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        v[lo] + (h - lo as f64) * (v[hi] - v[lo])
    };
    Ok(q(0.75) - q(0.25))
}

/// Untuned reference settings: gaussian kernel, scale 1, box 1, and for
/// regression a tube of `IQR(y) / 13.49` clamped into the search bounds.
pub fn baseline_theta(targets: &[f64], task: Task) -> Result<HyperParams> {
    if targets.is_empty() {
        return Err(Error::NoObservations);
    }
    Ok(match task {
        Task::Classification => HyperParams::classification(KernelKind::Gaussian, 1.0, 1.0),
        Task::Regression => {
            let eps = (iqr(targets)? / 13.49).clamp(EPSILON_BOUNDS.0, EPSILON_BOUNDS.1);
            HyperParams::regression(KernelKind::Gaussian, 1.0, 1.0, eps)
        }
    })
}
