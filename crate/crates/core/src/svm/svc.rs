use std::path::Path;

use serde::{Deserialize, Serialize};

use super::smo::Problem;
use super::svr::{check_training_inputs, expansion};
use super::{kernel_matrix, HyperParams, SolverOptions, Standardizer};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Trained soft-margin binary classifier with labels in `{-1, +1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvcModel {
    pub hyperparams: HyperParams,
    pub standardizer: Standardizer,
    pub support_vectors: Matrix,
    /// `alpha_i * y_i` per support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub iterations: usize,
}

pub fn svc_train(x: &Matrix, labels: &[f64], h: &HyperParams, opts: &SolverOptions) -> Result<SvcModel> {
    check_training_inputs(x, labels.len(), opts)?;
    if labels.iter().any(|&l| l != 1.0 && l != -1.0) {
        return Err(Error::invalid("labels must be -1 or +1"));
    }
    if !(labels.contains(&1.0) && labels.contains(&-1.0)) {
        return Err(Error::DegenerateLabels);
    }
    h.validate()?;

    let standardizer = Standardizer::fit(x, None);
    let xs = standardizer.apply(x);
    let n = x.rows();
    let kernel = kernel_matrix(h, &xs);
    let problem =
        Problem { kernel: &kernel, n, rows: (0..n).collect(), y: labels.to_vec(), p: vec![-1.0; n], c: h.box_constraint };
    let sol = problem.solve(opts.tol, opts.max_iter);

    let mut sv_idx = Vec::new();
    let mut dual_coef = Vec::new();
    for i in 0..n {
        if sol.alpha[i] > 0.0 {
            sv_idx.push(i);
            dual_coef.push(sol.alpha[i] * labels[i]);
        }
    }
    Ok(SvcModel {
        hyperparams: *h,
        standardizer,
        support_vectors: xs.select_rows(&sv_idx),
        dual_coef,
        bias: sol.bias,
        converged: sol.converged,
        iterations: sol.iterations,
    })
}

/// Raw margins `sum alpha_i y_i K(sv_i, x) + b`.
pub fn svc_decision(m: &SvcModel, x: &Matrix) -> Result<Vec<f64>> {
    expansion(&m.hyperparams, &m.standardizer, &m.support_vectors, &m.dual_coef, m.bias, x)
}

/// Sign of the margin, with ties going to +1.
pub fn svc_predict(m: &SvcModel, x: &Matrix) -> Result<Vec<f64>> {
    Ok(svc_decision(m, x)?.into_iter().map(|d| if d >= 0.0 { 1.0 } else { -1.0 }).collect())
}

impl SvcModel {
    pub fn decision(&self, x: &Matrix) -> Result<Vec<f64>> {
        svc_decision(self, x)
    }

    /// Largest violation of the dual constraints: the coefficients must sum to
    /// zero and each must lie within `[-C, C]`.
    pub fn dual_violation(&self) -> f64 {
        let c = self.hyperparams.box_constraint;
        let sum = self.dual_coef.iter().sum::<f64>().abs();
        self.dual_coef.iter().map(|a| (a.abs() - c).max(0.0)).fold(sum, f64::max)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        svc_predict(self, x)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}
