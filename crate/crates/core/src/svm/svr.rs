use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::smo::Problem;
use super::{kernel_matrix, HyperParams, SolverOptions, Standardizer};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Trained epsilon-insensitive support vector regressor.
///
/// Support vectors and coefficients live in standardized units; [`svr_predict`]
/// maps predictions back to the original target scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub hyperparams: HyperParams,
    pub standardizer: Standardizer,
    pub support_vectors: Matrix,
    /// `alpha_i - alpha_i*` per support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub iterations: usize,
}

pub(crate) fn check_training_inputs(x: &Matrix, n_targets: usize, opts: &SolverOptions) -> Result<()> {
    if x.rows() != n_targets {
        return Err(Error::LengthMismatch { left: x.rows(), right: n_targets });
    }
    if x.rows() < 2 {
        return Err(Error::invalid("need at least 2 training rows"));
    }
    if x.cols() == 0 {
        return Err(Error::invalid("need at least one feature"));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite { what: "training features", count: x.count_non_finite() });
    }
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::invalid("solver needs tol > 0 and max_iter >= 1"));
    }
    Ok(())
}

pub fn svr_train(x: &Matrix, y: &[f64], h: &HyperParams, opts: &SolverOptions) -> Result<SvrModel> {
    check_training_inputs(x, y.len(), opts)?;
    let bad = y.iter().filter(|v| !v.is_finite()).count();
    if bad > 0 {
        return Err(Error::NonFinite { what: "training targets", count: bad });
    }
    h.validate()?;
    let eps = h.epsilon.ok_or_else(|| Error::invalid("regression needs epsilon"))?;

    let standardizer = Standardizer::fit(x, Some(y));
    let xs = standardizer.apply(x);
    let z: Vec<f64> = y.iter().map(|&v| standardizer.standardize_target(v)).collect();
    let n = x.rows();
    let kernel = kernel_matrix(h, &xs);

    let mut ys = vec![1.0; n];
    ys.extend(std::iter::repeat_n(-1.0, n));
    let mut p: Vec<f64> = z.iter().map(|zi| eps - zi).collect();
    p.extend(z.iter().map(|zi| eps + zi));
    let problem = Problem { kernel: &kernel, n, rows: (0..2 * n).map(|t| t % n).collect(), y: ys, p, c: h.box_constraint };
    let sol = problem.solve(opts.tol, opts.max_iter);

    let mut sv_idx = Vec::new();
    let mut dual_coef = Vec::new();
    for i in 0..n {
        let c = sol.alpha[i] - sol.alpha[i + n];
        if c != 0.0 {
            sv_idx.push(i);
            dual_coef.push(c);
        }
    }
    Ok(SvrModel {
        hyperparams: *h,
        standardizer,
        support_vectors: xs.select_rows(&sv_idx),
        dual_coef,
        bias: sol.bias,
        converged: sol.converged,
        iterations: sol.iterations,
    })
}

/// Kernel expansion plus bias on already standardized rows.
pub(crate) fn expansion(
    h: &HyperParams,
    standardizer: &Standardizer,
    svs: &Matrix,
    coef: &[f64],
    bias: f64,
    x: &Matrix,
) -> Result<Vec<f64>> {
    if x.cols() != standardizer.dim() {
        return Err(Error::DimensionMismatch { expected: standardizer.dim(), got: x.cols() });
    }
    let out = (0..x.rows())
        .into_par_iter()
        .map_init(
            || vec![0.0; x.cols()],
            |buf, i| {
                standardizer.apply_row(x.row(i), buf);
                let mut s = bias;
                for (k, &c) in coef.iter().enumerate() {
                    s += c * h.kernel.apply(h.kernel_scale, svs.row(k), buf);
                }
                s
            },
        )
        .collect();
    Ok(out)
}

pub fn svr_predict(m: &SvrModel, x: &Matrix) -> Result<Vec<f64>> {
    let raw = expansion(&m.hyperparams, &m.standardizer, &m.support_vectors, &m.dual_coef, m.bias, x)?;
    Ok(raw.into_iter().map(|v| m.standardizer.destandardize_target(v)).collect())
}

impl SvrModel {
    /// Largest violation of the dual constraints: the coefficients must sum to
    /// zero and each must lie within `[-C, C]`.
    pub fn dual_violation(&self) -> f64 {
        let c = self.hyperparams.box_constraint;
        let sum = self.dual_coef.iter().sum::<f64>().abs();
        self.dual_coef.iter().map(|a| (a.abs() - c).max(0.0)).fold(sum, f64::max)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        svr_predict(self, x)
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::KernelKind;

    fn line_data() -> (Matrix, Vec<f64>) {
        let xs: Vec<f64> = (0..50).map(|i| i as f64 / 49.0 * 4.0 - 2.0).collect();
        let y = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        (Matrix::column(&xs), y)
    }

    fn rmse(a: &[f64], b: &[f64]) -> f64 {
        (a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
    }

    #[test]
    fn fits_a_noise_free_line() {
        let (x, y) = line_data();
        let h = HyperParams::regression(KernelKind::Linear, 1.0, 100.0, 1e-3);
        let m = svr_train(&x, &y, &h, &SolverOptions::default()).unwrap();
        assert!(m.converged);
        let pred = m.predict(&x).unwrap();
        assert!(rmse(&pred, &y) <= 1e-2, "rmse {}", rmse(&pred, &y));
        assert!(m.dual_violation() <= 1e-6);
        assert!(m.dual_coef.iter().all(|c| c.abs() <= h.box_constraint));

        // points on the tube boundary are predicted within eps (+ solver slack) of target
        let sd = m.standardizer.target_sd;
        for (k, &c) in m.dual_coef.iter().enumerate() {
            if c.abs() < h.box_constraint {
                let row = m.support_vectors.row(k)[0] * m.standardizer.feature_sd[0] + m.standardizer.feature_mean[0];
                let target = 2.0 * row + 1.0;
                let p = m.predict(&Matrix::column(&[row])).unwrap()[0];
                assert!((p - target).abs() <= (1e-3 + 1e-3) * sd, "sv {k}: {p} vs {target}");
            }
        }
    }

    #[test]
    fn constant_targets_stay_in_tube() {
        let (x, _) = line_data();
        let y = vec![3.25; x.rows()];
        let h = HyperParams::regression(KernelKind::Gaussian, 1.0, 1.0, 0.1);
        let m = svr_train(&x, &y, &h, &SolverOptions::default()).unwrap();
        let grid = Matrix::column(&[-5.0, -1.0, 0.0, 0.3, 7.0]);
        for p in m.predict(&grid).unwrap() {
            assert!((p - 3.25).abs() <= 0.1, "{p}");
        }
    }

    #[test]
    fn empty_expansion_returns_bias() {
        let m = SvrModel {
            hyperparams: HyperParams::regression(KernelKind::Gaussian, 1.0, 1.0, 0.1),
            standardizer: Standardizer {
                feature_mean: vec![0.0],
                feature_sd: vec![1.0],
                target_mean: 0.0,
                target_sd: 1.0,
            },
            support_vectors: Matrix::zeros(0, 1),
            dual_coef: vec![],
            bias: 0.75,
            converged: true,
            iterations: 0,
        };
        assert_eq!(m.predict(&Matrix::column(&[1.0, -3.0])).unwrap(), vec![0.75, 0.75]);
    }

    #[test]
    fn batch_equals_rowwise_and_json_round_trip() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64 * 0.7).sin(), (i as f64 * 0.3).cos()]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = rows.iter().map(|r| r[0] * r[0] - r[1]).collect();
        let h = HyperParams::regression(KernelKind::Polynomial, 2.0, 10.0, 0.01);
        let m = svr_train(&x, &y, &h, &SolverOptions::default()).unwrap();
        let batch = m.predict(&x).unwrap();
        for i in 0..x.rows() {
            let one = m.predict(&x.select_rows(&[i])).unwrap();
            assert_eq!(one[0], batch[i]);
        }
        let back = SvrModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.predict(&x).unwrap(), batch);
    }

    #[test]
    fn deterministic_training() {
        let (x, y) = line_data();
        let h = HyperParams::regression(KernelKind::Gaussian, 0.5, 5.0, 0.05);
        let a = svr_train(&x, &y, &h, &SolverOptions::default()).unwrap();
        let b = svr_train(&x, &y, &h, &SolverOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (x, mut y) = line_data();
        let h = HyperParams::regression(KernelKind::Linear, 1.0, 1.0, 0.1);
        let opts = SolverOptions::default();
        assert!(svr_train(&x, &y[..10], &h, &opts).is_err());
        y[3] = f64::NAN;
        assert!(matches!(svr_train(&x, &y, &h, &opts), Err(Error::NonFinite { count: 1, .. })));
        let (x, y) = line_data();
        assert!(svr_train(&x, &y, &HyperParams::classification(KernelKind::Linear, 1.0, 1.0), &opts).is_err());
        assert!(svr_predict(
            &svr_train(&x, &y, &h, &opts).unwrap(),
            &Matrix::zeros(2, 3)
        )
        .is_err());
    }

    #[test]
    fn iteration_cap_flags_non_convergence() {
        let (x, y) = line_data();
        let h = HyperParams::regression(KernelKind::Gaussian, 0.05, 1000.0, 1e-3);
        let m = svr_train(&x, &y, &h, &SolverOptions { tol: 1e-3, max_iter: 3 }).unwrap();
        assert!(!m.converged);
        assert_eq!(m.iterations, 3);
        assert!(m.dual_violation() <= 1e-6);
    }
}
