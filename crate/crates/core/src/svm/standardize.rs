use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

/// Per-feature (and optionally target) centering and scaling.
///
/// Scales use the sample standard deviation. Columns whose spread is
/// negligible relative to their magnitude are treated as constant and map to 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub feature_mean: Vec<f64>,
    pub feature_sd: Vec<f64>,
    pub target_mean: f64,
    pub target_sd: f64,
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    // constant columns leave rounding residue in the mean; do not amplify it
    if sd <= 1e-12 * mean.abs().max(1.0) {
        (mean, 0.0)
    } else {
        (mean, sd)
    }
}

impl Standardizer {
    /// Fits feature statistics, and target statistics when `y` is given.
    pub fn fit(x: &Matrix, y: Option<&[f64]>) -> Self {
        let mut feature_mean = Vec::with_capacity(x.cols());
        let mut feature_sd = Vec::with_capacity(x.cols());
        for j in 0..x.cols() {
            let (m, s) = mean_sd((0..x.rows()).map(|i| x.get(i, j)));
            feature_mean.push(m);
            feature_sd.push(s);
        }
        let (target_mean, target_sd) = match y {
            Some(y) => mean_sd(y.iter().copied()),
            None => (0.0, 1.0),
        };
        Standardizer { feature_mean, feature_sd, target_mean, target_sd }
    }

    pub fn dim(&self) -> usize {
        self.feature_mean.len()
    }

    pub fn apply_row(&self, row: &[f64], out: &mut [f64]) {
        for (j, (o, &v)) in out.iter_mut().zip(row).enumerate() {
            let s = self.feature_sd[j];
            *o = if s > 0.0 { (v - self.feature_mean[j]) / s } else { 0.0 };
        }
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), x.cols());
        for i in 0..x.rows() {
            self.apply_row(x.row(i), out.row_mut(i));
        }
        out
    }

    fn target_scale(&self) -> f64 {
        if self.target_sd > 0.0 { self.target_sd } else { 1.0 }
    }

    pub fn standardize_target(&self, y: f64) -> f64 {
        (y - self.target_mean) / self.target_scale()
    }

    pub fn destandardize_target(&self, z: f64) -> f64 {
        z * self.target_scale() + self.target_mean
    }
}
