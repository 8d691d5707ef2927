use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{HyperParams, POLY_DEGREE};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Polynomial,
    Gaussian,
}

impl KernelKind {
    pub const ALL: [KernelKind; 3] = [KernelKind::Linear, KernelKind::Polynomial, KernelKind::Gaussian];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Linear => "linear",
            KernelKind::Polynomial => "polynomial",
            KernelKind::Gaussian => "gaussian",
        }
    }

    /// Kernel value on two vectors of equal length.
    #[inline]
    pub(crate) fn apply(self, scale: f64, x: &[f64], z: &[f64]) -> f64 {
        match self {
            KernelKind::Linear => dot(x, z) / scale,
            KernelKind::Polynomial => (1.0 + dot(x, z) / scale).powi(POLY_DEGREE),
            KernelKind::Gaussian => {
                let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (scale * scale)).exp()
            }
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(KernelKind::Linear),
            "polynomial" | "poly" => Ok(KernelKind::Polynomial),
            "gaussian" | "rbf" => Ok(KernelKind::Gaussian),
            other => Err(Error::invalid(format!("unknown kernel '{other}'"))),
        }
    }
}

#[inline]
fn dot(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| a * b).sum()
}

pub fn kernel_eval(h: &HyperParams, x: &[f64], z: &[f64]) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: z.len() });
    }
    if !(h.kernel_scale > 0.0) {
        return Err(Error::invalid("kernel scale must be > 0"));
    }
    Ok(h.kernel.apply(h.kernel_scale, x, z))
}

/// Dense symmetric Gram matrix, row-major. Rows are filled in parallel; each
/// entry depends only on its two rows so the result is independent of thread count.
pub fn kernel_matrix(h: &HyperParams, x: &Matrix) -> Vec<f64> {
    let n = x.rows();
    let mut k = vec![0.0; n * n];
    k.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
        let xi = x.row(i);
        for (j, out) in row.iter_mut().enumerate().take(i + 1) {
            *out = h.kernel.apply(h.kernel_scale, xi, x.row(j));
        }
    });
    for i in 0..n {
        for j in (i + 1)..n {
            k[i * n + j] = k[j * n + i];
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn hp(kernel: KernelKind, scale: f64) -> HyperParams {
        HyperParams::classification(kernel, scale, 1.0)
    }

    #[test]
    fn hand_values() {
        assert_eq!(kernel_eval(&hp(KernelKind::Gaussian, 3.7), &[1.0, -2.0], &[1.0, -2.0]).unwrap(), 1.0);
        assert_eq!(kernel_eval(&hp(KernelKind::Linear, 1.0), &[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        assert_eq!(kernel_eval(&hp(KernelKind::Polynomial, 1.0), &[1.0], &[1.0]).unwrap(), 8.0);
        assert_eq!(kernel_eval(&hp(KernelKind::Linear, 2.0), &[1.0, 2.0], &[3.0, 4.0]).unwrap(), 5.5);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(kernel_eval(&hp(KernelKind::Linear, 1.0), &[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn gram_matches_pointwise() {
        let x = Matrix::from_rows(&[vec![0.0, 1.0], vec![2.0, -1.0], vec![0.5, 0.5]]).unwrap();
        for kind in KernelKind::ALL {
            let h = hp(kind, 1.5);
            let k = kernel_matrix(&h, &x);
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(k[i * 3 + j], kernel_eval(&h, x.row(i), x.row(j)).unwrap());
                }
            }
        }
    }

    proptest! {
        #[test]
        fn symmetric(x in prop::collection::vec(-3.0f64..3.0, 4), z in prop::collection::vec(-3.0f64..3.0, 4),
                     scale in 0.01f64..1000.0) {
            for kind in KernelKind::ALL {
                let h = hp(kind, scale);
                prop_assert_eq!(kernel_eval(&h, &x, &z).unwrap(), kernel_eval(&h, &z, &x).unwrap());
            }
        }

        #[test]
        fn gaussian_bounded(x in prop::collection::vec(-3.0f64..3.0, 3), z in prop::collection::vec(-3.0f64..3.0, 3),
                            scale in 0.5f64..1000.0) {
            let k = kernel_eval(&hp(KernelKind::Gaussian, scale), &x, &z).unwrap();
            prop_assert!(k > 0.0 && k <= 1.0);
            if x != z {
                prop_assert!(k < 1.0);
            }
        }
    }
}
