//! Support vector regression and binary classification.
//!
//! Both models standardize their inputs, solve the dual with [`smo`], and keep
//! only the support vectors with non-zero coefficients.

mod kernel;
pub mod smo;
mod standardize;
mod svc;
mod svr;

pub use kernel::{kernel_eval, kernel_matrix, KernelKind};
pub use standardize::Standardizer;
pub use svc::{svc_decision, svc_predict, svc_train, SvcModel};
pub use svr::{svr_predict, svr_train, SvrModel};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const KERNEL_SCALE_BOUNDS: (f64, f64) = (1e-2, 1e3);
pub const BOX_BOUNDS: (f64, f64) = (1e-3, 1e3);
pub const EPSILON_BOUNDS: (f64, f64) = (1e-3, 1.0);

/// Degree of the polynomial kernel.
pub const POLY_DEGREE: i32 = 3;

/// Solver stopping tolerance on the maximal KKT violation.
pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_ITER: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub kernel: KernelKind,
    pub kernel_scale: f64,
    pub box_constraint: f64,
    /// Width of the insensitive tube; `None` for classifiers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl HyperParams {
    pub fn regression(kernel: KernelKind, kernel_scale: f64, box_constraint: f64, epsilon: f64) -> Self {
        HyperParams { kernel, kernel_scale, box_constraint, epsilon: Some(epsilon) }
    }

    pub fn classification(kernel: KernelKind, kernel_scale: f64, box_constraint: f64) -> Self {
        HyperParams { kernel, kernel_scale, box_constraint, epsilon: None }
    }

    /// Positivity and finiteness; the search bounds are enforced by the optimizer, not here.
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.kernel_scale) {
            return Err(Error::invalid(format!("kernel scale must be > 0, got {}", self.kernel_scale)));
        }
        if !ok(self.box_constraint) {
            return Err(Error::invalid(format!("box constraint must be > 0, got {}", self.box_constraint)));
        }
        if let Some(e) = self.epsilon {
            if !(e.is_finite() && e >= 0.0) {
                return Err(Error::invalid(format!("epsilon must be >= 0, got {e}")));
            }
        }
        Ok(())
    }

    pub fn within_bounds(&self) -> bool {
        let inside = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
        inside(self.kernel_scale, KERNEL_SCALE_BOUNDS)
            && inside(self.box_constraint, BOX_BOUNDS)
            && self.epsilon.is_none_or(|e| inside(e, EPSILON_BOUNDS))
    }
}

/// Solver settings shared by SVR and SVC.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER }
    }
}
