//! Support vector regression and classification trained against a target
//! output distribution.
//!
//! A model is scored by a weighted sum of its point-wise training error and
//! a distance between the CDF of its predictions (obtained by pushing
//! samples of the input distribution through the model) and a known or
//! estimated target CDF. Hyperparameters are chosen by minimizing that
//! composite loss with a sequential model-based optimizer.
//!
//! Module map:
//!
//! - [`distributions`]: input marginals and reproducible random streams.
//! - [`cdf`]: empirical CDFs, Monte Carlo CDF estimation, threshold grids.
//! - [`distance`]: L1/Wasserstein, Bhattacharyya and KL distances between CDFs.
//! - [`svm`]: kernels, SMO solver, SVR and SVC models.
//! - [`loss`]: the composite objective for a single hyperparameter setting.
//! - [`hpo`]: hyperparameter search (expected-improvement SMBO and random).
//! - [`metrics`]: RMSE, PSNR, SSIM, confusion matrices.
//! - [`data_io`]: Ionosphere CSV, PGM images, patches, splits, result files.
//! - [`experiments`]: end-to-end pipelines and their reports.

pub mod cdf;
pub mod data_io;
pub mod distance;
pub mod distributions;
pub mod error;
pub mod experiments;
pub mod hpo;
pub mod loss;
pub mod matrix;
pub mod metrics;
pub mod svm;

pub use error::{Error, Result};
pub use matrix::Matrix;
