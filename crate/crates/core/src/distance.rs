//! Distances between a target CDF and a predicted CDF on a threshold grid.
//!
//! Bhattacharyya and KL are defined on probability masses, so by default both
//! CDFs are first turned into per-cell masses on the grid (see
//! [`DiscreteMasses`]). [`DistanceMode::LiteralCdf`] instead plugs the CDF
//! values straight into the integrals, which is kept for comparison only: the
//! results are not proper divergences and may even be negative.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cdf::{EmpiricalCdf, ThresholdGrid};
use crate::error::{Error, Result};

/// Floor applied before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DistanceKind {
    #[serde(rename = "l1")]
    L1Cdf,
    #[default]
    #[serde(rename = "bhattacharyya")]
    Bhattacharyya,
    #[serde(rename = "kl")]
    Kl,
    #[serde(rename = "wasserstein1")]
    Wasserstein1,
}

impl DistanceKind {
    pub const ALL: [DistanceKind; 4] =
        [DistanceKind::L1Cdf, DistanceKind::Bhattacharyya, DistanceKind::Kl, DistanceKind::Wasserstein1];

    pub fn name(self) -> &'static str {
        match self {
            DistanceKind::L1Cdf => "l1",
            DistanceKind::Bhattacharyya => "bhattacharyya",
            DistanceKind::Kl => "kl",
            DistanceKind::Wasserstein1 => "wasserstein1",
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" | "l1_cdf" => Ok(DistanceKind::L1Cdf),
            "bhattacharyya" => Ok(DistanceKind::Bhattacharyya),
            "kl" => Ok(DistanceKind::Kl),
            "wasserstein1" | "w1" => Ok(DistanceKind::Wasserstein1),
            other => Err(Error::invalid(format!("unknown distance '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    /// Compare per-cell probability masses (CDF increments).
    #[default]
    Masses,
    /// Evaluate the integrals on raw CDF values.
    LiteralCdf,
}

/// Probability masses of the `K + 1` cells cut by a `K`-threshold grid:
/// below the first threshold, between consecutive thresholds, above the last.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMasses(Vec<f64>);

impl DiscreteMasses {
    /// Wraps explicit masses; they must be non-negative and sum to 1 within 1e-9.
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(Error::invalid("masses must be finite and non-negative"));
        }
        let s: f64 = masses.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("masses sum to {s}, expected 1")));
        }
        Ok(DiscreteMasses(masses))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn cdf_to_masses(cdf: &EmpiricalCdf, grid: &ThresholdGrid) -> DiscreteMasses {
    let t = grid.thresholds();
    let mut masses = Vec::with_capacity(t.len() + 1);
    let mut prev = 0.0;
    let mut partial = 0.0;
    for &y in t {
        let f = cdf.eval(y);
        let m = (f - prev).max(0.0);
        masses.push(m);
        partial += m;
        prev = f;
    }
    masses.push((1.0 - partial).max(0.0));
    DiscreteMasses(masses)
}

fn check_len(p: &DiscreteMasses, q: &DiscreteMasses) -> Result<()> {
    if p.0.len() != q.0.len() {
        return Err(Error::LengthMismatch { left: p.0.len(), right: q.0.len() });
    }
    Ok(())
}

/// `-ln(max(sum sqrt(p q), 1e-12))`.
pub fn bhattacharyya_masses(p: &DiscreteMasses, q: &DiscreteMasses) -> Result<f64> {
    check_len(p, q)?;
    let bc: f64 = p.0.iter().zip(&q.0).map(|(a, b)| (a * b).sqrt()).sum();
    Ok((-bc.max(LOG_FLOOR).ln()).max(0.0))
}

/// `sum p ln(p / max(q, 1e-12))`, with `p = 0` cells contributing nothing.
pub fn kl_masses(p: &DiscreteMasses, q: &DiscreteMasses) -> Result<f64> {
    check_len(p, q)?;
    let d: f64 = p
        .0
        .iter()
        .zip(&q.0)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| a * (a / b.max(LOG_FLOOR)).ln())
        .sum();
    Ok(d.max(0.0))
}

/// Riemann sum of `|f - g|` over the grid, scaled by the grid spacing.
pub fn l1_cdf_distance(f: &EmpiricalCdf, g: &EmpiricalCdf, grid: &ThresholdGrid) -> f64 {
    l1_cdf_sum(f, g, grid) * grid.spacing()
}

/// Unscaled sum of `|f - g|` over the thresholds.
pub fn l1_cdf_sum(f: &EmpiricalCdf, g: &EmpiricalCdf, grid: &ThresholdGrid) -> f64 {
    grid.thresholds().iter().map(|&y| (f.eval(y) - g.eval(y)).abs()).sum()
}

pub fn bhattacharyya_distance(f: &EmpiricalCdf, g: &EmpiricalCdf, grid: &ThresholdGrid, mode: DistanceMode) -> f64 {
    match mode {
        DistanceMode::Masses => {
            bhattacharyya_masses(&cdf_to_masses(f, grid), &cdf_to_masses(g, grid)).expect("same grid")
        }
        DistanceMode::LiteralCdf => {
            let integral: f64 =
                grid.thresholds().iter().map(|&y| (f.eval(y) * g.eval(y)).sqrt()).sum::<f64>() * grid.spacing();
            -integral.max(LOG_FLOOR).ln()
        }
    }
}

/// KL divergence of `g_pred` from `f_true` (true distribution first).
pub fn kl_divergence(f_true: &EmpiricalCdf, g_pred: &EmpiricalCdf, grid: &ThresholdGrid, mode: DistanceMode) -> f64 {
    match mode {
        DistanceMode::Masses => kl_masses(&cdf_to_masses(f_true, grid), &cdf_to_masses(g_pred, grid)).expect("same grid"),
        DistanceMode::LiteralCdf => {
            grid.thresholds()
                .iter()
                .map(|&y| {
                    let a = f_true.eval(y);
                    if a > 0.0 { a * (a / g_pred.eval(y).max(LOG_FLOOR)).ln() } else { 0.0 }
                })
                .sum::<f64>()
                * grid.spacing()
        }
    }
}

/// Distance of kind `kind` in the default (masses) mode.
pub fn distance(kind: DistanceKind, f: &EmpiricalCdf, g: &EmpiricalCdf, grid: &ThresholdGrid) -> f64 {
    distance_with_mode(kind, f, g, grid, DistanceMode::Masses)
}

pub fn distance_with_mode(
    kind: DistanceKind,
    f: &EmpiricalCdf,
    g: &EmpiricalCdf,
    grid: &ThresholdGrid,
    mode: DistanceMode,
) -> f64 {
    match kind {
        DistanceKind::L1Cdf | DistanceKind::Wasserstein1 => l1_cdf_distance(f, g, grid),
        DistanceKind::Bhattacharyya => bhattacharyya_distance(f, g, grid, mode),
        DistanceKind::Kl => kl_divergence(f, g, grid, mode),
    }
}
