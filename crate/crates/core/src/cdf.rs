//! Empirical CDFs, Monte Carlo CDF estimation and threshold grids.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distributions::{InputDistribution, RngStream};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Grid size used when nothing else is configured.
pub const DEFAULT_GRID_SIZE: usize = 100;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    /// Right-continuous step function, the plain counting estimator.
    Step,
    /// Piecewise linear between knots.
    #[default]
    Linear,
}

/// Monotone CDF represented by its knots.
///
/// Evaluates to 0 strictly below the first knot and to 1 at or above the last
/// one, whatever probability the last knot carries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    knots: Vec<(f64, f64)>,
    interpolation: Interpolation,
}

impl EmpiricalCdf {
    /// Counting estimator: one knot per distinct value with `p = #{y_i <= y} / n`.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::NoObservations);
        }
        let bad = values.iter().filter(|v| !v.is_finite()).count();
        if bad > 0 {
            return Err(Error::NonFinite { what: "observations", count: bad });
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mut knots: Vec<(f64, f64)> = Vec::new();
        for (i, &y) in sorted.iter().enumerate() {
            let p = (i + 1) as f64 / n;
            match knots.last_mut() {
                Some(last) if last.0 == y => last.1 = p,
                _ => knots.push((y, p)),
            }
        }
        Ok(EmpiricalCdf { knots, interpolation: Interpolation::default() })
    }

    pub fn from_knots(knots: Vec<(f64, f64)>, interpolation: Interpolation) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::NoObservations);
        }
        for w in knots.windows(2) {
            if !(w[0].0 < w[1].0) {
                return Err(Error::invalid("cdf knots must be strictly ascending in y"));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::invalid("cdf probabilities must be non-decreasing"));
            }
        }
        if knots.iter().any(|&(y, p)| !y.is_finite() || !(0.0..=1.0).contains(&p)) {
            return Err(Error::invalid("cdf knots need finite y and p in [0, 1]"));
        }
        Ok(EmpiricalCdf { knots, interpolation })
    }

    pub fn with_interpolation(mut self, interpolation: Interpolation) -> Self {
        self.interpolation = interpolation;
        self
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    /// `(min, max)` of the knot abscissae.
    pub fn support(&self) -> (f64, f64) {
        (self.knots[0].0, self.knots[self.knots.len() - 1].0)
    }

    pub fn eval(&self, y: f64) -> f64 {
        let (lo, hi) = self.support();
        if y < lo || y.is_nan() {
            return 0.0;
        }
        if y >= hi {
            return 1.0;
        }
        // index of the last knot with knot.y <= y; exists because y >= lo
        let k = self.knots.partition_point(|&(ky, _)| ky <= y) - 1;
        let (y0, p0) = self.knots[k];
        match self.interpolation {
            Interpolation::Step => p0,
            Interpolation::Linear => {
                let (y1, p1) = self.knots[k + 1];
                p0 + (p1 - p0) * (y - y0) / (y1 - y0)
            }
        }
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("y,p\n");
        for &(y, p) in &self.knots {
            let _ = writeln!(s, "{y},{p}");
        }
        s
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    pub fn parse_csv(text: &str, origin: &str) -> Result<Self> {
        let mut knots = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with(|c: char| c.is_ascii_alphabetic())) {
                continue;
            }
            let perr = |msg: String| Error::Parse { path: origin.to_string(), line: i + 1, msg };
            let mut parts = line.split(',');
            let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(perr("expected two columns y,p".into()));
            };
            let y: f64 = a.trim().parse().map_err(|e| perr(format!("bad y: {e}")))?;
            let p: f64 = b.trim().parse().map_err(|e| perr(format!("bad p: {e}")))?;
            knots.push((y, p));
        }
        Self::from_knots(knots, Interpolation::default())
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text, &path.display().to_string())
    }
}

/// Counting estimator over `values` (linear interpolation between knots).
pub fn ecdf_build(values: &[f64]) -> Result<EmpiricalCdf> {
    EmpiricalCdf::from_values(values)
}

pub fn ecdf_eval(cdf: &EmpiricalCdf, y: f64) -> f64 {
    cdf.eval(y)
}

/// Strictly ascending thresholds at which CDFs are compared.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdGrid {
    thresholds: Vec<f64>,
}

impl ThresholdGrid {
    pub fn new(thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.len() < 2 {
            return Err(Error::invalid("threshold grid needs K >= 2"));
        }
        if thresholds.iter().any(|t| !t.is_finite()) || thresholds.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("thresholds must be finite and strictly ascending"));
        }
        Ok(ThresholdGrid { thresholds })
    }

    /// `k` equally spaced thresholds from `lo` to `hi` inclusive.
    pub fn linspace(lo: f64, hi: f64, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid("threshold grid needs K >= 2"));
        }
        let step = (hi - lo) / (k - 1) as f64;
        let mut t: Vec<f64> = (0..k).map(|i| lo + step * i as f64).collect();
        t[k - 1] = hi;
        Self::new(t)
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Mean spacing; equals the exact spacing for grids built by [`make_grid`].
    pub fn spacing(&self) -> f64 {
        let k = self.thresholds.len();
        (self.thresholds[k - 1] - self.thresholds[0]) / (k - 1) as f64
    }
}

/// `k` equally spaced thresholds over the union of both supports, padded by
/// 5% of the union width on each side. A zero-width union `{c}` becomes `[c-1, c+1]`.
pub fn make_grid(target: &EmpiricalCdf, predicted: &EmpiricalCdf, k: usize) -> Result<ThresholdGrid> {
    let (a0, a1) = target.support();
    let (b0, b1) = predicted.support();
    let lo = a0.min(b0);
    let hi = a1.max(b1);
    let width = hi - lo;
    if width > 0.0 {
        ThresholdGrid::linspace(lo - 0.05 * width, hi + 0.05 * width, k)
    } else {
        ThresholdGrid::linspace(lo - 1.0, hi + 1.0, k)
    }
}

/// Output of [`mc_cdf`]: the estimated CDF plus the sample that produced it,
/// so the same draw can double as a training set.
#[derive(Clone, Debug)]
pub struct McCdf {
    pub cdf: EmpiricalCdf,
    pub inputs: Matrix,
    pub outputs: Vec<f64>,
}

/// Plain Monte Carlo estimate of the CDF of `predict(X)` with `X ~ dist`.
pub fn mc_cdf<F>(predict: F, dist: &InputDistribution, sample_count: usize, rng: &RngStream) -> Result<McCdf>
where
    F: Fn(&Matrix) -> Result<Vec<f64>>,
{
    if sample_count < 100 {
        return Err(Error::invalid(format!("mc_cdf needs at least 100 samples, got {sample_count}")));
    }
    let inputs = dist.sample(sample_count, rng)?;
    let (cdf, outputs) = cdf_of_predictions(&predict, &inputs)?;
    Ok(McCdf { cdf, inputs, outputs })
}

/// Pushes a fixed input sample through `predict` and builds the output CDF.
pub fn cdf_of_predictions<F>(predict: F, inputs: &Matrix) -> Result<(EmpiricalCdf, Vec<f64>)>
where
    F: Fn(&Matrix) -> Result<Vec<f64>>,
{
    let outputs = predict(inputs)?;
    if outputs.len() != inputs.rows() {
        return Err(Error::LengthMismatch { left: inputs.rows(), right: outputs.len() });
    }
    let bad = outputs.iter().filter(|v| !v.is_finite()).count();
    if bad > 0 {
        return Err(Error::NonFinite { what: "model predictions", count: bad });
    }
    Ok((EmpiricalCdf::from_values(&outputs)?, outputs))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::Rng;

    use super::*;
    use crate::distributions::Marginal;

    fn brute(values: &[f64], y: f64) -> f64 {
        values.iter().filter(|&&v| v <= y).count() as f64 / values.len() as f64
    }

    #[test]
    fn three_values() {
        let c = ecdf_build(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(c.eval(2.0), 2.0 / 3.0);
    }

    #[test]
    fn single_value_boundaries() {
        let c = ecdf_build(&[5.0]).unwrap();
        assert_eq!(c.eval(4.9), 0.0);
        assert_eq!(c.eval(5.0), 1.0);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(ecdf_build(&[]), Err(Error::NoObservations)));
    }

    #[test]
    fn far_tails() {
        let c = ecdf_build(&[0.3, -2.0, 7.5]).unwrap();
        assert_eq!(ecdf_eval(&c, -1e9), 0.0);
        assert_eq!(ecdf_eval(&c, 1e9), 1.0);
    }

    #[test]
    fn linear_interpolation_between_knots() {
        let c = EmpiricalCdf::from_knots(vec![(0.0, 0.0), (1.0, 1.0)], Interpolation::Linear).unwrap();
        assert_eq!(c.eval(0.25), 0.25);
    }

    #[test]
    fn random_sets_match_counting_oracle() {
        let mut rng = RngStream::new(5).generator();
        let values: Vec<f64> = (0..20).map(|_| rng.random_range(-3.0..3.0)).collect();
        let c = ecdf_build(&values).unwrap().with_interpolation(Interpolation::Step);
        for _ in 0..50 {
            let q = rng.random_range(-4.0..4.0);
            assert_eq!(c.eval(q), brute(&values, q));
        }
        let lin = ecdf_build(&values).unwrap();
        for &v in &values {
            assert_eq!(lin.eval(v), brute(&values, v));
        }
    }

    #[test]
    fn ties_collapse_to_one_knot() {
        let c = ecdf_build(&[1.0, 1.0, 2.0, 1.0]).unwrap();
        assert_eq!(c.knots(), &[(1.0, 0.75), (2.0, 1.0)]);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let c = ecdf_build(&[0.1, 0.7, 1.0 / 3.0, 2.5e-7]).unwrap();
        let back = EmpiricalCdf::parse_csv(&c.to_csv_string(), "mem").unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn grid_rules() {
        let u = EmpiricalCdf::from_knots(vec![(0.0, 0.0), (1.0, 1.0)], Interpolation::Linear).unwrap();
        let g = make_grid(&u, &u, 3).unwrap();
        let t = g.thresholds();
        assert!((t[0] + 0.05).abs() < 1e-15 && (t[1] - 0.5).abs() < 1e-15 && (t[2] - 1.05).abs() < 1e-15);

        let point = ecdf_build(&[2.0]).unwrap();
        let g = make_grid(&point, &point, 5).unwrap();
        assert_eq!(g.thresholds()[0], 1.0);
        assert_eq!(g.thresholds()[4], 3.0);

        let v = EmpiricalCdf::from_knots(vec![(2.0, 0.0), (3.0, 1.0)], Interpolation::Linear).unwrap();
        let g = make_grid(&u, &v, 11).unwrap();
        assert!((g.thresholds()[0] + 0.15).abs() < 1e-12);
        assert!((g.thresholds()[10] - 3.15).abs() < 1e-12);
        assert!(make_grid(&u, &v, 1).is_err());
    }

    #[test]
    fn constant_model_gives_unit_step() {
        let d = InputDistribution::new(vec![Marginal::uniform(0.0, 1.0).unwrap()]).unwrap();
        let r = mc_cdf(|x: &Matrix| Ok(vec![4.0; x.rows()]), &d, 200, &RngStream::new(1)).unwrap();
        assert_eq!(r.cdf.knots(), &[(4.0, 1.0)]);
        assert_eq!(r.cdf.eval(3.999), 0.0);
        assert_eq!(r.inputs.rows(), 200);
        assert_eq!(r.outputs.len(), 200);
    }

    #[test]
    fn non_finite_predictions_are_counted() {
        let d = InputDistribution::new(vec![Marginal::uniform(0.0, 1.0).unwrap()]).unwrap();
        let f = |x: &Matrix| Ok(x.iter_rows().map(|r| if r[0] < 0.5 { f64::NAN } else { r[0] }).collect());
        match mc_cdf(f, &d, 1000, &RngStream::new(2)) {
            Err(Error::NonFinite { count, .. }) => assert!(count > 400 && count < 600),
            other => panic!("unexpected {other:?}"),
        }
        assert!(mc_cdf(|x: &Matrix| Ok(x.col_values(0)), &d, 99, &RngStream::new(2)).is_err());
    }

    fn sup_gap_uniform(n: usize, seed: u64) -> f64 {
        let d = InputDistribution::new(vec![Marginal::uniform(0.0, 1.0).unwrap()]).unwrap();
        let r = mc_cdf(|x: &Matrix| Ok(x.col_values(0)), &d, n, &RngStream::new(seed)).unwrap();
        let c = r.cdf.with_interpolation(Interpolation::Step);
        // the sup of |F_n - F| is attained at a knot, from the left or the right
        let mut gap: f64 = 0.0;
        let mut prev = 0.0;
        for &(y, p) in c.knots() {
            gap = gap.max((p - y).abs()).max((y - prev).abs());
            prev = p;
        }
        gap
    }

    #[test]
    fn identity_model_recovers_uniform_cdf() {
        assert!(sup_gap_uniform(100_000, 9) <= 0.01);
    }

    #[test]
    fn larger_samples_shrink_the_gap() {
        let wins = (0..10).filter(|&s| sup_gap_uniform(100_000, 100 + s) < sup_gap_uniform(1_000, 200 + s)).count();
        assert!(wins >= 9, "only {wins}/10");
    }

    proptest! {
        #[test]
        fn eval_is_monotone(values in prop::collection::vec(-100.0f64..100.0, 1..40),
                            a in -150.0f64..150.0, b in -150.0f64..150.0,
                            step in any::<bool>()) {
            let mode = if step { Interpolation::Step } else { Interpolation::Linear };
            let c = ecdf_build(&values).unwrap().with_interpolation(mode);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(c.eval(lo) <= c.eval(hi));
            prop_assert!((0.0..=1.0).contains(&c.eval(lo)));
        }

        #[test]
        fn exact_at_data_points(values in prop::collection::vec(-10.0f64..10.0, 1..30)) {
            let c = ecdf_build(&values).unwrap();
            for &v in &values {
                prop_assert_eq!(c.eval(v), brute(&values, v));
            }
        }
    }
}
