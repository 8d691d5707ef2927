//! Input distributions and reproducible random streams.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// One independent input dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Marginal {
    Uniform { lower: f64, upper: f64 },
    Normal { mean: f64, sd: f64 },
}

impl Marginal {
    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        let m = Marginal::Uniform { lower, upper };
        m.validate()?;
        Ok(m)
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        let m = Marginal::Normal { mean, sd };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Marginal::Uniform { lower, upper } => {
                if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                    return Err(Error::invalid(format!("uniform needs lower < upper, got [{lower}, {upper}]")));
                }
            }
            Marginal::Normal { mean, sd } => {
                if !(mean.is_finite() && sd.is_finite() && sd >= 0.0) {
                    return Err(Error::invalid(format!("normal needs finite mean and sd >= 0, got ({mean}, {sd})")));
                }
            }
        }
        Ok(())
    }

    /// Draws one value. Uniform draws fall in `[lower, upper)`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Marginal::Uniform { lower, upper } => {
                let u: f64 = rng.random();
                // guard the rounding case where lower + u*(upper-lower) == upper
                let v = lower + u * (upper - lower);
                if v >= upper { lower } else { v }
            }
            Marginal::Normal { mean, sd } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + sd * z
            }
        }
    }
}

/// Product of independent marginals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InputDistribution {
    marginals: Vec<Marginal>,
}

impl InputDistribution {
    pub fn new(marginals: Vec<Marginal>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::invalid("input distribution needs at least one marginal"));
        }
        for m in &marginals {
            m.validate()?;
        }
        Ok(InputDistribution { marginals })
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    /// `count` rows, column `j` drawn from marginal `j`. Rows are filled in order.
    pub fn sample(&self, count: usize, rng: &RngStream) -> Result<Matrix> {
        if count == 0 {
            return Err(Error::invalid("sample count must be >= 1"));
        }
        let mut gen = rng.generator();
        let n = self.dim();
        let mut data = Vec::with_capacity(count * n);
        for _ in 0..count {
            for m in &self.marginals {
                data.push(m.draw(&mut gen));
            }
        }
        Matrix::from_vec(count, n, data)
    }
}

/// A `(seed, stream_id)` pair naming one reproducible random sequence.
///
/// Streams are plain values: cloning one and drawing from both clones yields
/// the same numbers, and [`RngStream::derive`] hands out independent children.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream { seed, stream_id: 0 }
    }

    pub fn with_stream(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Child stream `child_index`. Distinct children of one parent always get
    /// distinct stream ids (the mixing step is a bijection in the child index).
    pub fn derive(&self, child_index: u64) -> RngStream {
        let base = splitmix64(self.stream_id ^ 0xA076_1D64_78BD_642F);
        let id = splitmix64(base.wrapping_add(child_index.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        RngStream { seed: self.seed, stream_id: id }
    }
}

/// Free-function form of [`RngStream::derive`].
pub fn derive_stream(rng: &RngStream, child_index: u64) -> RngStream {
    rng.derive(child_index)
}

/// Free-function form of [`InputDistribution::sample`].
pub fn sample(dist: &InputDistribution, count: usize, rng: &RngStream) -> Result<Matrix> {
    dist.sample(count, rng)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    fn mean_sd(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, var.sqrt())
    }

    #[test]
    fn uniform_stays_in_bounds() {
        let d = InputDistribution::new(vec![Marginal::uniform(0.0, 1.0).unwrap()]).unwrap();
        for seed in 0..5 {
            let x = d.sample(1000, &RngStream::new(seed)).unwrap();
            assert!(x.as_slice().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn degenerate_normal_is_point_mass() {
        let d = InputDistribution::new(vec![Marginal::normal(0.0, 0.0).unwrap()]).unwrap();
        let x = d.sample(5, &RngStream::new(3)).unwrap();
        assert_eq!(x.as_slice(), &[0.0; 5]);
    }

    #[test]
    fn standard_normal_moments() {
        let d = InputDistribution::new(vec![Marginal::normal(0.0, 1.0).unwrap()]).unwrap();
        let x = d.sample(100_000, &RngStream::new(11)).unwrap();
        let (m, sd) = mean_sd(x.as_slice());
        assert!(m.abs() <= 0.02, "mean {m}");
        assert!((sd - 1.0).abs() <= 0.03, "sd {sd}");
    }

    #[test]
    fn invalid_marginals_rejected() {
        assert!(Marginal::uniform(1.0, 1.0).is_err());
        assert!(Marginal::normal(0.0, -1.0).is_err());
        assert!(InputDistribution::new(vec![]).is_err());
    }

    #[test]
    fn derive_is_deterministic_and_separates_children() {
        let parent = RngStream::with_stream(7, 0);
        assert_eq!(parent.derive(3), derive_stream(&parent, 3));
        let d = InputDistribution::new(vec![Marginal::uniform(0.0, 1.0).unwrap()]).unwrap();
        let a = d.sample(1, &parent.derive(0)).unwrap();
        let b = d.sample(1, &parent.derive(1)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn thousand_children_never_collide() {
        let parent = RngStream::new(42);
        let d = InputDistribution::new(vec![Marginal::uniform(0.0, 1.0).unwrap()]).unwrap();
        let mut seen = HashSet::new();
        for c in 0..1000 {
            let s = d.sample(100, &parent.derive(c)).unwrap();
            let key: Vec<u64> = s.as_slice().iter().map(|v| v.to_bits()).collect();
            assert!(seen.insert(key), "child {c} repeated a sequence");
        }
    }

    #[test]
    fn marginal_json_shape() {
        let m: Marginal = serde_json::from_str(r#"{"kind":"uniform","lower":10,"upper":30}"#).unwrap();
        assert_eq!(m, Marginal::Uniform { lower: 10.0, upper: 30.0 });
    }
}
