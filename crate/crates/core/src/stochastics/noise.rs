use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::rng::{stream, StreamDomain};
use crate::error::{Error, Result};

/// Martingale-difference noise `M_{n+1}`: i.i.d., zero-mean, `‖M‖_∞ ≤ D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseModel {
    #[default]
    Zero,
    /// Uniform on `[−D, D]` per component.
    BoundedUniform { bound: f64 },
    /// `±D` with equal probability per component.
    Rademacher { bound: f64 },
}

impl NoiseModel {
    pub fn bound(&self) -> f64 {
        match *self {
            NoiseModel::Zero => 0.0,
            NoiseModel::BoundedUniform { bound } | NoiseModel::Rademacher { bound } => bound,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let b = self.bound();
        if !(b.is_finite() && b >= 0.0) {
            return Err(Error::Config(format!("noise bound must be >= 0, got {b}")));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, d: usize, rng: &mut R) -> Vec<f64> {
        match *self {
            NoiseModel::Zero => vec![0.0; d],
            NoiseModel::BoundedUniform { bound } => (0..d).map(|_| rng.random_range(-bound..=bound)).collect(),
            NoiseModel::Rademacher { bound } => {
                (0..d).map(|_| if rng.random_bool(0.5) { bound } else { -bound }).collect()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct NoiseSampler {
    model: NoiseModel,
    d: usize,
    rng: ChaCha8Rng,
}

impl NoiseSampler {
    pub fn new(model: NoiseModel, d: usize, seed: u64) -> Result<Self> {
        model.validate()?;
        Ok(NoiseSampler { model, d, rng: stream(seed, StreamDomain::Noise, 0, 0) })
    }

    pub fn model(&self) -> &NoiseModel {
        &self.model
    }

    pub fn sample(&mut self, _n: u64) -> Vec<f64> {
        let m = self.model.sample(self.d, &mut self.rng);
        debug_assert!(m.iter().all(|v| v.abs() <= self.model.bound()));
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model() {
        let mut s = NoiseSampler::new(NoiseModel::Zero, 3, 1).unwrap();
        assert_eq!(s.sample(0), vec![0.0; 3]);
    }

    #[test]
    fn hard_bounds() {
        for model in [NoiseModel::BoundedUniform { bound: 0.3 }, NoiseModel::Rademacher { bound: 0.3 }] {
            let mut s = NoiseSampler::new(model, 4, 2).unwrap();
            for n in 0..5000 {
                assert!(s.sample(n).iter().all(|v| v.abs() <= 0.3));
            }
        }
    }

    #[test]
    fn rademacher_values() {
        let mut s = NoiseSampler::new(NoiseModel::Rademacher { bound: 1.0 }, 2, 5).unwrap();
        for n in 0..1000 {
            assert!(s.sample(n).iter().all(|v| *v == 1.0 || *v == -1.0));
        }
    }

    #[test]
    fn rejects_negative_bound() {
        assert!(NoiseModel::Rademacher { bound: -1.0 }.validate().is_err());
    }
}
