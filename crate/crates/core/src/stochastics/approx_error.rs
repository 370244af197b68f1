use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use super::rng::{stream, StreamDomain};
use crate::error::{Error, Result};
use crate::objectives::WeightedNorm;

/// Approximation error `ε_n` added to the field, bounded by `ε` in `norm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ErrorModel {
    #[default]
    Zero,
    /// Each component i.i.d. uniform on `[0, ε/2]` (biased: mean `ε/4`).
    ComponentwiseUniform {
        epsilon: f64,
        #[serde(default)]
        norm: WeightedNorm,
    },
    /// The same vector `b` every tick.
    FixedBias {
        bias: Vec<f64>,
        #[serde(default)]
        norm: WeightedNorm,
    },
    /// Uniform on the closed `ε`-ball of `norm`.
    NormBallUniform {
        epsilon: f64,
        #[serde(default)]
        norm: WeightedNorm,
    },
}

impl ErrorModel {
    pub fn norm(&self) -> WeightedNorm {
        match self {
            ErrorModel::Zero => WeightedNorm::Euclidean,
            ErrorModel::ComponentwiseUniform { norm, .. }
            | ErrorModel::FixedBias { norm, .. }
            | ErrorModel::NormBallUniform { norm, .. } => norm.clone(),
        }
    }

    /// The bound `ε` with `‖ε_n‖ ≤ ε` for every draw.
    pub fn bound(&self) -> f64 {
        match self {
            ErrorModel::Zero => 0.0,
            ErrorModel::ComponentwiseUniform { epsilon, .. } | ErrorModel::NormBallUniform { epsilon, .. } => *epsilon,
            ErrorModel::FixedBias { bias, norm } => norm.eval_unchecked(bias),
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let norm = self.norm();
        norm.validate(Some(d))?;
        match self {
            ErrorModel::Zero => Ok(()),
            ErrorModel::ComponentwiseUniform { epsilon, .. } => {
                check_epsilon(*epsilon)?;
                let worst = norm.eval_unchecked(&vec![epsilon / 2.0; d]);
                if worst > epsilon * (1.0 + 1e-12) {
                    return Err(Error::Config(format!(
                        "componentwise-uniform errors can reach norm {worst} > epsilon {epsilon} in dimension {d}; use a max-norm bound"
                    )));
                }
                Ok(())
            }
            ErrorModel::FixedBias { bias, .. } => {
                if bias.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: bias.len() });
                }
                if bias.iter().any(|b| !b.is_finite()) {
                    return Err(Error::Config("bias must be finite".into()));
                }
                Ok(())
            }
            ErrorModel::NormBallUniform { epsilon, .. } => check_epsilon(*epsilon),
        }
    }

    /// One draw of `ε_n` (the models are i.i.d. in `n`).
    pub fn sample<R: Rng + ?Sized>(&self, d: usize, rng: &mut R) -> Vec<f64> {
        match self {
            ErrorModel::Zero => vec![0.0; d],
            ErrorModel::ComponentwiseUniform { epsilon, .. } => {
                (0..d).map(|_| rng.random_range(0.0..=epsilon / 2.0)).collect()
            }
            ErrorModel::FixedBias { bias, .. } => bias.clone(),
            ErrorModel::NormBallUniform { epsilon, norm } => sample_ball(norm, *epsilon, d, rng),
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::Config(format!("epsilon must be >= 0, got {epsilon}")));
    }
    Ok(())
}

/// Uniform point of `{x : ‖x‖ ≤ radius}`. For p-norms this uses the
/// generalised-Gaussian construction `y / (‖y‖_p^p + Z)^{1/p}` with `Z ~ Exp(1)`.
fn sample_ball<R: Rng + ?Sized>(norm: &WeightedNorm, radius: f64, d: usize, rng: &mut R) -> Vec<f64> {
    if radius == 0.0 {
        return vec![0.0; d];
    }
    let (p, weights) = match norm {
        WeightedNorm::Max { .. } => {
            return (0..d).map(|i| norm.weight(i) * radius * rng.random_range(-1.0..=1.0)).collect();
        }
        WeightedNorm::Euclidean => (2.0, Vec::new()),
        WeightedNorm::P { p, weights } => (*p, weights.clone()),
    };
    let gamma = Gamma::new(1.0 / p, 1.0).expect("p >= 1");
    let y: Vec<f64> = (0..d)
        .map(|_| {
            let mag: f64 = gamma.sample(rng).powf(1.0 / p);
            if rng.random_bool(0.5) { mag } else { -mag }
        })
        .collect();
    let z: f64 = Exp1.sample(rng);
    let scale = (y.iter().map(|v| v.abs().powf(p)).sum::<f64>() + z).powf(1.0 / p);
    y.iter()
        .enumerate()
        .map(|(i, v)| {
            let w = if weights.is_empty() { 1.0 } else { weights[i] };
            radius * v / scale / w
        })
        .collect()
}

/// Draws `ε_n`, checking the norm bound on every sample.
#[derive(Debug, Clone)]
pub struct ErrorSampler {
    model: ErrorModel,
    norm: WeightedNorm,
    bound: f64,
    d: usize,
    rng: ChaCha8Rng,
}

impl ErrorSampler {
    pub fn new(model: ErrorModel, d: usize, seed: u64) -> Result<Self> {
        ErrorSampler::with_domain(model, d, seed, StreamDomain::Error)
    }

    /// A sampler on a separate stream family, e.g. for decoupled shadow runs.
    pub fn with_domain(model: ErrorModel, d: usize, seed: u64, domain: StreamDomain) -> Result<Self> {
        model.validate(d)?;
        Ok(ErrorSampler {
            norm: model.norm(),
            bound: model.bound(),
            model,
            d,
            rng: stream(seed, domain, 0, 0),
        })
    }

    pub fn model(&self) -> &ErrorModel {
        &self.model
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn sample(&mut self, _n: u64) -> Vec<f64> {
        let e = self.model.sample(self.d, &mut self.rng);
        let size = self.norm.eval_unchecked(&e);
        assert!(
            size <= self.bound * (1.0 + 1e-12) + f64::MIN_POSITIVE,
            "error sample {e:?} has norm {size} above the bound {}",
            self.bound
        );
        e
    }
}
