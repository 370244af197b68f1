//! Samplers for communication delays, approximation errors and
//! martingale-difference noise. Every sampler owns its random stream.

pub mod approx_error;
pub mod delay;
pub mod noise;
pub mod rng;

pub use approx_error::{ErrorModel, ErrorSampler};
pub use delay::{DelayMatrix, DelayModel, DelaySampler, PairParam};
pub use noise::{NoiseModel, NoiseSampler};

use crate::error::Result;

/// The three stochastic inputs of one run.
#[derive(Debug, Clone)]
pub struct StochasticModels {
    pub delays: DelaySampler,
    pub errors: ErrorSampler,
    pub noise: NoiseSampler,
}

impl StochasticModels {
    pub fn new(delay: DelayModel, error: ErrorModel, noise: NoiseModel, d: usize, seed: u64) -> Result<Self> {
        Ok(StochasticModels {
            delays: DelaySampler::new(delay, d, seed)?,
            errors: ErrorSampler::new(error, d, seed)?,
            noise: NoiseSampler::new(noise, d, seed)?,
        })
    }

    /// No delays, errors or noise.
    pub fn deterministic(d: usize) -> Self {
        StochasticModels::new(DelayModel::Zero, ErrorModel::Zero, NoiseModel::Zero, d, 0)
            .expect("zero models are valid")
    }
}
