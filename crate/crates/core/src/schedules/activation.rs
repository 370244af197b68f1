use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stochastics::rng::{stream, StreamDomain};

/// Rule producing the active set `Y_n` at every tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ActivationPolicy {
    #[default]
    All,
    /// `k` consecutive agents per tick, cycling through `0..d`.
    RoundRobin { k: usize },
    /// Agent `i` is active independently with probability `probs[i]`;
    /// empty draws are resampled.
    Bernoulli { probs: Vec<f64> },
}

impl ActivationPolicy {
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            ActivationPolicy::All => Ok(()),
            ActivationPolicy::RoundRobin { k } => {
                if *k == 0 || *k > d {
                    return Err(Error::Config(format!("round-robin needs 1 <= k <= {d}, got {k}")));
                }
                Ok(())
            }
            ActivationPolicy::Bernoulli { probs } => {
                if probs.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: probs.len() });
                }
                if probs.iter().any(|q| !(*q >= 0.0 && *q <= 1.0)) {
                    return Err(Error::Config("bernoulli probabilities must lie in [0,1]".into()));
                }
                if probs.iter().all(|q| *q == 0.0) {
                    return Err(Error::Config("bernoulli activation can never be nonempty".into()));
                }
                Ok(())
            }
        }
    }
}

/// Generates active sets tick by tick; owns its random stream.
#[derive(Debug, Clone)]
pub struct ActivationSampler {
    policy: ActivationPolicy,
    d: usize,
    rng: ChaCha8Rng,
}

impl ActivationSampler {
    pub fn new(policy: ActivationPolicy, d: usize, seed: u64) -> Result<Self> {
        policy.validate(d)?;
        Ok(ActivationSampler { policy, d, rng: stream(seed, StreamDomain::Activation, 0, 0) })
    }

    pub fn policy(&self) -> &ActivationPolicy {
        &self.policy
    }

    /// Fills `mask` with the active set for tick `n`.
    pub fn sample(&mut self, n: u64, mask: &mut [bool]) {
        debug_assert_eq!(mask.len(), self.d);
        match &self.policy {
            ActivationPolicy::All => mask.fill(true),
            ActivationPolicy::RoundRobin { k } => {
                mask.fill(false);
                let start = (n as u128 * *k as u128 % self.d as u128) as usize;
                for j in 0..*k {
                    mask[(start + j) % self.d] = true;
                }
            }
            ActivationPolicy::Bernoulli { probs } => loop {
                for (m, q) in mask.iter_mut().zip(probs) {
                    *m = self.rng.random_bool(*q);
                }
                if mask.iter().any(|m| *m) {
                    break;
                }
            },
        }
    }

    /// The active sets of ticks `0..ticks`.
    pub fn generate(&mut self, ticks: usize) -> Vec<Vec<bool>> {
        (0..ticks)
            .map(|n| {
                let mut mask = vec![false; self.d];
                self.sample(n as u64, &mut mask);
                mask
            })
            .collect()
    }
}

/// Per-agent activation counters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentCounters {
    counts: Vec<u64>,
}

impl AgentCounters {
    pub fn new(d: usize) -> Self {
        AgentCounters { counts: vec![0; d] }
    }

    pub fn get(&self, i: usize) -> u64 {
        self.counts[i]
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.counts
    }

    pub fn record(&mut self, mask: &[bool]) {
        for (c, m) in self.counts.iter_mut().zip(mask) {
            *c += *m as u64;
        }
    }
}

/// Counters and the generator of active sets for one run.
///
/// `counters()` holds the number of activations in ticks strictly before the
/// current clock; the step taken at tick `n` by agent `i` uses that count.
#[derive(Debug, Clone)]
pub struct AgentSchedule {
    counters: AgentCounters,
    sampler: ActivationSampler,
}

impl AgentSchedule {
    pub fn new(policy: ActivationPolicy, d: usize, seed: u64) -> Result<Self> {
        Ok(AgentSchedule { counters: AgentCounters::new(d), sampler: ActivationSampler::new(policy, d, seed)? })
    }

    pub fn counters(&self) -> &AgentCounters {
        &self.counters
    }

    pub fn draw(&mut self, n: u64, mask: &mut [bool]) {
        self.sampler.sample(n, mask);
    }

    pub fn record(&mut self, mask: &[bool]) {
        self.counters.record(mask);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_robin_cycles() {
        let mut s = ActivationSampler::new(ActivationPolicy::RoundRobin { k: 2 }, 3, 0).unwrap();
        let sets = s.generate(4);
        assert_eq!(
            sets,
            vec![
                vec![true, true, false],
                vec![true, false, true],
                vec![false, true, true],
                vec![true, true, false]
            ]
        );
    }

    #[test]
    fn round_robin_frequency_exact() {
        let (d, k) = (5, 2);
        let mut s = ActivationSampler::new(ActivationPolicy::RoundRobin { k }, d, 0).unwrap();
        let mut c = AgentCounters::new(d);
        let ticks = 10 * d;
        for mask in s.generate(ticks) {
            c.record(&mask);
        }
        for i in 0..d {
            assert_eq!(c.get(i) as f64 / ticks as f64, k as f64 / d as f64);
        }
    }

    #[test]
    fn bernoulli_never_empty() {
        let mut s = ActivationSampler::new(ActivationPolicy::Bernoulli { probs: vec![0.05, 0.05] }, 2, 4).unwrap();
        assert!(s.generate(2000).iter().all(|m| m.iter().any(|x| *x)));
    }

    #[test]
    fn rejects_degenerate_policies() {
        assert!(ActivationPolicy::RoundRobin { k: 0 }.validate(3).is_err());
        assert!(ActivationPolicy::RoundRobin { k: 4 }.validate(3).is_err());
        assert!(ActivationPolicy::Bernoulli { probs: vec![0.0, 0.0] }.validate(2).is_err());
        assert!(ActivationPolicy::Bernoulli { probs: vec![0.5] }.validate(2).is_err());
    }

    #[test]
    fn counters_monotone() {
        let mut s = ActivationSampler::new(ActivationPolicy::Bernoulli { probs: vec![0.3, 0.6, 0.9] }, 3, 11).unwrap();
        let mut c = AgentCounters::new(3);
        let mut prev = c.clone();
        for mask in s.generate(500) {
            c.record(&mask);
            assert!(c.as_slice().iter().zip(prev.as_slice()).all(|(a, b)| a >= b));
            prev = c.clone();
        }
    }
}
