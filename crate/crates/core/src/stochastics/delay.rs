use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use super::rng::{stream, StreamDomain};
use crate::error::{Error, Result};

/// Communication probability: one value shared by all pairs (symmetric
/// delays) or a `d×d` matrix indexed `[j][i]` (per ordered pair).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PairParam {
    Uniform(f64),
    PerPair(Vec<Vec<f64>>),
}

/// Delay `τ_ji(n)`: the age of agent `i`'s copy of component `j` at tick `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DelayModel {
    #[default]
    Zero,
    /// Uniform on `{0, …, min(τ_max, n)}`.
    BoundedUniform { tau_max: u64 },
    /// Geometric on `{0, 1, …}` with the given mean, clamped to `n`.
    Geometric { mean: f64 },
    /// Each tick the view refreshes with probability `p_c`, otherwise ages by one.
    StaleRefresh { p_c: PairParam },
}

impl DelayModel {
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            DelayModel::Zero | DelayModel::BoundedUniform { .. } => Ok(()),
            DelayModel::Geometric { mean } => {
                if !(mean.is_finite() && *mean >= 0.0) {
                    return Err(Error::Config(format!("geometric delay mean must be >= 0, got {mean}")));
                }
                Ok(())
            }
            DelayModel::StaleRefresh { p_c } => {
                let ok = |p: f64| p > 0.0 && p <= 1.0;
                match p_c {
                    PairParam::Uniform(p) if ok(*p) => Ok(()),
                    PairParam::Uniform(p) => Err(Error::Config(format!("p_c must be in (0,1], got {p}"))),
                    PairParam::PerPair(m) => {
                        if m.len() != d || m.iter().any(|r| r.len() != d) {
                            return Err(Error::DimensionMismatch { expected: d, got: m.len() });
                        }
                        for (j, row) in m.iter().enumerate() {
                            for (i, p) in row.iter().enumerate() {
                                if i != j && !ok(*p) {
                                    return Err(Error::Config(format!("p_c[{j}][{i}] must be in (0,1], got {p}")));
                                }
                            }
                        }
                        Ok(())
                    }
                }
            }
        }
    }

    /// One draw of a memoryless model. `None` for stale-refresh, whose delay
    /// depends on the previous age.
    pub fn sample_memoryless<R: Rng + ?Sized>(&self, j: usize, i: usize, n: u64, rng: &mut R) -> Option<u64> {
        if j == i || n == 0 {
            return Some(0);
        }
        match self {
            DelayModel::Zero => Some(0),
            DelayModel::BoundedUniform { tau_max } => Some(rng.random_range(0..=(*tau_max).min(n))),
            DelayModel::Geometric { mean } => {
                if *mean == 0.0 {
                    return Some(0);
                }
                let geo = Geometric::new(1.0 / (1.0 + mean)).expect("validated mean");
                Some(geo.sample(rng).min(n))
            }
            DelayModel::StaleRefresh { .. } => None,
        }
    }
}

/// `d×d` delay matrix indexed `(j, i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelayMatrix {
    d: usize,
    taus: Vec<u64>,
}

impl DelayMatrix {
    pub fn zeros(d: usize) -> Self {
        DelayMatrix { d, taus: vec![0; d * d] }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, j: usize, i: usize) -> u64 {
        self.taus[j * self.d + i]
    }

    pub fn set(&mut self, j: usize, i: usize, tau: u64) {
        self.taus[j * self.d + i] = tau;
    }

    /// Delays seen by agent `i`: `(τ_0i, …, τ_{d-1,i})`.
    pub fn column(&self, i: usize) -> Vec<u64> {
        (0..self.d).map(|j| self.get(j, i)).collect()
    }

    pub fn max(&self) -> u64 {
        self.taus.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
struct PairProcess {
    rng: ChaCha8Rng,
    p_c: f64,
    age: u64,
    /// Tick whose age is currently held.
    tick: u64,
}

/// Stateful delay sampler with one random stream per pair.
#[derive(Debug, Clone)]
pub struct DelaySampler {
    model: DelayModel,
    d: usize,
    symmetric: bool,
    /// Indexed `j*d + i`; for symmetric models only `j < i` entries are used.
    pairs: Vec<PairProcess>,
}

impl DelaySampler {
    pub fn new(model: DelayModel, d: usize, seed: u64) -> Result<Self> {
        model.validate(d)?;
        let symmetric = matches!(model, DelayModel::StaleRefresh { p_c: PairParam::Uniform(_) });
        let mut pairs = Vec::with_capacity(d * d);
        for j in 0..d {
            for i in 0..d {
                let p_c = match &model {
                    DelayModel::StaleRefresh { p_c: PairParam::Uniform(p) } => *p,
                    DelayModel::StaleRefresh { p_c: PairParam::PerPair(m) } => m[j][i],
                    _ => 1.0,
                };
                pairs.push(PairProcess { rng: stream(seed, StreamDomain::Delay, j, i), p_c, age: 0, tick: 0 });
            }
        }
        Ok(DelaySampler { model, d, symmetric, pairs })
    }

    pub fn model(&self) -> &DelayModel {
        &self.model
    }

    /// `τ_ji(n)`. Stale-refresh pairs advance lazily, one coin per elapsed
    /// tick, so the sequence does not depend on which ticks were queried.
    pub fn sample(&mut self, j: usize, i: usize, n: u64) -> u64 {
        if i == j {
            return 0;
        }
        let (a, b) = if self.symmetric && j > i { (i, j) } else { (j, i) };
        let pair = &mut self.pairs[a * self.d + b];
        if let Some(tau) = self.model.sample_memoryless(j, i, n, &mut pair.rng) {
            return tau;
        }
        if n < pair.tick {
            // querying the past of an advanced process is not supported
            return pair.age.min(n);
        }
        while pair.tick < n {
            pair.tick += 1;
            pair.age = if pair.rng.random_bool(pair.p_c) { 0 } else { pair.age + 1 };
        }
        pair.age
    }

    pub fn sample_tick(&mut self, n: u64, out: &mut DelayMatrix) {
        if matches!(self.model, DelayModel::Zero) {
            return;
        }
        for j in 0..self.d {
            for i in 0..self.d {
                let tau = self.sample(j, i, n);
                out.set(j, i, tau);
            }
        }
    }
}
