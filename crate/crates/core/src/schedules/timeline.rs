use serde::{Deserialize, Serialize};

use super::activation::AgentCounters;
use super::step::StepSizePolicy;
use crate::error::{Error, Result};

/// `ā(n) = max_{i∈Y_n} a(ν(n,i))` and `q(n,i) = a(ν(n,i)) / ā(n) · 1{i∈Y_n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveStep {
    pub abar: f64,
    pub q: Vec<f64>,
}

pub fn effective_step(active: &[bool], counters: &[u64], policy: &StepSizePolicy) -> EffectiveStep {
    let abar = active
        .iter()
        .zip(counters)
        .filter(|(m, _)| **m)
        .map(|(_, c)| policy.at(*c))
        .fold(0.0, f64::max);
    let q = active
        .iter()
        .zip(counters)
        .map(|(m, c)| if *m { policy.at(*c) / abar } else { 0.0 })
        .collect();
    EffectiveStep { abar, q }
}

/// `counters_trace(sets)[m]` holds the activation counts before tick `m`;
/// the result has `sets.len() + 1` rows.
pub fn counters_trace(sets: &[Vec<bool>], d: usize) -> Vec<Vec<u64>> {
    let mut counters = AgentCounters::new(d);
    let mut out = Vec::with_capacity(sets.len() + 1);
    out.push(counters.as_slice().to_vec());
    for mask in sets {
        counters.record(mask);
        out.push(counters.as_slice().to_vec());
    }
    out
}

/// Rescaled time `t(0) = 0`, `t(n) = Σ_{m<n} ā(m)` for `n = 0..=sets.len()`.
pub fn timeline(policy: &StepSizePolicy, sets: &[Vec<bool>]) -> Vec<f64> {
    let d = sets.first().map_or(0, Vec::len);
    let mut counters = AgentCounters::new(d);
    let mut t = Vec::with_capacity(sets.len() + 1);
    let mut acc = 0.0;
    t.push(acc);
    for mask in sets {
        acc += effective_step(mask, counters.as_slice(), policy).abar;
        counters.record(mask);
        t.push(acc);
    }
    t
}

/// Ratio of the cumulative steps agents `i` and `j` have taken through tick
/// `n`: `Σ_{k<ν(n,i)} a(k) / Σ_{k<ν(n,j)} a(k)`.
pub fn balance_ratio(
    counters: &[Vec<u64>],
    policy: &StepSizePolicy,
    i: usize,
    j: usize,
    n: usize,
) -> Result<f64> {
    if n + 1 >= counters.len() {
        return Err(Error::Config(format!(
            "balance ratio at tick {n} needs a counters trace of length > {}",
            n + 1
        )));
    }
    for agent in [i, j] {
        if counters[n + 1][agent] == 0 {
            return Err(Error::InsufficientActivation { agent, n });
        }
    }
    let sum = |agent: usize| -> f64 { (0..counters[n + 1][agent]).map(|k| policy.at(k)).sum() };
    Ok(sum(i) / sum(j))
}
