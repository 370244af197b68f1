use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::norm::euclidean;
use crate::objectives::{random_pd, QuadraticField};
use crate::sa::{run, RunSpec};
use crate::schedules::{ActivationPolicy, StepSizePolicy};
use crate::stochastics::rng::{mix, stream, StreamDomain};
use crate::stochastics::{DelayModel, ErrorModel, NoiseModel, PairParam};

/// `ε = 0.2, 0.3, …, 3.0`.
pub fn epsilon_grid() -> Vec<f64> {
    (2..=30).map(|k| k as f64 / 10.0).collect()
}

/// The two-agent quadratic experiment with stale communication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub p_c: f64,
    /// One sample run per seed.
    pub seeds: Vec<u64>,
    pub epsilons: Vec<f64>,
    pub horizon: u64,
    /// Harmonic step constant `c` in `a(n) = 1/(n+c)`.
    pub step_c: f64,
    /// Prepend an `ε = 0` control cell to every sample run.
    pub include_control: bool,
    /// Draw matrices and initial points from the seed alone, so the same
    /// instances are used for every `p_c`.
    pub paired_instances: bool,
}

impl ExperimentSpec {
    pub fn new(p_c: f64, seeds: Vec<u64>) -> Self {
        ExperimentSpec {
            p_c,
            seeds,
            epsilons: epsilon_grid(),
            horizon: 1000,
            step_c: 10.0,
            include_control: false,
            paired_instances: true,
        }
    }

    /// Figure 1 uses `p_c = 0.4`, figure 2 `p_c = 0.8`.
    pub fn figure(figure: u8, seeds: Vec<u64>) -> Result<Self> {
        match figure {
            1 => Ok(ExperimentSpec::new(0.4, seeds)),
            2 => Ok(ExperimentSpec::new(0.8, seeds)),
            other => Err(Error::Config(format!("figure must be 1 or 2, got {other}"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_c > 0.0 && self.p_c <= 1.0) {
            return Err(Error::Config(format!("p_c must be in (0,1], got {}", self.p_c)));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("experiment needs at least one seed".into()));
        }
        if self.epsilons.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(Error::Config("epsilons must be finite and >= 0".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        Ok(())
    }
}

/// Random positive definite `A`, `B` and initial point of one sample run.
pub fn experiment_instance(seed: u64, p_c: f64, paired: bool) -> (QuadraticField, Vec<f64>) {
    let instance_seed = if paired { seed } else { mix(seed ^ p_c.to_bits()) };
    let mut rng = stream(instance_seed, StreamDomain::Instance, 0, 0);
    let a = random_pd(2, &mut rng);
    let b = random_pd(2, &mut rng);
    let x0 = vec![rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
    (QuadraticField::new(vec![a, b]).expect("random matrices are positive definite"), x0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub run_id: usize,
    pub epsilon: f64,
    /// Mean realised `‖(ε_1, ε_2)‖` over the run.
    pub error_norm: f64,
    /// `log ‖x_N‖`; `inf` for a diverged run.
    pub log_final_norm: f64,
    pub p_c: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTable {
    pub rows: Vec<ExperimentRow>,
    pub config: serde_json::Value,
}

pub const EXPERIMENT_HEADER: &str = "run_id,epsilon,error_norm,log_final_norm,p_c,seed";

pub fn experiment_run_spec(spec: &ExperimentSpec, seed: u64, epsilon: f64) -> RunSpec {
    let (field, x0) = experiment_instance(seed, spec.p_c, spec.paired_instances);
    let mut run_spec = RunSpec::new(Arc::new(field), spec.horizon, seed);
    run_spec.x0 = Some(x0);
    run_spec.steps = StepSizePolicy::harmonic(spec.step_c);
    run_spec.activation = ActivationPolicy::All;
    run_spec.delay = DelayModel::StaleRefresh { p_c: PairParam::Uniform(spec.p_c) };
    run_spec.error = if epsilon == 0.0 {
        ErrorModel::Zero
    } else {
        ErrorModel::ComponentwiseUniform { epsilon, norm: Default::default() }
    };
    run_spec.noise = NoiseModel::Zero;
    run_spec
}

fn run_cell(spec: &ExperimentSpec, run_id: usize, seed: u64, epsilon: f64) -> Result<ExperimentRow> {
    let run_spec = experiment_run_spec(spec, seed, epsilon);
    let (trace, diverged) = match run(&run_spec) {
        Ok(t) => (t, false),
        Err(f) => match (f.error, f.partial) {
            (Error::Divergence { .. }, Some(t)) => (t, true),
            (e, _) => return Err(e),
        },
    };
    let ticks = &trace.rows[..trace.rows.len() - 1];
    let error_norm = ticks.iter().map(|r| r.error_norm).sum::<f64>() / ticks.len().max(1) as f64;
    let log_final_norm = if diverged {
        f64::INFINITY
    } else {
        euclidean(trace.final_iterate().expect("non-empty trace")).ln()
    };
    Ok(ExperimentRow { run_id, epsilon, error_norm, log_final_norm, p_c: spec.p_c, seed })
}

/// One sample run per seed over the `ε` grid, with common random numbers
/// across `ε` within a sample run.
pub fn reproduce_experiment(spec: &ExperimentSpec, jobs: usize) -> Result<ExperimentTable> {
    spec.validate()?;
    let mut epsilons = spec.epsilons.clone();
    if spec.include_control {
        epsilons.insert(0, 0.0);
    }
    let cells: Vec<(usize, u64, f64)> = spec
        .seeds
        .iter()
        .enumerate()
        .flat_map(|(run_id, seed)| epsilons.iter().map(move |e| (run_id, *seed, *e)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let rows = pool.install(|| {
        cells.par_iter().map(|(run_id, seed, eps)| run_cell(spec, *run_id, *seed, *eps)).collect::<Result<Vec<_>>>()
    })?;
    Ok(ExperimentTable { rows, config: serde_json::to_value(spec).expect("specs serialize") })
}

impl ExperimentTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# config={}", self.config)?;
        writeln!(w, "{EXPERIMENT_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:?},{:?},{:?},{:?},{}",
                r.run_id, r.epsilon, r.error_norm, r.log_final_norm, r.p_c, r.seed
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut config = serde_json::Value::Null;
        let mut rows = Vec::new();
        let mut seen_header = false;
        for (k, line) in r.lines().enumerate() {
            let line = line?;
            let bad = |what: &str| Error::Parse(format!("experiment line {}: {what}", k + 1));
            if let Some(c) = line.strip_prefix("# config=") {
                config = serde_json::from_str(c).map_err(|e| bad(&e.to_string()))?;
                continue;
            }
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            if !seen_header {
                if line != EXPERIMENT_HEADER {
                    return Err(bad("unexpected header"));
                }
                seen_header = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad("expected 6 fields"));
            }
            let float = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
            rows.push(ExperimentRow {
                run_id: f[0].parse().map_err(|_| bad("bad run id"))?,
                epsilon: float(f[1])?,
                error_norm: float(f[2])?,
                log_final_norm: float(f[3])?,
                p_c: float(f[4])?,
                seed: f[5].parse().map_err(|_| bad("bad seed"))?,
            });
        }
        if !seen_header {
            return Err(Error::Parse("experiment table has no header".into()));
        }
        Ok(ExperimentTable { rows, config })
    }

    pub fn run_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.rows.iter().map(|r| r.run_id).collect();
        ids.dedup();
        ids
    }

    pub fn series(&self, run_id: usize) -> Vec<&ExperimentRow> {
        self.rows.iter().filter(|r| r.run_id == run_id).collect()
    }
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|a, b| v[*a].total_cmp(&v[*b]));
    let mut out = vec![0.0; v.len()];
    let mut k = 0;
    while k < idx.len() {
        let mut end = k;
        while end + 1 < idx.len() && v[idx[end + 1]] == v[idx[k]] {
            end += 1;
        }
        let rank = (k + end) as f64 / 2.0 + 1.0;
        for j in k..=end {
            out[idx[j]] = rank;
        }
        k = end + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
