//! Paired raw/projective runs and the gap `p(x_n − x̂_n)` between them,
//! plus a sampled non-expansiveness check for operators.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::WeightedNorm;
use crate::sa::{ProjectionRegion, RunSpec, RunTrace, Simulation};
use crate::stochastics::rng::{stream, StreamDomain};
use crate::stochastics::ErrorSampler;

/// How the projective run's errors `ε̂_n` relate to the raw run's `ε_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorCoupling {
    /// `ε̂_n = ε_n`.
    #[default]
    Coupled,
    /// `ε̂_n` drawn independently from the same model.
    Decoupled,
}

/// A raw run and its projective counterpart driven by the same active sets,
/// delays and noise.
#[derive(Debug, Clone)]
pub struct PairedRun {
    pub raw: RunTrace,
    pub projective: RunTrace,
    pub region: ProjectionRegion,
    /// Comparison norm `p`.
    pub norm: WeightedNorm,
    pub coupling: ErrorCoupling,
    /// `ε` of the error model, in its own norm.
    pub error_bound: f64,
    /// Set when the raw run produced a non-finite value and was stopped.
    pub raw_failure: Option<Error>,
}

/// Runs `spec` without projection alongside a copy projected onto `region`.
pub fn run_paired(
    spec: &RunSpec,
    region: ProjectionRegion,
    norm: WeightedNorm,
    coupling: ErrorCoupling,
) -> Result<PairedRun> {
    let d = spec.dim();
    norm.validate(Some(d))?;
    let mut raw_spec = spec.clone();
    raw_spec.region = None;
    let mut proj_spec = spec.clone();
    proj_spec.region = Some(region.clone());

    let mut raw = Simulation::new(&raw_spec)?;
    let mut proj = Simulation::new(&proj_spec)?;
    let mut shadow = match coupling {
        ErrorCoupling::Coupled => None,
        ErrorCoupling::Decoupled => {
            Some(ErrorSampler::with_domain(spec.error.clone(), d, spec.seed, StreamDomain::ShadowError)?)
        }
    };
    let error_norm = spec.error.norm();

    let mut raw_trace = RunTrace::new(raw.trace_meta(spec.config.clone()));
    let mut proj_trace = RunTrace::new(proj.trace_meta(spec.config.clone()));
    let mut raw_failure = None;
    for _ in 0..spec.horizon {
        let mut raw_row = raw.pending_row();
        let mut proj_row = proj.pending_row();
        let sample = raw.draw();
        let raw_rec = match raw.apply(&sample) {
            Ok(rec) => rec,
            Err(e @ Error::Divergence { .. }) => {
                raw_trace.rows.push(raw_row);
                proj_trace.rows.push(proj_row);
                raw_failure = Some(e);
                break;
            }
            Err(e) => return Err(e),
        };
        let proj_rec = match shadow.as_mut() {
            None => proj.apply(&sample)?,
            Some(s) => {
                let mut own = sample.clone();
                own.error = s.sample(sample.n);
                own.error_norm = error_norm.eval_unchecked(&own.error);
                proj.apply(&own)?
            }
        };
        raw_row.fill_tick(&raw_rec);
        proj_row.fill_tick(&proj_rec);
        raw_trace.rows.push(raw_row);
        proj_trace.rows.push(proj_row);
    }
    if raw_failure.is_none() {
        raw_trace.rows.push(raw.pending_row());
        proj_trace.rows.push(proj.pending_row());
    }
    Ok(PairedRun {
        raw: raw_trace,
        projective: proj_trace,
        region,
        norm,
        coupling,
        error_bound: spec.error.bound(),
        raw_failure,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityVerdict {
    Bounded,
    Inconclusive,
    Diverging,
}

/// The gap series and its finite-horizon summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    #[serde(skip)]
    pub gaps: Vec<f64>,
    #[serde(skip)]
    pub projected: Vec<bool>,
    pub horizon: u64,
    /// First tick after the last projection event.
    pub settle_tick: u64,
    pub projection_events: usize,
    pub sup_gap: f64,
    pub sup_gap_after_settle: f64,
    /// Ticks `n ≥ settle_tick` with `gap_{n+1} > gap_n + a(n)·δ`, where `δ`
    /// is 0 for coupled errors and `2ε` for decoupled ones.
    pub growth_violations: Vec<u64>,
    pub sup_projective_radius: f64,
    pub verdict: StabilityVerdict,
}

impl GapReport {
    /// `n,gap,projected` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,gap,projected")?;
        for (n, (g, p)) in self.gaps.iter().zip(&self.projected).enumerate() {
            writeln!(w, "{n},{g:?},{}", *p as u8)?;
        }
        Ok(())
    }
}

fn max_active_step(row: &crate::sa::TraceRow) -> f64 {
    row.active.iter().zip(&row.step).filter(|(a, _)| **a).map(|(_, s)| *s).fold(0.0, f64::max)
}

pub fn gap_series(paired: &PairedRun) -> Result<Vec<f64>> {
    if paired.raw.len() != paired.projective.len() {
        return Err(Error::Misaligned(format!(
            "raw trace has {} rows, projective trace {}",
            paired.raw.len(),
            paired.projective.len()
        )));
    }
    paired
        .raw
        .rows
        .iter()
        .zip(&paired.projective.rows)
        .map(|(a, b)| {
            if a.n != b.n {
                return Err(Error::Misaligned(format!("tick {} paired with tick {}", a.n, b.n)));
            }
            Ok(paired.norm.distance(&a.x, &b.x))
        })
        .collect()
}

pub fn s5_gap(paired: &PairedRun) -> Result<GapReport> {
    let gaps = gap_series(paired)?;
    let projected: Vec<bool> = paired.projective.rows.iter().map(|r| r.projected).collect();
    let horizon = gaps.len().saturating_sub(1) as u64;
    let settle = projected.iter().rposition(|p| *p).map_or(0, |k| k + 1);
    let delta = match paired.coupling {
        ErrorCoupling::Coupled => 0.0,
        ErrorCoupling::Decoupled => 2.0 * paired.error_bound,
    };
    let scale = paired
        .raw
        .iterates()
        .chain(paired.projective.iterates())
        .map(|x| paired.norm.eval_unchecked(x))
        .fold(0.0, f64::max);
    let tol = 1e-12 * (1.0 + scale);
    let mut growth_violations = Vec::new();
    for n in settle..gaps.len().saturating_sub(1) {
        let a = max_active_step(&paired.raw.rows[n]);
        if gaps[n + 1] > gaps[n] + a * delta + tol {
            growth_violations.push(n as u64);
        }
    }
    let sup_gap = gaps.iter().cloned().fold(0.0, f64::max);
    let sup_after = gaps.get(settle..).map_or(0.0, |g| g.iter().cloned().fold(0.0, f64::max));
    let sup_radius = paired.projective.iterates().map(|x| paired.region.radius_of(x)).fold(0.0, f64::max);

    let r_c = paired.region.outer_radius;
    let verdict = if paired.raw_failure.is_some() {
        StabilityVerdict::Diverging
    } else if sup_gap < 10.0 * r_c {
        StabilityVerdict::Bounded
    } else {
        let half = gaps.len() / 2;
        let early = gaps[..half].iter().cloned().fold(0.0, f64::max);
        let late = gaps[half..].iter().cloned().fold(0.0, f64::max);
        if late > 10.0 * early.max(r_c) {
            StabilityVerdict::Diverging
        } else {
            StabilityVerdict::Inconclusive
        }
    };
    Ok(GapReport {
        horizon,
        settle_tick: settle as u64,
        projection_events: projected.iter().filter(|p| **p).count(),
        sup_gap,
        sup_gap_after_settle: sup_after,
        growth_violations,
        sup_projective_radius: sup_radius,
        verdict,
        gaps,
        projected,
    })
}

/// Ticks `n ≥ settle_tick` where `gap_{n+1} > (1 − a(n)(1 − β)) gap_n`, the
/// per-tick bound for a `β`-contraction under coupled errors with every
/// agent active and no delays.
pub fn contraction_violations(paired: &PairedRun, report: &GapReport, modulus: f64) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    let tol = 1e-12 * (1.0 + report.sup_gap);
    for n in report.settle_tick as usize..report.gaps.len().saturating_sub(1) {
        let row = &paired.raw.rows[n];
        if !row.active.iter().all(|a| *a) || row.max_delay != 0 {
            return Err(Error::Config(format!("tick {n} is not synchronous and undelayed")));
        }
        let a = max_active_step(row);
        if report.gaps[n + 1] > (1.0 - a * (1.0 - modulus)) * report.gaps[n] + tol {
            out.push(n as u64);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonExpansivenessReport {
    pub samples: usize,
    /// `max p(Tx − Ty) / p(x − y)` over the sampled pairs.
    pub max_ratio: f64,
    pub violations: usize,
    /// First pair with `p(Tx − Ty) > p(x − y)(1 + 1e−12)`.
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
}

impl NonExpansivenessReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Samples pairs uniformly from `[−scale, scale]^dim` and compares
/// `p(Tx − Ty)` with `p(x − y)`.
pub fn non_expansiveness_check<F>(
    operator: F,
    dim: usize,
    norm: &WeightedNorm,
    samples: usize,
    scale: f64,
    seed: u64,
) -> Result<NonExpansivenessReport>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if samples == 0 {
        return Err(Error::Config("need at least one sample".into()));
    }
    norm.validate(Some(dim))?;
    let mut rng = stream(seed, StreamDomain::Probe, 0, 0);
    let mut draw = || -> Vec<f64> { (0..dim).map(|_| rng.random_range(-scale..=scale)).collect() };
    let mut report = NonExpansivenessReport { samples, max_ratio: 0.0, violations: 0, witness: None };
    for _ in 0..samples {
        let x = draw();
        let y = draw();
        let before = norm.distance(&x, &y);
        if before == 0.0 {
            continue;
        }
        let after = norm.distance(&operator(&x), &operator(&y));
        report.max_ratio = report.max_ratio.max(after / before);
        if after > before * (1.0 + 1e-12) {
            report.violations += 1;
            if report.witness.is_none() {
                report.witness = Some((x, y));
            }
        }
    }
    Ok(report)
}
