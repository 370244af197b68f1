//! Finite-horizon checkers for the step-size, activation, delay and noise
//! assumptions, and convergence-target reports for value iteration and
//! gradient descent.
//!
//! Asymptotic conditions are checked as trends over an explicit horizon.
//! Every item carries a three-valued [`Verdict`] and the measured statistic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{FiniteMdp, SmoothField, WeightedNorm};
use crate::sa::RunTrace;
use crate::schedules::{ActivationPolicy, AgentSchedule, StepSizePolicy};
use crate::stability::non_expansiveness_check;
use crate::stochastics::{DelayMatrix, DelayModel, DelaySampler, NoiseModel, NoiseSampler};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckItem {
    pub name: String,
    pub verdict: Verdict,
    pub statistic: f64,
    pub threshold: Option<f64>,
    pub horizon: u64,
    /// Reported but excluded from the overall verdict.
    pub evidence_only: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check: String,
    pub verdict: Verdict,
    pub items: Vec<CheckItem>,
}

impl Report {
    fn new(check: &str, items: Vec<CheckItem>) -> Self {
        let counted = items.iter().filter(|i| !i.evidence_only);
        let verdict = counted.fold(Verdict::Pass, |acc, item| match (acc, item.verdict) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
            _ => Verdict::Pass,
        });
        Report { check: check.to_string(), verdict, items }
    }

    pub fn item(&self, name: &str) -> Option<&CheckItem> {
        self.items.iter().find(|i| i.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

fn item(name: &str, verdict: Verdict, statistic: f64, threshold: Option<f64>, horizon: u64, detail: String) -> CheckItem {
    CheckItem { name: name.to_string(), verdict, statistic, threshold, horizon, evidence_only: false, detail }
}

fn sum_over(policy: &StepSizePolicy, from: u64, to: u64, power: i32) -> f64 {
    (from..to).map(|n| policy.at(n).powi(power)).sum()
}

/// Step-size report over `0..horizon`:
///
/// - `sum-diverges`: ratio of `Σ a(n)` over `[h/2, h)` to `[h/4, h/2)`; tends
///   to `2^{1−p}` for `a(n) ~ n^{−p}`, at least 1 exactly when the sum diverges.
/// - `square-summable`: the same octave ratio for `Σ a(n)²`, below 1 exactly
///   when the squares are summable.
/// - `sup-at-most-one`: `max a(n) ≤ 1`, exact.
/// - `eta-decay`: `a(n)·n^η` decreasing at log-spaced points of the last decade.
/// - `eventually-decreasing`: `a(n+1) ≤ a(n)` at every tick, exact.
/// - `kappa`: smallest `κ` with `a(n) ≤ κ a(m)` for `m ≤ n`.
/// - `ratio-surface`: `max a(⌊yn⌋)/a(n)` over a grid of `y ∈ [0.1, 1]`, evidence only.
/// - `partial-sum-ratio`: `(1 − Σ_{m≤n/2} a / Σ_{m≤n} a)·ln n` over the last
///   decade; it stays flat for harmonic steps and grows when the ratio has a
///   limit below 1.
pub fn check_step_size(policy: &StepSizePolicy, horizon: u64, eta: f64) -> Result<Report> {
    policy.validate()?;
    if horizon < 100 {
        return Err(Error::Config(format!("step-size checks need a horizon of at least 100, got {horizon}")));
    }
    if !(eta > 0.0) {
        return Err(Error::Config(format!("eta must be positive, got {eta}")));
    }
    let h = horizon;
    let mut items = Vec::new();

    let octave = |power: i32| sum_over(policy, h / 2, h, power) / sum_over(policy, h / 4, h / 2, power);
    let r1 = octave(1);
    let v = if r1 >= 0.95 {
        Verdict::Pass
    } else if r1 <= 0.87 {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };
    items.push(item(
        "sum-diverges",
        v,
        r1,
        Some(0.95),
        h,
        format!("partial sum {:.6} at horizon; octave increment ratio {r1:.4}", sum_over(policy, 0, h, 1)),
    ));

    let r2 = octave(2);
    let v = if r2 <= 0.9 {
        Verdict::Pass
    } else if r2 >= 1.0 {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };
    let mut sq = item(
        "square-summable",
        v,
        r2,
        Some(0.9),
        h,
        format!("sum of squares {:.6} at horizon; octave increment ratio {r2:.4}", sum_over(policy, 0, h, 2)),
    );
    if policy.diagnostics_only() {
        sq.detail.push_str("; constant policy, diagnostics only");
    }
    items.push(sq);

    let sup = (0..h).map(|n| policy.at(n)).fold(0.0, f64::max);
    let v = if sup <= 1.0 { Verdict::Pass } else { Verdict::Fail };
    items.push(item("sup-at-most-one", v, sup, Some(1.0), h, String::new()));

    let points: Vec<u64> = (0..=8).map(|k| ((h as f64 / 10.0) * 10f64.powf(k as f64 / 8.0)) as u64).collect();
    let scaled: Vec<f64> = points.iter().map(|n| policy.at(*n) * (*n as f64).powf(eta)).collect();
    let v = if scaled.windows(2).all(|w| w[1] < w[0]) { Verdict::Pass } else { Verdict::Fail };
    items.push(item(
        "eta-decay",
        v,
        *scaled.last().unwrap(),
        None,
        h,
        format!("a(n)·n^{eta} from {:.6e} to {:.6e} over the last decade", scaled[0], scaled[8]),
    ));

    let mut increases = 0u64;
    let mut kappa: f64 = 1.0;
    let mut running_min = policy.at(0);
    let mut prev = policy.at(0);
    for n in 1..h {
        let a = policy.at(n);
        if a > prev {
            increases += 1;
        }
        running_min = running_min.min(a);
        kappa = kappa.max(a / running_min);
        prev = a;
    }
    let v = if increases == 0 { Verdict::Pass } else { Verdict::Fail };
    items.push(item("eventually-decreasing", v, increases as f64, Some(0.0), h, "number of increases".into()));
    items.push(item("kappa", Verdict::Pass, kappa, None, h, String::new()));

    let mut surface: f64 = 0.0;
    for k in 1..=10 {
        let y = k as f64 / 10.0;
        for n in [h / 10, h / 2, h] {
            surface = surface.max(policy.at((y * n as f64) as u64) / policy.at(n));
        }
    }
    let mut rs = item(
        "ratio-surface",
        if surface <= 10.0 * 1.01 { Verdict::Pass } else { Verdict::Inconclusive },
        surface,
        Some(10.0),
        h,
        "max over y in [0.1, 1] of a(yn)/a(n); polynomial decay bounds it by 1/0.1".into(),
    );
    rs.evidence_only = true;
    items.push(rs);

    let deficit = |n: u64| {
        let total = sum_over(policy, 0, n + 1, 1);
        (1.0 - sum_over(policy, 0, n / 2 + 1, 1) / total) * (n as f64).ln()
    };
    let (early, late) = (deficit(h / 10), deficit(h));
    let v = if late <= early * 1.01 {
        Verdict::Pass
    } else if late >= early * 1.1 {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };
    items.push(item(
        "partial-sum-ratio",
        v,
        late,
        None,
        h,
        format!("log-normalised deficit at y = 1/2: {early:.4} at h/10, {late:.4} at h"),
    ));

    Ok(Report::new("step-size", items))
}

/// `min_i ν(n,i)/(n+1)` at the last tick of `sets`; pass iff `≥ tau`.
pub fn check_activation(sets: &[Vec<bool>], tau: f64) -> Result<Report> {
    if sets.len() < 100 {
        return Err(Error::Config(format!("activation checks need at least 100 ticks, got {}", sets.len())));
    }
    let d = sets[0].len();
    let mut counts = vec![0u64; d];
    for mask in sets {
        for (c, m) in counts.iter_mut().zip(mask) {
            *c += *m as u64;
        }
    }
    let ticks = sets.len() as f64;
    let ratios: Vec<f64> = counts.iter().map(|c| *c as f64 / ticks).collect();
    let (argmin, min) = ratios
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, r)| if *r < acc.1 { (i, *r) } else { acc });
    let n = sets.len() as u64 - 1;
    let v = if min >= tau { Verdict::Pass } else { Verdict::Fail };
    let mut items = vec![item(
        "min-activation-frequency",
        v,
        min,
        Some(tau),
        n,
        format!("agent {argmin}; frequencies {ratios:?}"),
    )];
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    let mut window = item(
        "update-window-ratio",
        Verdict::Inconclusive,
        if min > 0.0 { max / min } else { f64::INFINITY },
        None,
        n,
        "existence of the limit of per-window step-sum ratios has no finite certificate".into(),
    );
    window.evidence_only = true;
    items.push(window);
    Ok(Report::new("activation", items))
}

pub fn check_activation_trace(trace: &RunTrace, tau: f64) -> Result<Report> {
    check_activation(&trace.active_sets(), tau)
}

/// Membership of `J` in the residual set `{J : ‖TJ − J‖_ν ≤ dε}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub verdict: Verdict,
    pub residual: f64,
    pub bound: f64,
    pub tolerance: f64,
    /// `bound + tolerance − residual`.
    pub margin: f64,
    /// `‖J − J*‖_ν` with `J*` from value iteration.
    pub distance_to_fixed_point: f64,
}

pub fn a2vi_residual_report(
    mdp: &FiniteMdp,
    j: &[f64],
    epsilon: f64,
    norm: &WeightedNorm,
    tolerance: f64,
) -> Result<ResidualReport> {
    norm.validate(Some(mdp.states()))?;
    let tj = mdp.bellman_apply(j)?;
    let residual = norm.distance(&tj, j);
    let bound = mdp.states() as f64 * epsilon;
    let star = mdp.exact_fixed_point(1e-10)?;
    let margin = bound + tolerance - residual;
    Ok(ResidualReport {
        verdict: if margin >= 0.0 { Verdict::Pass } else { Verdict::Fail },
        residual,
        bound,
        tolerance,
        margin,
        distance_to_fixed_point: norm.distance(j, &star.values),
    })
}

/// `‖∇π(θ)‖ ≤ c·ε + tol` with the benchmark's declared constant `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub verdict: Verdict,
    pub gradient_norm: f64,
    pub bound: f64,
    pub distance_to_minimizer: f64,
}

pub const STATIONARITY_TOLERANCE: f64 = 0.05;

pub fn a2pg_stationarity_report(field: &SmoothField, theta: &[f64], epsilon: f64) -> Result<StationarityReport> {
    if theta.len() != field.dim() {
        return Err(Error::DimensionMismatch { expected: field.dim(), got: theta.len() });
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("final parameter is not finite".into()));
    }
    let gradient_norm = crate::objectives::norm::euclidean(&field.gradient(theta));
    let bound = field.stationarity_constant() * epsilon + STATIONARITY_TOLERANCE;
    Ok(StationarityReport {
        verdict: if gradient_norm <= bound { Verdict::Pass } else { Verdict::Fail },
        gradient_norm,
        bound,
        distance_to_minimizer: crate::objectives::norm::euclidean(
            &theta.iter().zip(field.minimizer()).map(|(a, b)| a - b).collect::<Vec<_>>(),
        ),
    })
}

/// Largest observed `‖TJ − TJ′‖_ν / ‖J − J′‖_ν` over random pairs.
pub fn contraction_estimate(mdp: &FiniteMdp, norm: &WeightedNorm, samples: usize, seed: u64) -> Result<f64> {
    let scale = 10.0 * (1.0 + (0..mdp.states()).flat_map(|s| (0..mdp.actions()).map(move |a| (s, a)))
        .map(|(s, a)| mdp.cost(s, a).abs())
        .fold(0.0, f64::max));
    let report = non_expansiveness_check(
        |j| mdp.bellman_apply(j).expect("dimension matches"),
        mdp.states(),
        norm,
        samples,
        scale,
        seed,
    )?;
    Ok(report.max_ratio)
}

/// Delay statistics over the last `tail` fraction of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayProbe {
    pub horizon: u64,
    /// `max a(ν(n,i))·τ_ji(n)` over active readers `i` and all `j`.
    pub max_step_delay_product: f64,
    /// `max τ_ji(n) / n`.
    pub max_relative_delay: f64,
    /// `max a(n)·τ_ji(n)` with the global clock in place of `ν`.
    pub max_clock_product: f64,
    /// Per-pair `max a(ν(n,i))·τ_ji(n)`, indexed `[j][i]`.
    pub pair_products: Vec<Vec<f64>>,
}

pub fn probe_delays(
    delay: &DelayModel,
    activation: &ActivationPolicy,
    steps: &StepSizePolicy,
    d: usize,
    horizon: u64,
    tail: f64,
    seed: u64,
) -> Result<DelayProbe> {
    if !(tail > 0.0 && tail <= 1.0) {
        return Err(Error::Config(format!("tail fraction must be in (0,1], got {tail}")));
    }
    let mut schedule = AgentSchedule::new(activation.clone(), d, seed)?;
    let mut sampler = DelaySampler::new(delay.clone(), d, seed)?;
    let mut delays = DelayMatrix::zeros(d);
    let mut mask = vec![false; d];
    let start = horizon - (horizon as f64 * tail) as u64;
    let mut probe = DelayProbe {
        horizon,
        max_step_delay_product: 0.0,
        max_relative_delay: 0.0,
        max_clock_product: 0.0,
        pair_products: vec![vec![0.0; d]; d],
    };
    for n in 0..horizon {
        schedule.draw(n, &mut mask);
        sampler.sample_tick(n, &mut delays);
        if n >= start && n > 0 {
            for i in (0..d).filter(|i| mask[*i]) {
                let a = steps.at(schedule.counters().get(i));
                for j in 0..d {
                    let tau = delays.get(j, i) as f64;
                    let p = a * tau;
                    probe.pair_products[j][i] = probe.pair_products[j][i].max(p);
                    probe.max_step_delay_product = probe.max_step_delay_product.max(p);
                    probe.max_clock_product = probe.max_clock_product.max(steps.at(n) * tau);
                    probe.max_relative_delay = probe.max_relative_delay.max(tau / n as f64);
                }
            }
        }
        schedule.record(&mask);
    }
    Ok(probe)
}

/// `osc(ξ, [n, 2n]) = max_{m ∈ [n, 2n]} ‖ξ_m − ξ_n‖` for the applied-noise
/// partial sums `ξ`, for each requested `n`.
pub fn noise_oscillation(
    noise: NoiseModel,
    activation: &ActivationPolicy,
    steps: &StepSizePolicy,
    d: usize,
    starts: &[u64],
    seed: u64,
) -> Result<Vec<f64>> {
    let end = starts.iter().map(|n| 2 * n).max().unwrap_or(0);
    let mut schedule = AgentSchedule::new(activation.clone(), d, seed)?;
    let mut sampler = NoiseSampler::new(noise, d, seed)?;
    let mut mask = vec![false; d];
    let mut xi = vec![0.0; d];
    let mut history = Vec::with_capacity(end as usize + 1);
    history.push(xi.clone());
    for n in 0..end {
        schedule.draw(n, &mut mask);
        let m = sampler.sample(n);
        for i in (0..d).filter(|i| mask[*i]) {
            xi[i] += steps.at(schedule.counters().get(i)) * m[i];
        }
        schedule.record(&mask);
        history.push(xi.clone());
    }
    Ok(starts
        .iter()
        .map(|&n| {
            let base = &history[n as usize];
            history[n as usize..=(2 * n) as usize]
                .iter()
                .map(|x| crate::objectives::norm::euclidean(&x.iter().zip(base).map(|(a, b)| a - b).collect::<Vec<_>>()))
                .fold(0.0, f64::max)
        })
        .collect())
}
