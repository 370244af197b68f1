//! Sampling checks against closed-form moments and frozen Monte-Carlo values.

use std::sync::Arc;

use asyncsa::diagnostics::{check_activation, Verdict};
use asyncsa::objectives::{bellman_residual_field, FiniteMdp, WeightedNorm};
use asyncsa::sa::{ProjectionRegion, RunSpec};
use asyncsa::schedules::{balance_ratio, counters_trace, ActivationPolicy, ActivationSampler, StepSizePolicy};
use asyncsa::stability::{run_paired, s5_gap, ErrorCoupling};
use asyncsa::stochastics::{
    DelayModel, DelaySampler, ErrorModel, ErrorSampler, NoiseModel, NoiseSampler, PairParam,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn stale_refresh_mean_age() {
    // (1 − p_c)/p_c = 1.5 in the stationary regime.
    let mut total = 0.0;
    for seed in 0..20 {
        let mut sampler = DelaySampler::new(DelayModel::StaleRefresh { p_c: PairParam::Uniform(0.4) }, 2, seed).unwrap();
        let ages: Vec<u64> = (0..1000).map(|n| sampler.sample(1, 0, n)).collect();
        total += ages.iter().sum::<u64>() as f64 / ages.len() as f64;
    }
    let mean = total / 20.0;
    assert!((mean - 1.5).abs() <= 0.2, "mean age {mean}");
}

#[test]
fn geometric_delay_moments() {
    let model = DelayModel::Geometric { mean: 5.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let draws: Vec<f64> =
        (0..100_000).map(|_| model.sample_memoryless(1, 0, 1_000_000, &mut rng).unwrap() as f64).collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    assert!((4.8..=5.2).contains(&mean), "mean {mean}");

    // E[τ^{1/η}] with η = 0.6 settles: the two halves agree.
    let moment = |xs: &[f64]| xs.iter().map(|t| t.powf(1.0 / 0.6)).sum::<f64>() / xs.len() as f64;
    let (a, b) = draws.split_at(draws.len() / 2);
    assert!((moment(a) / moment(b) - 1.0).abs() < 0.05);
}

#[test]
fn componentwise_uniform_error_mean_and_bound() {
    let model = ErrorModel::ComponentwiseUniform { epsilon: 3.0, norm: WeightedNorm::Euclidean };
    let mut sampler = ErrorSampler::new(model, 2, 5).unwrap();
    let mut sum = 0.0;
    for n in 0..100_000 {
        let e = sampler.sample(n);
        assert!((e[0] * e[0] + e[1] * e[1]).sqrt() <= 3.0 / 2f64.sqrt() + 1e-12);
        sum += e[0] + e[1];
    }
    let mean = sum / 200_000.0;
    assert!((mean - 0.75).abs() <= 0.02, "mean {mean}");
}

#[test]
fn rademacher_noise_is_centred() {
    let mut sampler = NoiseSampler::new(NoiseModel::Rademacher { bound: 1.0 }, 2, 8).unwrap();
    let mut sum = [0.0; 2];
    for n in 0..100_000 {
        let m = sampler.sample(n);
        for k in 0..2 {
            assert_eq!(m[k].abs(), 1.0);
            sum[k] += m[k];
        }
    }
    for s in sum {
        assert!((s / 100_000.0).abs() <= 0.01);
    }
}

#[test]
fn bounded_uniform_noise_respects_its_bound() {
    let mut sampler = NoiseSampler::new(NoiseModel::BoundedUniform { bound: 0.3 }, 4, 2).unwrap();
    for n in 0..10_000 {
        assert!(sampler.sample(n).iter().all(|v| v.abs() <= 0.3));
    }
}

#[test]
fn symmetric_bernoulli_activation_is_balanced() {
    let policy = StepSizePolicy::harmonic(10.0);
    let mut inside = 0;
    for seed in 0..20 {
        let sets = ActivationSampler::new(ActivationPolicy::Bernoulli { probs: vec![0.5, 0.5] }, 2, seed)
            .unwrap()
            .generate(100_001);
        let counters = counters_trace(&sets, 2);
        let ratio = balance_ratio(&counters, &policy, 0, 1, 100_000 - 1).unwrap();
        if (0.97..=1.03).contains(&ratio) {
            inside += 1;
        }
    }
    assert!(inside >= 18, "{inside}/20");
}

#[test]
fn activation_frequency_examples() {
    let sets = ActivationSampler::new(ActivationPolicy::RoundRobin { k: 1 }, 2, 0).unwrap().generate(10_000);
    let report = check_activation(&sets, 0.4).unwrap();
    let ratio = report.item("min-activation-frequency").unwrap().statistic;
    assert!((ratio - 0.5).abs() <= 1e-4);

    let sets = ActivationSampler::new(ActivationPolicy::Bernoulli { probs: vec![0.9, 0.1] }, 2, 4)
        .unwrap()
        .generate(10_000);
    assert_eq!(check_activation(&sets, 0.05).unwrap().verdict, Verdict::Pass);
    assert_eq!(check_activation(&sets, 0.2).unwrap().verdict, Verdict::Fail);
}

#[test]
fn decoupled_gap_growth_is_bounded_by_harmonic_sums() {
    let mdp = Arc::new(FiniteMdp::random(4, 2, 0.8, &mut ChaCha8Rng::seed_from_u64(21)).unwrap());
    let epsilon = 0.5;
    let norm = WeightedNorm::max_unit();
    let mut spec = RunSpec::new(Arc::new(bellman_residual_field(mdp).unwrap()), 3_000, 4);
    spec.error = ErrorModel::ComponentwiseUniform { epsilon, norm: norm.clone() };
    let region = ProjectionRegion::centered(20.0, 30.0, norm.clone());
    let paired = run_paired(&spec, region, norm, ErrorCoupling::Decoupled).unwrap();
    let report = s5_gap(&paired).unwrap();
    assert!(report.growth_violations.is_empty());

    // Over any window [N, N+k): gap_{N+k} − gap_N ≤ 2ε Σ a(n).
    let a = |n: usize| 1.0 / (n as f64 + 10.0);
    let start = report.settle_tick as usize;
    for k in [10, 100, 1000] {
        let sum: f64 = (start..start + k).map(a).sum();
        assert!(report.gaps[start + k] - report.gaps[start] <= 2.0 * epsilon * sum + 1e-12);
    }
    assert!(report.gaps.iter().skip(1).any(|g| *g > 0.0));
}
