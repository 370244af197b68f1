//! Frozen values from independent oracles, checked through the public API.

use std::path::Path;
use std::sync::Arc;

use asyncsa::diagnostics::{a2vi_residual_report, Verdict};
use asyncsa::harness::RunConfig;
use asyncsa::objectives::mdp::parse_values;
use asyncsa::objectives::{bellman_residual_field, FiniteMdp, MdpKind, ObjectiveField, WeightedNorm};
use asyncsa::sa::{run, RunSpec};
use asyncsa::schedules::StepSizePolicy;
use asyncsa::stochastics::ErrorModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixtures() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures"))
}

fn load(name: &str) -> FiniteMdp {
    FiniteMdp::parse(&std::fs::read_to_string(fixtures().join(name)).unwrap()).unwrap()
}

fn golden(name: &str) -> Vec<f64> {
    parse_values(&std::fs::read_to_string(fixtures().join(name)).unwrap()).unwrap()
}

// Policy enumeration with linear solves over all 32 stationary policies.
const MDP5_JSTAR_ENUMERATED: [f64; 5] =
    [4.16631591960676, 4.120225541497138, 4.585909498723626, 4.572771557123642, 4.162491201078584];

#[test]
fn golden_fixed_point_matches_value_iteration_and_enumeration() {
    let mdp = load("mdp5.txt");
    assert_eq!(mdp.kind(), MdpKind::Discounted { alpha: 0.9 });
    let fp = mdp.exact_fixed_point(1e-10).unwrap();
    let stored = golden("mdp5.jstar");
    for s in 0..5 {
        assert!((fp.values[s] - stored[s]).abs() < 1e-10, "state {s}");
        assert!((stored[s] - MDP5_JSTAR_ENUMERATED[s]).abs() < 1e-11, "state {s}");
    }
}

#[test]
fn bellman_at_zero_is_the_cheapest_action() {
    let mdp = load("mdp5.txt");
    let tj = mdp.bellman_apply(&[0.0; 5]).unwrap();
    let expected =
        [0.28955429585136394, 0.31594947299300014, 0.6825367606766739, 0.6162289152617417, 0.16825509971522723];
    assert_eq!(tj, expected);
}

#[test]
fn fixture_round_trips_through_text() {
    let mdp = load("mdp5.txt");
    let again = FiniteMdp::parse(&mdp.to_fixture()).unwrap();
    assert_eq!(mdp, again);
}

#[test]
fn ssp_fixture_values_and_weights() {
    let ssp = load("ssp3.txt");
    let fp = ssp.exact_fixed_point(1e-12).unwrap();
    let stored = golden("ssp3.jstar");
    for (value, expected) in fp.values.iter().zip(&stored) {
        assert!((value - expected).abs() < 1e-10);
    }
    let (norm, modulus) = ssp.contraction_norm().unwrap();
    assert_eq!(norm.weights().len(), 3);
    assert!((norm.weight(0) - 4.0).abs() < 1e-9);
    assert!((norm.weight(1) - 3.0).abs() < 1e-9);
    assert!((modulus - 0.75).abs() < 1e-9);
}

#[test]
fn residual_field_vanishes_at_the_fixed_point_and_is_bounded_by_distance() {
    let mdp = Arc::new(load("mdp5.txt"));
    let star = golden("mdp5.jstar");
    let f = bellman_residual_field(mdp.clone()).unwrap();
    assert!(f.eval(&star).iter().all(|v| v.abs() < 1e-9));

    let norm = WeightedNorm::max_unit();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let j: Vec<f64> = (0..5).map(|_| rng.random_range(-10.0..10.0)).collect();
        assert!(norm.eval(&f.eval(&j)).unwrap() <= 1.9 * norm.distance(&j, &star) + 1e-9);
    }
}

#[test]
fn scalar_bias_limit_and_residual() {
    // c = 1, α = 0.5, constant bias b = 0.1: J∞ = (c + b)/(1 − α) = 2.2, residual |b|.
    let mdp = Arc::new(FiniteMdp::new(1, 1, vec![1.0], vec![1.0], MdpKind::Discounted { alpha: 0.5 }).unwrap());
    let mut spec = RunSpec::new(Arc::new(bellman_residual_field(mdp.clone()).unwrap()), 200, 1);
    spec.steps = StepSizePolicy::Constant { a0: 0.5 };
    spec.error = ErrorModel::FixedBias { bias: vec![0.1], norm: WeightedNorm::max_unit() };
    let trace = run(&spec).unwrap();
    let j = trace.final_iterate().unwrap();
    assert!((j[0] - 2.2).abs() < 1e-12);
    let report = a2vi_residual_report(&mdp, j, 0.1, &WeightedNorm::max_unit(), 1e-9).unwrap();
    assert!((report.residual - 0.1).abs() < 1e-12);
    assert_eq!(report.verdict, Verdict::Pass);
}

#[test]
fn product_formula_through_a_config_file() {
    // x_1000 = Π_{m<1000} (1 − 1/(m+10)) x_0 = (9/1009) x_0.
    let text = r#"
seed = 1
horizon = 1000
initial = [1.0, 1.0]

[objective]
kind = "scaled-identity"
dimension = 2
scale = -1.0

[step_size]
kind = "harmonic"
c = 10.0
"#;
    let cfg = RunConfig::from_toml_str(text, Path::new(".")).unwrap();
    let trace = run(&cfg.run_spec().unwrap()).unwrap();
    let x = trace.final_iterate().unwrap();
    let norm = (x[0] * x[0] + x[1] * x[1]).sqrt();
    assert!((norm - 0.012614392528600457).abs() < 1e-12);
    assert!((x[0] - 9.0 / 1009.0).abs() < 1e-14);
}

#[test]
fn bellman_fixture_resolves_relative_to_the_config() {
    let text = r#"
seed = 4
horizon = 5

[objective]
kind = "bellman"
fixture = "mdp5.txt"

[step_size]
kind = "harmonic"
c = 10.0
"#;
    let cfg = RunConfig::from_toml_str(text, fixtures()).unwrap();
    let resolved = cfg.resolve_objective().unwrap();
    assert_eq!(resolved.field.dim(), 5);
    assert!(resolved.mdp.is_some());
}
