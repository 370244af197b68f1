use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norms used for error bounds, projection regions and residuals.
///
/// `Max` is the weighted max-norm `max_i |x_i| / ν_i`; `P` is the weighted
/// p-norm `(Σ |ω_i x_i|^p)^{1/p}`. An empty weight vector means unit weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightedNorm {
    #[default]
    Euclidean,
    Max {
        #[serde(default)]
        weights: Vec<f64>,
    },
    P {
        #[serde(default)]
        weights: Vec<f64>,
        p: f64,
    },
}

impl WeightedNorm {
    pub fn max_unit() -> Self {
        WeightedNorm::Max { weights: Vec::new() }
    }

    pub fn weighted_max(weights: Vec<f64>) -> Self {
        WeightedNorm::Max { weights }
    }

    pub fn weighted_p(weights: Vec<f64>, p: f64) -> Self {
        WeightedNorm::P { weights, p }
    }

    pub fn weights(&self) -> &[f64] {
        match self {
            WeightedNorm::Euclidean => &[],
            WeightedNorm::Max { weights } | WeightedNorm::P { weights, .. } => weights,
        }
    }

    /// Checks weight positivity, the exponent, and (when `dim` is given) the
    /// weight count.
    pub fn validate(&self, dim: Option<usize>) -> Result<()> {
        let weights = self.weights();
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::Config(format!("norm weights must be positive, got {w}")));
        }
        if let WeightedNorm::P { p, .. } = self {
            if !(p.is_finite() && *p >= 1.0) {
                return Err(Error::Config(format!("p-norm exponent must be >= 1, got {p}")));
            }
        }
        if let Some(d) = dim {
            if !weights.is_empty() && weights.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: weights.len() });
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let weights = self.weights();
        if !weights.is_empty() && weights.len() != x.len() {
            return Err(Error::DimensionMismatch { expected: weights.len(), got: x.len() });
        }
        Ok(self.eval_unchecked(x))
    }

    /// Same as [`eval`](Self::eval) for callers that already validated the dimension.
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let w = |i: usize, weights: &[f64]| if weights.is_empty() { 1.0 } else { weights[i] };
        match self {
            WeightedNorm::Euclidean => euclidean(x),
            WeightedNorm::Max { weights } => x
                .iter()
                .enumerate()
                .map(|(i, v)| v.abs() / w(i, weights))
                .fold(0.0, f64::max),
            WeightedNorm::P { weights, p } => {
                let scaled: Vec<f64> = x.iter().enumerate().map(|(i, v)| (w(i, weights) * v).abs()).collect();
                scaled_p_norm(&scaled, *p)
            }
        }
    }

    /// Norm of `x - y`.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.eval_unchecked(&diff)
    }

    /// Weight of coordinate `i` (1 for unit weights or the Euclidean norm).
    pub fn weight(&self, i: usize) -> f64 {
        let weights = self.weights();
        if weights.is_empty() {
            1.0
        } else {
            weights[i]
        }
    }
}

pub fn euclidean(x: &[f64]) -> f64 {
    let s = x.iter().map(|v| v * v).sum::<f64>();
    if s.is_normal() {
        s.sqrt()
    } else {
        let abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        scaled_p_norm(&abs, 2.0)
    }
}

/// `(Σ v_i^p)^{1/p}` for nonnegative `v`, rescaled by the largest entry to
/// avoid underflow and overflow.
fn scaled_p_norm(v: &[f64], p: f64) -> f64 {
    let m = v.iter().cloned().fold(0.0, f64::max);
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    m * v.iter().map(|a| (a / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn weighted_max_examples() {
        let n = WeightedNorm::weighted_max(vec![1.0, 2.0]);
        assert_eq!(n.eval(&[3.0, -4.0]).unwrap(), 3.0);
        assert_eq!(WeightedNorm::max_unit().eval(&[3.0, -4.0]).unwrap(), 4.0);
    }

    #[test]
    fn weighted_p_matches_definition() {
        let n = WeightedNorm::weighted_p(vec![2.0, 1.0], 3.0);
        let expected = (6f64.powi(3) + 4f64.powi(3)).powf(1.0 / 3.0);
        assert!((n.eval(&[3.0, -4.0]).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let n = WeightedNorm::weighted_max(vec![1.0, 2.0]);
        assert_eq!(
            n.eval(&[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        );
    }

    #[test]
    fn non_positive_weights_rejected() {
        assert!(WeightedNorm::weighted_max(vec![1.0, 0.0]).validate(None).is_err());
        assert!(WeightedNorm::weighted_p(vec![1.0], 0.5).validate(None).is_err());
    }

    #[test]
    fn zero_iff_zero_vector() {
        for n in [
            WeightedNorm::Euclidean,
            WeightedNorm::weighted_max(vec![0.5, 3.0]),
            WeightedNorm::weighted_p(vec![0.5, 3.0], 1.5),
        ] {
            assert_eq!(n.eval(&[0.0, 0.0]).unwrap(), 0.0);
            assert!(n.eval(&[0.0, 1e-300]).unwrap() > 0.0);
        }
    }

    // ‖x‖_ν ≤ ‖x‖ / min ν and ‖x‖ ≤ (d / min ν) ‖x‖_ν; the second needs max ν ≤ 1.
    #[test]
    fn norm_equivalence_constants() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let d = 5;
        for _ in 0..1000 {
            let nu: Vec<f64> = (0..d).map(|_| rng.random_range(0.1..=1.0)).collect();
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-10.0..10.0)).collect();
            let min_nu = nu.iter().cloned().fold(f64::INFINITY, f64::min);
            let weighted = WeightedNorm::weighted_max(nu).eval(&x).unwrap();
            let e = euclidean(&x);
            assert!(weighted <= e / min_nu * (1.0 + 1e-12));
            assert!(e <= d as f64 / min_nu * weighted * (1.0 + 1e-12));
        }
    }
}
