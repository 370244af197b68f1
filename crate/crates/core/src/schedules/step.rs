use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Predetermined step-size sequence `a(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StepSizePolicy {
    /// `1 / (n + c)`.
    Harmonic { c: f64 },
    /// `1 / (n + c)^p`.
    Power { p: f64, c: f64 },
    /// `a0` for every `n`; only meaningful for diagnostics.
    Constant { a0: f64 },
}

impl StepSizePolicy {
    pub fn harmonic(c: f64) -> Self {
        StepSizePolicy::Harmonic { c }
    }

    /// `c >= 1` enforces `sup a(n) <= 1`.
    pub fn validate(&self) -> Result<()> {
        match *self {
            StepSizePolicy::Harmonic { c } => {
                if !(c.is_finite() && c >= 1.0) {
                    return Err(Error::Config(format!("harmonic step needs c >= 1, got {c}")));
                }
            }
            StepSizePolicy::Power { p, c } => {
                if !(c.is_finite() && c >= 1.0) {
                    return Err(Error::Config(format!("power step needs c >= 1, got {c}")));
                }
                if !(p.is_finite() && p > 0.0) {
                    return Err(Error::Config(format!("power step needs p > 0, got {p}")));
                }
            }
            StepSizePolicy::Constant { a0 } => {
                if !(a0 > 0.0 && a0 <= 1.0) {
                    return Err(Error::Config(format!("constant step needs 0 < a0 <= 1, got {a0}")));
                }
            }
        }
        Ok(())
    }

    pub fn at(&self, n: u64) -> f64 {
        let n = n as f64;
        match *self {
            StepSizePolicy::Harmonic { c } => 1.0 / (n + c),
            StepSizePolicy::Power { p, c } => (n + c).powf(-p),
            StepSizePolicy::Constant { a0 } => a0,
        }
    }

    /// Analytic status of `Σ a(n) = ∞`.
    pub fn sum_diverges(&self) -> bool {
        match *self {
            StepSizePolicy::Harmonic { .. } | StepSizePolicy::Constant { .. } => true,
            StepSizePolicy::Power { p, .. } => p <= 1.0,
        }
    }

    /// Analytic status of `Σ a(n)² < ∞`.
    pub fn square_summable(&self) -> bool {
        match *self {
            StepSizePolicy::Harmonic { .. } => true,
            StepSizePolicy::Power { p, .. } => p > 0.5,
            StepSizePolicy::Constant { .. } => false,
        }
    }

    pub fn is_monotone(&self) -> bool {
        true
    }

    pub fn diagnostics_only(&self) -> bool {
        matches!(self, StepSizePolicy::Constant { .. })
    }
}
