//! Objective fields: quadratic descent fields, the Bellman residual of finite
//! MDPs, gradient fields of smooth benchmarks, and the weighted norms.

pub mod field;
pub mod mdp;
pub mod norm;
pub mod quadratic;
pub mod smooth;

pub use field::{LinearField, ObjectiveField};
pub use mdp::{bellman_residual_field, BellmanResidualField, FiniteMdp, FixedPoint, MdpKind};
pub use norm::WeightedNorm;
pub use quadratic::{random_pd, QuadraticField};
pub use smooth::{gradient_field, GradientField, SmoothField};

/// `‖x‖` under `norm`; errors on a dimension mismatch.
pub fn weighted_norm(x: &[f64], norm: &WeightedNorm) -> crate::Result<f64> {
    norm.eval(x)
}
