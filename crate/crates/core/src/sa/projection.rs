use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::WeightedNorm;

/// Nested balls `B̄ ⊂ C` around a common center: iterates that leave the open
/// ball `C` (radius `outer_radius`) are pulled back radially onto the closed
/// ball `B̄` (radius `inner_radius`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionRegion {
    pub inner_radius: f64,
    pub outer_radius: f64,
    /// Empty means the origin.
    #[serde(default)]
    pub center: Vec<f64>,
    #[serde(default)]
    pub norm: WeightedNorm,
}

impl ProjectionRegion {
    pub fn centered(inner_radius: f64, outer_radius: f64, norm: WeightedNorm) -> Self {
        ProjectionRegion { inner_radius, outer_radius, center: Vec::new(), norm }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.inner_radius.is_finite() && self.inner_radius > 0.0) {
            return Err(Error::Config(format!("inner radius must be positive, got {}", self.inner_radius)));
        }
        if !(self.outer_radius.is_finite() && self.outer_radius > self.inner_radius) {
            return Err(Error::Config(format!(
                "outer radius {} must exceed inner radius {}",
                self.outer_radius, self.inner_radius
            )));
        }
        if !self.center.is_empty() && self.center.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: self.center.len() });
        }
        self.norm.validate(Some(d))
    }

    fn center_at(&self, i: usize) -> f64 {
        if self.center.is_empty() {
            0.0
        } else {
            self.center[i]
        }
    }

    /// `‖x − center‖`.
    pub fn radius_of(&self, x: &[f64]) -> f64 {
        let shifted: Vec<f64> = x.iter().enumerate().map(|(i, v)| v - self.center_at(i)).collect();
        self.norm.eval_unchecked(&shifted)
    }

    /// Membership in the open outer ball `C`.
    pub fn in_outer(&self, x: &[f64]) -> bool {
        self.radius_of(x) < self.outer_radius
    }

    /// The projection map: identity on `C`, otherwise the radial point of
    /// `B̄`, which is a nearest point of `B̄` for any norm ball. Returns
    /// whether the projection branch was taken.
    pub fn project(&self, x: &mut [f64]) -> bool {
        let r = self.radius_of(x);
        if r < self.outer_radius {
            return false;
        }
        let scale = self.inner_radius / r;
        for (i, v) in x.iter_mut().enumerate() {
            let c = self.center_at(i);
            *v = c + (*v - c) * scale;
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_inside_outer_ball() {
        let region = ProjectionRegion::centered(1.0, 2.0, WeightedNorm::Euclidean);
        let mut x = vec![1.5, 0.0];
        assert!(!region.project(&mut x));
        assert_eq!(x, vec![1.5, 0.0]);
    }

    #[test]
    fn radial_projection_onto_inner_ball() {
        let region = ProjectionRegion::centered(1.0, 2.0, WeightedNorm::Euclidean);
        let mut x = vec![3.0, 0.0];
        assert!(region.project(&mut x));
        assert_eq!(x, vec![1.0, 0.0]);
    }

    #[test]
    fn validation() {
        assert!(ProjectionRegion::centered(2.0, 2.0, WeightedNorm::Euclidean).validate(2).is_err());
        assert!(ProjectionRegion::centered(0.0, 2.0, WeightedNorm::Euclidean).validate(2).is_err());
        let mut r = ProjectionRegion::centered(1.0, 2.0, WeightedNorm::Euclidean);
        r.center = vec![0.0; 3];
        assert!(r.validate(2).is_err());
    }

    proptest! {
        // the projected point lies in B̄ and is as close to x as any point of B̄
        // along the sampled directions
        #[test]
        fn projection_lands_in_inner_ball(
            x in prop::collection::vec(-50.0f64..50.0, 3),
            c in prop::collection::vec(-2.0f64..2.0, 3),
            use_max in any::<bool>(),
        ) {
            let norm = if use_max { WeightedNorm::weighted_max(vec![1.0, 0.5, 2.0]) } else { WeightedNorm::Euclidean };
            let region = ProjectionRegion { inner_radius: 1.0, outer_radius: 2.0, center: c.clone(), norm: norm.clone() };
            let mut y = x.clone();
            let projected = region.project(&mut y);
            prop_assert!(region.radius_of(&y) < 2.0 + 1e-12);
            if projected {
                prop_assert!(region.radius_of(&y) <= 1.0 + 1e-12);
                let dist = norm.distance(&x, &y);
                prop_assert!((dist - (region.radius_of(&x) - 1.0)).abs() <= 1e-9 * (1.0 + dist));
            } else {
                prop_assert_eq!(y, x);
            }
        }
    }
}
