use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::field::ObjectiveField;
use crate::error::{Error, Result};

/// Half-width of the box on which the Rosenbrock Lipschitz bound is stated.
pub const ROSENBROCK_LIPSCHITZ_BOX: f64 = 2.0;

/// Smooth benchmark objectives `π(θ)` with closed-form gradients.
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothField {
    /// `π(θ) = ½ θᵀ M θ` with `M` symmetric positive definite.
    QuadraticBowl { matrix: DMatrix<f64> },
    /// `π(x, y) = (a − x)² + b (y − x²)²`.
    Rosenbrock { a: f64, b: f64 },
}

impl SmoothField {
    pub fn quadratic_bowl(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::Config("bowl matrix must be square and non-empty".into()));
        }
        let eig = SymmetricEigen::new(matrix.clone()).eigenvalues;
        if (&matrix - matrix.transpose()).abs().max() > 1e-12 || !(eig.min() > 0.0) {
            return Err(Error::NotPositiveDefinite { index: 0, min_eigenvalue: eig.min() });
        }
        Ok(SmoothField::QuadraticBowl { matrix })
    }

    pub fn rosenbrock(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > 0.0) {
            return Err(Error::Config(format!("rosenbrock needs finite a and b > 0, got ({a}, {b})")));
        }
        Ok(SmoothField::Rosenbrock { a, b })
    }

    pub fn dim(&self) -> usize {
        match self {
            SmoothField::QuadraticBowl { matrix } => matrix.nrows(),
            SmoothField::Rosenbrock { .. } => 2,
        }
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        match self {
            SmoothField::QuadraticBowl { matrix } => {
                let v = DVector::from_column_slice(theta);
                0.5 * (v.transpose() * matrix * &v)[(0, 0)]
            }
            SmoothField::Rosenbrock { a, b } => {
                let (x, y) = (theta[0], theta[1]);
                (a - x).powi(2) + b * (y - x * x).powi(2)
            }
        }
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        match self {
            SmoothField::QuadraticBowl { matrix } => {
                (matrix * DVector::from_column_slice(theta)).iter().copied().collect()
            }
            SmoothField::Rosenbrock { a, b } => {
                let (x, y) = (theta[0], theta[1]);
                let r = y - x * x;
                vec![-2.0 * (a - x) - 4.0 * b * x * r, 2.0 * b * r]
            }
        }
    }

    /// A known local minimiser.
    pub fn minimizer(&self) -> Vec<f64> {
        match self {
            SmoothField::QuadraticBowl { matrix } => vec![0.0; matrix.nrows()],
            SmoothField::Rosenbrock { a, .. } => vec![*a, a * a],
        }
    }

    /// Multiplier `c` in the stationarity bound `‖∇π‖ ≤ c·ε + tol`.
    pub fn stationarity_constant(&self) -> f64 {
        match self {
            SmoothField::QuadraticBowl { .. } => 1.0,
            SmoothField::Rosenbrock { .. } => 2.0,
        }
    }

    /// Gradient Lipschitz constant: exact for the bowl, a Frobenius bound on
    /// the Hessian over `[-2, 2]²` for Rosenbrock.
    pub fn lipschitz(&self) -> f64 {
        match self {
            SmoothField::QuadraticBowl { matrix } => SymmetricEigen::new(matrix.clone()).eigenvalues.max(),
            SmoothField::Rosenbrock { b, .. } => {
                let r = ROSENBROCK_LIPSCHITZ_BOX;
                let h11 = 2.0 + 12.0 * b * r * r + 4.0 * b * r;
                let h12 = 4.0 * b * r;
                let h22 = 2.0 * b;
                (h11 * h11 + 2.0 * h12 * h12 + h22 * h22).sqrt()
            }
        }
    }
}

/// `f(θ) = −∇π(θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    smooth: SmoothField,
    lipschitz: f64,
}

impl GradientField {
    pub fn smooth(&self) -> &SmoothField {
        &self.smooth
    }
}

pub fn gradient_field(smooth: SmoothField) -> GradientField {
    let lipschitz = smooth.lipschitz();
    GradientField { smooth, lipschitz }
}

impl ObjectiveField for GradientField {
    fn dim(&self) -> usize {
        self.smooth.dim()
    }

    fn component(&self, i: usize, x: &[f64]) -> f64 {
        match &self.smooth {
            SmoothField::QuadraticBowl { matrix } => {
                -(0..x.len()).map(|j| matrix[(i, j)] * x[j]).sum::<f64>()
            }
            SmoothField::Rosenbrock { .. } => -self.smooth.gradient(x)[i],
        }
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.smooth.gradient(x).into_iter().map(|g| -g).collect()
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// `‖∇π(θ)‖`.
    fn residual(&self, x: &[f64]) -> f64 {
        super::norm::euclidean(&self.smooth.gradient(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bowl_identity_field() {
        let f = gradient_field(SmoothField::quadratic_bowl(DMatrix::identity(2, 2)).unwrap());
        assert_eq!(f.eval(&[2.0, -1.0]), vec![-2.0, 1.0]);
        assert_eq!(f.component(1, &[2.0, -1.0]), 1.0);
    }

    #[test]
    fn rosenbrock_stationary_at_minimizer() {
        let f = gradient_field(SmoothField::rosenbrock(1.0, 100.0).unwrap());
        assert_eq!(f.eval(&[1.0, 1.0]), vec![0.0, 0.0]);
        assert_eq!(f.eval(&[0.0, 0.0]), vec![2.0, 0.0]);
    }

    #[test]
    fn rejects_invalid() {
        assert!(SmoothField::quadratic_bowl(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).is_err());
        assert!(SmoothField::rosenbrock(1.0, 0.0).is_err());
    }
}
