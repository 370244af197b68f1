use super::norm::euclidean;

/// A vector field `f: R^d -> R^d` driving the recursion.
///
/// Agents evaluate single components at their own (delayed) view of the
/// iterate, so the component accessor is the primitive operation.
pub trait ObjectiveField: Send + Sync {
    fn dim(&self) -> usize;

    /// `f_i(x)`.
    fn component(&self, i: usize, x: &[f64]) -> f64;

    /// Lipschitz constant (global, or over the documented domain for fields
    /// that are only locally Lipschitz).
    fn lipschitz(&self) -> f64;

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim()).map(|i| self.component(i, x)).collect()
    }

    /// Residual logged in traces. Defaults to `‖f(x)‖`.
    fn residual(&self, x: &[f64]) -> f64 {
        euclidean(&self.eval(x))
    }
}

/// `f(x) = K x` for a dense `d×d` matrix `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearField {
    dim: usize,
    /// Row-major.
    matrix: Vec<f64>,
    lipschitz: f64,
}

impl LinearField {
    /// `f(x) = scale · x`.
    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        let mut matrix = vec![0.0; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = scale;
        }
        LinearField { dim, matrix, lipschitz: scale.abs() }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> crate::Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(crate::Error::Config("linear field needs at least one row".into()));
        }
        let mut matrix = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(crate::Error::DimensionMismatch { expected: dim, got: row.len() });
            }
            matrix.extend_from_slice(row);
        }
        let m = nalgebra::DMatrix::from_row_slice(dim, dim, &matrix);
        let lipschitz = m.singular_values().max();
        Ok(LinearField { dim, matrix, lipschitz })
    }
}

impl ObjectiveField for LinearField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn component(&self, i: usize, x: &[f64]) -> f64 {
        let row = &self.matrix[i * self.dim..(i + 1) * self.dim];
        row.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_identity() {
        let f = LinearField::scaled_identity(2, -1.0);
        assert_eq!(f.eval(&[1.0, 2.0]), vec![-1.0, -2.0]);
        assert_eq!(f.lipschitz(), 1.0);
    }

    #[test]
    fn dense_rows() {
        let f = LinearField::from_rows(&[vec![1.0, 2.0], vec![0.0, 3.0]]).unwrap();
        assert_eq!(f.eval(&[1.0, 1.0]), vec![3.0, 3.0]);
        assert!(LinearField::from_rows(&[vec![1.0], vec![0.0, 3.0]]).is_err());
    }
}
