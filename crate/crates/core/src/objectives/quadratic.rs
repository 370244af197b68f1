use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::field::ObjectiveField;
use crate::error::{Error, Result};

/// Agent `i` descends its own quadratic: `f_i(x) = -(M_i x)_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticField {
    matrices: Vec<DMatrix<f64>>,
    lipschitz: f64,
}

impl QuadraticField {
    /// One symmetric positive definite `d×d` matrix per agent.
    pub fn new(matrices: Vec<DMatrix<f64>>) -> Result<Self> {
        let d = matrices.len();
        if d == 0 {
            return Err(Error::Config("quadratic field needs at least one agent".into()));
        }
        let mut lipschitz: f64 = 0.0;
        for (index, m) in matrices.iter().enumerate() {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, got: m.nrows().max(m.ncols()) });
            }
            let asym = (m - m.transpose()).abs().max();
            if asym > 1e-12 * m.abs().max().max(1.0) {
                return Err(Error::NotPositiveDefinite { index, min_eigenvalue: f64::NAN });
            }
            let eig = SymmetricEigen::new(m.clone()).eigenvalues;
            let min = eig.min();
            if !(min > 0.0) {
                return Err(Error::NotPositiveDefinite { index, min_eigenvalue: min });
            }
            lipschitz = lipschitz.max(eig.max());
        }
        Ok(QuadraticField { matrices, lipschitz })
    }

    /// Every agent shares the same matrix.
    pub fn shared(m: DMatrix<f64>) -> Result<Self> {
        let d = m.nrows();
        QuadraticField::new(vec![m; d])
    }

    pub fn from_rows(matrices: &[Vec<Vec<f64>>]) -> Result<Self> {
        let d = matrices.len();
        let mut out = Vec::with_capacity(d);
        for rows in matrices {
            if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                return Err(Error::DimensionMismatch { expected: d, got: rows.len() });
            }
            out.push(DMatrix::from_fn(d, d, |r, c| rows[r][c]));
        }
        QuadraticField::new(out)
    }

    /// `d` independent random positive definite matrices.
    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Self> {
        QuadraticField::new((0..d).map(|_| random_pd(d, rng)).collect())
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }
}

/// `QᵀΛQ` with `Q` the orthogonal factor of a Gaussian matrix and
/// `Λ` uniform on `[0.5, 2]`, so the condition number is at most 4.
pub fn random_pd<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = g.qr().q();
    let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(d, |_, _| {
        rng.random_range(0.5..=2.0)
    }));
    let m = q.transpose() * lambda * q;
    (&m + m.transpose()) * 0.5
}

impl ObjectiveField for QuadraticField {
    fn dim(&self) -> usize {
        self.matrices.len()
    }

    fn component(&self, i: usize, x: &[f64]) -> f64 {
        let m = &self.matrices[i];
        -(0..x.len()).map(|j| m[(i, j)] * x[j]).sum::<f64>()
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}
