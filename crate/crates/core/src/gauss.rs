use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor of a covariance matrix, used to draw
/// exact multivariate Gaussian vectors.
#[derive(Debug, Clone)]
pub struct CovarianceFactor {
    lower: DMatrix<f64>,
}

impl CovarianceFactor {
    pub fn new(covariance: DMatrix<f64>) -> Result<Self> {
        let dim = covariance.nrows();
        nalgebra::linalg::Cholesky::new(covariance)
            .map(|c| Self { lower: c.l() })
            .ok_or_else(|| Error::Factorization(format!("{dim}x{dim} covariance is not positive definite")))
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// Maps independent standard normals `z` to a correlated sample `L z`.
    pub fn correlate(&self, z: &[f64]) -> Vec<f64> {
        debug_assert_eq!(z.len(), self.dim());
        (&self.lower * DVector::from_column_slice(z)).as_slice().to_vec()
    }
}
