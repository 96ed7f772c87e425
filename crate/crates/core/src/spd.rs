//! Symmetric positive definite matrices through their eigendecomposition.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Spd {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

pub fn symmetry_gap(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).abs().max()
}

impl Spd {
    /// Validates symmetry to `1e-12` (relative to the largest entry) and
    /// strict positivity of the spectrum.
    pub fn new(name: &'static str, m: &DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::NotSpd { name, reason: format!("shape {}x{}", m.nrows(), m.ncols()) });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotSpd { name, reason: "non-finite entry".into() });
        }
        let scale = m.abs().max().max(1.0);
        if symmetry_gap(m) > 1e-12 * scale {
            return Err(Error::NotSpd { name, reason: "not symmetric".into() });
        }
        let sym = (m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let min = eig.eigenvalues.min();
        if !(min > 0.0) {
            return Err(Error::NotSpd { name, reason: format!("smallest eigenvalue {min:e}") });
        }
        Ok(Self { values: eig.eigenvalues, vectors: eig.eigenvectors })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.values
    }

    /// `V diag(f(λ)) V'`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&self.values.map(f));
        let m = &self.vectors * d * self.vectors.transpose();
        (&m + m.transpose()) * 0.5
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        self.map(|v| v)
    }

    pub fn sqrt(&self) -> DMatrix<f64> {
        self.map(f64::sqrt)
    }

    pub fn inv_sqrt(&self) -> DMatrix<f64> {
        self.map(|v| 1.0 / v.sqrt())
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.map(|v| 1.0 / v)
    }
}

/// Inverse of a general square matrix.
pub fn inverse(name: &'static str, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone().try_inverse().ok_or_else(|| Error::NotSpd { name, reason: "singular".into() })
}

/// Symmetric part, to remove rounding asymmetry before factorizing.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_compose() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let s = Spd::new("m", &m).unwrap();
        let r = s.sqrt();
        assert!((&r * &r - &m).abs().max() < 1e-13);
        assert!((s.inv_sqrt() * &m * s.inv_sqrt() - DMatrix::identity(3, 3)).abs().max() < 1e-13);
        assert!((s.inverse() * &m - DMatrix::identity(3, 3)).abs().max() < 1e-13);
    }

    #[test]
    fn rejects_indefinite_and_asymmetric() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(Spd::new("bad", &bad).is_err());
        let skew = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(Spd::new("skew", &skew).is_err());
    }
}
