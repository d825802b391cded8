//! Unit state vectors with exact rational-complex coefficients.

use num_rational::BigRational;
use num_traits::One;
use thiserror::Error;

use crate::linalg::complex::RationalComplex;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StateError {
    #[error("state not normalized: |x|^2 = {norm_sqr}")]
    NotNormalized { norm_sqr: String },
    #[error("state vector needs at least one coefficient")]
    Empty,
}

/// A finitely supported unit vector: coefficients on the first `k` basis
/// vectors, exactly normalized (`sum |c_i|^2 = 1`), zero beyond.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateVector {
    coeffs: Vec<RationalComplex>,
}

impl StateVector {
    pub fn new(coeffs: Vec<RationalComplex>) -> Result<Self, StateError> {
        if coeffs.is_empty() {
            return Err(StateError::Empty);
        }
        let norm_sqr: BigRational = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if !norm_sqr.is_one() {
            return Err(StateError::NotNormalized {
                norm_sqr: crate::rational::ratio_to_string(&norm_sqr),
            });
        }
        Ok(StateVector { coeffs })
    }

    /// The basis vector `e_k` (1-indexed).
    pub fn basis(k: usize) -> Self {
        assert!(k >= 1);
        let mut coeffs = vec![RationalComplex::zero(); k];
        coeffs[k - 1] = RationalComplex::one();
        StateVector { coeffs }
    }

    /// Builds from real rational coefficients.
    pub fn from_reals(values: &[BigRational]) -> Result<Self, StateError> {
        Self::new(
            values
                .iter()
                .map(|v| RationalComplex::from_real(v.clone()))
                .collect(),
        )
    }

    pub fn support(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeff(&self, i: usize) -> RationalComplex {
        self.coeffs.get(i).cloned().unwrap_or_else(RationalComplex::zero)
    }

    pub fn coeffs(&self) -> &[RationalComplex] {
        &self.coeffs
    }

    /// Probability mass carried by the first `m` basis directions.
    pub fn mass_within(&self, m: usize) -> BigRational {
        self.coeffs
            .iter()
            .take(m)
            .map(|c| c.norm_sqr())
            .sum()
    }

    /// Probability mass beyond the first `m` basis directions.
    pub fn mass_beyond(&self, m: usize) -> BigRational {
        BigRational::one() - self.mass_within(m)
    }
}
