//! Hermitian matrices over the rational complex numbers, with exact
//! positivity decisions.

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::linalg::complex::RationalComplex;
use crate::rational::rint;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatrixError {
    #[error("entry table has wrong length for dimension {dim}")]
    BadShape { dim: usize },
    #[error("matrix is not Hermitian at ({i},{j})")]
    NotHermitian { i: usize, j: usize },
}

/// An `m x m` Hermitian matrix with entries in the rational complex field.
///
/// The empty matrix (`dim == 0`) is allowed; it behaves as the matrix of a
/// pure scalar block operator with no explicit block.
#[derive(Clone, PartialEq, Eq)]
pub struct RationalHermitian {
    dim: usize,
    entries: Vec<RationalComplex>,
}

impl std::fmt::Debug for RationalHermitian {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RationalHermitian[{}](", self.dim)?;
        for i in 0..self.dim {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.dim {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.entry(i, j))?;
            }
        }
        write!(f, ")")
    }
}

impl RationalHermitian {
    /// Builds from a row-major entry table, verifying Hermitian symmetry.
    pub fn new(dim: usize, entries: Vec<RationalComplex>) -> Result<Self, MatrixError> {
        if entries.len() != dim * dim {
            return Err(MatrixError::BadShape { dim });
        }
        let m = RationalHermitian { dim, entries };
        for i in 0..dim {
            for j in i..dim {
                if *m.entry(i, j) != m.entry(j, i).conj() {
                    return Err(MatrixError::NotHermitian { i, j });
                }
            }
        }
        Ok(m)
    }

    /// Builds from the upper triangle (row-major, `i <= j`), mirroring the
    /// conjugates below the diagonal.
    pub fn from_upper_triangle(
        dim: usize,
        upper: Vec<RationalComplex>,
    ) -> Result<Self, MatrixError> {
        if upper.len() != dim * (dim + 1) / 2 {
            return Err(MatrixError::BadShape { dim });
        }
        let mut entries = vec![RationalComplex::zero(); dim * dim];
        let mut k = 0;
        for i in 0..dim {
            for j in i..dim {
                entries[i * dim + j] = upper[k].clone();
                entries[j * dim + i] = upper[k].conj();
                k += 1;
            }
        }
        for i in 0..dim {
            if !entries[i * dim + i].is_real() {
                return Err(MatrixError::NotHermitian { i, j: i });
            }
        }
        Ok(RationalHermitian { dim, entries })
    }

    pub fn zero(dim: usize) -> Self {
        RationalHermitian {
            dim,
            entries: vec![RationalComplex::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, &rint(1))
    }

    pub fn scaled_identity(dim: usize, c: &BigRational) -> Self {
        let mut m = Self::zero(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = RationalComplex::from_real(c.clone());
        }
        m
    }

    pub fn diagonal(values: &[BigRational]) -> Self {
        let dim = values.len();
        let mut m = Self::zero(dim);
        for (i, v) in values.iter().enumerate() {
            m.entries[i * dim + i] = RationalComplex::from_real(v.clone());
        }
        m
    }

    /// Rank-one matrix `v v*` for a complex column vector.
    pub fn outer(v: &[RationalComplex]) -> Self {
        let dim = v.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(&v[i] * &v[j].conj());
            }
        }
        RationalHermitian { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> &RationalComplex {
        &self.entries[i * self.dim + j]
    }

    pub fn set_entry(&mut self, i: usize, j: usize, v: RationalComplex) {
        let d = self.dim;
        self.entries[j * d + i] = v.conj();
        self.entries[i * d + j] = v;
    }

    pub fn is_diagonal(&self) -> bool {
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j && !self.entry(i, j).is_zero() {
                    return false;
                }
            }
        }
        true
    }

    pub fn diag(&self) -> Vec<BigRational> {
        (0..self.dim).map(|i| self.entry(i, i).re.clone()).collect()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let entries = self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| a + b)
            .collect();
        RationalHermitian {
            dim: self.dim,
            entries,
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let entries = self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| a - b)
            .collect();
        RationalHermitian {
            dim: self.dim,
            entries,
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        RationalHermitian {
            dim: self.dim,
            entries: self.entries.iter().map(|e| e.scale(c)).collect(),
        }
    }

    /// Embeds into a larger dimension, placing `fill` on the new diagonal
    /// positions.
    pub fn pad_to(&self, dim: usize, fill: &BigRational) -> Self {
        assert!(dim >= self.dim);
        let mut m = Self::zero(dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.entries[i * dim + j] = self.entry(i, j).clone();
            }
        }
        for i in self.dim..dim {
            m.entries[i * dim + i] = RationalComplex::from_real(fill.clone());
        }
        m
    }

    pub fn trace(&self) -> BigRational {
        let mut t = BigRational::zero();
        for i in 0..self.dim {
            t += &self.entry(i, i).re;
        }
        t
    }

    /// Plain matrix product (not Hermitian in general; used internally).
    pub(crate) fn mat_mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let dim = self.dim;
        let mut entries = vec![RationalComplex::zero(); dim * dim];
        for i in 0..dim {
            for k in 0..dim {
                let aik = self.entry(i, k);
                if aik.is_zero() {
                    continue;
                }
                for j in 0..dim {
                    let b = rhs.entry(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    entries[i * dim + j] += &(aik * b);
                }
            }
        }
        RationalHermitian { dim, entries }
    }

    /// Monic characteristic polynomial of `det(xI - A)`, ascending
    /// coefficients `[c_0, ..., c_{m-1}, 1]`.
    ///
    /// Uses the Faddeev-LeVerrier recurrence, which stays in exact rational
    /// arithmetic. For a Hermitian matrix every coefficient is real.
    pub fn char_poly(&self) -> Vec<BigRational> {
        let m = self.dim;
        if m == 0 {
            return vec![rint(1)];
        }
        let mut coeffs = vec![BigRational::zero(); m + 1];
        coeffs[m] = rint(1);
        let mut work = self.clone(); // M_1 = A
        for k in 1..=m {
            let c = -work.trace() / rint(k as i64);
            coeffs[m - k] = c.clone();
            if k < m {
                let shifted = work.add(&Self::scaled_identity(m, &c));
                work = self.mat_mul(&shifted);
            }
        }
        coeffs
    }

    /// Exact determinant by Gaussian elimination with column pivoting.
    ///
    /// Kept independent of [`Self::char_poly`] so the two positivity routes
    /// do not share code.
    pub fn det(&self) -> BigRational {
        let dim = self.dim;
        if dim == 0 {
            return rint(1);
        }
        let mut rows: Vec<Vec<RationalComplex>> = (0..dim)
            .map(|i| (0..dim).map(|j| self.entry(i, j).clone()).collect())
            .collect();
        let mut det = RationalComplex::one();
        for col in 0..dim {
            let pivot_row = match (col..dim).find(|&r| !rows[r][col].is_zero()) {
                Some(r) => r,
                None => return BigRational::zero(),
            };
            if pivot_row != col {
                rows.swap(pivot_row, col);
                det = -det;
            }
            let pivot = rows[col][col].clone();
            det = &det * &pivot;
            let pivot_row: Vec<RationalComplex> = rows[col][col..].to_vec();
            for row in rows.iter_mut().skip(col + 1) {
                if row[col].is_zero() {
                    continue;
                }
                let factor = row[col].div(&pivot);
                for (offset, p_entry) in pivot_row.iter().enumerate() {
                    let delta = &factor * p_entry;
                    row[col + offset] -= &delta;
                }
            }
        }
        debug_assert!(det.is_real(), "Hermitian determinant must be real");
        det.re
    }

    /// Positive semidefiniteness by the characteristic-polynomial sign test.
    ///
    /// Writing `det(xI - A) = sum_k (-1)^k e_k x^(m-k)`, a Hermitian matrix
    /// is PSD exactly when every `e_k >= 0`. Polynomial time and exact.
    pub fn is_psd(&self) -> bool {
        if self.dim == 0 {
            return true;
        }
        if self.is_diagonal() {
            return self.diag().iter().all(|d| !d.is_negative());
        }
        let p = self.char_poly();
        let m = self.dim;
        for k in 1..=m {
            // e_k = (-1)^k c_{m-k}
            let e_k = if k % 2 == 0 {
                p[m - k].clone()
            } else {
                -p[m - k].clone()
            };
            if e_k.is_negative() {
                return false;
            }
        }
        true
    }

    /// Positive definiteness: PSD with a nonzero determinant.
    pub fn is_pd(&self) -> bool {
        if self.dim == 0 {
            return true;
        }
        if self.is_diagonal() {
            return self.diag().iter().all(|d| d.is_positive());
        }
        let p = self.char_poly();
        let m = self.dim;
        for k in 1..=m {
            let e_k = if k % 2 == 0 {
                p[m - k].clone()
            } else {
                -p[m - k].clone()
            };
            if k == m {
                if !e_k.is_positive() {
                    return false;
                }
            } else if e_k.is_negative() {
                return false;
            }
        }
        true
    }

    /// Positive semidefiniteness by scanning all `2^m - 1` principal minors.
    ///
    /// Exponential; retained as a cross-check oracle for small sizes.
    pub fn is_psd_by_principal_minors(&self) -> bool {
        let m = self.dim;
        assert!(m <= 16, "minor scan is exponential; keep it small");
        for mask in 1u32..(1 << m) {
            let idx: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
            let k = idx.len();
            let mut sub = Self::zero(k);
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    sub.entries[a * k + b] = self.entry(i, j).clone();
                }
            }
            if sub.det().is_negative() {
                return false;
            }
        }
        true
    }
}
