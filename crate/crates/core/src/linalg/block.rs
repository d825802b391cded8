//! Operators of the form `(finite Hermitian block) + (scalar tail) * I` on
//! the fixed standard basis, with exact Loewner-order decisions and a
//! certified `-log2` spectral enclosure.

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::linalg::complex::RationalComplex;
use crate::linalg::hermitian::RationalHermitian;
use crate::linalg::interval::{
    neg_log2_interval, neg_log2_of_interval, ComplexInterval, IntervalHermitian, RatInterval,
};
use crate::linalg::poly::eig_enclose;
use crate::linalg::state::StateVector;
use crate::rational::{floor_log2, rint};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpectralError {
    #[error("operator is not strictly positive; no logarithm bound at this stage")]
    NotPositiveDefinite,
}

/// The operator `block ⊕ tail·I`: acts as `block` on the first `m` basis
/// vectors and as multiplication by `tail` beyond them.
///
/// With `tail == 0` this is exactly an `m`-square operator; the identity is
/// `tail == 1`.
#[derive(Clone, Debug)]
pub struct BlockScalarOperator {
    block: RationalHermitian,
    tail: BigRational,
}

impl BlockScalarOperator {
    pub fn new(block: RationalHermitian, tail: BigRational) -> Self {
        BlockScalarOperator { block, tail }
    }

    /// An `m`-square operator (zero tail).
    pub fn from_block(block: RationalHermitian) -> Self {
        Self::new(block, BigRational::zero())
    }

    /// The zero operator, represented with a size-1 block.
    pub fn zero() -> Self {
        Self::new(RationalHermitian::zero(1), BigRational::zero())
    }

    /// The identity, represented with a size-1 block.
    pub fn identity() -> Self {
        Self::new(RationalHermitian::identity(1), rint(1))
    }

    /// Pure scalar `λ·I` with an empty block.
    pub fn scalar(tail: BigRational) -> Self {
        Self::new(RationalHermitian::zero(0), tail)
    }

    /// `c · I_m`: the scaled identity on the first `m` directions, zero tail.
    pub fn scaled_block_identity(m: usize, c: &BigRational) -> Self {
        Self::from_block(RationalHermitian::scaled_identity(m, c))
    }

    pub fn diagonal(values: &[BigRational], tail: BigRational) -> Self {
        Self::new(RationalHermitian::diagonal(values), tail)
    }

    pub fn block(&self) -> &RationalHermitian {
        &self.block
    }

    pub fn block_dim(&self) -> usize {
        self.block.dim()
    }

    pub fn tail(&self) -> &BigRational {
        &self.tail
    }

    /// Matrix entry at any basis pair (0-indexed), extending the block with
    /// the tail on the diagonal.
    pub fn entry(&self, i: usize, j: usize) -> RationalComplex {
        let m = self.block.dim();
        if i < m && j < m {
            self.block.entry(i, j).clone()
        } else if i == j {
            RationalComplex::from_real(self.tail.clone())
        } else {
            RationalComplex::zero()
        }
    }

    /// Re-represents with a block of size at least `dim` (tail fills the new
    /// diagonal); the operator itself is unchanged.
    pub fn pad_to(&self, dim: usize) -> Self {
        if dim <= self.block.dim() {
            return self.clone();
        }
        Self::new(self.block.pad_to(dim, &self.tail), self.tail.clone())
    }

    /// Exact linear combination; smaller blocks are padded with their tail
    /// scalar on the diagonal before the entrywise sum.
    pub fn combine(terms: &[(BigRational, &BlockScalarOperator)]) -> Self {
        assert!(!terms.is_empty(), "combine needs at least one term");
        let dim = terms.iter().map(|(_, op)| op.block_dim()).max().unwrap();
        let mut block = RationalHermitian::zero(dim);
        let mut tail = BigRational::zero();
        for (coeff, op) in terms {
            if coeff.is_zero() {
                continue;
            }
            let padded = op.pad_to(dim);
            block = block.add(&padded.block.scale(coeff));
            tail += coeff * &op.tail;
        }
        Self::new(block, tail)
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        Self::new(self.block.scale(c), c * &self.tail)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::combine(&[(rint(1), self), (rint(1), other)])
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::combine(&[(rint(1), self), (rint(-1), other)])
    }

    /// Decides positive semidefiniteness of the whole operator. The block
    /// and the tail act on orthogonal subspaces, so the operator is PSD
    /// exactly when the tail is nonnegative and the block is PSD.
    pub fn is_psd(&self) -> bool {
        !self.tail.is_negative() && self.block.is_psd()
    }

    /// Strict positivity: positive tail and positive-definite block.
    pub fn is_pd(&self) -> bool {
        self.tail.is_positive() && self.block.is_pd()
    }

    /// The Loewner order: `a <= b` iff `b - a` is positive semidefinite.
    pub fn loewner_leq(a: &Self, b: &Self) -> bool {
        Self::combine(&[(rint(1), b), (rint(-1), a)]).is_psd()
    }

    /// Exact quadratic form `<Ax, x>`.
    pub fn quad_form(&self, x: &StateVector) -> BigRational {
        let m = self.block.dim();
        let k = x.support().min(m);
        let mut acc = RationalComplex::zero();
        for i in 0..k {
            for j in 0..k {
                // <Ax, x> = sum_{i,j} A(i,j) x_j conj(x_i)
                let term = &(self.block.entry(i, j) * &x.coeff(j)) * &x.coeff(i).conj();
                acc += &term;
            }
        }
        debug_assert!(acc.is_real());
        acc.re + &self.tail * x.mass_beyond(m)
    }

    /// Certified enclosure of `-log2` of this operator, entrywise interval
    /// widths at most `eps`.
    ///
    /// Requires strict positivity. Diagonal blocks map entry by entry; the
    /// general path interpolates `-log2` at eigenvalue clusters and bounds
    /// the interpolation error through the spectral theorem, refining the
    /// eigenvalue enclosures until the requested width is reached.
    pub fn spectral_neg_log2(&self, eps: &BigRational) -> Result<IntervalHermitian, SpectralError> {
        assert!(eps.is_positive());
        if !self.is_pd() {
            return Err(SpectralError::NotPositiveDefinite);
        }
        let bits = bits_for(&(eps / rint(2)));
        let tail_enc = neg_log2_interval(&self.tail, bits);
        let m = self.block.dim();
        if m == 0 {
            return Ok(IntervalHermitian::new(0, vec![], tail_enc));
        }
        if self.block.is_diagonal() {
            let diag = self
                .block
                .diag()
                .iter()
                .map(|d| neg_log2_interval(d, bits))
                .collect();
            return Ok(IntervalHermitian::diagonal(diag, tail_enc));
        }
        let mut eig_eps = eps / rint(4);
        for _ in 0..64 {
            if let Some(entries) = self.neg_log2_attempt(&eig_eps, eps) {
                return Ok(IntervalHermitian::new(m, entries, tail_enc));
            }
            eig_eps /= rint(2);
        }
        unreachable!("spectral enclosure failed to converge");
    }

    /// One pass of the interpolation scheme at a given eigenvalue enclosure
    /// width; `None` when the achieved entry widths exceed `eps`.
    fn neg_log2_attempt(
        &self,
        eig_eps: &BigRational,
        eps: &BigRational,
    ) -> Option<Vec<ComplexInterval>> {
        let m = self.block.dim();
        let enclosures = eig_enclose(&self.block, eig_eps);
        if enclosures.iter().any(|e| !e.lo.is_positive()) {
            return None;
        }
        // Merge overlapping enclosures into disjoint clusters.
        let mut clusters: Vec<RatInterval> = Vec::new();
        for e in enclosures {
            match clusters.last_mut() {
                Some(last) if e.lo <= last.hi => *last = last.hull(&e),
                _ => clusters.push(e),
            }
        }
        let nodes: Vec<BigRational> = clusters.iter().map(RatInterval::midpoint).collect();
        let r = nodes.len();

        // Exact Lagrange basis matrices L_j(B).
        let mut basis_mats: Vec<RationalHermitian> = Vec::with_capacity(r);
        for j in 0..r {
            let mut mat = RationalHermitian::identity(m);
            let mut denom = rint(1);
            for (k, node) in nodes.iter().enumerate() {
                if k == j {
                    continue;
                }
                let shifted = self
                    .block
                    .sub(&RationalHermitian::scaled_identity(m, node));
                mat = mat.mat_mul(&shifted);
                denom *= &nodes[j] - node;
            }
            basis_mats.push(mat.scale(&(rint(1) / denom)));
        }

        // Precision for the -log2 node values: the coefficient interval
        // widths enter scaled by the Lagrange matrix entries.
        let mut scale_bound = rint(1);
        for mat in &basis_mats {
            for i in 0..m {
                for j in 0..m {
                    let e = mat.entry(i, j);
                    let a = e.re.abs().max(e.im.abs());
                    if a > scale_bound {
                        scale_bound = a;
                    }
                }
            }
        }
        let node_bits = bits_for(&(eps / (rint(8 * r as i64) * &scale_bound)));
        let node_values: Vec<RatInterval> = nodes
            .iter()
            .map(|c| neg_log2_interval(c, node_bits))
            .collect();

        // Interpolation error bound: on each cluster hull compare the
        // interval ranges of -log2 and of the interpolant.
        let mut err = BigRational::zero();
        for hull in &clusters {
            let f_range = neg_log2_of_interval(hull, node_bits);
            let mut p_range = RatInterval::zero();
            for j in 0..r {
                let mut lagrange = RatInterval::point(rint(1));
                for (k, node) in nodes.iter().enumerate() {
                    if k == j {
                        continue;
                    }
                    let num = hull.sub(&RatInterval::point(node.clone()));
                    lagrange = lagrange.mul(&num.scale(&(rint(1) / (&nodes[j] - node))));
                }
                p_range = p_range.add(&node_values[j].mul(&lagrange));
            }
            let d = f_range.max_distance(&p_range);
            if d > err {
                err = d;
            }
        }

        // Assemble entry enclosures and check the width contract.
        let mut entries = Vec::with_capacity(m * m);
        let mut max_width = BigRational::zero();
        for i in 0..m {
            for j in 0..m {
                let mut acc = ComplexInterval::zero();
                for (mat, value) in basis_mats.iter().zip(&node_values) {
                    acc = acc.add(&ComplexInterval::point(mat.entry(i, j)).scale_real(value));
                }
                let padded = acc.inflate(&err);
                max_width = max_width.max(padded.max_width());
                entries.push(padded);
            }
        }
        if max_width <= *eps {
            Some(entries)
        } else {
            None
        }
    }
}

/// Equality as operators: padding-insensitive entrywise comparison.
impl PartialEq for BlockScalarOperator {
    fn eq(&self, other: &Self) -> bool {
        if self.tail != other.tail {
            return false;
        }
        let dim = self.block_dim().max(other.block_dim());
        let a = self.pad_to(dim);
        let b = other.pad_to(dim);
        a.block == b.block
    }
}

impl Eq for BlockScalarOperator {}

/// Smallest `b` with `2^-b <= eps`, for outward-rounded log enclosures.
fn bits_for(eps: &BigRational) -> u32 {
    assert!(eps.is_positive());
    let f = floor_log2(eps);
    if f >= 0 {
        1
    } else {
        (-f) as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{pow2, rat};

    fn diag(values: &[(i64, i64)], tail: BigRational) -> BlockScalarOperator {
        let v: Vec<BigRational> = values.iter().map(|&(n, d)| rat(n, d)).collect();
        BlockScalarOperator::diagonal(&v, tail)
    }

    #[test]
    fn combine_identity_cancels() {
        let id = BlockScalarOperator::identity();
        let z = BlockScalarOperator::combine(&[(rint(1), &id), (rint(-1), &id)]);
        assert_eq!(z.block_dim(), 1);
        assert_eq!(z, BlockScalarOperator::zero());
        assert!(z.tail().is_zero());
    }

    #[test]
    fn combine_pads_with_tail() {
        // 1/2 * (diag(1) ⊕ 0) + 1/2 * (∅ ⊕ 1) = diag(1) ⊕ 1/2
        let a = diag(&[(1, 1)], rint(0));
        let b = BlockScalarOperator::scalar(rint(1));
        let c = BlockScalarOperator::combine(&[(rat(1, 2), &a), (rat(1, 2), &b)]);
        assert_eq!(c.entry(0, 0), RationalComplex::one());
        assert_eq!(*c.tail(), rat(1, 2));
        assert_eq!(c, diag(&[(1, 1)], rat(1, 2)));
    }

    #[test]
    fn combine_scalar_multiple() {
        let a = diag(&[(1, 1), (2, 1)], rint(0));
        let c = BlockScalarOperator::combine(&[(rint(2), &a)]);
        assert_eq!(c, diag(&[(2, 1), (4, 1)], rint(0)));
    }

    #[test]
    fn psd_cases() {
        assert!(diag(&[(1, 1), (1, 1)], rint(0)).is_psd());
        let swap = BlockScalarOperator::from_block(
            RationalHermitian::from_upper_triangle(
                2,
                vec![
                    RationalComplex::zero(),
                    RationalComplex::one(),
                    RationalComplex::zero(),
                ],
            )
            .unwrap(),
        );
        assert!(!swap.is_psd());
        assert!(!diag(&[(1, 1)], rat(-1, 2)).is_psd());
    }

    #[test]
    fn loewner_order_basics() {
        let zero = BlockScalarOperator::zero();
        let id = BlockScalarOperator::identity();
        assert!(BlockScalarOperator::loewner_leq(&zero, &id));
        assert!(!BlockScalarOperator::loewner_leq(&id, &zero));
        // I vs diag(1/2) ⊕ 1/2 : strictly smaller on every direction
        let half = diag(&[(1, 2)], rat(1, 2));
        assert!(!BlockScalarOperator::loewner_leq(&id, &half));
        assert!(BlockScalarOperator::loewner_leq(&half, &id));
    }

    #[test]
    fn loewner_antisymmetry_gives_equality() {
        let a = diag(&[(1, 3), (1, 7)], rat(1, 9));
        let b = a.pad_to(5);
        assert!(BlockScalarOperator::loewner_leq(&a, &b));
        assert!(BlockScalarOperator::loewner_leq(&b, &a));
        assert_eq!(a, b);
    }

    #[test]
    fn quad_form_examples() {
        let x = StateVector::from_reals(&[rat(3, 5), rat(4, 5)]).unwrap();
        assert_eq!(BlockScalarOperator::identity().quad_form(&x), rint(1));
        assert_eq!(diag(&[(1, 1)], rint(0)).quad_form(&x), rat(9, 25));
        // state inside the block of a pure-tail operator sees nothing
        let tail_only = BlockScalarOperator::new(RationalHermitian::zero(2), rat(1, 3));
        assert_eq!(tail_only.quad_form(&x), rint(0));
    }

    #[test]
    fn neg_log2_scalar_cases() {
        let a = diag(&[(1, 2)], rint(1));
        let enc = a.spectral_neg_log2(&rat(1, 64)).unwrap();
        assert!(enc.diag_entries()[0].contains(&rint(1)));
        assert!(enc.tail().contains(&rint(0)));

        let b = diag(&[(1, 4), (1, 2)], rat(1, 8));
        let enc = b.spectral_neg_log2(&rat(1, 64)).unwrap();
        assert!(enc.diag_entries()[0].contains(&rint(2)));
        assert!(enc.diag_entries()[1].contains(&rint(1)));
        assert!(enc.tail().contains(&rint(3)));
    }

    #[test]
    fn neg_log2_rejects_indefinite() {
        let a = diag(&[(1, 2), (0, 1)], rint(1));
        assert_eq!(
            a.spectral_neg_log2(&rat(1, 16)).unwrap_err(),
            SpectralError::NotPositiveDefinite
        );
        let b = diag(&[(1, 2)], rint(0));
        assert!(b.spectral_neg_log2(&rat(1, 16)).is_err());
    }

    #[test]
    fn neg_log2_general_block() {
        // [[5/8, 1/8], [1/8, 5/8]] has eigenvalues 1/2 and 3/4.
        let block = RationalHermitian::from_upper_triangle(
            2,
            vec![
                RationalComplex::from_real(rat(5, 8)),
                RationalComplex::from_real(rat(1, 8)),
                RationalComplex::from_real(rat(5, 8)),
            ],
        )
        .unwrap();
        let op = BlockScalarOperator::new(block, rat(1, 2));
        let eps = rat(1, 256);
        let enc = op.spectral_neg_log2(&eps).unwrap();
        assert!(enc.max_entry_width() <= eps);
        // -log2 of the matrix: eigenvectors (1,1)/sqrt2 and (1,-1)/sqrt2, so
        // entries are (f(1/2)+f(3/4))/2 on the diagonal and
        // (f(3/4)-f(1/2))/2 off it, with f = -log2.
        let f_half = 1.0f64;
        let f_three_quarters = -(0.75f64).log2();
        let expect_diag = (f_half + f_three_quarters) / 2.0;
        let expect_off = (f_three_quarters - f_half) / 2.0;
        let d = enc.entry(0, 0).re;
        let o = enc.entry(0, 1).re;
        use num_traits::ToPrimitive;
        assert!(d.lo.to_f64().unwrap() <= expect_diag && expect_diag <= d.hi.to_f64().unwrap());
        assert!(o.lo.to_f64().unwrap() <= expect_off && expect_off <= o.hi.to_f64().unwrap());
    }

    #[test]
    fn neg_log2_diagonal_monotone() {
        // A <= B (both diagonal PD) => -log2 A >= -log2 B entrywise.
        let a = diag(&[(1, 4), (1, 8)], rat(1, 4));
        let b = diag(&[(1, 2), (1, 4)], rat(1, 2));
        assert!(BlockScalarOperator::loewner_leq(&a, &b));
        let eps = pow2(-10);
        let ea = a.spectral_neg_log2(&eps).unwrap().diag_entries();
        let eb = b.spectral_neg_log2(&eps).unwrap().diag_entries();
        for i in 0..2 {
            assert!(ea[i].lo >= &eb[i].hi - rint(2) * &eps);
        }
    }
}
