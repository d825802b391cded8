//! Univariate polynomials over the rationals: Sturm sequences, square-free
//! decomposition, and certified real-root enclosures.
//!
//! This backs the eigenvalue enclosures for Hermitian blocks, whose
//! characteristic polynomials have only real roots.

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::linalg::hermitian::RationalHermitian;
use crate::linalg::interval::RatInterval;
use crate::rational::{pow2, rint};

/// Dense polynomial, ascending coefficients, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatPoly {
    coeffs: Vec<BigRational>,
}

impl RatPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(BigRational::zero());
        }
        RatPoly { coeffs }
    }

    pub fn zero() -> Self {
        RatPoly {
            coeffs: vec![BigRational::zero()],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_zero()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn leading(&self) -> &BigRational {
        self.coeffs.last().unwrap()
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        if self.degree() == 0 {
            return Self::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * rint(k as i64))
            .collect();
        Self::new(coeffs)
    }

    pub fn monic(&self) -> Self {
        let lead = self.leading().clone();
        if lead.is_zero() {
            return self.clone();
        }
        Self::new(self.coeffs.iter().map(|c| c / &lead).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut coeffs = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Self::new(coeffs)
    }

    /// Euclidean division: `self = q * div + r` with `deg r < deg div`.
    pub fn div_rem(&self, div: &Self) -> (Self, Self) {
        assert!(!div.is_zero(), "polynomial division by zero");
        let mut rem = self.coeffs.clone();
        let dd = div.degree();
        if self.degree() < dd {
            return (Self::zero(), self.clone());
        }
        let mut quot = vec![BigRational::zero(); self.degree() - dd + 1];
        let lead = div.leading();
        for k in (dd..rem.len()).rev() {
            let factor = &rem[k] / lead;
            if factor.is_zero() {
                continue;
            }
            quot[k - dd] = factor.clone();
            for (j, c) in div.coeffs.iter().enumerate() {
                let idx = k - dd + j;
                let delta = &factor * c;
                rem[idx] -= delta;
            }
        }
        rem.truncate(dd.max(1));
        (Self::new(quot), Self::new(rem))
    }

    /// Monic gcd via the Euclidean algorithm, normalizing each remainder to
    /// keep coefficients from exploding.
    pub fn gcd(&self, other: &Self) -> Self {
        let mut a = self.monic();
        let mut b = other.clone();
        if b.is_zero() {
            return a;
        }
        b = b.monic();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = if r.is_zero() { r } else { r.monic() };
        }
        a.monic()
    }

    fn sub_padded(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![BigRational::zero(); len];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            coeffs[i] -= c;
        }
        Self::new(coeffs)
    }

    /// Yun's square-free decomposition: returns `(factor, multiplicity)`
    /// pairs with pairwise-coprime square-free factors.
    pub fn squarefree_decomposition(&self) -> Vec<(RatPoly, usize)> {
        assert!(!self.is_zero());
        let p = self.monic();
        if p.degree() == 0 {
            return vec![];
        }
        let dp = p.derivative();
        let a0 = p.gcd(&dp);
        if a0.degree() == 0 {
            return vec![(p, 1)];
        }
        let mut result = Vec::new();
        let (mut b, _) = p.div_rem(&a0);
        let (c0, _) = dp.div_rem(&a0);
        let mut d = c0.sub_padded(&b.derivative());
        let mut mult = 1;
        loop {
            let a = b.gcd(&d);
            if a.degree() > 0 {
                result.push((a.clone(), mult));
            }
            let (b_next, _) = b.div_rem(&a);
            let (quot, _) = d.div_rem(&a);
            d = quot.sub_padded(&b_next.derivative());
            b = b_next;
            mult += 1;
            if b.degree() == 0 {
                break;
            }
        }
        result
    }

    /// Sturm chain of a square-free polynomial.
    fn sturm_chain(&self) -> Vec<RatPoly> {
        let mut chain = vec![self.monic(), self.derivative().monic()];
        loop {
            let n = chain.len();
            if chain[n - 1].is_zero() {
                chain.pop();
                break;
            }
            if chain[n - 1].degree() == 0 {
                break;
            }
            let (_, r) = chain[n - 2].div_rem(&chain[n - 1]);
            if r.is_zero() {
                break;
            }
            chain.push(Self::new(r.coeffs.iter().map(|c| -c.clone()).collect()).monic());
        }
        chain
    }

    fn sign_variations(chain: &[RatPoly], x: &BigRational) -> usize {
        let mut count = 0;
        let mut last: Option<bool> = None;
        for p in chain {
            let v = p.eval(x);
            if v.is_zero() {
                continue;
            }
            let sign = v.is_positive();
            if let Some(prev) = last {
                if prev != sign {
                    count += 1;
                }
            }
            last = Some(sign);
        }
        count
    }

    /// Number of distinct real roots in the half-open interval `(a, b]`.
    /// Requires the polynomial to be square-free.
    pub fn count_roots(&self, chain: &[RatPoly], a: &BigRational, b: &BigRational) -> usize {
        Self::sign_variations(chain, a) - Self::sign_variations(chain, b)
    }

    /// A bound `M` with all real roots in `(-M, M]` (Cauchy bound).
    pub fn root_bound(&self) -> BigRational {
        let lead = self.leading();
        let mut max = BigRational::zero();
        for c in &self.coeffs[..self.coeffs.len() - 1] {
            let v = (c / lead).abs();
            if v > max {
                max = v;
            }
        }
        max + rint(1)
    }

    /// Isolates and refines every real root of a square-free polynomial to
    /// intervals of width at most `eps`, returned in ascending order.
    pub fn isolate_real_roots(&self, eps: &BigRational) -> Vec<RatInterval> {
        assert!(eps.is_positive());
        if self.degree() == 0 {
            return vec![];
        }
        let chain = self.sturm_chain();
        let bound = self.root_bound();
        let mut out = Vec::new();
        let mut stack = vec![(-bound.clone(), bound.clone())];
        while let Some((a, b)) = stack.pop() {
            let n = self.count_roots(&chain, &a, &b);
            if n == 0 {
                continue;
            }
            if n == 1 {
                out.push(self.refine_root(&chain, a, b, eps));
                continue;
            }
            let mid = (&a + &b) / rint(2);
            stack.push((a, mid.clone()));
            stack.push((mid, b));
        }
        out.sort_by(|x, y| x.lo.cmp(&y.lo));
        out
    }

    /// Shrinks an isolating interval `(a, b]` (containing exactly one root)
    /// to width `<= eps`.
    fn refine_root(
        &self,
        chain: &[RatPoly],
        mut a: BigRational,
        mut b: BigRational,
        eps: &BigRational,
    ) -> RatInterval {
        while &b - &a > *eps {
            let mid = (&a + &b) / rint(2);
            if self.eval(&mid).is_zero() {
                return RatInterval::point(mid);
            }
            if self.count_roots(chain, &a, &mid) == 1 {
                b = mid;
            } else {
                a = mid;
            }
        }
        RatInterval::new(a, b)
    }
}

/// Certified eigenvalue enclosures of a Hermitian matrix: `dim` intervals
/// (repeated with multiplicity, ascending) of width at most `eps`, whose
/// union contains the spectrum.
///
/// Diagonal matrices short-circuit to exact point enclosures; the general
/// path isolates the roots of the characteristic polynomial with Sturm
/// sequences on its square-free factors.
pub fn eig_enclose(matrix: &RationalHermitian, eps: &BigRational) -> Vec<RatInterval> {
    assert!(eps.is_positive(), "eig_enclose needs a positive width");
    if matrix.dim() == 0 {
        return vec![];
    }
    if matrix.is_diagonal() {
        let mut diag = matrix.diag();
        diag.sort();
        return diag.into_iter().map(RatInterval::point).collect();
    }
    let p = RatPoly::new(matrix.char_poly());
    let mut out: Vec<RatInterval> = Vec::with_capacity(matrix.dim());
    for (factor, mult) in p.squarefree_decomposition() {
        for root in factor.isolate_real_roots(eps) {
            for _ in 0..mult {
                out.push(root.clone());
            }
        }
    }
    out.sort_by(|x, y| x.lo.cmp(&y.lo));
    assert_eq!(out.len(), matrix.dim(), "lost eigenvalues in isolation");
    out
}

/// Convenience: `2^-bits` as the default enclosure width.
pub fn eps_bits(bits: u32) -> BigRational {
    pow2(-(bits as i64))
}
