//! Interval arithmetic with rational endpoints, and certified enclosures of
//! `-log2` values.
//!
//! Intervals are the only place approximation enters the crate, and the
//! endpoints stay rational with outward rounding, so every enclosure is a
//! proof of membership.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::linalg::complex::RationalComplex;
use crate::rational::{dyadic_ceil, dyadic_floor, floor_log2, is_pow2, pow2, rint};

/// A closed interval `[lo, hi]` with rational endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatInterval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl RatInterval {
    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        RatInterval { lo, hi }
    }

    pub fn point(q: BigRational) -> Self {
        RatInterval {
            lo: q.clone(),
            hi: q,
        }
    }

    pub fn zero() -> Self {
        Self::point(BigRational::zero())
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, q: &BigRational) -> bool {
        self.lo <= *q && *q <= self.hi
    }

    pub fn contains_interval(&self, other: &RatInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lo + &self.hi) / rint(2)
    }

    pub fn hull(&self, other: &RatInterval) -> Self {
        RatInterval {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
        }
    }

    pub fn add(&self, other: &RatInterval) -> Self {
        RatInterval {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn sub(&self, other: &RatInterval) -> Self {
        RatInterval {
            lo: &self.lo - &other.hi,
            hi: &self.hi - &other.lo,
        }
    }

    pub fn neg(&self) -> Self {
        RatInterval {
            lo: -self.hi.clone(),
            hi: -self.lo.clone(),
        }
    }

    pub fn mul(&self, other: &RatInterval) -> Self {
        let candidates = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let mut lo = candidates[0].clone();
        let mut hi = candidates[0].clone();
        for c in &candidates[1..] {
            if *c < lo {
                lo = c.clone();
            }
            if *c > hi {
                hi = c.clone();
            }
        }
        RatInterval { lo, hi }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_negative() {
            RatInterval {
                lo: &self.hi * c,
                hi: &self.lo * c,
            }
        } else {
            RatInterval {
                lo: &self.lo * c,
                hi: &self.hi * c,
            }
        }
    }

    /// Widens by `pad` on both sides.
    pub fn inflate(&self, pad: &BigRational) -> Self {
        assert!(!pad.is_negative());
        RatInterval {
            lo: &self.lo - pad,
            hi: &self.hi + pad,
        }
    }

    /// The largest distance between a point of `self` and a point of
    /// `other`; zero when both are equal points.
    pub fn max_distance(&self, other: &RatInterval) -> BigRational {
        let a = (&self.hi - &other.lo).abs();
        let b = (&other.hi - &self.lo).abs();
        a.max(b)
    }
}

/// Enclosure of `-log2 q` for a positive rational `q`, with width at most
/// `2^-precision_bits`.
///
/// Powers of two return exact points. Everything else runs the classic
/// squaring loop on a dyadically rounded bracket of the mantissa, retrying
/// at higher working precision if the bracket ever straddles 2.
pub fn neg_log2_interval(q: &BigRational, precision_bits: u32) -> RatInterval {
    assert!(q.is_positive(), "-log2 needs a positive argument");
    let e = floor_log2(q);
    let y = q / pow2(e); // y in [1, 2)
    if y.is_one() {
        return RatInterval::point(rint(-e));
    }
    debug_assert!(!is_pow2(q));
    let k = precision_bits;
    let mut working = precision_bits + 16;
    loop {
        if let Some(frac) = log2_fraction(&y, k, working) {
            // log2 q in e + frac  =>  -log2 q in -e - frac
            return frac.add(&RatInterval::point(rint(e))).neg();
        }
        working *= 2;
    }
}

/// Enclosure of `log2 y` for rational `y` in `(1, 2)`, width `<= 2^-k`,
/// or `None` if the working precision was insufficient.
fn log2_fraction(y: &BigRational, k: u32, working: u32) -> Option<RatInterval> {
    let two = rint(2);
    let mut lo = dyadic_floor(y, working);
    let mut hi = dyadic_ceil(y, working);
    if lo < BigRational::one() {
        lo = BigRational::one();
    }
    let mut acc = BigRational::zero();
    for i in 1..=k {
        lo = dyadic_floor(&(&lo * &lo), working);
        hi = dyadic_ceil(&(&hi * &hi), working);
        if lo >= two {
            acc += pow2(-(i as i64));
            lo /= &two;
            hi /= &two;
        } else if hi < two {
            // fraction bit is 0
        } else {
            // The bracket straddles 2: not enough working precision to
            // decide this bit.
            return None;
        }
    }
    Some(RatInterval::new(acc.clone(), acc + pow2(-(k as i64))))
}

/// Enclosure of `-log2 t` over all `t` in a positive interval.
pub fn neg_log2_of_interval(t: &RatInterval, precision_bits: u32) -> RatInterval {
    assert!(t.lo.is_positive(), "interval must be strictly positive");
    let at_hi = neg_log2_interval(&t.hi, precision_bits);
    let at_lo = neg_log2_interval(&t.lo, precision_bits);
    RatInterval::new(at_hi.lo, at_lo.hi)
}

/// A complex interval: independent enclosures of the real and imaginary
/// parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexInterval {
    pub re: RatInterval,
    pub im: RatInterval,
}

impl ComplexInterval {
    pub fn point(z: &RationalComplex) -> Self {
        ComplexInterval {
            re: RatInterval::point(z.re.clone()),
            im: RatInterval::point(z.im.clone()),
        }
    }

    pub fn zero() -> Self {
        ComplexInterval {
            re: RatInterval::zero(),
            im: RatInterval::zero(),
        }
    }

    pub fn conj(&self) -> Self {
        ComplexInterval {
            re: self.re.clone(),
            im: self.im.neg(),
        }
    }

    pub fn add(&self, other: &ComplexInterval) -> Self {
        ComplexInterval {
            re: self.re.add(&other.re),
            im: self.im.add(&other.im),
        }
    }

    pub fn sub(&self, other: &ComplexInterval) -> Self {
        ComplexInterval {
            re: self.re.sub(&other.re),
            im: self.im.sub(&other.im),
        }
    }

    pub fn mul(&self, other: &ComplexInterval) -> Self {
        ComplexInterval {
            re: self.re.mul(&other.re).sub(&self.im.mul(&other.im)),
            im: self.re.mul(&other.im).add(&self.im.mul(&other.re)),
        }
    }

    pub fn mul_exact(&self, z: &RationalComplex) -> Self {
        self.mul(&ComplexInterval::point(z))
    }

    pub fn scale_real(&self, t: &RatInterval) -> Self {
        ComplexInterval {
            re: self.re.mul(t),
            im: self.im.mul(t),
        }
    }

    pub fn inflate(&self, pad: &BigRational) -> Self {
        ComplexInterval {
            re: self.re.inflate(pad),
            im: self.im.inflate(pad),
        }
    }

    pub fn contains(&self, z: &RationalComplex) -> bool {
        self.re.contains(&z.re) && self.im.contains(&z.im)
    }

    pub fn max_width(&self) -> BigRational {
        self.re.width().max(self.im.width())
    }
}

/// Interval enclosure of a Hermitian block-plus-scalar-tail operator: an
/// `m x m` grid of complex intervals that is Hermitian-symmetric, plus a
/// real interval for the scalar tail.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalHermitian {
    dim: usize,
    entries: Vec<ComplexInterval>,
    tail: RatInterval,
}

impl IntervalHermitian {
    pub fn new(dim: usize, entries: Vec<ComplexInterval>, tail: RatInterval) -> Self {
        assert_eq!(entries.len(), dim * dim);
        IntervalHermitian { dim, entries, tail }
    }

    pub fn diagonal(diag: Vec<RatInterval>, tail: RatInterval) -> Self {
        let dim = diag.len();
        let mut entries = vec![ComplexInterval::zero(); dim * dim];
        for (i, d) in diag.into_iter().enumerate() {
            entries[i * dim + i] = ComplexInterval {
                re: d,
                im: RatInterval::zero(),
            };
        }
        IntervalHermitian { dim, entries, tail }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tail(&self) -> &RatInterval {
        &self.tail
    }

    /// Entry enclosure at any basis pair, extending past the explicit block
    /// with the tail on the diagonal and exact zero off it.
    pub fn entry(&self, i: usize, j: usize) -> ComplexInterval {
        if i < self.dim && j < self.dim {
            self.entries[i * self.dim + j].clone()
        } else if i == j {
            ComplexInterval {
                re: self.tail.clone(),
                im: RatInterval::zero(),
            }
        } else {
            ComplexInterval::zero()
        }
    }

    pub fn diag_entries(&self) -> Vec<RatInterval> {
        (0..self.dim)
            .map(|i| self.entries[i * self.dim + i].re.clone())
            .collect()
    }

    pub fn max_entry_width(&self) -> BigRational {
        let mut w = self.tail.width();
        for e in &self.entries {
            w = w.max(e.max_width());
        }
        w
    }

    /// Enclosure of the quadratic form `<Hx, x>` over every Hermitian
    /// selection of the enclosure (real part; the imaginary part of the
    /// true value is zero).
    pub fn quad_form_interval(&self, x: &crate::linalg::state::StateVector) -> RatInterval {
        let m = self.dim;
        let k = x.support().min(m);
        let mut acc = RatInterval::zero();
        for i in 0..k {
            for j in 0..k {
                let weight = &x.coeff(j) * &x.coeff(i).conj();
                let term = self.entries[i * m + j].mul_exact(&weight);
                acc = acc.add(&term.re);
            }
        }
        let outside = x.mass_beyond(m);
        acc.add(&self.tail.scale(&outside))
    }

    /// Entrywise sum; blocks are padded with their tails first.
    pub fn add(&self, other: &IntervalHermitian) -> Self {
        self.zip(other, ComplexInterval::add, RatInterval::add)
    }

    /// Entrywise difference; blocks are padded with their tails first.
    pub fn sub(&self, other: &IntervalHermitian) -> Self {
        self.zip(other, ComplexInterval::sub, RatInterval::sub)
    }

    fn zip(
        &self,
        other: &IntervalHermitian,
        f: impl Fn(&ComplexInterval, &ComplexInterval) -> ComplexInterval,
        g: impl Fn(&RatInterval, &RatInterval) -> RatInterval,
    ) -> Self {
        let dim = self.dim.max(other.dim);
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(&self.entry(i, j), &other.entry(i, j)));
            }
        }
        IntervalHermitian {
            dim,
            entries,
            tail: g(&self.tail, &other.tail),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use num_traits::ToPrimitive;

    #[test]
    fn interval_product_signs() {
        let a = RatInterval::new(rat(-1, 1), rat(2, 1));
        let b = RatInterval::new(rat(-3, 1), rat(1, 2));
        let p = a.mul(&b);
        assert_eq!(p.lo, rat(-6, 1));
        assert_eq!(p.hi, rat(3, 1));
    }

    #[test]
    fn neg_log2_exact_on_powers_of_two() {
        assert_eq!(
            neg_log2_interval(&rat(1, 2), 10),
            RatInterval::point(rat(1, 1))
        );
        assert_eq!(
            neg_log2_interval(&rat(1, 8), 10),
            RatInterval::point(rat(3, 1))
        );
        assert_eq!(neg_log2_interval(&rat(4, 1), 10), RatInterval::point(rat(-2, 1)));
    }

    #[test]
    fn neg_log2_encloses_float_value() {
        for (n, d) in [(1i64, 3i64), (3, 4), (7, 5), (355, 113), (1, 1000)] {
            let q = rat(n, d);
            let enc = neg_log2_interval(&q, 30);
            assert!(enc.width() <= pow2(-30));
            let truth = -(n as f64 / d as f64).log2();
            let lo = enc.lo.to_f64().unwrap();
            let hi = enc.hi.to_f64().unwrap();
            assert!(lo - 1e-9 <= truth && truth <= hi + 1e-9, "{n}/{d}");
        }
    }

    #[test]
    fn neg_log2_is_monotone_decreasing() {
        let a = neg_log2_interval(&rat(1, 3), 20);
        let b = neg_log2_interval(&rat(2, 3), 20);
        assert!(a.lo > b.hi);
    }

    #[test]
    fn interval_of_interval_covers_endpoints() {
        let t = RatInterval::new(rat(1, 4), rat(1, 2));
        let enc = neg_log2_of_interval(&t, 16);
        assert!(enc.contains(&rat(1, 1))); // -log2(1/2)
        assert!(enc.contains(&rat(2, 1))); // -log2(1/4)
    }
}
