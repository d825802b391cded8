//! Small helpers for exact rational arithmetic.
//!
//! Every certified computation in this crate runs on [`BigRational`];
//! binary floating point never enters a certified path.

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// `2^k` for any signed exponent.
pub fn pow2(k: i64) -> BigRational {
    let one = BigInt::one();
    if k >= 0 {
        BigRational::from_integer(one << (k as usize))
    } else {
        BigRational::new(one.clone(), one << ((-k) as usize))
    }
}

/// Shorthand for `n/d`.
pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Shorthand for an integer rational.
pub fn rint(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Canonical `"num/den"` rendering (always reduced, denominator positive).
pub fn ratio_to_string(q: &BigRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `"num/den"` (or a bare integer) into a rational.
pub fn ratio_from_str(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let num = BigInt::parse_bytes(num.trim().as_bytes(), 10)?;
    let den = BigInt::parse_bytes(den.trim().as_bytes(), 10)?;
    if den.is_zero() {
        return None;
    }
    Some(BigRational::new(num, den))
}

/// `floor(log2 q)` for a positive rational, computed exactly.
pub fn floor_log2(q: &BigRational) -> i64 {
    assert!(q.is_positive(), "floor_log2 needs a positive argument");
    let num_bits = q.numer().bits() as i64;
    let den_bits = q.denom().bits() as i64;
    // 2^(b-1) <= x < 2^b for a b-bit integer, so the true exponent is
    // num_bits - den_bits or one below it.
    let mut e = num_bits - den_bits;
    if pow2_cmp_le(e, q) {
        while pow2_cmp_le(e + 1, q) {
            e += 1;
        }
    } else {
        while !pow2_cmp_le(e, q) {
            e -= 1;
        }
    }
    e
}

fn pow2_cmp_le(e: i64, q: &BigRational) -> bool {
    // 2^e <= num/den  <=>  den << e <= num   (e >= 0)
    //                 <=>  den <= num << -e  (e < 0)
    if e >= 0 {
        (q.denom() << (e as usize)) <= *q.numer()
    } else {
        *q.denom() <= (q.numer() << ((-e) as usize))
    }
}

/// True when `q` is an exact power of two.
pub fn is_pow2(q: &BigRational) -> bool {
    if !q.is_positive() {
        return false;
    }
    let pow2_int = |x: &BigInt| {
        x.sign() == Sign::Plus && {
            let (_, bytes) = x.to_bytes_be();
            let mut ones = 0u32;
            for b in &bytes {
                ones += b.count_ones();
            }
            ones == 1
        }
    };
    (q.numer().is_one() && pow2_int(q.denom())) || (q.denom().is_one() && pow2_int(q.numer()))
}

/// Rounds `q` down to a dyadic with denominator `2^bits`.
pub fn dyadic_floor(q: &BigRational, bits: u32) -> BigRational {
    let scaled = q * pow2(bits as i64);
    BigRational::new(scaled.floor().to_integer(), BigInt::one()) * pow2(-(bits as i64))
}

/// Rounds `q` up to a dyadic with denominator `2^bits`.
pub fn dyadic_ceil(q: &BigRational, bits: u32) -> BigRational {
    let scaled = q * pow2(bits as i64);
    BigRational::new(scaled.ceil().to_integer(), BigInt::one()) * pow2(-(bits as i64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow2_basic() {
        assert_eq!(pow2(3), rint(8));
        assert_eq!(pow2(-2), rat(1, 4));
        assert_eq!(pow2(0), rint(1));
    }

    #[test]
    fn floor_log2_exact_and_between() {
        assert_eq!(floor_log2(&rint(1)), 0);
        assert_eq!(floor_log2(&rint(2)), 1);
        assert_eq!(floor_log2(&rat(1, 2)), -1);
        assert_eq!(floor_log2(&rat(3, 1)), 1);
        assert_eq!(floor_log2(&rat(1, 3)), -2);
        assert_eq!(floor_log2(&rat(7, 8)), -1);
        assert_eq!(floor_log2(&rat(9, 8)), 0);
    }

    #[test]
    fn string_round_trip() {
        let q = rat(-22, 7);
        assert_eq!(ratio_to_string(&q), "-22/7");
        assert_eq!(ratio_from_str("-22/7").unwrap(), q);
        assert_eq!(ratio_from_str("5").unwrap(), rint(5));
        assert!(ratio_from_str("1/0").is_none());
    }

    #[test]
    fn pow2_detection() {
        assert!(is_pow2(&rat(1, 4)));
        assert!(is_pow2(&rint(8)));
        assert!(!is_pow2(&rat(3, 4)));
        assert!(!is_pow2(&rint(0)));
        assert!(!is_pow2(&rat(-1, 2)));
    }

    #[test]
    fn dyadic_rounding_brackets() {
        let q = rat(1, 3);
        let lo = dyadic_floor(&q, 4);
        let hi = dyadic_ceil(&q, 4);
        assert!(lo <= q && q <= hi);
        assert_eq!(hi - lo, rat(1, 16));
    }
}
