//! Complex numbers with exact rational real and imaginary parts.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::rational::{ratio_to_string, rint};

/// A complex number `re + i*im` with rational components.
///
/// All arithmetic is exact; there is no rounding anywhere.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalComplex {
    pub re: BigRational,
    pub im: BigRational,
}

impl RationalComplex {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        RationalComplex { re, im }
    }

    pub fn from_real(re: BigRational) -> Self {
        RationalComplex {
            re,
            im: BigRational::zero(),
        }
    }

    pub fn from_ints(re: i64, im: i64) -> Self {
        RationalComplex {
            re: rint(re),
            im: rint(im),
        }
    }

    pub fn zero() -> Self {
        Self::from_real(BigRational::zero())
    }

    pub fn one() -> Self {
        Self::from_real(rint(1))
    }

    pub fn conj(&self) -> Self {
        RationalComplex {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    /// `|z|^2 = re^2 + im^2`, exact.
    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        RationalComplex {
            re: &self.re * c,
            im: &self.im * c,
        }
    }

    /// Exact division; panics on a zero divisor.
    pub fn div(&self, rhs: &Self) -> Self {
        let d = rhs.norm_sqr();
        assert!(!d.is_zero(), "division by zero RationalComplex");
        let num = self * &rhs.conj();
        RationalComplex {
            re: num.re / d.clone(),
            im: num.im / d,
        }
    }

    /// Float image for test oracles and plotting only.
    pub fn to_f64_pair(&self) -> (f64, f64) {
        (
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

impl fmt::Debug for RationalComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for RationalComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", ratio_to_string(&self.re))
        } else if self.im.is_negative() {
            write!(
                f,
                "{}-{}i",
                ratio_to_string(&self.re),
                ratio_to_string(&-self.im.clone())
            )
        } else {
            write!(
                f,
                "{}+{}i",
                ratio_to_string(&self.re),
                ratio_to_string(&self.im)
            )
        }
    }
}

impl Add for &RationalComplex {
    type Output = RationalComplex;
    fn add(self, rhs: &RationalComplex) -> RationalComplex {
        RationalComplex {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        }
    }
}

impl Sub for &RationalComplex {
    type Output = RationalComplex;
    fn sub(self, rhs: &RationalComplex) -> RationalComplex {
        RationalComplex {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
        }
    }
}

impl Mul for &RationalComplex {
    type Output = RationalComplex;
    fn mul(self, rhs: &RationalComplex) -> RationalComplex {
        RationalComplex {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }
}

impl Neg for &RationalComplex {
    type Output = RationalComplex;
    fn neg(self) -> RationalComplex {
        RationalComplex {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }
}

macro_rules! forward_owned {
    ($trait:ident, $method:ident) => {
        impl $trait for RationalComplex {
            type Output = RationalComplex;
            fn $method(self, rhs: RationalComplex) -> RationalComplex {
                (&self).$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for RationalComplex {
    type Output = RationalComplex;
    fn neg(self) -> RationalComplex {
        -&self
    }
}

impl AddAssign<&RationalComplex> for RationalComplex {
    fn add_assign(&mut self, rhs: &RationalComplex) {
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
}

impl SubAssign<&RationalComplex> for RationalComplex {
    fn sub_assign(&mut self, rhs: &RationalComplex) {
        self.re -= &rhs.re;
        self.im -= &rhs.im;
    }
}

impl MulAssign<&RationalComplex> for RationalComplex {
    fn mul_assign(&mut self, rhs: &RationalComplex) {
        *self = (&*self) * rhs;
    }
}
