//! Exact rational numbers.
//!
//! `Rat` wraps an arbitrary-precision rational kept in lowest terms with a
//! positive denominator. The textual form is `"p/q"`, or `"n"` when the
//! denominator is one; it is also the serde representation.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Longest accepted textual rational, in bytes.
pub const MAX_RAT_TEXT_LEN: usize = 4096;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rat(BigRational);

impl Rat {
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Rat(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_int(n: i64) -> Self {
        Rat(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Rat(BigRational::zero())
    }

    pub fn one() -> Self {
        Rat(BigRational::one())
    }

    /// `1 / 2^k`.
    pub fn inv_pow2(k: u32) -> Self {
        Rat(BigRational::new(BigInt::one(), BigInt::one() << k))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Self {
        Rat(self.0.abs())
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn midpoint(a: &Rat, b: &Rat) -> Rat {
        (a + b) / Rat::from_int(2)
    }

    pub fn min<'a>(a: &'a Rat, b: &'a Rat) -> &'a Rat {
        if a <= b {
            a
        } else {
            b
        }
    }

    pub fn max<'a>(a: &'a Rat, b: &'a Rat) -> &'a Rat {
        if a >= b {
            a
        } else {
            b
        }
    }

    /// Lossy decimal approximation, for display columns only.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_unit(&self) -> bool {
        !self.is_negative() && self <= &Rat::one()
    }
}

impl From<BigRational> for Rat {
    fn from(r: BigRational) -> Self {
        Rat(r)
    }
}

impl From<i64> for Rat {
    fn from(n: i64) -> Self {
        Rat::from_int(n)
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn is_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

impl FromStr for Rat {
    type Err = Error;

    /// Accepts `[-]digits` or `[-]digits/digits`. No whitespace, no `+`, no
    /// decimal point: floats are never parsed.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::ParseRat(truncate_for_message(s));
        if s.len() > MAX_RAT_TEXT_LEN {
            return Err(bad());
        }
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (num, den) = match body.split_once('/') {
            Some((n, d)) => (n, Some(d)),
            None => (body, None),
        };
        if !is_digits(num) || den.is_some_and(|d| !is_digits(d)) {
            return Err(bad());
        }
        let mut numer: BigInt = num.parse().map_err(|_| bad())?;
        if negative {
            numer = -numer;
        }
        let denom: BigInt = match den {
            Some(d) => d.parse().map_err(|_| bad())?,
            None => BigInt::one(),
        };
        if denom.is_zero() {
            return Err(bad());
        }
        Ok(Rat(BigRational::new(numer, denom)))
    }
}

fn truncate_for_message(s: &str) -> String {
    s.chars().take(64).collect()
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = <std::borrow::Cow<'de, str>>::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}

impl PartialEq<i64> for Rat {
    fn eq(&self, other: &i64) -> bool {
        self.0 == BigRational::from_integer(BigInt::from(*other))
    }
}

impl PartialOrd<i64> for Rat {
    fn partial_cmp(&self, other: &i64) -> Option<Ordering> {
        self.0
            .partial_cmp(&BigRational::from_integer(BigInt::from(*other)))
    }
}

macro_rules! forward_binop {
    ($Op:ident, $op:ident) => {
        impl<'a> $Op<&'a Rat> for &'a Rat {
            type Output = Rat;
            fn $op(self, rhs: &'a Rat) -> Rat {
                Rat((&self.0).$op(&rhs.0))
            }
        }
        impl $Op<Rat> for Rat {
            type Output = Rat;
            fn $op(self, rhs: Rat) -> Rat {
                Rat(self.0.$op(rhs.0))
            }
        }
        impl<'a> $Op<&'a Rat> for Rat {
            type Output = Rat;
            fn $op(self, rhs: &'a Rat) -> Rat {
                Rat(self.0.$op(&rhs.0))
            }
        }
        impl<'a> $Op<Rat> for &'a Rat {
            type Output = Rat;
            fn $op(self, rhs: Rat) -> Rat {
                Rat((&self.0).$op(rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
// Division by zero panics, as for BigRational.
forward_binop!(Div, div);

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-&self.0)
    }
}

impl std::iter::Sum for Rat {
    fn sum<I: Iterator<Item = Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |acc, x| acc + x)
    }
}

impl<'a> std::iter::Sum<&'a Rat> for Rat {
    fn sum<I: Iterator<Item = &'a Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |acc, x| acc + x)
    }
}

/// Shorthand for tests and literals: `rat("3/4")`. Panics on bad input.
pub fn rat(s: &str) -> Rat {
    s.parse()
        .unwrap_or_else(|e| panic!("bad rational literal {s:?}: {e}"))
}
