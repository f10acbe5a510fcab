//! Exact rational arithmetic.
//!
//! All model data (rewards, transition probabilities, goals) is kept as
//! arbitrary-precision rationals so that normalization checks, goal
//! comparisons and the reward-meets-goal indicator are exact. Only value
//! tables (long sums of products) live in `f64`.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

type Inner = num_rational::BigRational;

/// An exact rational number, stored in lowest terms with a positive
/// denominator. Equality and ordering are exact.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(Inner);

impl Rational {
    pub fn new(numer: i64, denom: i64) -> Result<Self, Error> {
        if denom == 0 {
            return Err(Error::InvalidRational(
                format!("{numer}/{denom}"),
                "zero denominator".into(),
            ));
        }
        Ok(Self(Inner::new(BigInt::from(numer), BigInt::from(denom))))
    }

    pub fn from_int(n: i64) -> Self {
        Self(Inner::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Self(Inner::zero())
    }

    pub fn one() -> Self {
        Self(Inner::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    /// Nearest-`f64` conversion. Lossy for denominators that are not powers
    /// of two; used only when handing values to the floating-point layer.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Exact conversion from a finite `f64` (every finite float is a binary
    /// rational).
    pub fn from_f64_exact(x: f64) -> Option<Self> {
        Inner::from_float(x).map(Self)
    }

    /// `self^exp` for `exp >= 0`.
    pub fn pow(&self, exp: u32) -> Self {
        let mut acc = Inner::one();
        for _ in 0..exp {
            acc *= &self.0;
        }
        Self(acc)
    }

    /// Largest integer `<= self`.
    pub fn floor_bigint(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn abs(&self) -> Self {
        Self(self.0.abs())
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    /// Clamp below at zero: `max(self, 0)`.
    pub fn clamp_nonneg(&self) -> Self {
        if self.is_negative() {
            Self::zero()
        } else {
            self.clone()
        }
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Accepts `"3"`, `"-3"`, `"11/20"` and exact decimal forms such as
    /// `"0.55"` or `"1e-3"`. All forms parse to the exact rational they
    /// denote.
    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        let bad = |msg: &str| Error::InvalidRational(s.to_string(), msg.to_string());
        if s.is_empty() {
            return Err(bad("empty"));
        }
        if let Some((n, d)) = s.split_once('/') {
            let numer: BigInt = n.trim().parse().map_err(|_| bad("bad numerator"))?;
            let denom: BigInt = d.trim().parse().map_err(|_| bad("bad denominator"))?;
            if denom.is_zero() {
                return Err(bad("zero denominator"));
            }
            return Ok(Self(Inner::new(numer, denom)));
        }
        // Decimal with optional exponent: [-]ddd[.ddd][e[-]ddd]
        let (mantissa, exp10) = match s.split_once(['e', 'E']) {
            Some((m, e)) => {
                let exp: i32 = e.parse().map_err(|_| bad("bad exponent"))?;
                (m, exp)
            }
            None => (s, 0),
        };
        let (int_part, frac_part) = match mantissa.split_once('.') {
            Some((i, f)) => (i, f),
            None => (mantissa, ""),
        };
        let digits = format!("{int_part}{frac_part}");
        if digits.is_empty() || digits == "-" || digits == "+" {
            return Err(bad("no digits"));
        }
        let numer: BigInt = digits.parse().map_err(|_| bad("bad digits"))?;
        let shift = exp10 - frac_part.len() as i32;
        let ten = BigInt::from(10u8);
        let value = if shift >= 0 {
            Inner::from_integer(numer * ten.pow(shift as u32))
        } else {
            Inner::new(numer, ten.pow((-shift) as u32))
        };
        Ok(Self(value))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<u64> for Rational {
    fn from(n: u64) -> Self {
        Self(Inner::from_integer(BigInt::from(n)))
    }
}

impl From<BigUint> for Rational {
    fn from(n: BigUint) -> Self {
        Self(Inner::from_integer(BigInt::from_biguint(Sign::Plus, n)))
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(&self.0 $op &rhs.0)
            }
        }
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0 $op rhs.0)
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(self.0 $op &rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);
binop!(Div, div, /);

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0.clone())
    }
}

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        self.0 -= &rhs.0;
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Self {
        let mut acc = Rational::zero();
        for x in iter {
            acc += &x;
        }
        acc
    }
}

/// Parse a rational, mapping failure onto a labelled error.
pub fn parse_rational(s: &str) -> Result<Rational, Error> {
    s.parse()
}
