//! Exact signed fractions backed by arbitrary-precision integers.
//!
//! Every weight, coordinate and verdict-relevant quantity in the crate is a
//! [`Rational`]. Values are always normalized (lowest terms, positive
//! denominator), so structural equality, ordering and hashing agree with
//! numeric equality.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Failure to read a rational from text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid integer `{0}` in rational literal")]
    InvalidInteger(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// An exact fraction `numerator / denominator` in lowest terms.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    /// `numer / denom`; panics on a zero denominator.
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Rational(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_bigints(numer: BigInt, denom: BigInt) -> Option<Self> {
        if denom.is_zero() {
            None
        } else {
            Some(Rational(BigRational::new(numer, denom)))
        }
    }

    pub fn integer(value: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(value)))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn half() -> Self {
        Rational::new(1, 2)
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

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(Rational(self.0.recip()))
        }
    }

    /// Nearest `f64`; only used for floating-point demonstrations and
    /// decimal display.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Decimal rendering. Terminating fractions are printed exactly;
    /// others are rounded half away from zero to `digits` fractional digits.
    pub fn to_decimal_string(&self, digits: usize) -> String {
        let denom = self.denom().clone();
        let mut reduced = denom.clone();
        let two = BigInt::from(2);
        let five = BigInt::from(5);
        let mut exact_digits = 0usize;
        let mut twos = 0usize;
        let mut fives = 0usize;
        while (&reduced % &two).is_zero() {
            reduced /= &two;
            twos += 1;
        }
        while (&reduced % &five).is_zero() {
            reduced /= &five;
            fives += 1;
        }
        let terminating = reduced.is_one();
        if terminating {
            exact_digits = twos.max(fives);
        }
        let scale_digits = if terminating { exact_digits } else { digits };
        let scale = num_traits::pow(BigInt::from(10), scale_digits);
        let scaled = self.numer().abs() * &scale;
        let mut q = &scaled / &denom;
        let r = &scaled % &denom;
        if !terminating && r * 2 >= denom {
            q += 1;
        }
        let negative = self.is_negative() && !q.is_zero();
        let text = q.to_string();
        let body = if scale_digits == 0 {
            text
        } else {
            let padded = format!("{:0>width$}", text, width = scale_digits + 1);
            let (int_part, frac_part) = padded.split_at(padded.len() - scale_digits);
            let frac_part =
                if terminating { frac_part.to_string() } else { frac_part.trim_end_matches('0').to_string() };
            if frac_part.is_empty() {
                int_part.to_string()
            } else {
                format!("{int_part}.{frac_part}")
            }
        };
        if negative {
            format!("-{body}")
        } else {
            body
        }
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
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
    type Err = ParseRationalError;

    /// Accepts `p/q` or a bare integer `p`, with an optional sign on `p`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(ParseRationalError::Empty);
        }
        let parse_int = |part: &str| -> Result<BigInt, ParseRationalError> {
            let part = part.trim();
            let digits = part.strip_prefix(['+', '-']).unwrap_or(part);
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(ParseRationalError::InvalidInteger(part.to_string()));
            }
            part.parse::<BigInt>().map_err(|_| ParseRationalError::InvalidInteger(part.to_string()))
        };
        match s.split_once('/') {
            None => Ok(Rational(BigRational::from_integer(parse_int(s)?))),
            Some((n, d)) => {
                let numer = parse_int(n)?;
                let denom = parse_int(d)?;
                Rational::from_bigints(numer, denom).ok_or_else(|| ParseRationalError::ZeroDenominator(s.to_string()))
            }
        }
    }
}

impl From<i64> for Rational {
    fn from(value: i64) -> Self {
        Rational::integer(value)
    }
}

impl From<BigRational> for Rational {
    fn from(value: BigRational) -> Self {
        Rational(value)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(self.0.$method(&rhs.0))
            }
        }
        impl $trait<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((&self.0).$method(rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Div<&Rational> for &Rational {
    type Output = Rational;
    /// Panics on division by zero, like the integer types.
    fn div(self, rhs: &Rational) -> Rational {
        assert!(!rhs.is_zero(), "division by zero rational");
        Rational(&self.0 / &rhs.0)
    }
}

impl Div<Rational> for Rational {
    type Output = Rational;
    fn div(self, rhs: Rational) -> Rational {
        &self / &rhs
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl AddAssign for Rational {
    fn add_assign(&mut self, rhs: Rational) {
        self.0 += rhs.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        self.0 -= &rhs.0;
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |mut acc, x| {
            acc += x;
            acc
        })
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct RationalVisitor;

        impl Visitor<'_> for RationalVisitor {
            type Value = Rational;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a rational as a \"p/q\" string or an integer")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Rational, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rational, E> {
                Ok(Rational::integer(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rational, E> {
                Ok(Rational(BigRational::from_integer(BigInt::from(v))))
            }
        }

        deserializer.deserialize_any(RationalVisitor)
    }
}

/// Shorthand for building rationals in tests and fixtures.
pub fn q(numer: i64, denom: i64) -> Rational {
    Rational::new(numer, denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_sign_and_terms() {
        let r = Rational::new(2, -4);
        assert_eq!(r, Rational::new(-1, 2));
        assert_eq!(r.to_string(), "-1/2");
        assert_eq!(Rational::new(6, 3).to_string(), "2");
    }

    #[test]
    fn parses_fractions_and_integers() {
        assert_eq!("1/3".parse::<Rational>().unwrap(), q(1, 3));
        assert_eq!("-7".parse::<Rational>().unwrap(), q(-7, 1));
        assert_eq!(" 4/8 ".parse::<Rational>().unwrap(), q(1, 2));
        assert_eq!("1/0".parse::<Rational>(), Err(ParseRationalError::ZeroDenominator("1/0".into())));
        assert!("0.5".parse::<Rational>().is_err());
        assert!("".parse::<Rational>().is_err());
        assert!("1/".parse::<Rational>().is_err());
        assert!("a/2".parse::<Rational>().is_err());
    }

    #[test]
    fn exact_arithmetic_does_not_overflow() {
        let third = q(1, 3);
        let total: Rational = std::iter::repeat_n(third, 3).sum();
        assert_eq!(total, Rational::one());
        // 2^-80 summed 2^80 times would overflow i64 denominators.
        let tiny = Rational::from_bigints(BigInt::from(1), num_traits::pow(BigInt::from(2), 80)).unwrap();
        let big = &tiny * &Rational::from_bigints(num_traits::pow(BigInt::from(2), 80), BigInt::from(1)).unwrap();
        assert_eq!(big, Rational::one());
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(q(1, 2).to_decimal_string(6), "0.5");
        assert_eq!(q(-3, 4).to_decimal_string(6), "-0.75");
        assert_eq!(q(1, 3).to_decimal_string(6), "0.333333");
        assert_eq!(q(2, 3).to_decimal_string(6), "0.666667");
        assert_eq!(q(5, 1).to_decimal_string(6), "5");
        assert_eq!(q(-1, 3000000000).to_decimal_string(6), "0");
        assert_eq!(q(1, 8).to_decimal_string(2), "0.125");
    }

    #[test]
    fn serde_uses_strings() {
        let json = serde_json::to_string(&q(3, 4)).unwrap();
        assert_eq!(json, "\"3/4\"");
        let back: Rational = serde_json::from_str("\"3/4\"").unwrap();
        assert_eq!(back, q(3, 4));
        let int: Rational = serde_json::from_str("5").unwrap();
        assert_eq!(int, q(5, 1));
    }
}
