//! Exact rationals, their `"p/q"` text form, and decimal renderings.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// `2^-k`.
pub fn inv_pow2(k: usize) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << k)
}

pub fn pow(base: &Rational, exp: usize) -> Rational {
    num_traits::pow(base.clone(), exp)
}

/// Parses `"p/q"` or an integer `"p"`. Whitespace around the parts is ignored.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::spec(format!("{s:?} is not a rational of the form p/q"));
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s.trim(), "1"),
    };
    let p = BigInt::from_str(p).map_err(|_| bad())?;
    let q = BigInt::from_str(q).map_err(|_| bad())?;
    if q.is_zero() {
        return Err(Error::spec(format!("{s:?} has a zero denominator")));
    }
    Ok(Rational::new(p, q))
}

/// Always `"p/q"`, including integers (`"0/1"`, `"1/1"`).
pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Round-half-up decimal rendering with `digits` fractional digits.
pub fn decimal(q: &Rational, digits: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10u32), digits);
    let scaled = q.abs() * Rational::from_integer(scale.clone());
    let rounded = (scaled + ratio(1, 2)).floor().to_integer();
    let (whole, frac) = rounded.div_rem(&scale);
    let sign = if q.is_negative() && !rounded.is_zero() { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{whole}")
    } else {
        format!("{sign}{whole}.{:0>width$}", frac.to_string(), width = digits)
    }
}

fn top_bits(n: &BigUint) -> (f64, i64) {
    let bits = n.bits() as i64;
    let shift = (bits - 62).max(0);
    let head = (n >> shift as usize).to_f64().unwrap_or(f64::NAN);
    (head, shift)
}

/// Base-2 logarithm of a positive rational, accurate to about 1e-12
/// absolute for any magnitude of numerator and denominator.
pub fn log2(q: &Rational) -> f64 {
    assert!(q.is_positive(), "log2 of nonpositive rational");
    let (n, ns) = top_bits(q.numer().magnitude());
    let (d, ds) = top_bits(q.denom().magnitude());
    n.log2() - d.log2() + (ns - ds) as f64
}

/// Rational `round(v * 10^6) / 10^6`.
pub fn micro_round(v: f64) -> Rational {
    Rational::new(BigInt::from((v * 1e6).round() as i64), BigInt::from(1_000_000))
}

pub fn ceil_to_integer(q: &Rational) -> BigInt {
    q.ceil().to_integer()
}

pub(crate) fn biguint_to_int(n: BigUint) -> BigInt {
    BigInt::from_biguint(Sign::Plus, n)
}

/// Serialization wrapper: a rational written as a `"p/q"` string.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exact(pub Rational);

impl Exact {
    pub fn zero() -> Self {
        Exact(Rational::zero())
    }
}

impl From<Rational> for Exact {
    fn from(q: Rational) -> Self {
        Exact(q)
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

impl FromStr for Exact {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_rational(s).map(Exact)
    }
}

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for Exact {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map(Exact).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rational("2/4").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational(" 3 ").unwrap(), int(3));
        assert_eq!(format_rational(&int(0)), "0/1");
        assert_eq!(format_rational(&ratio(-6, 4)), "-3/2");
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("0.5").is_err());
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(decimal(&ratio(1, 3), 12), "0.333333333333");
        assert_eq!(decimal(&ratio(2, 3), 4), "0.6667");
        assert_eq!(decimal(&ratio(-1, 8), 2), "-0.13");
        assert_eq!(decimal(&int(1), 3), "1.000");
        assert_eq!(decimal(&ratio(-1, 1000), 2), "0.00");
    }

    #[test]
    fn log2_of_huge_rationals() {
        assert_eq!(log2(&int(1)), 0.0);
        let q = inv_pow2(5000) * int(3);
        assert!((log2(&q) - (3f64.log2() - 5000.0)).abs() < 1e-9);
    }

    #[test]
    fn exact_serde() {
        let e: Exact = serde_json::from_str("\"3/9\"").unwrap();
        assert_eq!(serde_json::to_string(&e).unwrap(), "\"1/3\"");
    }
}
