//! Exact rational helpers shared by the statistics, enumerator and CLI.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn integer(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `p/q`, an integer, or a plain decimal such as `0.125` exactly.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::input(format!("not a rational number: {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::input(format!("zero denominator in {s:?}")));
        }
        return Ok(Rational::new(p, q));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let den = num_traits::pow(BigInt::from(10u32), frac_part.len());
    let r = Rational::new(num, den);
    Ok(if neg { -r } else { r })
}

/// Exact rational value of a float's shortest decimal representation, so that
/// `0.1` becomes `1/10` rather than its binary approximation.
pub fn from_decimal_f64(x: f64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(Error::input(format!("non-finite value {x}")));
    }
    let text = format!("{x}");
    parse_rational(&text)
}

/// `p/q` form; integers are written as `p/1` so the format is uniform.
pub fn to_fraction_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn to_f64(r: &Rational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    let sign = if r.is_negative() { -1.0 } else { 1.0 };
    sign * 10f64.powf(log10_abs(r))
}

/// log10 of a positive big integer, accurate to double precision.
pub fn log10_bigint(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().unwrap_or(f64::NAN).log10();
    }
    let shift = bits - 64;
    let top = (n >> shift).to_f64().unwrap_or(f64::NAN);
    top.log10() + shift as f64 * std::f64::consts::LOG10_2
}

/// log10 |r| for a nonzero rational of any size.
pub fn log10_abs(r: &Rational) -> f64 {
    log10_bigint(&r.numer().abs()) - log10_bigint(&r.denom().abs())
}

/// A rational serialized as `{"rational": "p/q", "decimal": f64}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Exact(pub Rational);

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("Exact", 2)?;
        st.serialize_field("rational", &to_fraction_string(&self.0))?;
        st.serialize_field("decimal", &to_f64(&self.0))?;
        st.end()
    }
}

impl From<Rational> for Exact {
    fn from(r: Rational) -> Self {
        Exact(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("10/16").unwrap(), ratio(5, 8));
        assert_eq!(parse_rational("0.1").unwrap(), ratio(1, 10));
        assert_eq!(parse_rational("-2.50").unwrap(), ratio(-5, 2));
        assert_eq!(parse_rational(".5").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("3").unwrap(), integer(3));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1e-3").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn float_shortest_decimal_is_exact() {
        assert_eq!(from_decimal_f64(0.1).unwrap(), ratio(1, 10));
        assert_eq!(from_decimal_f64(2.0).unwrap(), integer(2));
        assert!(from_decimal_f64(f64::NAN).is_err());
    }

    #[test]
    fn fraction_string_is_uniform() {
        assert_eq!(to_fraction_string(&ratio(53, 17)), "53/17");
        assert_eq!(to_fraction_string(&integer(3)), "3/1");
    }

    #[test]
    fn huge_values_have_logs() {
        let big = num_traits::pow(BigInt::from(4u32), 100);
        let r = Rational::new(BigInt::one(), big);
        assert!((log10_abs(&r) + 100.0 * 4f64.log10()).abs() < 1e-9);
        assert!((to_f64(&r) - 4f64.powi(-100)).abs() / 4f64.powi(-100) < 1e-12);
    }
}
