//! Numeric field abstraction shared by the coefficient engine and the exact
//! evaluator. Two backends: exact big rationals and `f64`.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};
use serde_json::Value;

pub type Rational = BigRational;

pub trait Scalar:
    Clone + Debug + Display + PartialEq + PartialOrd + Num + Signed + Send + Sync + 'static
{
    /// `true` for backends with exact field arithmetic.
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;

    fn from_biguint(v: &BigUint) -> Self;

    /// Converts through the shortest round-trip decimal form, so `0.01`
    /// becomes `1/100` in the rational backend rather than its binary value.
    fn from_f64(v: f64) -> Option<Self>;

    fn to_f64(&self) -> f64;

    fn to_json(&self) -> Value;

    fn from_json(v: &Value) -> Option<Self>;

    fn from_rational(r: &Rational) -> Self;

    /// Text form for CSV cells and reports.
    fn to_text(&self) -> String {
        self.to_string()
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    fn powi(&self, e: usize) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = acc * self.clone();
        }
        acc
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_biguint(v: &BigUint) -> Self {
        v.to_f64().unwrap_or(f64::INFINITY)
    }

    fn from_f64(v: f64) -> Option<Self> {
        v.is_finite().then_some(v)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_rational(r: &Rational) -> Self {
        Scalar::to_f64(r)
    }

    fn to_text(&self) -> String {
        fmt_f64(*self)
    }

    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    }

    fn from_json(v: &Value) -> Option<Self> {
        match v {
            Value::Number(n) => n.as_f64(),
            Value::String(s) => parse_rational(s).map(|r| Scalar::to_f64(&r)),
            _ => None,
        }
    }

    fn powi(&self, e: usize) -> Self {
        f64::powi(*self, e as i32)
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn from_biguint(v: &BigUint) -> Self {
        Rational::from_integer(BigInt::from(v.clone()))
    }

    fn from_f64(v: f64) -> Option<Self> {
        if !v.is_finite() {
            return None;
        }
        parse_decimal(&format!("{v}"))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_json(&self) -> Value {
        Value::String(self.to_string())
    }

    fn from_json(v: &Value) -> Option<Self> {
        match v {
            Value::String(s) => parse_rational(s),
            Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Some(Self::from_i64(i))
                } else {
                    parse_decimal(&n.to_string())
                }
            }
            _ => None,
        }
    }
}

/// Shortest round-trip digits; scientific notation outside `[1e-5, 1e16)`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Parses `p/q`, an integer, or a plain decimal such as `-0.0125`.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).ok()?;
        let q = BigInt::from_str(q.trim()).ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(Rational::new(p, q));
    }
    parse_decimal(s)
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let all: String = format!("{int_part}{frac_part}");
    if !all.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let mut num = BigInt::from_str_radix(&all, 10).ok()?;
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let r = if scale >= 0 {
        Rational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Some(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_conversion_is_faithful() {
        let r = <Rational as Scalar>::from_f64(0.01).unwrap();
        assert_eq!(r, Rational::new(1.into(), 100.into()));
        let r = <Rational as Scalar>::from_f64(-2.5).unwrap();
        assert_eq!(r, Rational::new((-5).into(), 2.into()));
        let r = <Rational as Scalar>::from_f64(1e-20).unwrap();
        assert_eq!(Scalar::to_f64(&r), 1e-20);
        assert!(<Rational as Scalar>::from_f64(f64::NAN).is_none());
    }

    #[test]
    fn rational_strings() {
        assert_eq!(
            parse_rational("3/4").unwrap(),
            Rational::new(3.into(), 4.into())
        );
        assert_eq!(parse_rational("7").unwrap(), Rational::from_integer(7.into()));
        assert_eq!(
            parse_rational("1.5e-2").unwrap(),
            Rational::new(3.into(), 200.into())
        );
        assert!(parse_rational("1/0").is_none());
        assert!(parse_rational("abc").is_none());
    }

    #[test]
    fn float_text_round_trips() {
        for x in [0.0, 1.0, -0.25, 1e-4, 7.936962976782402e-43, 3e20, 0.1 + 0.2] {
            let t = fmt_f64(x);
            assert_eq!(t.parse::<f64>().unwrap(), x, "{t}");
        }
        assert_eq!(fmt_f64(1e-4), "0.0001");
        assert_eq!(fmt_f64(2.5e-7), "2.5e-7");
        assert_eq!(parse_rational(&fmt_f64(2.5e-7)).unwrap(), Rational::new(1.into(), 4_000_000.into()));
    }

    #[test]
    fn json_round_trip() {
        let r = Rational::new((-22).into(), 7.into());
        assert_eq!(Rational::from_json(&r.to_json()).unwrap(), r);
        let x = 0.1f64;
        assert_eq!(f64::from_json(&x.to_json()).unwrap(), x);
    }
}
