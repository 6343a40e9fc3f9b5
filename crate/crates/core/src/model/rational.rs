//! Exact rational scalars and their text form (`"p/q"`, `"p"`, or a decimal).

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use super::ModelError;

/// Exact rational used for every distance, relaxation factor and optimal constant.
pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `"p/q"`, `"p"` or a plain decimal such as `"1.25"` (exactly).
pub fn parse(text: &str) -> Result<Rational, ModelError> {
    let bad = || ModelError::InvalidRational(text.to_string());
    let t = text.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
        let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((whole, frac)) = t.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.starts_with('-');
        let whole = if whole.is_empty() || whole == "-" {
            BigInt::zero()
        } else {
            BigInt::from_str(whole).map_err(|_| bad())?
        };
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let frac = BigInt::from_str(frac).map_err(|_| bad())?;
        let magnitude = Rational::from_integer(whole.abs()) + Rational::new(frac, scale);
        return Ok(if negative { -magnitude } else { magnitude });
    }
    BigInt::from_str(t).map(Rational::from_integer).map_err(|_| bad())
}

/// Canonical text: `"p"` for integers, `"p/q"` otherwise (lowest terms).
pub fn format(q: &Rational) -> String {
    q.to_string()
}

/// Exact conversion of a finite float (every finite f64 is a dyadic rational).
pub fn from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

pub fn one() -> Rational {
    Rational::one()
}

/// Serde adapter writing rationals as canonical strings and reading strings or JSON integers.
pub mod text {
    use super::*;

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        d.deserialize_any(RationalVisitor)
    }

    struct RationalVisitor;

    impl<'de> Visitor<'de> for RationalVisitor {
        type Value = Rational;

        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            f.write_str("an integer or a \"p/q\" string")
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rational, E> {
            Ok(int(v))
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rational, E> {
            Ok(Rational::from_integer(BigInt::from(v)))
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<Rational, E> {
            Err(E::custom(format_args!(
                "float {v} is not exact; write it as a \"p/q\" string"
            )))
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<Rational, E> {
            parse(v).map_err(E::custom)
        }
    }
}

/// A square rational matrix on the wire.
#[derive(Serialize, Deserialize)]
#[serde(transparent)]
pub(crate) struct WireMatrix(pub Vec<Vec<WireRational>>);

#[derive(Serialize, Deserialize)]
#[serde(transparent)]
pub(crate) struct WireRational(#[serde(with = "text")] pub Rational);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_forms() {
        assert_eq!(parse("5/4").unwrap(), ratio(5, 4));
        assert_eq!(parse("10/8").unwrap(), ratio(5, 4));
        assert_eq!(parse("7").unwrap(), int(7));
        assert_eq!(parse("1.25").unwrap(), ratio(5, 4));
        assert_eq!(parse("-0.5").unwrap(), ratio(-1, 2));
        assert_eq!(parse(".5").unwrap(), ratio(1, 2));
        assert!(parse("1/0").is_err());
        assert!(parse("x").is_err());
        assert!(parse("1.").is_err());
    }

    #[test]
    fn canonical_format() {
        assert_eq!(format(&ratio(10, 8)), "5/4");
        assert_eq!(format(&int(3)), "3");
    }

    #[test]
    fn float_conversion_is_exact() {
        let q = from_f64(0.1).unwrap();
        assert_eq!(to_f64(&q), 0.1);
        assert_ne!(q, ratio(1, 10));
    }
}
