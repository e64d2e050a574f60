//! Exact rational arithmetic helpers.
//!
//! Waiting times, utilities, and welfare are kept as arbitrary-precision
//! rationals so equilibrium predicates and integrals evaluate exactly.
//! JSON carries rationals either as plain integers or as `"num/den"`
//! strings; both forms are accepted on input.

use num_bigint::BigInt;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type Rational = num_rational::BigRational;

/// Rational from an integer.
pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Rational from an unsigned integer.
pub fn rat_u(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Rational `n / d`. Panics if `d == 0`.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Lossy conversion for display and float-based simulation code.
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Renders integral rationals as plain integers and everything else as
/// `num/den`.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses the textual forms produced by [`format_rational`] as well as
/// decimal literals like `3.5`.
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let numer: BigInt = n.trim().parse().map_err(|_| format!("bad numerator {n:?}"))?;
        let denom: BigInt = d.trim().parse().map_err(|_| format!("bad denominator {d:?}"))?;
        if denom.is_zero() {
            return Err("zero denominator".into());
        }
        return Ok(Rational::new(numer, denom));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let scale = BigInt::from(10u8).pow(frac.len() as u32);
        let int_part: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().map_err(|_| format!("bad number {s:?}"))?
        };
        let frac_part: BigInt = if frac.is_empty() {
            BigInt::zero()
        } else {
            frac.parse().map_err(|_| format!("bad number {s:?}"))?
        };
        let negative = s.starts_with('-');
        let combined = int_part.abs() * &scale + frac_part;
        let signed = if negative { -combined } else { combined };
        return Ok(Rational::new(signed, scale));
    }
    let n: BigInt = s.parse().map_err(|_| format!("bad number {s:?}"))?;
    Ok(Rational::from_integer(n))
}

/// Tolerance `1/10^9` used where the contracts allow a numeric slack.
pub fn tol_1e9() -> Rational {
    Rational::new(BigInt::from(1), BigInt::from(1_000_000_000u64))
}

#[derive(Serialize)]
#[serde(untagged)]
enum RationalOut {
    Int(i64),
    Text(String),
}

fn rational_out(r: &Rational) -> RationalOut {
    if r.is_integer() {
        if let Some(n) = r.numer().to_i64() {
            return RationalOut::Int(n);
        }
    }
    RationalOut::Text(format_rational(r))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RationalIn {
    Int(i64),
    Float(f64),
    Text(String),
}

impl TryFrom<RationalIn> for Rational {
    type Error = String;

    fn try_from(value: RationalIn) -> Result<Self, String> {
        match value {
            RationalIn::Int(n) => Ok(rat(n)),
            RationalIn::Float(f) => {
                Rational::from_f64(f).ok_or_else(|| format!("non-finite number {f}"))
            }
            RationalIn::Text(s) => parse_rational(&s),
        }
    }
}

/// Serde adapter for a single rational field.
pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        rational_out(r).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        Rational::try_from(RationalIn::deserialize(d)?).map_err(D::Error::custom)
    }
}

/// Serde adapter for `Vec<Rational>` fields.
pub mod serde_rational_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(rational_out).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        Vec::<RationalIn>::deserialize(d)?
            .into_iter()
            .map(|r| Rational::try_from(r).map_err(D::Error::custom))
            .collect()
    }
}
