//! Exact probabilities.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::str::FromStr;

pub type Prob = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse probability {text:?}: {reason}")]
pub struct ParseProbError {
    pub text: String,
    pub reason: &'static str,
}

/// Parses `"num/den"`, an integer, or a plain decimal such as `"0.125"` into
/// an exact rational.
pub fn parse_prob(text: &str) -> Result<Prob, ParseProbError> {
    let t = text.trim();
    let err = |reason| ParseProbError { text: text.to_string(), reason };
    if t.is_empty() {
        return Err(err("empty string"));
    }
    if let Some((num, den)) = t.split_once('/') {
        let n = BigInt::from_str(num.trim()).map_err(|_| err("bad numerator"))?;
        let d = BigInt::from_str(den.trim()).map_err(|_| err("bad denominator"))?;
        if d.is_zero() {
            return Err(err("zero denominator"));
        }
        return Ok(BigRational::new(n, d));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err("no digits"));
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err("not a decimal number"));
    }
    let digits = format!("{int_part}{frac_part}");
    let n = BigInt::from_str(&digits).map_err(|_| err("bad digits"))?;
    let d = num_traits::pow(BigInt::from(10u32), frac_part.len());
    let q = BigRational::new(n, d);
    Ok(if neg { -q } else { q })
}

/// Canonical text form: `"p/q"` in lowest terms, or `"n"` for integers.
pub fn format_prob(p: &Prob) -> String {
    if p.is_integer() {
        p.numer().to_string()
    } else {
        format!("{}/{}", p.numer(), p.denom())
    }
}

pub fn to_f64(p: &Prob) -> f64 {
    p.to_f64().unwrap_or_else(|| {
        // Very large numerators/denominators: fall back to a scaled ratio.
        let n = p.numer().to_f64().unwrap_or(f64::NAN);
        let d = p.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub fn from_i64(v: i64) -> Prob {
    BigRational::from_integer(BigInt::from(v))
}

pub fn ratio(n: i64, d: i64) -> Prob {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn is_positive(p: &Prob) -> bool {
    p.is_positive()
}

pub fn is_one(p: &Prob) -> bool {
    p.is_one()
}
