//! Exact rational helpers: the textual `rational-string` grammar, decimal
//! rendering, and an extended time type with a `+∞` sentinel.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseRationalError {
    #[error("empty rational string")]
    Empty,
    #[error("invalid rational string {0:?}")]
    Invalid(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

/// Parses `[+-]digits[/digits]`.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    if s.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    let (negative, body) = match s.as_bytes()[0] {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (num, den) = match body.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (body, None),
    };
    let digits = |part: &str| -> Result<BigInt, ParseRationalError> {
        if part.is_empty() || !part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ParseRationalError::Invalid(s.to_string()));
        }
        part.parse::<BigInt>()
            .map_err(|_| ParseRationalError::Invalid(s.to_string()))
    };
    let mut numer = digits(num)?;
    let denom = match den {
        Some(d) => digits(d)?,
        None => BigInt::one(),
    };
    if denom.is_zero() {
        return Err(ParseRationalError::ZeroDenominator(s.to_string()));
    }
    if negative {
        numer = -numer;
    }
    Ok(Rational::new(numer, denom))
}

/// Canonical textual form: `"3"`, `"-7/2"`.
pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// `2^e` for any integer exponent.
pub fn pow2(e: i32) -> Rational {
    let two = int(2);
    if e >= 0 {
        num_traits::pow(two, e as usize)
    } else {
        num_traits::pow(two, (-e) as usize).recip()
    }
}

/// Rounds half away from zero to `places` decimals.
pub fn to_decimal(r: &Rational, places: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10), places);
    let scaled = r * Rational::from_integer(scale.clone());
    let half = frac(1, 2);
    let rounded = if scaled.is_negative() {
        -((-scaled) + half).floor().to_integer()
    } else {
        (scaled + half).floor().to_integer()
    };
    let negative = rounded.is_negative();
    let digits = rounded.abs().to_string();
    let digits = if digits.len() <= places {
        format!("{}{}", "0".repeat(places + 1 - digits.len()), digits)
    } else {
        digits
    };
    let (whole, fractional) = digits.split_at(digits.len() - places);
    let sign = if negative { "-" } else { "" };
    if places == 0 {
        format!("{sign}{whole}")
    } else {
        format!("{sign}{whole}.{fractional}")
    }
}

/// A time that may be `+∞` (used for "no further optimal service").
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExtTime {
    Finite(Rational),
    Infinite,
}

impl ExtTime {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            ExtTime::Finite(t) => Some(t),
            ExtTime::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtTime::Infinite)
    }
}

impl PartialOrd for ExtTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtTime {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtTime::Finite(a), ExtTime::Finite(b)) => a.cmp(b),
            (ExtTime::Finite(_), ExtTime::Infinite) => Ordering::Less,
            (ExtTime::Infinite, ExtTime::Finite(_)) => Ordering::Greater,
            (ExtTime::Infinite, ExtTime::Infinite) => Ordering::Equal,
        }
    }
}

impl fmt::Display for ExtTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtTime::Finite(t) => write!(f, "{t}"),
            ExtTime::Infinite => f.write_str("inf"),
        }
    }
}
