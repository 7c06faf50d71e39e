//! Exact rational helpers and the partial-correction fraction `Gamma`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use num_rational::BigRational as Rational;

/// Parses `"p/q"` or `"p"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let trimmed = s.trim();
    if trimmed.is_empty() {
        return Err(ParseRationalError(s.to_string()));
    }
    let r = Rational::from_str(trimmed).map_err(|_| ParseRationalError(s.to_string()))?;
    Ok(r)
}

/// Canonical text form: `p/q` in lowest terms, or `p` when the denominator is 1.
pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a rational number: {0:?} (expected \"p/q\" or \"p\")")]
pub struct ParseRationalError(pub String);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GammaError {
    #[error(transparent)]
    Parse(#[from] ParseRationalError),
    #[error("gamma must lie strictly between 0 and 1, got {0}")]
    OutOfRange(String),
}

/// Fraction of users that must be recovered, strictly inside (0, 1).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gamma(Rational);

impl Gamma {
    pub fn new(value: Rational) -> Result<Self, GammaError> {
        if value <= Rational::zero() || value >= Rational::one() {
            return Err(GammaError::OutOfRange(format_rational(&value)));
        }
        Ok(Gamma(value))
    }

    pub fn from_ratio(num: i64, den: i64) -> Result<Self, GammaError> {
        if den == 0 {
            return Err(GammaError::Parse(ParseRationalError(format!("{num}/{den}"))));
        }
        Self::new(rational(num, den))
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    /// `⌈γ t⌉`, the number of users that must be recovered.
    pub fn required_users(&self, t: usize) -> usize {
        let prod = &self.0 * int(t as i64);
        let (n, d) = (prod.numer().clone(), prod.denom().clone());
        let c = n.div_ceil(&d);
        usize::try_from(c).expect("ceil(gamma t) fits in usize")
    }
}

impl FromStr for Gamma {
    type Err = GammaError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Gamma::new(parse_rational(s)?)
    }
}

impl fmt::Display for Gamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Gamma {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Gamma {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Serde adapter writing rationals as `"p/q"` strings.
pub mod as_text {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<Rational>` as a list of `"p/q"` strings.
pub mod vec_as_text {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let strs: Vec<String> = v.iter().map(format_rational).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let strs = Vec::<String>::deserialize(d)?;
        strs.iter().map(|s| parse_rational(s).map_err(serde::de::Error::custom)).collect()
    }
}

pub(crate) fn is_probability(r: &Rational) -> bool {
    !r.is_negative() && r <= &Rational::one()
}
