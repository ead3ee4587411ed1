//! Fixed-precision edge weights.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub};
use std::str::FromStr;

use serde::{Serialize, Serializer};

/// Number of stored units per unit weight.
pub const WEIGHT_SCALE: i64 = 1_000_000;
const SCALE_DIGITS: usize = 6;

/// A weight stored as an integer numerator over the fixed denominator 10^6.
///
/// Equality and ordering are exact, so objective comparisons between the
/// exact oracle and the ILP never depend on float rounding.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Weight(i64);

impl Weight {
    pub const ZERO: Weight = Weight(0);

    pub const fn from_units(units: i64) -> Self {
        Weight(units)
    }

    pub const fn from_int(value: i64) -> Self {
        Weight(value * WEIGHT_SCALE)
    }

    pub const fn units(self) -> i64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / WEIGHT_SCALE as f64
    }

    /// Nearest representable weight to `value`.
    pub fn from_f64(value: f64) -> Self {
        Weight((value * WEIGHT_SCALE as f64).round() as i64)
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }
}

impl Add for Weight {
    type Output = Weight;
    fn add(self, rhs: Weight) -> Weight {
        Weight(self.0 + rhs.0)
    }
}

impl AddAssign for Weight {
    fn add_assign(&mut self, rhs: Weight) {
        self.0 += rhs.0;
    }
}

impl Sub for Weight {
    type Output = Weight;
    fn sub(self, rhs: Weight) -> Weight {
        Weight(self.0 - rhs.0)
    }
}

impl Sum for Weight {
    fn sum<I: Iterator<Item = Weight>>(iter: I) -> Weight {
        iter.fold(Weight::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Weight> for Weight {
    fn sum<I: Iterator<Item = &'a Weight>>(iter: I) -> Weight {
        iter.copied().sum()
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let whole = abs / WEIGHT_SCALE as u64;
        let frac = abs % WEIGHT_SCALE as u64;
        if frac == 0 {
            write!(f, "{sign}{whole}")
        } else {
            let digits = format!("{frac:0width$}", width = SCALE_DIGITS);
            write!(f, "{sign}{whole}.{}", digits.trim_end_matches('0'))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WeightParseError {
    #[error("not a decimal number: {0:?}")]
    Malformed(String),
    #[error("more than {SCALE_DIGITS} fractional digits: {0:?}")]
    TooPrecise(String),
    #[error("weight out of range: {0:?}")]
    Overflow(String),
}

impl FromStr for Weight {
    type Err = WeightParseError;

    /// Parses a plain decimal (`12`, `-3.5`, `0.000125`) exactly.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || WeightParseError::Malformed(s.to_string());
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(malformed());
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(malformed());
        }
        let frac_trimmed = frac_part.trim_end_matches('0');
        if frac_trimmed.len() > SCALE_DIGITS {
            return Err(WeightParseError::TooPrecise(s.to_string()));
        }
        let overflow = || WeightParseError::Overflow(s.to_string());
        let whole: i64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| overflow())?
        };
        let mut frac: i64 = 0;
        for (i, b) in frac_trimmed.bytes().enumerate() {
            frac += i64::from(b - b'0') * 10_i64.pow((SCALE_DIGITS - 1 - i) as u32);
        }
        let units = whole
            .checked_mul(WEIGHT_SCALE)
            .and_then(|w| w.checked_add(frac))
            .ok_or_else(overflow)?;
        Ok(Weight(if negative { -units } else { units }))
    }
}

impl Serialize for Weight {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_f64())
    }
}
