//! Exact rationals and dyadic probabilities.
//!
//! Every value on the certification path is a [`Q`]. Probabilities a machine
//! can realize with fair coins are [`Dyadic`] (`c/2^k`); a [`DyadicDist`] is a
//! finite distribution whose weights are all dyadic and sum to exactly one.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Exact rational number.
pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses `"a/b"`, `"a"` or `"a/2^k"`.
pub fn parse_q(text: &str) -> Result<Q, Error> {
    let text = text.trim();
    let bad = || Error::Parse {
        position: 0,
        message: format!("invalid rational {text:?}"),
    };
    match text.split_once('/') {
        None => text.parse::<BigInt>().map(Q::from_integer).map_err(|_| bad()),
        Some((num, den)) => {
            let num: BigInt = num.trim().parse().map_err(|_| bad())?;
            let den = den.trim();
            let den: BigInt = match den.strip_prefix("2^") {
                Some(exp) => {
                    let exp: u32 = exp.parse().map_err(|_| bad())?;
                    BigInt::one() << exp
                }
                None => den.parse().map_err(|_| bad())?,
            };
            if den.is_zero() {
                return Err(bad());
            }
            Ok(Q::new(num, den))
        }
    }
}

/// Renders as `"a/b"`, or `"a"` for integers.
pub fn fmt_q(value: &Q) -> String {
    value.to_string()
}

pub fn q_to_f64(value: &Q) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// `base^exp` for a non-negative exponent.
pub fn pow_q(base: &Q, exp: u32) -> Q {
    let mut acc = Q::one();
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

/// Serde adapter for `Q` as an `"a/b"` string.
pub mod serde_q {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_q(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let text = String::deserialize(d)?;
        parse_q(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<Q>`.
pub mod serde_q_vec {
    use super::*;

    pub fn serialize<S: Serializer>(values: &[Q], s: S) -> Result<S::Ok, S::Error> {
        let strings: Vec<String> = values.iter().map(fmt_q).collect();
        strings.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Q>, D::Error> {
        let strings = Vec::<String>::deserialize(d)?;
        strings
            .iter()
            .map(|t| parse_q(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// A probability `num / 2^exp` in `[0, 1]`, kept in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: u64,
    exp: u32,
}

impl Dyadic {
    pub const MAX_EXP: u32 = 62;

    pub fn new(num: u64, exp: u32) -> Result<Self, Error> {
        if exp > Self::MAX_EXP || num > (1u64 << exp) {
            return Err(Error::Definition(format!(
                "{num}/2^{exp} is not a probability with exponent <= {}",
                Self::MAX_EXP
            )));
        }
        let mut d = Dyadic { num, exp };
        d.reduce();
        Ok(d)
    }

    pub fn one() -> Self {
        Dyadic { num: 1, exp: 0 }
    }

    pub fn zero() -> Self {
        Dyadic { num: 0, exp: 0 }
    }

    pub fn half() -> Self {
        Dyadic { num: 1, exp: 1 }
    }

    fn reduce(&mut self) {
        if self.num == 0 {
            self.exp = 0;
            return;
        }
        while self.exp > 0 && self.num % 2 == 0 {
            self.num /= 2;
            self.exp -= 1;
        }
    }

    pub fn numerator(&self) -> u64 {
        self.num
    }

    pub fn exponent(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    /// Numerator over `2^exp` for some `exp >= self.exponent()`.
    pub fn scaled_to(&self, exp: u32) -> u64 {
        self.num << (exp - self.exp)
    }

    pub fn to_q(&self) -> Q {
        Q::new(BigInt::from(self.num), BigInt::one() << self.exp)
    }

    /// Converts an exact rational whose denominator is a power of two.
    pub fn from_q(value: &Q) -> Result<Self, Error> {
        let den = value.denom();
        let not_dyadic = || Error::Definition(format!("{value} is not a dyadic probability"));
        if value.is_negative() || den.bits() == 0 {
            return Err(not_dyadic());
        }
        let exp = den.trailing_zeros().unwrap_or(0);
        if (BigInt::one() << exp) != *den || exp > u64::from(Self::MAX_EXP) {
            return Err(not_dyadic());
        }
        let num = value.numer().to_u64().ok_or_else(not_dyadic)?;
        Dyadic::new(num, exp as u32)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.num, self.exp)
    }
}

impl FromStr for Dyadic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Dyadic::from_q(&parse_q(s)?)
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Finite distribution with dyadic weights summing to exactly one.
///
/// Zero-weight outcomes are dropped on construction.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DyadicDist<T> {
    outcomes: Vec<(T, Dyadic)>,
    exp: u32,
}

impl<T> DyadicDist<T> {
    pub fn new(outcomes: Vec<(T, Dyadic)>) -> Result<Self, Error> {
        let outcomes: Vec<(T, Dyadic)> = outcomes.into_iter().filter(|(_, w)| !w.is_zero()).collect();
        let exp = outcomes.iter().map(|(_, w)| w.exponent()).max().unwrap_or(0);
        let total: u128 = outcomes.iter().map(|(_, w)| u128::from(w.scaled_to(exp))).sum();
        if outcomes.is_empty() || total != 1u128 << exp {
            return Err(Error::Definition(
                "distribution weights must sum to exactly 1".into(),
            ));
        }
        Ok(DyadicDist { outcomes, exp })
    }

    pub fn point(value: T) -> Self {
        DyadicDist {
            outcomes: vec![(value, Dyadic::one())],
            exp: 0,
        }
    }

    /// Uniform over `2^k` values.
    pub fn uniform_pow2(values: Vec<T>) -> Result<Self, Error> {
        let n = values.len();
        if !n.is_power_of_two() {
            return Err(Error::Definition(format!("{n} outcomes is not a power of two")));
        }
        let exp = n.trailing_zeros();
        Self::new(values.into_iter().map(|v| (v, Dyadic { num: 1, exp })).collect())
    }

    pub fn outcomes(&self) -> &[(T, Dyadic)] {
        &self.outcomes
    }

    /// Number of fair coin bits one draw consumes.
    pub fn bits(&self) -> u32 {
        self.exp
    }

    pub fn is_point(&self) -> bool {
        self.outcomes.len() == 1
    }

    /// Outcome numerators over the common denominator `2^bits()`.
    pub fn numerators(&self) -> Vec<u64> {
        self.outcomes.iter().map(|(_, w)| w.scaled_to(self.exp)).collect()
    }

    pub fn get(&self, index: usize) -> &T {
        &self.outcomes[index].0
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> DyadicDist<U> {
        DyadicDist {
            outcomes: self.outcomes.iter().map(|(v, w)| (f(v), *w)).collect(),
            exp: self.exp,
        }
    }
}

impl<T: Serialize> Serialize for DyadicDist<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.outcomes.serialize(s)
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for DyadicDist<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let outcomes = Vec::<(T, Dyadic)>::deserialize(d)?;
        DyadicDist::new(outcomes).map_err(serde::de::Error::custom)
    }
}
