use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// A finite bitstring. Types, messages and coin prefixes are all bitstrings.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    pub fn empty() -> Self {
        BitString(Vec::new())
    }

    /// Big-endian `width`-bit encoding of `value`.
    pub fn from_uint(value: u64, width: usize) -> Self {
        BitString((0..width).rev().map(|i| (value >> i) & 1 == 1).collect())
    }

    pub fn to_uint(&self) -> u64 {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | u64::from(b))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.0.get(i).copied()
    }

    pub fn prefix(&self, n: usize) -> BitString {
        BitString(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    /// Every bitstring of length `n`, in increasing numeric order.
    pub fn all_of_length(n: usize) -> impl Iterator<Item = BitString> {
        assert!(n < 64, "cannot enumerate 2^{n} strings");
        (0..1u64 << n).map(move |v| BitString::from_uint(v, n))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        s.chars()
            .enumerate()
            .map(|(i, c)| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Parse {
                    position: i,
                    message: format!("{c:?} is not a bit"),
                }),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitString)
    }
}

impl From<&str> for BitString {
    /// Panics on non-bit characters; for literals in code and tests.
    fn from(s: &str) -> Self {
        s.parse().expect("bitstring literal")
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// A machine's output: a finite word, or BOT when it did not halt within budget.
///
/// Words are usually bitstrings, but games with more than two outcomes
/// (roshambo's `"0"`, `"1"`, `"2"`) use decimal digits. The empty word is a
/// legal action and is distinct from `Bot`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Word(String),
    Bot,
}

impl Action {
    pub fn word(s: impl Into<String>) -> Self {
        Action::Word(s.into())
    }

    pub fn is_bot(&self) -> bool {
        matches!(self, Action::Bot)
    }

    /// Length of the output, `None` for BOT.
    pub fn len(&self) -> Option<usize> {
        match self {
            Action::Word(w) => Some(w.chars().count()),
            Action::Bot => None,
        }
    }

    pub fn as_word(&self) -> Option<&str> {
        match self {
            Action::Word(w) => Some(w),
            Action::Bot => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Word(w) => write!(f, "{w:?}"),
            Action::Bot => f.write_str("BOT"),
        }
    }
}

impl Serialize for Action {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Action::Word(w) => s.serialize_some(w),
            Action::Bot => s.serialize_none(),
        }
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(match Option::<String>::deserialize(d)? {
            Some(w) => Action::Word(w),
            None => Action::Bot,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bot_is_not_the_empty_word() {
        assert_ne!(Action::Bot, Action::word(""));
        assert_eq!(Action::word("").len(), Some(0));
        assert_eq!(Action::Bot.len(), None);
    }

    #[test]
    fn uint_encoding() {
        assert_eq!(BitString::from_uint(5, 4).to_string(), "0101");
        assert_eq!(BitString::from("0101").to_uint(), 5);
        assert_eq!(BitString::all_of_length(3).count(), 8);
        assert!("012".parse::<BitString>().is_err());
    }
}
