//! Finite bit strings, the self-delimiting code `<x> = 1^|x| 0 x`, and the
//! text forms used on the command line and in files.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BitParseError {
    #[error("invalid bit literal {0:?}: only '0' and '1' are allowed")]
    BadBit(String),
    #[error("invalid hex bit string {0:?}")]
    BadHex(String),
    #[error("bit string {0:?} is neither a 0/1 literal nor 0x-prefixed hex")]
    Ambiguous(String),
}

/// A finite binary string. Ordering is lexicographic, with a proper prefix
/// sorting before its extensions.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new() -> Self {
        BitString(Vec::new())
    }

    pub fn from_bools(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    /// Parses a 0/1 literal. The empty literal is the empty string.
    pub fn from_bits(s: &str) -> Result<Self, BitParseError> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(BitParseError::BadBit(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitString)
    }

    /// Bytes, most significant bit first.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        let mut bits = Vec::with_capacity(bytes.len() * 8);
        for b in bytes {
            for i in (0..8).rev() {
                bits.push(b >> i & 1 == 1);
            }
        }
        BitString(bits)
    }

    /// `value` written in `width` bits, most significant first.
    pub fn from_index(value: u64, width: usize) -> Self {
        BitString(
            (0..width)
                .rev()
                .map(|i| i < 64 && value >> i & 1 == 1)
                .collect(),
        )
    }

    /// Shortest binary numeral for `n` ("0" for zero).
    pub fn binary(n: u64) -> Self {
        if n == 0 {
            return BitString(vec![false]);
        }
        let width = 64 - n.leading_zeros() as usize;
        Self::from_index(n, width)
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

    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    pub fn extend_from(&mut self, bits: &[bool]) {
        self.0.extend_from_slice(bits);
    }

    pub fn truncate(&mut self, len: usize) {
        self.0.truncate(len);
    }

    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn is_proper_prefix_of(&self, other: &BitString) -> bool {
        self.len() < other.len() && self.is_prefix_of(other)
    }

    /// `<x> = 1^|x| 0 x`.
    pub fn self_delimited(&self) -> BitString {
        let mut out = Vec::with_capacity(2 * self.len() + 1);
        out.resize(self.len(), true);
        out.push(false);
        out.extend_from_slice(&self.0);
        BitString(out)
    }

    /// Pair encoding `<x>y`.
    pub fn pair(x: &BitString, y: &BitString) -> BitString {
        let mut out = x.self_delimited();
        out.0.extend_from_slice(&y.0);
        out
    }

    /// Inverse of [`BitString::pair`].
    pub fn unpair(&self) -> Option<(BitString, BitString)> {
        let n = self.0.iter().take_while(|b| **b).count();
        if self.len() < 2 * n + 1 {
            return None;
        }
        Some((
            BitString(self.0[n + 1..2 * n + 1].to_vec()),
            BitString(self.0[2 * n + 1..].to_vec()),
        ))
    }

    /// Right-aligned hex form: the bits are left-padded with zeros to a whole
    /// number of nibbles and written as lowercase hex; when the length is not
    /// a multiple of four it follows as `/len`. `"0011"` is `"3"`, `"1"` is
    /// `"1/1"`, the empty string is `""`.
    pub fn to_hex(&self) -> String {
        let digits = self.len().div_ceil(4);
        let pad = digits * 4 - self.len();
        let mut s = String::with_capacity(digits + 4);
        let mut padded = vec![false; pad];
        padded.extend_from_slice(&self.0);
        for nibble in padded.chunks(4) {
            let v = nibble.iter().fold(0u32, |acc, b| acc << 1 | *b as u32);
            s.push(char::from_digit(v, 16).unwrap());
        }
        if pad != 0 {
            s.push_str(&format!("/{}", self.len()));
        }
        s
    }

    pub fn from_hex(s: &str) -> Result<Self, BitParseError> {
        let err = || BitParseError::BadHex(s.to_string());
        let (digits, len) = match s.split_once('/') {
            Some((d, l)) => (d, Some(l.parse::<usize>().map_err(|_| err())?)),
            None => (s, None),
        };
        let mut bits = Vec::with_capacity(digits.len() * 4);
        for c in digits.chars() {
            let v = c.to_digit(16).ok_or_else(err)?;
            for i in (0..4).rev() {
                bits.push(v >> i & 1 == 1);
            }
        }
        let len = len.unwrap_or(bits.len());
        if len > bits.len() || bits.len() - len >= 4 {
            return Err(err());
        }
        let pad = bits.len() - len;
        if bits[..pad].iter().any(|b| *b) {
            return Err(err());
        }
        Ok(BitString(bits[pad..].to_vec()))
    }

    /// Command-line form: `0x`-prefixed hex, or a plain 0/1 literal.
    /// Anything else is rejected rather than guessed.
    pub fn parse_cli(s: &str) -> Result<Self, BitParseError> {
        if let Some(hex) = s.strip_prefix("0x") {
            Self::from_hex(hex)
        } else if s.chars().all(|c| c == '0' || c == '1') {
            Self::from_bits(s)
        } else {
            Err(BitParseError::Ambiguous(s.to_string()))
        }
    }

    /// All strings of length exactly `len`, in lexicographic order.
    pub fn all_of_len(len: usize) -> impl Iterator<Item = BitString> {
        assert!(len < 64);
        (0..1u64 << len).map(move |v| BitString::from_index(v, len))
    }

    /// All strings of length at most `max_len`, shortest first.
    pub fn all_up_to(max_len: usize) -> impl Iterator<Item = BitString> {
        (0..=max_len).flat_map(BitString::all_of_len)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString(\"{self}\")")
    }
}

impl FromStr for BitString {
    type Err = BitParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_bits(s)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        BitString::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn self_delimiting_code() {
        assert_eq!(BitString::new().self_delimited(), b("0"));
        assert_eq!(b("101").self_delimited(), b("1110101"));
        assert_eq!(BitString::pair(&b("1"), &b("00")), b("10100"));
    }

    #[test]
    fn binary_numerals() {
        assert_eq!(BitString::binary(0), b("0"));
        assert_eq!(BitString::binary(1), b("1"));
        assert_eq!(BitString::binary(6), b("110"));
        assert_eq!(BitString::from_index(1, 3), b("001"));
        assert_eq!(BitString::from_index(0, 0), BitString::new());
    }

    #[test]
    fn hex_forms() {
        assert_eq!(b("0011").to_hex(), "3");
        assert_eq!(b("1").to_hex(), "1/1");
        assert_eq!(b("000").to_hex(), "0/3");
        assert_eq!(b("001000").to_hex(), "08/6");
        assert_eq!(BitString::new().to_hex(), "");
        assert_eq!(BitString::from_hex("").unwrap(), BitString::new());
        assert!(BitString::from_hex("8/1").is_err());
        assert!(BitString::from_hex("1/5").is_err());
        assert!(BitString::from_hex("0g").is_err());
    }

    #[test]
    fn cli_form_rejects_ambiguity() {
        assert_eq!(BitString::parse_cli("0000").unwrap(), b("0000"));
        assert_eq!(BitString::parse_cli("0x0").unwrap(), b("0000"));
        assert!(matches!(
            BitString::parse_cli("0a1"),
            Err(BitParseError::Ambiguous(_))
        ));
    }

    #[test]
    fn ordering_is_lexicographic() {
        let mut v = vec![b("1"), b("000"), b("0"), b("01"), BitString::new()];
        v.sort();
        assert_eq!(v, vec![BitString::new(), b("0"), b("000"), b("01"), b("1")]);
    }

    proptest! {
        #[test]
        fn hex_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..70)) {
            let s = BitString::from_bools(bits);
            prop_assert_eq!(BitString::from_hex(&s.to_hex()).unwrap(), s);
        }

        #[test]
        fn pair_round_trip(x in proptest::collection::vec(any::<bool>(), 0..20),
                           y in proptest::collection::vec(any::<bool>(), 0..20)) {
            let (x, y) = (BitString::from_bools(x), BitString::from_bools(y));
            prop_assert_eq!(BitString::pair(&x, &y).unpair(), Some((x, y)));
        }
    }
}
