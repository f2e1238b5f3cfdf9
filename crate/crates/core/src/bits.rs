//! Bit-string payloads carried by messages and node inputs.

use std::fmt;
use std::str::FromStr;

use bitvec::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An owned, MSB-first bit string.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits(BitVec<u8, Msb0>);

impl Bits {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    pub fn get(&self, index: usize) -> Option<bool> {
        self.0.get(index).map(|b| *b)
    }

    /// Encodes the low `width` bits of `value`, most significant first.
    ///
    /// Panics if `value` does not fit in `width` bits.
    pub fn from_uint(value: u64, width: usize) -> Self {
        assert!(
            width >= 64 || value >> width == 0,
            "{value} does not fit in {width} bits"
        );
        let mut bits = Bits::new();
        for k in (0..width).rev() {
            bits.push(k < 64 && (value >> k) & 1 == 1);
        }
        bits
    }

    /// Reads `width` bits starting at `offset` as an unsigned integer.
    pub fn read_uint(&self, offset: usize, width: usize) -> Option<u64> {
        if width > 64 || offset.checked_add(width)? > self.len() {
            return None;
        }
        Some(
            self.0[offset..offset + width]
                .iter()
                .fold(0u64, |acc, b| (acc << 1) | u64::from(*b)),
        )
    }

    pub fn to_uint(&self) -> Option<u64> {
        self.read_uint(0, self.len())
    }

    pub fn slice(&self, start: usize, end: usize) -> Bits {
        Bits(self.0[start..end].to_bitvec())
    }

    pub fn extend_from(&mut self, other: &Bits) {
        self.0.extend_from_bitslice(&other.0);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().map(|b| *b)
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({self})")
    }
}

#[derive(Debug, thiserror::Error)]
#[error("invalid bit string character {0:?}")]
pub struct ParseBitsError(char);

impl FromStr for Bits {
    type Err = ParseBitsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut bits = Bits::new();
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => return Err(ParseBitsError(other)),
            }
        }
        Ok(bits)
    }
}

impl FromIterator<bool> for Bits {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Bits(iter.into_iter().collect())
    }
}

impl Serialize for Bits {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bits {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uint_roundtrip() {
        let b = Bits::from_uint(0b1011, 6);
        assert_eq!(b.to_string(), "001011");
        assert_eq!(b.to_uint(), Some(11));
        assert_eq!(b.read_uint(2, 2), Some(0b10));
        assert_eq!(b.read_uint(5, 2), None);
    }

    #[test]
    fn zero_width() {
        let b = Bits::from_uint(0, 0);
        assert!(b.is_empty());
        assert_eq!(b.to_uint(), Some(0));
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!("0102".parse::<Bits>().is_err());
        assert_eq!("".parse::<Bits>().unwrap(), Bits::new());
    }

    #[test]
    #[should_panic]
    fn from_uint_overflow_panics() {
        let _ = Bits::from_uint(4, 2);
    }
}
