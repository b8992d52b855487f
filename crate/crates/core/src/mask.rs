//! Fixed-length feature masks, the genome of the search.

use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MaskError {
    #[error("mask lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid bit character {0:?} (expected '0' or '1')")]
    BadBit(char),
    #[error("invalid hex mask: {0}")]
    BadHex(String),
}

/// A bit vector over `N` features; bit `j` set means feature `j` is selected.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureMask {
    bits: Vec<bool>,
}

impl FeatureMask {
    pub fn zeros(len: usize) -> Self {
        Self {
            bits: vec![false; len],
        }
    }

    pub fn ones(len: usize) -> Self {
        Self {
            bits: vec![true; len],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Mask with exactly the given indices set.
    pub fn from_indices(len: usize, indices: &[usize]) -> Self {
        let mut mask = Self::zeros(len);
        for &i in indices {
            mask.bits[i] = true;
        }
        mask
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, index: usize) -> bool {
        self.bits[index]
    }

    pub fn set(&mut self, index: usize, value: bool) {
        self.bits[index] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Cardinality of the selected subset.
    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn any(&self) -> bool {
        self.bits.iter().any(|&b| b)
    }

    pub fn selected(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    /// Hex encoding, four bits per digit, most significant bit first.
    /// Bit 0 is the high bit of the first digit; the tail is zero padded.
    pub fn to_hex(&self) -> String {
        self.bits
            .chunks(4)
            .map(|chunk| {
                let nibble = chunk
                    .iter()
                    .enumerate()
                    .fold(0u32, |acc, (i, &b)| acc | (u32::from(b) << (3 - i)));
                char::from_digit(nibble, 16).expect("nibble < 16")
            })
            .collect()
    }

    pub fn from_hex(hex: &str, len: usize) -> Result<Self, MaskError> {
        if hex.len() != len.div_ceil(4) {
            return Err(MaskError::BadHex(format!(
                "{} digits cannot encode {len} bits",
                hex.len()
            )));
        }
        let mut bits = Vec::with_capacity(hex.len() * 4);
        for c in hex.chars() {
            let nibble = c
                .to_digit(16)
                .ok_or_else(|| MaskError::BadHex(format!("bad digit {c:?}")))?;
            for shift in (0..4).rev() {
                bits.push(nibble >> shift & 1 == 1);
            }
        }
        if bits[len..].iter().any(|&b| b) {
            return Err(MaskError::BadHex("nonzero padding bits".into()));
        }
        bits.truncate(len);
        Ok(Self { bits })
    }

    pub fn check_len(&self, other: &FeatureMask) -> Result<(), MaskError> {
        if self.len() == other.len() {
            Ok(())
        } else {
            Err(MaskError::LengthMismatch {
                left: self.len(),
                right: other.len(),
            })
        }
    }
}

impl fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for FeatureMask {
    type Err = MaskError;

    /// Parses a `0`/`1` string such as `"101"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(MaskError::BadBit(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self::from_bits)
    }
}

#[derive(Serialize, Deserialize)]
struct MaskRepr {
    len: usize,
    hex: String,
    popcount: usize,
}

impl Serialize for FeatureMask {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        MaskRepr {
            len: self.len(),
            hex: self.to_hex(),
            popcount: self.count_ones(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FeatureMask {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = MaskRepr::deserialize(deserializer)?;
        let mask = FeatureMask::from_hex(&repr.hex, repr.len).map_err(D::Error::custom)?;
        if mask.count_ones() != repr.popcount {
            return Err(D::Error::custom(format!(
                "popcount {} does not match mask {}",
                repr.popcount,
                repr.hex
            )));
        }
        Ok(mask)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hex_layout() {
        let m: FeatureMask = "1010".parse().unwrap();
        assert_eq!(m.to_hex(), "a");
        let m: FeatureMask = "00011".parse().unwrap();
        assert_eq!(m.to_hex(), "18");
        assert_eq!(FeatureMask::zeros(0).to_hex(), "");
    }

    #[test]
    fn rejects_padding_and_bad_digits() {
        assert!(FeatureMask::from_hex("1f", 5).is_err());
        assert!(FeatureMask::from_hex("g", 4).is_err());
        assert!(FeatureMask::from_hex("ff", 4).is_err());
        assert!("10x".parse::<FeatureMask>().is_err());
    }

    #[test]
    fn json_shape() {
        let m: FeatureMask = "0110".parse().unwrap();
        let v = serde_json::to_value(&m).unwrap();
        assert_eq!(v, serde_json::json!({"len": 4, "hex": "6", "popcount": 2}));
        let bad = serde_json::json!({"len": 4, "hex": "6", "popcount": 3});
        assert!(serde_json::from_value::<FeatureMask>(bad).is_err());
    }

    proptest! {
        #[test]
        fn hex_and_json_roundtrip(bits in proptest::collection::vec(any::<bool>(), 0..70)) {
            let m = FeatureMask::from_bits(bits);
            prop_assert_eq!(FeatureMask::from_hex(&m.to_hex(), m.len()).unwrap(), m.clone());
            let json = serde_json::to_string(&m).unwrap();
            prop_assert_eq!(serde_json::from_str::<FeatureMask>(&json).unwrap(), m);
        }
    }
}
