//! Bit strings and their external encodings.
//!
//! In memory a [`Bits`] value keeps bit `t` at word `t / 64`, position `t % 64`
//! so the scoring kernels can work on whole `u64` words. On disk bits are
//! packed MSB-first within each byte: the first bit of a stream is the most
//! significant bit of byte 0 and a trailing partial byte is zero-padded.

use bitvec::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Bits = BitVec<u64, Lsb0>;

/// Packs bits MSB-first into bytes, zero-padding the final byte.
pub fn to_bytes(bits: &BitSlice<u64, Lsb0>) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (t, bit) in bits.iter().by_vals().enumerate() {
        if bit {
            out[t / 8] |= 0x80 >> (t % 8);
        }
    }
    out
}

/// Expands bytes MSB-first. `len` trims trailing padding bits when given.
pub fn from_bytes(bytes: &[u8], len: Option<usize>) -> Result<Bits> {
    let total = bytes.len() * 8;
    let len = len.unwrap_or(total);
    if len > total {
        return Err(Error::Io(format!(
            "sidecar declares {len} bits but only {total} are present"
        )));
    }
    let mut bits = Bits::with_capacity(len);
    for t in 0..len {
        bits.push(bytes[t / 8] & (0x80 >> (t % 8)) != 0);
    }
    Ok(bits)
}

/// Parses an MSB-first hex string into exactly `4 * digits` bits.
pub fn from_hex(s: &str) -> Result<Bits> {
    let s = s.trim();
    let s = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
    let mut bits = Bits::with_capacity(s.len() * 4);
    for c in s.chars() {
        let nibble = c
            .to_digit(16)
            .ok_or_else(|| Error::MalformedKey(format!("'{c}' is not a hex digit")))?;
        for shift in (0..4).rev() {
            bits.push((nibble >> shift) & 1 == 1);
        }
    }
    Ok(bits)
}

/// Upper-case MSB-first hex, zero-padding the last nibble.
pub fn to_hex(bits: &BitSlice<u64, Lsb0>) -> String {
    bits.chunks(4)
        .map(|chunk| {
            let mut nibble = 0u32;
            for (i, bit) in chunk.iter().by_vals().enumerate() {
                if bit {
                    nibble |= 8 >> i;
                }
            }
            char::from_digit(nibble, 16).unwrap().to_ascii_uppercase()
        })
        .collect()
}

/// Sidecar record that pins the exact bit length of a packed stream file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sidecar {
    pub bits: usize,
}

pub fn count_ones(bits: &BitSlice<u64, Lsb0>) -> usize {
    bits.count_ones()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn msb_first_packing() {
        let bits = from_hex("A5").unwrap();
        assert_eq!(to_bytes(&bits), vec![0xA5]);
        let mut partial = Bits::new();
        partial.push(true);
        partial.push(true);
        partial.push(false);
        assert_eq!(to_bytes(&partial), vec![0xC0]);
        assert_eq!(from_bytes(&[0xC0], Some(3)).unwrap(), partial);
        assert!(from_bytes(&[0xC0], Some(9)).is_err());
    }

    #[test]
    fn hex_round_trip() {
        let h = "0123456789ABCDEF";
        assert_eq!(to_hex(&from_hex(h).unwrap()), h);
        assert_eq!(to_hex(&from_hex("0xff").unwrap()), "FF");
        assert!(from_hex("zz").is_err());
    }
}
