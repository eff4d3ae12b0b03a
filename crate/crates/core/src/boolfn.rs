//! Boolean functions as packed truth tables and their Walsh spectra.
//!
//! `f(x)` is bit `x` of the table, least significant bit first, so `0x93A0`
//! expands to `(0,0,0,0,0,1,0,1,1,1,0,0,1,0,0,1)`. For the 4-input combiner
//! the index is built as `x3 + 2 x2 + 4 x1 + 8 x0`, hence mask `u = 0b1000`
//! selects `x0` alone.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const MAX_INPUTS: u8 = 16;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TruthTable {
    n: u8,
    words: Vec<u64>,
}

impl TruthTable {
    /// Builds an `n`-input table from `2^n` output bits.
    pub fn from_fn(n: u8, mut f: impl FnMut(usize) -> bool) -> Result<Self> {
        if n > MAX_INPUTS {
            return Err(Error::InvalidTruthTable(format!(
                "{n} inputs exceeds the limit of {MAX_INPUTS}"
            )));
        }
        let size = 1usize << n;
        let mut words = vec![0u64; size.div_ceil(64)];
        for x in 0..size {
            if f(x) {
                words[x / 64] |= 1 << (x % 64);
            }
        }
        Ok(Self { n, words })
    }

    /// 4-input table from its 16-bit word.
    pub fn from_word(word: u16) -> Self {
        Self {
            n: 4,
            words: vec![word as u64],
        }
    }

    /// Parses `0x93A0`-style hex. The digit count fixes the input count.
    pub fn parse_hex(s: &str) -> Result<Self> {
        let t = s.trim();
        let digits = t
            .strip_prefix("0x")
            .or_else(|| t.strip_prefix("0X"))
            .unwrap_or(t);
        let bits = digits.len() * 4;
        if digits.is_empty() || !bits.is_power_of_two() || bits < 4 {
            return Err(Error::InvalidTruthTable(format!(
                "'{s}' does not have a power-of-two bit length"
            )));
        }
        let n = bits.trailing_zeros() as u8;
        let nibbles: Vec<u32> = digits
            .chars()
            .map(|c| c.to_digit(16))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::InvalidTruthTable(format!("'{s}' is not hex")))?;
        // The last digit carries bits 0..3.
        Self::from_fn(n, |x| {
            let digit = nibbles[nibbles.len() - 1 - x / 4];
            digit >> (x % 4) & 1 == 1
        })
    }

    pub fn inputs(&self) -> u8 {
        self.n
    }

    pub fn size(&self) -> usize {
        1 << self.n
    }

    #[inline]
    pub fn eval(&self, x: usize) -> bool {
        self.words[x / 64] >> (x % 64) & 1 == 1
    }

    /// The 16-bit word of a 4-input table.
    pub fn word(&self) -> Option<u16> {
        (self.n == 4).then(|| self.words[0] as u16)
    }

    pub fn xor(&self, other: &TruthTable) -> Result<TruthTable> {
        if self.n != other.n {
            return Err(Error::InvalidTruthTable(format!(
                "cannot combine {}- and {}-input tables",
                self.n, other.n
            )));
        }
        Ok(Self {
            n: self.n,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a ^ b)
                .collect(),
        })
    }

    /// Evaluates the function on 64 input vectors at once. `vars[k]` holds
    /// the value of index bit `k` for each of the 64 lanes.
    pub fn eval_bitsliced(&self, vars: &[u64]) -> u64 {
        debug_assert_eq!(vars.len(), self.n as usize);
        let mut out = 0u64;
        for x in 0..self.size() {
            if !self.eval(x) {
                continue;
            }
            let mut term = !0u64;
            for (k, &v) in vars.iter().enumerate() {
                term &= if x >> k & 1 == 1 { v } else { !v };
            }
            out |= term;
        }
        out
    }

    pub fn to_hex(&self) -> String {
        let digits = (self.size() / 4).max(1);
        let mut s = String::with_capacity(digits + 2);
        s.push_str("0x");
        for d in (0..digits).rev() {
            let mut nibble = 0u32;
            for i in 0..4 {
                let x = d * 4 + i;
                if x < self.size() && self.eval(x) {
                    nibble |= 1 << i;
                }
            }
            s.push(char::from_digit(nibble, 16).unwrap().to_ascii_uppercase());
        }
        s
    }
}

impl fmt::Debug for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruthTable({})", self.to_hex())
    }
}

impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for TruthTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for TruthTable {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Self::parse_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Walsh coefficients `sum_x (-1)^(f(x) ^ <x,u>)` indexed by mask `u`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct WalshSpectrum {
    n: u8,
    values: Vec<i32>,
}

impl WalshSpectrum {
    pub fn from_values(values: Vec<i32>) -> Result<Self> {
        if !values.len().is_power_of_two() {
            return Err(Error::InvalidTruthTable(format!(
                "spectrum of length {} is not a power of two",
                values.len()
            )));
        }
        Ok(Self {
            n: values.len().trailing_zeros() as u8,
            values,
        })
    }

    pub fn inputs(&self) -> u8 {
        self.n
    }

    pub fn values(&self) -> &[i32] {
        &self.values
    }

    pub fn get(&self, u: usize) -> i32 {
        self.values[u]
    }

    /// `P[f(x) = <x,u>] = (1 + W(u) / 2^n) / 2`.
    pub fn correlation_probability(&self, u: usize) -> f64 {
        0.5 * (1.0 + self.values[u] as f64 / (1u64 << self.n) as f64)
    }

    pub fn sum_of_squares(&self) -> i64 {
        self.values.iter().map(|&v| (v as i64) * (v as i64)).sum()
    }
}

impl Serialize for WalshSpectrum {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.values.serialize(s)
    }
}

impl<'de> Deserialize<'de> for WalshSpectrum {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<i32>::deserialize(d)?;
        Self::from_values(values).map_err(serde::de::Error::custom)
    }
}

/// Fast Walsh-Hadamard transform, `n 2^n` additions.
pub fn walsh_transform(f: &TruthTable) -> WalshSpectrum {
    let size = f.size();
    let mut v: Vec<i32> = (0..size).map(|x| if f.eval(x) { -1 } else { 1 }).collect();
    let mut h = 1;
    while h < size {
        for block in (0..size).step_by(2 * h) {
            for i in block..block + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
    WalshSpectrum {
        n: f.inputs(),
        values: v,
    }
}

pub fn correlation_probability(spectrum: &WalshSpectrum, u: usize) -> f64 {
    spectrum.correlation_probability(u)
}

/// XORs `(K' << 8) | K'` into a 4-input table.
pub fn apply_key_mask(f0: &TruthTable, kprime: u8) -> Result<TruthTable> {
    let word = f0.word().ok_or_else(|| {
        Error::InvalidTruthTable(format!("key mask needs 4 inputs, got {}", f0.inputs()))
    })?;
    let mask = (kprime as u16) << 8 | kprime as u16;
    Ok(TruthTable::from_word(word ^ mask))
}

/// `g = f ^ x0`, where `x0` is the most significant index bit.
pub fn effective_function(f: &TruthTable) -> TruthTable {
    let top = f.size() >> 1;
    TruthTable::from_fn(f.inputs(), |x| f.eval(x) ^ (x & top != 0))
        .expect("input count already validated")
}

/// Spectrum of `g = f ^ x0`; equals the spectrum of `f` shifted by `u -> u ^ 0b1000`.
pub fn effective_spectrum(f: &TruthTable) -> WalshSpectrum {
    walsh_transform(&effective_function(f))
}

pub fn is_bent(f: &TruthTable) -> bool {
    if !f.inputs().is_multiple_of(2) {
        return false;
    }
    let target = 1i32 << (f.inputs() / 2);
    walsh_transform(f).values.iter().all(|v| v.abs() == target)
}
