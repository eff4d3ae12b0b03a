//! BSEA-2 key setup, keystream generation and encryption.
//!
//! Key bits are numbered from the most significant hex digit. The first
//! `L0` bits fill stages `s_0 .. s_{L0-1}` of R0, the next `L1` bits fill R1,
//! and so on; the last 8 bits are `K'`, most significant bit first. Every
//! step clocks all four registers once and outputs
//! `f(x3 + 2 x2 + 4 x1 + 8 x0) ^ x0`.

use bitvec::prelude::*;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bits::{self, Bits};
use crate::boolfn::{apply_key_mask, TruthTable};
use crate::error::{Error, Result};
use crate::lfsr::{self, FeedbackPolynomial, LfsrState};

pub const REGISTERS: usize = 4;
pub const KPRIME_BITS: usize = 8;
pub const DEFAULT_F0: u16 = 0x93A0;

/// Polynomials and initial combiner of one cipher instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub name: String,
    pub polynomials: [FeedbackPolynomial; REGISTERS],
    pub f0: TruthTable,
}

impl InstanceSpec {
    pub fn new(
        name: impl Into<String>,
        polynomials: [FeedbackPolynomial; REGISTERS],
        f0: TruthTable,
    ) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            polynomials,
            f0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The full-size cipher: P0..P3 with `f0 = 0x93A0`, 128-bit keys.
    pub fn bsea2() -> Self {
        Self::bsea2_with_f0(TruthTable::from_word(DEFAULT_F0))
    }

    pub fn bsea2_with_f0(f0: TruthTable) -> Self {
        Self {
            name: "bsea2".into(),
            polynomials: lfsr::standard::all(),
            f0,
        }
    }

    /// Desk-scale instance with registers of degrees 7, 9, 11 and 13.
    pub fn mini() -> Self {
        Self::mini_with_f0(TruthTable::from_word(DEFAULT_F0))
    }

    pub fn mini_with_f0(f0: TruthTable) -> Self {
        Self {
            name: "mini".into(),
            polynomials: lfsr::mini::all(),
            f0,
        }
    }

    pub fn with_f0(&self, f0: TruthTable) -> Result<Self> {
        Self::new(self.name.clone(), self.polynomials, f0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.f0.inputs() != 4 {
            return Err(Error::InvalidSpec(format!(
                "combiner must have 4 inputs, has {}",
                self.f0.inputs()
            )));
        }
        let d = self.degrees();
        for i in 0..REGISTERS {
            for j in i + 1..REGISTERS {
                if d[i] == d[j] {
                    return Err(Error::InvalidSpec(format!(
                        "registers R{i} and R{j} share degree {}",
                        d[i]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn degrees(&self) -> [u32; REGISTERS] {
        self.polynomials.map(|p| p.degree())
    }

    pub fn state_bits(&self) -> usize {
        self.degrees().iter().map(|&d| d as usize).sum()
    }

    pub fn key_bits(&self) -> usize {
        self.state_bits() + KPRIME_BITS
    }

    /// Offset of register `j`'s first key bit.
    pub fn register_offset(&self, j: usize) -> usize {
        self.degrees()[..j].iter().map(|&d| d as usize).sum()
    }

    /// Short SHA-256 digest of the canonical JSON form; stamped on reports.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("spec serializes");
        let digest = Sha256::digest(&canonical);
        hex::encode(&digest[..8])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SecretKey {
    bits: Bits,
}

impl SecretKey {
    /// Wraps raw key bits without checking them against any instance.
    pub fn from_bits(bits: Bits) -> Self {
        Self { bits }
    }

    /// Parses an MSB-first hex key and checks it against the instance.
    pub fn parse_hex(spec: &InstanceSpec, hex: &str) -> Result<Self> {
        let key = Self::from_bits(bits::from_hex(hex)?);
        key.check(spec)?;
        Ok(key)
    }

    pub fn from_parts(
        spec: &InstanceSpec,
        fills: [u64; REGISTERS],
        kprime: u8,
    ) -> Result<Self> {
        let mut bits = Bits::with_capacity(spec.key_bits());
        for (j, fill) in fills.iter().enumerate() {
            let degree = spec.degrees()[j];
            if fill >> degree != 0 {
                return Err(Error::MalformedKey(format!(
                    "fill {fill:#x} does not fit R{j} ({degree} stages)"
                )));
            }
            for i in 0..degree {
                bits.push(fill >> i & 1 == 1);
            }
        }
        for i in (0..KPRIME_BITS).rev() {
            bits.push(kprime >> i & 1 == 1);
        }
        let key = Self { bits };
        key.check(spec)?;
        Ok(key)
    }

    /// Uniform key with nonzero fills; `kprime` pins the combiner mask.
    pub fn random<R: Rng + ?Sized>(spec: &InstanceSpec, rng: &mut R, kprime: Option<u8>) -> Self {
        let fills = spec.degrees().map(|d| loop {
            let fill = rng.random::<u64>() & ((1u64 << d) - 1);
            if fill != 0 {
                break fill;
            }
        });
        let kprime = kprime.unwrap_or_else(|| rng.random());
        Self::from_parts(spec, fills, kprime).expect("nonzero fills of the right width")
    }

    pub fn bits(&self) -> &BitSlice<u64, Lsb0> {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn to_hex(&self) -> String {
        bits::to_hex(&self.bits)
    }

    /// Validates length and fills against `spec`.
    pub fn check(&self, spec: &InstanceSpec) -> Result<()> {
        if self.bits.len() != spec.key_bits() {
            return Err(Error::WrongKeyLength {
                expected: spec.key_bits(),
                got: self.bits.len(),
            });
        }
        for (j, fill) in self.fills(spec).iter().enumerate() {
            if *fill == 0 {
                return Err(Error::DegenerateKey { register: j });
            }
        }
        Ok(())
    }

    /// Register fills, stage `s_i` at bit `i`. Assumes the length matches.
    pub fn fills(&self, spec: &InstanceSpec) -> [u64; REGISTERS] {
        let degrees = spec.degrees();
        std::array::from_fn(|j| {
            let off = spec.register_offset(j);
            (0..degrees[j] as usize).fold(0u64, |acc, i| acc | (self.bits[off + i] as u64) << i)
        })
    }

    pub fn kprime(&self, spec: &InstanceSpec) -> u8 {
        let off = spec.state_bits();
        (0..KPRIME_BITS).fold(0u8, |acc, i| acc << 1 | self.bits[off + i] as u8)
    }
}

/// A keyed cipher at some stream position.
#[derive(Clone, Debug)]
pub struct CipherInstance {
    states: [LfsrState; REGISTERS],
    f: TruthTable,
}

pub fn key_setup(spec: &InstanceSpec, key: &SecretKey) -> Result<CipherInstance> {
    key.check(spec)?;
    let fills = key.fills(spec);
    let states: [LfsrState; REGISTERS] =
        std::array::from_fn(|j| LfsrState::new(spec.polynomials[j], fills[j]).expect("width checked"));
    let f = apply_key_mask(&spec.f0, key.kprime(spec))?;
    Ok(CipherInstance { states, f })
}

impl CipherInstance {
    /// Instance from explicit register states and an already-masked table.
    pub fn from_states(states: [LfsrState; REGISTERS], f: TruthTable) -> Result<Self> {
        if f.inputs() != 4 {
            return Err(Error::InvalidTruthTable("combiner needs 4 inputs".into()));
        }
        Ok(Self { states, f })
    }

    pub fn combiner(&self) -> &TruthTable {
        &self.f
    }

    pub fn states(&self) -> &[LfsrState; REGISTERS] {
        &self.states
    }

    pub fn next_bit(&mut self) -> bool {
        let x = self.states.each_mut().map(|s| s.step());
        let index = (x[3] as usize) | (x[2] as usize) << 1 | (x[1] as usize) << 2 | (x[0] as usize) << 3;
        self.f.eval(index) ^ x[0]
    }

    /// Next `n` keystream bits, 64 at a time.
    pub fn keystream(&mut self, n: usize) -> Bits {
        let mut words = Vec::with_capacity(n.div_ceil(64));
        let mut remaining = n;
        while remaining > 0 {
            let take = remaining.min(64);
            let x = self.states.each_mut().map(|s| {
                let chunk = s.advance(take);
                chunk.as_raw_slice()[0]
            });
            words.push(combine_words(&self.f, x));
            remaining -= take;
        }
        let mut out = Bits::from_vec(words);
        out.truncate(n);
        out
    }

    /// `c = p ^ keystream`; decryption is the same call.
    pub fn encrypt(&mut self, plaintext: &BitSlice<u64, Lsb0>) -> Bits {
        let mut out = self.keystream(plaintext.len());
        out ^= plaintext;
        out
    }

    pub fn decrypt(&mut self, ciphertext: &BitSlice<u64, Lsb0>) -> Bits {
        self.encrypt(ciphertext)
    }
}

/// Combiner over 64 steps: `x[j]` holds register `j`'s outputs.
#[inline]
pub fn combine_words(f: &TruthTable, x: [u64; REGISTERS]) -> u64 {
    f.eval_bitsliced(&[x[3], x[2], x[1], x[0]]) ^ x[0]
}

pub fn keystream(spec: &InstanceSpec, key: &SecretKey, n: usize) -> Result<Bits> {
    Ok(key_setup(spec, key)?.keystream(n))
}

pub fn encrypt(spec: &InstanceSpec, key: &SecretKey, plaintext: &BitSlice<u64, Lsb0>) -> Result<Bits> {
    Ok(key_setup(spec, key)?.encrypt(plaintext))
}

pub fn decrypt(spec: &InstanceSpec, key: &SecretKey, ciphertext: &BitSlice<u64, Lsb0>) -> Result<Bits> {
    encrypt(spec, key, ciphertext)
}
