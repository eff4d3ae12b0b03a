//! Fibonacci LFSRs over GF(2).
//!
//! A register of degree `L` holds stages `s_0 .. s_{L-1}` (stage `s_i` at bit
//! `i` of the fill word). Each clock outputs `s_0`, shifts every stage down by
//! one and feeds `s_{t+L} = XOR of s_{t+i}` for every exponent `i` of the
//! feedback polynomial below `L` into the top stage.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bits::Bits;
use crate::error::{Error, Result};

pub const MAX_DEGREE: u32 = 63;
pub const DEFAULT_PERIOD_CHECK_BOUND: u32 = 16;

/// Feedback polynomial `x^L + sum c_i x^i`. The leading term is implicit.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeedbackPolynomial {
    degree: u32,
    taps: u64,
}

impl FeedbackPolynomial {
    /// Builds a polynomial from the exponents below `degree` whose coefficient
    /// is one. The constant term must be present.
    pub fn new(exponents: &[u32], degree: u32) -> Result<Self> {
        if degree == 0 || degree > MAX_DEGREE {
            return Err(Error::InvalidPolynomial(format!(
                "degree {degree} outside 1..={MAX_DEGREE}"
            )));
        }
        let mut taps = 0u64;
        for &e in exponents {
            if e >= degree {
                return Err(Error::InvalidPolynomial(format!(
                    "exponent {e} is not below the degree {degree}"
                )));
            }
            if taps & (1 << e) != 0 {
                return Err(Error::InvalidPolynomial(format!("duplicate exponent {e}")));
            }
            taps |= 1 << e;
        }
        if taps & 1 == 0 {
            return Err(Error::InvalidPolynomial(
                "constant term missing; the recurrence would not be invertible".into(),
            ));
        }
        Ok(Self { degree, taps })
    }

    /// Parses the serialized form: every exponent including the degree.
    pub fn from_exponent_list(list: &[u32]) -> Result<Self> {
        let degree = *list
            .iter()
            .max()
            .ok_or_else(|| Error::InvalidPolynomial("empty exponent list".into()))?;
        let lower: Vec<u32> = list.iter().copied().filter(|&e| e != degree).collect();
        if lower.len() + 1 != list.len() {
            return Err(Error::InvalidPolynomial(format!(
                "degree {degree} listed more than once"
            )));
        }
        Self::new(&lower, degree)
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn taps(&self) -> u64 {
        self.taps
    }

    /// All exponents with coefficient one, descending, degree first.
    pub fn exponents(&self) -> Vec<u32> {
        let mut out = vec![self.degree];
        out.extend((0..self.degree).rev().filter(|&i| self.taps >> i & 1 == 1));
        out
    }

    pub fn fill_mask(&self) -> u64 {
        (1u64 << self.degree) - 1
    }

    /// Sequence period from the fill `(1, 0, ..., 0)`. Primitive iff the
    /// result equals `2^L - 1`.
    pub fn check_period(&self, bound: u32) -> Result<u64> {
        if self.degree > bound {
            return Err(Error::DegreeAboveBound {
                degree: self.degree,
                bound,
            });
        }
        let start = LfsrState::new(*self, 1)?;
        let mut state = start;
        let mut period = 0u64;
        loop {
            state.step();
            period += 1;
            if state.fill == start.fill {
                return Ok(period);
            }
        }
    }

    pub fn is_primitive(&self, bound: u32) -> Result<bool> {
        Ok(self.check_period(bound)? == (1u64 << self.degree) - 1)
    }
}

impl fmt::Debug for FeedbackPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FeedbackPolynomial{:?}", self.exponents())
    }
}

impl fmt::Display for FeedbackPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .exponents()
            .into_iter()
            .map(|e| match e {
                0 => "1".to_string(),
                1 => "x".to_string(),
                e => format!("x^{e}"),
            })
            .collect();
        f.write_str(&terms.join(" + "))
    }
}

impl Serialize for FeedbackPolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.exponents().serialize(s)
    }
}

impl<'de> Deserialize<'de> for FeedbackPolynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let list = Vec::<u32>::deserialize(d)?;
        Self::from_exponent_list(&list).map_err(serde::de::Error::custom)
    }
}

/// Named polynomials of the full-size cipher, R0 through R3.
pub mod standard {
    use super::FeedbackPolynomial;

    const P0: &[u32] = &[22, 20, 18, 17, 13, 11, 10, 9, 8, 4, 3, 2, 1, 0];
    const P1: &[u32] = &[28, 27, 25, 24, 23, 22, 21, 18, 17, 13, 11, 10, 6, 5, 3, 2, 1, 0];
    const P2: &[u32] = &[
        30, 27, 25, 24, 23, 22, 21, 20, 16, 15, 13, 12, 11, 10, 9, 8, 4, 3, 1, 0,
    ];
    const P3: &[u32] = &[
        34, 33, 32, 30, 29, 26, 24, 20, 19, 18, 17, 16, 13, 11, 8, 7, 6, 4, 2, 0,
    ];

    pub fn p0() -> FeedbackPolynomial {
        FeedbackPolynomial::new(P0, 23).unwrap()
    }
    pub fn p1() -> FeedbackPolynomial {
        FeedbackPolynomial::new(P1, 29).unwrap()
    }
    pub fn p2() -> FeedbackPolynomial {
        FeedbackPolynomial::new(P2, 31).unwrap()
    }
    pub fn p3() -> FeedbackPolynomial {
        FeedbackPolynomial::new(P3, 37).unwrap()
    }

    pub fn all() -> [FeedbackPolynomial; 4] {
        [p0(), p1(), p2(), p3()]
    }
}

/// Primitive polynomials of degrees 7, 9, 11 and 13 for desk-scale instances.
pub mod mini {
    use super::FeedbackPolynomial;

    pub fn all() -> [FeedbackPolynomial; 4] {
        [
            FeedbackPolynomial::new(&[1, 0], 7).unwrap(),
            FeedbackPolynomial::new(&[4, 0], 9).unwrap(),
            FeedbackPolynomial::new(&[2, 0], 11).unwrap(),
            FeedbackPolynomial::new(&[4, 3, 1, 0], 13).unwrap(),
        ]
    }
}

/// A register and its current fill.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct LfsrState {
    poly: FeedbackPolynomial,
    fill: u64,
}

impl LfsrState {
    pub fn new(poly: FeedbackPolynomial, fill: u64) -> Result<Self> {
        if fill & !poly.fill_mask() != 0 {
            return Err(Error::InvalidPolynomial(format!(
                "fill {fill:#x} has bits above stage {}",
                poly.degree - 1
            )));
        }
        Ok(Self { poly, fill })
    }

    /// Builds a fill from stage bits `s_0 .. s_{L-1}`.
    pub fn from_stages(poly: FeedbackPolynomial, stages: &[bool]) -> Result<Self> {
        if stages.len() != poly.degree as usize {
            return Err(Error::InvalidPolynomial(format!(
                "fill has {} stages, degree is {}",
                stages.len(),
                poly.degree
            )));
        }
        let fill = stages
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | (b as u64) << i);
        Ok(Self { poly, fill })
    }

    pub fn polynomial(&self) -> FeedbackPolynomial {
        self.poly
    }

    pub fn fill(&self) -> u64 {
        self.fill
    }

    pub fn is_degenerate(&self) -> bool {
        self.fill == 0
    }

    /// Value-semantics clock: returns the output stage and the successor.
    pub fn clock(&self) -> (bool, LfsrState) {
        let mut next = *self;
        let bit = next.step();
        (bit, next)
    }

    /// In-place clock used by the hot loops.
    #[inline]
    pub fn step(&mut self) -> bool {
        let out = self.fill & 1;
        let feedback = (self.fill & self.poly.taps).count_ones() as u64 & 1;
        self.fill = (self.fill >> 1) | (feedback << (self.poly.degree - 1));
        out == 1
    }

    /// The next `n` output bits, advancing the state.
    pub fn advance(&mut self, n: usize) -> Bits {
        let mut words = Vec::with_capacity(n.div_ceil(64));
        let mut remaining = n;
        while remaining > 0 {
            let take = remaining.min(64);
            let mut w = 0u64;
            for i in 0..take {
                w |= (self.step() as u64) << i;
            }
            words.push(w);
            remaining -= take;
        }
        let mut bits = Bits::from_vec(words);
        bits.truncate(n);
        bits
    }

    /// First `n` output bits from this state.
    pub fn generate_sequence(&self, n: usize) -> Bits {
        let mut s = *self;
        s.advance(n)
    }
}

/// Output sequences of the unit fills `e_0 .. e_{L-1}`.
///
/// The register output is linear in the fill, so the sequence of any fill is
/// the XOR of the rows selected by its set bits.
pub fn basis_sequences(poly: FeedbackPolynomial, n: usize) -> Vec<Bits> {
    (0..poly.degree)
        .map(|i| LfsrState { poly, fill: 1 << i }.generate_sequence(n))
        .collect()
}
