//! Plaintext bit bias and how it dilutes combiner correlations.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Bits added on top of the register size in the noiseless regime.
pub const UNICITY_MARGIN: u64 = 8;

/// The English sample corpus shipped with the crate (about 1.1 Mbit).
pub const SAMPLE_CORPUS: &[u8] = include_bytes!("../data/corpus/english_licenses.txt");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaintextModel {
    /// Probability that a plaintext bit is zero.
    pub p0: f64,
    pub source: String,
    pub sample_size: u64,
}

impl PlaintextModel {
    pub fn new(p0: f64, source: impl Into<String>) -> Result<Self> {
        if !(0.0..=1.0).contains(&p0) {
            return Err(Error::Config(format!("p0 = {p0} is not a probability")));
        }
        Ok(Self {
            p0,
            source: source.into(),
            sample_size: 0,
        })
    }

    /// The conservative figure for ASCII text.
    pub fn ascii_conservative() -> Self {
        Self::new(0.55, "ascii-conservative").unwrap()
    }
}

/// Fraction of zero bits over the MSB-first expansion of `corpus`.
pub fn estimate_p0(corpus: &[u8], source: impl Into<String>) -> Result<PlaintextModel> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let ones: u64 = corpus.iter().map(|b| b.count_ones() as u64).sum();
    let total = corpus.len() as u64 * 8;
    Ok(PlaintextModel {
        p0: (total - ones) as f64 / total as f64,
        source: source.into(),
        sample_size: total,
    })
}

/// `p' = p p0 + (1 - p)(1 - p0)`: agreement probability once plaintext noise
/// is XORed onto a keystream relation that holds with probability `p`.
pub fn combine_bias(p: f64, p0: f64) -> f64 {
    p * p0 + (1.0 - p) * (1.0 - p0)
}

/// Samples needed for the correct candidate to beat every wrong one.
///
/// With `eps = p' - 1/2` the correct score is about `N/2 + N eps` and each
/// wrong score about `N/2`, both with deviation `sqrt(N)/2`. `z_wrong` is
/// the quantile that all `2^state_bits` wrong scores stay below with
/// probability `confidence`; `z_right` the quantile the correct score stays
/// above. Then `N = (z_wrong + z_right)^2 / (4 eps^2)`, never below the
/// unicity bound `state_bits + 8`. At `|eps| = 1/2` only the unicity bound
/// applies.
pub fn required_sample_length(pprime: f64, state_bits: u32, confidence: f64) -> Result<u64> {
    let eps = (pprime - 0.5).abs();
    if eps == 0.0 {
        return Err(Error::UnbiasedModel);
    }
    if !(0.0 < confidence && confidence < 1.0) {
        return Err(Error::Config(format!(
            "confidence {confidence} outside (0, 1)"
        )));
    }
    let unicity = state_bits as u64 + UNICITY_MARGIN;
    if eps >= 0.5 {
        return Ok(unicity);
    }
    let (z_wrong, z_right) = quantiles(state_bits, confidence);
    let n = ((z_wrong + z_right) / (2.0 * eps)).powi(2).ceil() as u64;
    Ok(n.max(unicity))
}

/// `(z_wrong, z_right)` used by [`required_sample_length`].
pub fn quantiles(state_bits: u32, confidence: f64) -> (f64, f64) {
    let normal = Normal::standard();
    // Upper tail per wrong candidate: 1 - confidence^(2^-bits), kept exact
    // for large register sizes.
    let tail = -((confidence.ln() / 2f64.powi(state_bits as i32)).exp_m1());
    let z_wrong = -normal.inverse_cdf(tail);
    let z_right = normal.inverse_cdf(confidence);
    (z_wrong, z_right)
}
