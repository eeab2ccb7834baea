//! BPSK modulation, Eb/N0-parameterized AWGN, hard decisions, and LLRs.
//!
//! Sign convention: bit 0 maps to +1 and bit 1 to -1, so a non-negative
//! value decides bit 0. LLRs are positive when they favor bit 0.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::codebook::BitWord;
use crate::error::{Error, Result};

/// Saturation magnitude for log-likelihood ratios.
pub const LLR_MAX: f64 = 40.0;

/// Noise variance convention, quoted verbatim in every report header so that
/// curves are comparable across runs.
pub const SIGMA_CONVENTION: &str =
    "sigma^2 = 1 / (2 * R * 10^(EbN0_dB/10)) per real dimension, unit symbol energy";

/// How Eb/N0 is drawn for each transmitted codeword.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum NoiseSpec {
    /// A single fixed Eb/N0 in dB.
    FixedDb { value: f64, #[serde(default)] seed: Option<u64> },
    /// Eb/N0 drawn uniformly from `[lo, hi]` dB, independently per codeword.
    UniformDb { lo: f64, hi: f64, #[serde(default)] seed: Option<u64> },
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseSpec::FixedDb { .. } => Ok(()),
            NoiseSpec::UniformDb { lo, hi, .. } => {
                if lo <= hi {
                    Ok(())
                } else {
                    Err(Error::validation(format!("noise range requires lo <= hi, got [{lo}, {hi}]")))
                }
            }
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            NoiseSpec::FixedDb { seed, .. } | NoiseSpec::UniformDb { seed, .. } => *seed,
        }
    }

    /// Draw one Eb/N0 value in dB.
    pub fn draw_ebn0_db<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseSpec::FixedDb { value, .. } => *value,
            NoiseSpec::UniformDb { lo, hi, .. } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }
}

/// BPSK: bit 0 -> +1, bit 1 -> -1.
pub fn bpsk_modulate(bits: &[u8]) -> Vec<f64> {
    bits.iter().map(|&b| if b == 0 { 1.0 } else { -1.0 }).collect()
}

/// Per-dimension noise standard deviation for a given Eb/N0 (dB) and code
/// rate: `sigma = sqrt(1 / (2 R Eb/N0_linear))`.
pub fn ebn0_to_sigma(ebn0_db: f64, rate: f64) -> Result<f64> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::validation(format!("rate must be in (0,1], got {rate}")));
    }
    Ok((1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0))).sqrt())
}

/// Add white Gaussian noise of standard deviation `sigma` per dimension.
/// `sigma = 0` returns the symbols exactly (and consumes no randomness).
pub fn awgn<R: Rng>(symbols: &[f64], sigma: f64, rng: &mut R) -> Vec<f64> {
    debug_assert!(sigma >= 0.0);
    if sigma == 0.0 {
        return symbols.to_vec();
    }
    symbols
        .iter()
        .map(|&s| {
            let g: f64 = rng.sample(StandardNormal);
            s + sigma * g
        })
        .collect()
}

/// Threshold rule: bit 0 when the value is >= 0, bit 1 otherwise.
pub fn hard_decision(values: &[f64]) -> BitWord {
    values.iter().map(|&v| u8::from(v < 0.0)).collect()
}

/// Channel LLRs for BPSK over AWGN: `2 y / sigma^2`, clamped to
/// `[-LLR_MAX, LLR_MAX]`. At `sigma = 0` the LLR saturates by sign.
pub fn llr_from_awgn(values: &[f64], sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return values
            .iter()
            .map(|&y| {
                if y > 0.0 {
                    LLR_MAX
                } else if y < 0.0 {
                    -LLR_MAX
                } else {
                    0.0
                }
            })
            .collect();
    }
    let scale = 2.0 / (sigma * sigma);
    values.iter().map(|&y| (scale * y).clamp(-LLR_MAX, LLR_MAX)).collect()
}
