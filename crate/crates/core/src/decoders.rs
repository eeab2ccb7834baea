//! Reference decoders: brute-force MAP (maximum likelihood under a uniform
//! prior), successive cancellation, and min-sum belief propagation.
//!
//! All decoders return the K information bits in information-set order.
//! Ties in the MAP search break toward the lexicographically smallest
//! message, so every decoder is deterministic.

use serde::{Deserialize, Serialize};

use crate::channel::LLR_MAX;
use crate::codebook::{message_from_index, BitWord, CodeSpec, Codebook};
use crate::error::{Error, Result};

/// Which decoder an evaluation run uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecoderKind {
    Map,
    Sc,
    Bp { iterations: usize },
    BoundedDistance,
    Nnd { checkpoint: String },
}

impl DecoderKind {
    /// Short label used in file names and report columns.
    pub fn label(&self) -> String {
        match self {
            DecoderKind::Map => "map".to_string(),
            DecoderKind::Sc => "sc".to_string(),
            DecoderKind::Bp { iterations } => format!("bp{iterations}"),
            DecoderKind::BoundedDistance => "bdd".to_string(),
            DecoderKind::Nnd { .. } => "nnd".to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let DecoderKind::Bp { iterations } = self {
            if *iterations == 0 {
                return Err(Error::validation("bp iterations must be >= 1".to_string()));
            }
        }
        Ok(())
    }
}

/// Brute-force MAP decoding: the message whose BPSK-modulated codeword has
/// the largest correlation with `y` (equivalently, minimum Euclidean
/// distance). Ties break toward the lexicographically smallest message.
pub fn map_decode(y: &[f64], codebook: &Codebook) -> Result<BitWord> {
    let code = codebook.code();
    if y.len() != code.block_len() {
        return Err(Error::validation(format!(
            "received word has {} values, expected N={}",
            y.len(),
            code.block_len()
        )));
    }
    let mut best_m = 0u64;
    let mut best_score = f64::NEG_INFINITY;
    for (m, cw) in codebook.codewords().iter().enumerate() {
        // correlation <y, bpsk(cw)> = sum of +/- y_j
        let score: f64 =
            y.iter().zip(cw).map(|(&yj, &xj)| if xj == 0 { yj } else { -yj }).sum();
        if score > best_score {
            best_score = score;
            best_m = m as u64;
        }
    }
    Ok(message_from_index(best_m, code.msg_len()))
}

/// Exact check-node update `f(a,b) = 2 atanh(tanh(a/2) tanh(b/2))`, computed
/// as `ln((1 + e^{a+b}) / (e^a + e^b))` in the numerically stable split
/// `sign(a) sign(b) min(|a|,|b|) + ln1p(e^{-|a+b|}) - ln1p(e^{-|a-b|})`.
fn check_node_exact(a: f64, b: f64) -> f64 {
    let sign = if (a < 0.0) ^ (b < 0.0) { -1.0 } else { 1.0 };
    let m = sign * a.abs().min(b.abs());
    let corr = (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p();
    (m + corr).clamp(-LLR_MAX, LLR_MAX)
}

/// Min-sum check-node update `sign(a) sign(b) min(|a|, |b|)`.
fn check_node_min_sum(a: f64, b: f64) -> f64 {
    let sign = if (a < 0.0) ^ (b < 0.0) { -1.0 } else { 1.0 };
    sign * a.abs().min(b.abs())
}

/// Variable-node update `g(a, b, u) = b + (1 - 2u) a`.
fn variable_node(a: f64, b: f64, u_hat: u8) -> f64 {
    (b + if u_hat == 0 { a } else { -a }).clamp(-LLR_MAX, LLR_MAX)
}

/// Successive cancellation decoding from channel LLRs.
///
/// Uses the exact tanh-domain check node. Frozen positions are forced to
/// bit 0; the decided information bits are returned in information-set
/// order. An all-frozen code decodes to the empty message.
pub fn sc_decode(llr: &[f64], code: &CodeSpec) -> Result<BitWord> {
    if llr.len() != code.block_len() {
        return Err(Error::validation(format!(
            "LLR word has {} values, expected N={}",
            llr.len(),
            code.block_len()
        )));
    }
    let frozen = code.frozen_mask();
    let mut u_hat = Vec::with_capacity(code.block_len());
    sc_recurse(llr, &frozen, &mut u_hat);
    Ok(code.info_set().iter().map(|&i| u_hat[i - 1]).collect())
}

/// Recursive SC step: decodes the `u` bits covered by this segment (pushed
/// onto `u_hat` in natural order) and returns the segment's re-encoded
/// partial sums.
fn sc_recurse(llr: &[f64], frozen: &[bool], u_hat: &mut Vec<u8>) -> BitWord {
    if llr.len() == 1 {
        let bit = if frozen[0] {
            0
        } else {
            u8::from(llr[0] < 0.0)
        };
        u_hat.push(bit);
        return vec![bit];
    }
    let half = llr.len() / 2;
    // First half sees the XOR of both partial codewords.
    let left_llr: Vec<f64> =
        (0..half).map(|i| check_node_exact(llr[i], llr[i + half])).collect();
    let left_bits = sc_recurse(&left_llr, &frozen[..half], u_hat);
    // Second half combines both observations given the decided left bits.
    let right_llr: Vec<f64> =
        (0..half).map(|i| variable_node(llr[i], llr[i + half], left_bits[i])).collect();
    let right_bits = sc_recurse(&right_llr, &frozen[half..], u_hat);
    let mut out: BitWord =
        left_bits.iter().zip(&right_bits).map(|(a, b)| a ^ b).collect();
    out.extend_from_slice(&right_bits);
    out
}

/// Min-sum belief propagation on the n-stage polar factor graph.
///
/// Messages flood right-to-left then left-to-right once per iteration.
/// Frozen u-side priors are pinned to `+LLR_MAX`; all other messages start
/// at zero. After the final iteration the u-side beliefs are thresholded
/// (non-negative decides bit 0).
pub fn bp_decode(llr: &[f64], code: &CodeSpec, iterations: usize) -> Result<BitWord> {
    if llr.len() != code.block_len() {
        return Err(Error::validation(format!(
            "LLR word has {} values, expected N={}",
            llr.len(),
            code.block_len()
        )));
    }
    if iterations == 0 {
        return Err(Error::validation("bp iterations must be >= 1".to_string()));
    }
    let n = code.block_len();
    let stages = code.log_n();
    let frozen = code.frozen_mask();

    // left[s][i] / right[s][i] live on the node interfaces s = 0 (u side)
    // through s = stages (channel side), flattened row-major.
    let mut left = vec![0.0f64; (stages + 1) * n];
    let mut right = vec![0.0f64; (stages + 1) * n];
    for i in 0..n {
        right[i] = if frozen[i] { LLR_MAX } else { 0.0 };
        left[stages * n + i] = llr[i];
    }

    for _ in 0..iterations {
        // Leftward sweep: update L at interface s from interface s+1.
        for s in (0..stages).rev() {
            let stride = 1usize << s;
            for i in 0..n {
                if i & stride != 0 {
                    continue;
                }
                let j = i + stride;
                let (ls, ls1) = (s * n, (s + 1) * n);
                let l_up = left[ls1 + i];
                let l_down = left[ls1 + j];
                let r_up = right[ls + i];
                let r_down = right[ls + j];
                left[ls + i] = check_node_min_sum(l_up, l_down + r_down).clamp(-LLR_MAX, LLR_MAX);
                left[ls + j] =
                    (check_node_min_sum(r_up, l_up) + l_down).clamp(-LLR_MAX, LLR_MAX);
            }
        }
        // Rightward sweep: update R at interface s+1 from interface s.
        for s in 0..stages {
            let stride = 1usize << s;
            for i in 0..n {
                if i & stride != 0 {
                    continue;
                }
                let j = i + stride;
                let (ls, ls1) = (s * n, (s + 1) * n);
                let l_up = left[ls1 + i];
                let l_down = left[ls1 + j];
                let r_up = right[ls + i];
                let r_down = right[ls + j];
                right[ls1 + i] =
                    check_node_min_sum(r_up, l_down + r_down).clamp(-LLR_MAX, LLR_MAX);
                right[ls1 + j] =
                    (check_node_min_sum(r_up, l_up) + r_down).clamp(-LLR_MAX, LLR_MAX);
            }
        }
    }

    Ok(code
        .info_set()
        .iter()
        .map(|&idx| {
            let i = idx - 1;
            let belief = left[i] + right[i];
            u8::from(belief < 0.0)
        })
        .collect())
}
