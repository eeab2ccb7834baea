//! Polar code construction, encoding, and Hamming-metric utilities.
//!
//! A polar code of blocklength `N = 2^n` is defined by the Kronecker power
//! `G_N = [[1,0],[1,1]]^{⊗n}` together with an information index set `A` of
//! size `K`. Encoding multiplies the message by the sub-matrix `G_N(A)` over
//! GF(2). `G_N` is involutory (`G_N · G_N = I mod 2`), which gives a cheap
//! "raw inverse" used as a fallback estimate by the evaluation harness.
//!
//! Indices in `A` are 1-based everywhere they cross an interface (configs,
//! reports, this module's public API); row/column arithmetic is 0-based
//! internally.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A binary word; every element is 0 or 1.
pub type BitWord = Vec<u8>;

/// Largest supported blocklength for generator construction.
pub const MAX_BLOCK_LEN: usize = 1024;
/// Largest message length for brute-force codeword enumeration.
pub const MAX_ENUM_MSG_LEN: usize = 20;

/// How the information index set is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum InfoSetMethod {
    /// Use the given 1-based indices as-is (validated).
    Explicit { indices: Vec<usize> },
    /// Bhattacharyya parameter recursion for a BEC with design erasure
    /// probability `p0`; the K most reliable synthetic channels win.
    Bhattacharyya { p0: f64 },
}

/// Build `G^{⊗n}` by the inductive rule `G^{⊗n} = G ⊗ G^{⊗(n-1)}`,
/// with `G^{⊗0} = [1]`.
pub fn kron_generator(n: usize) -> Result<Vec<BitWord>> {
    if n > MAX_BLOCK_LEN.trailing_zeros() as usize {
        return Err(Error::config(format!(
            "blocklength 2^{n} exceeds the limit of {MAX_BLOCK_LEN}"
        )));
    }
    let mut g: Vec<BitWord> = vec![vec![1]];
    for _ in 0..n {
        let m = g.len();
        let mut next = vec![vec![0u8; 2 * m]; 2 * m];
        for i in 0..m {
            for j in 0..m {
                let v = g[i][j];
                next[i][j] = v; // top-left block
                next[i + m][j] = v; // bottom-left block
                next[i + m][j + m] = v; // bottom-right block
            }
        }
        g = next;
    }
    Ok(g)
}

/// Per-channel Bhattacharyya parameters for a BEC(p0) after `n` polarization
/// levels, in natural channel order (index 0 = channel 1).
pub fn bhattacharyya_parameters(block_len: usize, p0: f64) -> Result<Vec<f64>> {
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::validation(format!("p0 must be in (0,1), got {p0}")));
    }
    let mut z = vec![p0];
    while z.len() < block_len {
        let mut next = Vec::with_capacity(2 * z.len());
        for &zi in &z {
            next.push(2.0 * zi - zi * zi); // minus transform (worse channel)
            next.push(zi * zi); // plus transform (better channel)
        }
        z = next;
    }
    Ok(z)
}

/// Select the information index set for an `(N, K)` code. Returns 1-based,
/// strictly increasing indices.
pub fn select_info_set(
    block_len: usize,
    msg_len: usize,
    method: &InfoSetMethod,
) -> Result<Vec<usize>> {
    if !block_len.is_power_of_two() || block_len > MAX_BLOCK_LEN {
        return Err(Error::validation(format!(
            "blocklength must be a power of two <= {MAX_BLOCK_LEN}, got {block_len}"
        )));
    }
    if msg_len == 0 || msg_len > block_len {
        return Err(Error::validation(format!(
            "message length must satisfy 1 <= K <= N, got K={msg_len}, N={block_len}"
        )));
    }
    match method {
        InfoSetMethod::Explicit { indices } => {
            validate_info_set(block_len, indices)?;
            if indices.len() != msg_len {
                return Err(Error::validation(format!(
                    "explicit information set has {} indices, expected K={msg_len}",
                    indices.len()
                )));
            }
            Ok(indices.clone())
        }
        InfoSetMethod::Bhattacharyya { p0 } => {
            let z = bhattacharyya_parameters(block_len, *p0)?;
            let mut order: Vec<usize> = (0..block_len).collect();
            // Smallest z first; ties broken toward the larger index.
            order.sort_by(|&a, &b| z[a].total_cmp(&z[b]).then(b.cmp(&a)));
            let mut chosen: Vec<usize> = order[..msg_len].iter().map(|&i| i + 1).collect();
            chosen.sort_unstable();
            Ok(chosen)
        }
    }
}

fn validate_info_set(block_len: usize, indices: &[usize]) -> Result<()> {
    for pair in indices.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::validation(
                "information set must be strictly increasing".to_string(),
            ));
        }
    }
    if let Some(&first) = indices.first() {
        if first < 1 {
            return Err(Error::validation("information set indices are 1-based"));
        }
    }
    if let Some(&last) = indices.last() {
        if last > block_len {
            return Err(Error::validation(format!(
                "information set index {last} exceeds blocklength {block_len}"
            )));
        }
    }
    Ok(())
}

/// The `(N, K)` polar code identity: blocklength, information set, and the
/// generator sub-matrix `G_N(A)`.
///
/// Immutable after construction and safe to share across workers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CodeSpecWire", into = "CodeSpecWire")]
pub struct CodeSpec {
    log_n: usize,
    block_len: usize,
    msg_len: usize,
    info_set: Vec<usize>,
    gen_rows: Vec<BitWord>,
}

/// Serialized form of [`CodeSpec`]: the generator sub-matrix is derived, not
/// stored.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CodeSpecWire {
    n: usize,
    k: usize,
    info_set: Vec<usize>,
}

impl From<CodeSpec> for CodeSpecWire {
    fn from(c: CodeSpec) -> Self {
        CodeSpecWire { n: c.log_n, k: c.msg_len, info_set: c.info_set }
    }
}

impl TryFrom<CodeSpecWire> for CodeSpec {
    type Error = Error;
    fn try_from(w: CodeSpecWire) -> Result<Self> {
        let code = CodeSpec::new(w.n, w.info_set)?;
        if code.msg_len != w.k {
            return Err(Error::validation(format!(
                "code spec says k={} but the information set has {} indices",
                w.k, code.msg_len
            )));
        }
        Ok(code)
    }
}

impl CodeSpec {
    /// Build a code from `n` (so `N = 2^n`) and a validated 1-based
    /// information set. An empty set is permitted (the all-frozen code).
    pub fn new(log_n: usize, info_set: Vec<usize>) -> Result<Self> {
        let generator = kron_generator(log_n)?;
        let block_len = generator.len();
        validate_info_set(block_len, &info_set)?;
        let gen_rows = info_set.iter().map(|&i| generator[i - 1].clone()).collect();
        Ok(CodeSpec {
            log_n,
            block_len,
            msg_len: info_set.len(),
            info_set,
            gen_rows,
        })
    }

    /// Select an information set by `method` and build the code.
    pub fn construct(log_n: usize, msg_len: usize, method: &InfoSetMethod) -> Result<Self> {
        let block_len = 1usize
            .checked_shl(log_n as u32)
            .ok_or_else(|| Error::config("blocklength overflow".to_string()))?;
        let info_set = select_info_set(block_len, msg_len, method)?;
        CodeSpec::new(log_n, info_set)
    }

    pub fn log_n(&self) -> usize {
        self.log_n
    }

    /// Blocklength N.
    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// Message length K.
    pub fn msg_len(&self) -> usize {
        self.msg_len
    }

    /// Code rate R = K/N.
    pub fn rate(&self) -> f64 {
        self.msg_len as f64 / self.block_len as f64
    }

    /// The 1-based information index set A.
    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    /// Rows of `G_N` indexed by A (a K x N binary matrix).
    pub fn gen_rows(&self) -> &[BitWord] {
        &self.gen_rows
    }

    /// `true` at 0-based positions that are frozen.
    pub fn frozen_mask(&self) -> Vec<bool> {
        let mut frozen = vec![true; self.block_len];
        for &i in &self.info_set {
            frozen[i - 1] = false;
        }
        frozen
    }

    /// Encode: `x = u_A · G_N(A)` over GF(2).
    pub fn encode(&self, msg: &[u8]) -> Result<BitWord> {
        if msg.len() != self.msg_len {
            return Err(Error::validation(format!(
                "message has {} bits, expected K={}",
                msg.len(),
                self.msg_len
            )));
        }
        let mut x = vec![0u8; self.block_len];
        for (row, &bit) in self.gen_rows.iter().zip(msg) {
            debug_assert!(bit <= 1);
            if bit == 1 {
                for (xj, rj) in x.iter_mut().zip(row) {
                    *xj ^= rj;
                }
            }
        }
        Ok(x)
    }

    /// The uncorrected message estimate from a hard-decision word: since
    /// `G_N` is involutory, `u = x · G_N`; the information positions of `u`
    /// estimate the message with no error correction at all.
    pub fn raw_message_estimate(&self, y_hard: &[u8]) -> Result<BitWord> {
        if y_hard.len() != self.block_len {
            return Err(Error::validation(format!(
                "word has {} bits, expected N={}",
                y_hard.len(),
                self.block_len
            )));
        }
        let mut u = y_hard.to_vec();
        polar_transform(&mut u);
        Ok(self.info_set.iter().map(|&i| u[i - 1]).collect())
    }

    /// Minimum distance of the code, by brute force over the codebook.
    /// For a linear code this is the minimum nonzero codeword weight.
    pub fn min_distance(&self) -> Result<usize> {
        if self.msg_len == 0 {
            return Err(Error::config(
                "minimum distance is undefined for an empty code".to_string(),
            ));
        }
        if self.msg_len > MAX_ENUM_MSG_LEN {
            return Err(Error::config(format!(
                "codebook enumeration is limited to K <= {MAX_ENUM_MSG_LEN}, got K={}",
                self.msg_len
            )));
        }
        let mut best = usize::MAX;
        for m in 1..(1u64 << self.msg_len) {
            let msg = message_from_index(m, self.msg_len);
            let weight = self.encode(&msg)?.iter().map(|&b| b as usize).sum();
            best = best.min(weight);
        }
        Ok(best)
    }
}

/// In-place multiplication by `G_N` (the polar butterfly network). Since
/// `G_N` is involutory, the same transform is its own inverse.
pub fn polar_transform(bits: &mut [u8]) {
    let n = bits.len();
    debug_assert!(n.is_power_of_two());
    let mut stride = 1;
    while stride < n {
        for i in 0..n {
            if i & stride == 0 {
                bits[i] ^= bits[i + stride];
            }
        }
        stride <<= 1;
    }
}

/// Hamming distance between two equal-length binary words.
pub fn hamming_distance(a: &[u8], b: &[u8]) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::validation(format!(
            "hamming distance needs equal lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count())
}

/// The message for codebook index `m`, most significant bit first, so that
/// index order is lexicographic order on bit words.
pub fn message_from_index(m: u64, msg_len: usize) -> BitWord {
    (0..msg_len).map(|i| ((m >> (msg_len - 1 - i)) & 1) as u8).collect()
}

/// Inverse of [`message_from_index`].
pub fn message_index(msg: &[u8]) -> u64 {
    msg.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
}

/// A fully enumerated codebook with the quantities bounded-distance decoding
/// needs: all `2^K` codewords (in lexicographic message order), the minimum
/// distance, and the packing radius `r = floor((d_min - 1) / 2)`.
#[derive(Debug, Clone)]
pub struct Codebook {
    code: CodeSpec,
    codewords: Vec<BitWord>,
    min_distance: usize,
    radius: usize,
}

impl Codebook {
    pub fn new(code: &CodeSpec) -> Result<Self> {
        let k = code.msg_len();
        if k == 0 {
            return Err(Error::config("cannot enumerate an empty code".to_string()));
        }
        if k > MAX_ENUM_MSG_LEN {
            return Err(Error::config(format!(
                "codebook enumeration is limited to K <= {MAX_ENUM_MSG_LEN}, got K={k}"
            )));
        }
        let mut codewords = Vec::with_capacity(1 << k);
        let mut min_weight = usize::MAX;
        for m in 0..(1u64 << k) {
            let x = code.encode(&message_from_index(m, k))?;
            if m != 0 {
                min_weight = min_weight.min(x.iter().map(|&b| b as usize).sum());
            }
            codewords.push(x);
        }
        Ok(Codebook {
            code: code.clone(),
            codewords,
            min_distance: min_weight,
            radius: (min_weight - 1) / 2,
        })
    }

    pub fn code(&self) -> &CodeSpec {
        &self.code
    }

    /// Codeword for message index `m` (lexicographic message order).
    pub fn codeword(&self, m: u64) -> &BitWord {
        &self.codewords[m as usize]
    }

    pub fn codewords(&self) -> &[BitWord] {
        &self.codewords
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min_distance(&self) -> usize {
        self.min_distance
    }

    /// Bounded-distance searching radius `r = floor((d_min - 1) / 2)`.
    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Bounded-distance decoding: the unique message whose codeword lies
    /// within Hamming distance `r` of `y_hard`, or `None` when no codeword
    /// does (the decoder's "error" outcome).
    pub fn bounded_distance_decode(&self, y_hard: &[u8]) -> Result<Option<BitWord>> {
        if y_hard.len() != self.code.block_len() {
            return Err(Error::validation(format!(
                "word has {} bits, expected N={}",
                y_hard.len(),
                self.code.block_len()
            )));
        }
        for (m, cw) in self.codewords.iter().enumerate() {
            let d = cw.iter().zip(y_hard).filter(|(a, b)| a != b).count();
            if d <= self.radius {
                return Ok(Some(message_from_index(m as u64, self.code.msg_len())));
            }
        }
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code_8_4() -> CodeSpec {
        CodeSpec::construct(3, 4, &InfoSetMethod::Bhattacharyya { p0: 0.5 }).unwrap()
    }

    fn code_16_8() -> CodeSpec {
        CodeSpec::construct(4, 8, &InfoSetMethod::Bhattacharyya { p0: 0.5 }).unwrap()
    }

    #[test]
    fn kron_base_cases() {
        assert_eq!(kron_generator(0).unwrap(), vec![vec![1]]);
        assert_eq!(kron_generator(1).unwrap(), vec![vec![1, 0], vec![1, 1]]);
        let g2 = kron_generator(2).unwrap();
        assert_eq!(
            g2,
            vec![
                vec![1, 0, 0, 0],
                vec![1, 1, 0, 0],
                vec![1, 0, 1, 0],
                vec![1, 1, 1, 1],
            ]
        );
    }

    #[test]
    fn kron_size_limit() {
        assert!(matches!(kron_generator(11), Err(Error::Config(_))));
    }

    #[test]
    fn generator_is_lower_triangular_with_unit_diagonal() {
        for n in 0..=5 {
            let g = kron_generator(n).unwrap();
            for (i, row) in g.iter().enumerate() {
                assert_eq!(row[i], 1);
                for (j, &v) in row.iter().enumerate() {
                    if j > i {
                        assert_eq!(v, 0, "entry ({i},{j}) above the diagonal");
                    }
                }
            }
        }
    }

    #[test]
    fn generator_is_involutory() {
        for n in 1..=4 {
            let g = kron_generator(n).unwrap();
            let size = g.len();
            for i in 0..size {
                for j in 0..size {
                    let mut acc = 0u8;
                    for k in 0..size {
                        acc ^= g[i][k] & g[k][j];
                    }
                    assert_eq!(acc, u8::from(i == j), "G*G != I at ({i},{j}), n={n}");
                }
            }
        }
    }

    #[test]
    fn bhattacharyya_8_4_matches_hand_recursion() {
        let z = bhattacharyya_parameters(8, 0.5).unwrap();
        // Three exact halving levels from z = 1/2: values are dyadic rationals.
        let expected = [
            255.0 / 256.0,
            225.0 / 256.0,
            207.0 / 256.0,
            81.0 / 256.0,
            175.0 / 256.0,
            49.0 / 256.0,
            31.0 / 256.0,
            1.0 / 256.0,
        ];
        for (a, b) in z.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
        let a = select_info_set(8, 4, &InfoSetMethod::Bhattacharyya { p0: 0.5 }).unwrap();
        assert_eq!(a, vec![4, 6, 7, 8]);
    }

    #[test]
    fn trivial_full_code_uses_all_channels() {
        let a = select_info_set(2, 2, &InfoSetMethod::Bhattacharyya { p0: 0.5 }).unwrap();
        assert_eq!(a, vec![1, 2]);
        let a = select_info_set(2, 2, &InfoSetMethod::Explicit { indices: vec![1, 2] }).unwrap();
        assert_eq!(a, vec![1, 2]);
    }

    #[test]
    fn explicit_16_8_round_trips() {
        let indices = vec![8, 10, 11, 12, 13, 14, 15, 16];
        let a =
            select_info_set(16, 8, &InfoSetMethod::Explicit { indices: indices.clone() }).unwrap();
        assert_eq!(a, indices);
        // The default construction lands on the same set.
        assert_eq!(code_16_8().info_set(), &indices[..]);
    }

    #[test]
    fn explicit_rejects_bad_sets() {
        for bad in [vec![4, 4, 6, 7], vec![0, 1, 2, 3], vec![4, 6, 7, 9]] {
            assert!(select_info_set(8, 4, &InfoSetMethod::Explicit { indices: bad }).is_err());
        }
        assert!(
            select_info_set(8, 3, &InfoSetMethod::Explicit { indices: vec![4, 6, 7, 8] }).is_err()
        );
    }

    #[test]
    fn encode_zero_is_zero() {
        let code = code_8_4();
        assert_eq!(code.encode(&[0, 0, 0, 0]).unwrap(), vec![0u8; 8]);
    }

    #[test]
    fn encode_8_4_worked_example() {
        // u_A = (0,0,1,1) on A = {4,6,7,8} -> x = 01010101.
        let code = code_8_4();
        assert_eq!(code.info_set(), &[4, 6, 7, 8]);
        assert_eq!(code.encode(&[0, 0, 1, 1]).unwrap(), vec![0, 1, 0, 1, 0, 1, 0, 1]);
    }

    #[test]
    fn encode_16_8_last_row_is_all_ones() {
        let code = code_16_8();
        let pos = code.info_set().iter().position(|&i| i == 16).unwrap();
        let mut msg = vec![0u8; 8];
        msg[pos] = 1;
        assert_eq!(code.encode(&msg).unwrap(), vec![1u8; 16]);
    }

    #[test]
    fn encode_rejects_length_mismatch() {
        assert!(matches!(code_8_4().encode(&[0, 1]), Err(Error::Validation(_))));
    }

    #[test]
    fn encode_is_linear_exhaustively() {
        for code in [code_8_4(), code_16_8()] {
            let k = code.msg_len();
            for a in 0..(1u64 << k) {
                for b in 0..(1u64 << k) {
                    let ma = message_from_index(a, k);
                    let mb = message_from_index(b, k);
                    let sum: BitWord = ma.iter().zip(&mb).map(|(x, y)| x ^ y).collect();
                    let lhs = code.encode(&sum).unwrap();
                    let rhs: BitWord = code
                        .encode(&ma)
                        .unwrap()
                        .iter()
                        .zip(&code.encode(&mb).unwrap())
                        .map(|(x, y)| x ^ y)
                        .collect();
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn polar_transform_is_involutory_and_matches_encode() {
        let code = code_16_8();
        for m in 0..256u64 {
            let msg = message_from_index(m, 8);
            let x = code.encode(&msg).unwrap();
            let mut u = vec![0u8; 16];
            for (pos, &i) in code.info_set().iter().enumerate() {
                u[i - 1] = msg[pos];
            }
            let mut via_transform = u.clone();
            polar_transform(&mut via_transform);
            assert_eq!(via_transform, x);
            let mut back = via_transform;
            polar_transform(&mut back);
            assert_eq!(back, u);
            assert_eq!(code.raw_message_estimate(&x).unwrap(), msg);
        }
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming_distance(&[0, 0, 0, 0], &[0, 0, 0, 0]).unwrap(), 0);
        assert_eq!(hamming_distance(&[0, 1, 0, 1], &[1, 1, 1, 1]).unwrap(), 2);
        let a = [1u8, 0, 1, 1, 0, 0, 1, 0];
        let comp: Vec<u8> = a.iter().map(|&b| 1 - b).collect();
        assert_eq!(hamming_distance(&a, &comp).unwrap(), a.len());
        assert!(hamming_distance(&[0, 1], &[0]).is_err());
    }

    #[test]
    fn min_distance_8_4_is_4() {
        assert_eq!(code_8_4().min_distance().unwrap(), 4);
    }

    #[test]
    fn min_distance_2_2_is_1() {
        let code = CodeSpec::construct(1, 2, &InfoSetMethod::Explicit { indices: vec![1, 2] })
            .unwrap();
        assert_eq!(code.min_distance().unwrap(), 1);
    }

    #[test]
    fn min_distance_equals_pairwise_brute_force() {
        for code in [code_8_4(), code_16_8()] {
            let cb = Codebook::new(&code).unwrap();
            let mut best = usize::MAX;
            for i in 0..cb.len() {
                for j in (i + 1)..cb.len() {
                    best = best
                        .min(hamming_distance(&cb.codewords()[i], &cb.codewords()[j]).unwrap());
                }
            }
            assert_eq!(code.min_distance().unwrap(), best);
            assert_eq!(cb.min_distance(), best);
        }
    }

    #[test]
    fn min_distance_guards() {
        let code = CodeSpec::new(3, vec![]).unwrap();
        assert!(matches!(code.min_distance(), Err(Error::Config(_))));
    }

    #[test]
    fn hamming_balls_are_disjoint() {
        for code in [code_8_4(), code_16_8()] {
            let cb = Codebook::new(&code).unwrap();
            let r = cb.radius();
            for i in 0..cb.len() {
                for j in (i + 1)..cb.len() {
                    let d =
                        hamming_distance(&cb.codewords()[i], &cb.codewords()[j]).unwrap();
                    assert!(d > 2 * r, "balls of radius {r} overlap at distance {d}");
                }
            }
        }
    }

    #[test]
    fn bounded_distance_recovers_codewords_and_single_flips() {
        let cb = Codebook::new(&code_8_4()).unwrap();
        assert_eq!(cb.min_distance(), 4);
        assert_eq!(cb.radius(), 1);
        for m in 0..16u64 {
            let msg = message_from_index(m, 4);
            let x = cb.codeword(m).clone();
            assert_eq!(cb.bounded_distance_decode(&x).unwrap(), Some(msg.clone()));
            for flip in 0..8 {
                let mut y = x.clone();
                y[flip] ^= 1;
                assert_eq!(cb.bounded_distance_decode(&y).unwrap(), Some(msg.clone()));
            }
        }
    }

    #[test]
    fn bounded_distance_error_branch_exists() {
        // Exhaustively search length-8 words for one at distance >= 2 from
        // every codeword; the decoder must report the error outcome there.
        let cb = Codebook::new(&code_8_4()).unwrap();
        let mut found = 0usize;
        for w in 0..256u32 {
            let y: BitWord = (0..8).map(|i| ((w >> i) & 1) as u8).collect();
            let min_d = cb
                .codewords()
                .iter()
                .map(|cw| hamming_distance(cw, &y).unwrap())
                .min()
                .unwrap();
            if min_d > cb.radius() {
                found += 1;
                assert_eq!(cb.bounded_distance_decode(&y).unwrap(), None);
            }
        }
        assert!(found > 0, "every length-8 word is within the packing radius?");
    }

    #[test]
    fn bounded_distance_never_returns_a_wrong_message() {
        use rand::Rng;
        let cb = Codebook::new(&code_16_8()).unwrap();
        let mut rng = crate::rng::derive_rng(7, &[99]);
        for _ in 0..2000 {
            let y: BitWord = (0..16).map(|_| rng.random_range(0..=1) as u8).collect();
            if let Some(msg) = cb.bounded_distance_decode(&y).unwrap() {
                let x = cb.code().encode(&msg).unwrap();
                assert!(hamming_distance(&x, &y).unwrap() <= cb.radius());
            }
        }
    }

    #[test]
    fn code_spec_serde_round_trip() {
        let code = code_16_8();
        let json = serde_json::to_string(&code).unwrap();
        assert!(json.contains("\"info_set\""));
        let back: CodeSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, code);
    }

    #[test]
    fn message_index_round_trip() {
        for m in 0..64u64 {
            assert_eq!(message_index(&message_from_index(m, 6)), m);
        }
        assert_eq!(message_from_index(0b0011, 4), vec![0, 0, 1, 1]);
    }
}
