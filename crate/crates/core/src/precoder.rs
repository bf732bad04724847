//! Rate-1 convolutional precoder and code specification.
//!
//! A [`CodeSpec`] fixes block length `N`, the rate profile `A` (1-based
//! indices of the data-carrying positions), the connection polynomial of
//! the precoder, and an additive offset word. Encoding is
//! `d -> v` (data insertion), `v -> u` (convolution, `u = v T` with `T` the
//! unit upper-triangular Toeplitz matrix of the polynomial, plus offset),
//! then the polar transform maps `u -> x`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Connection polynomial used throughout the experiments unless a spec
/// overrides it (degree 6, i.e. constraint length 7).
pub const DEFAULT_POLY: [u8; 7] = [1, 0, 1, 1, 0, 1, 1];

#[derive(Debug, Error, PartialEq)]
pub enum SpecError {
    #[error("block length {0} is not a power of two >= 2")]
    BadBlockLen(usize),
    #[error("profile must be nonempty, strictly increasing, 1-based, and <= N; bad entry at {0}")]
    BadProfile(usize),
    #[error("declared k = {declared} but profile has {actual} indices")]
    KMismatch { declared: usize, actual: usize },
    #[error("polynomial must be nonempty, 0/1-valued, and start with 1")]
    BadPoly,
    #[error("offset must be 0/1-valued with one bit per code position")]
    BadOffset,
    #[error("expected {expected} bits, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("bits must be 0 or 1")]
    BadBit,
}

fn check_bits(bits: &[u8]) -> Result<(), SpecError> {
    if bits.iter().any(|&b| b > 1) {
        return Err(SpecError::BadBit);
    }
    Ok(())
}

/// Mirror of the JSON wire format; validated on conversion.
#[derive(Deserialize)]
struct RawSpec {
    n: usize,
    k: usize,
    profile: Vec<usize>,
    poly: Vec<u8>,
    #[serde(default)]
    offset: Vec<u8>,
}

/// Full description of one PAC code.
///
/// Serializes as `{"n": N, "k": K, "profile": [1-based indices],
/// "poly": [bits], "offset": [bits]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct CodeSpec {
    #[serde(rename = "n")]
    block_len: usize,
    #[serde(rename = "k")]
    data_len: usize,
    profile: Vec<usize>,
    poly: Vec<u8>,
    offset: Vec<u8>,
}

impl TryFrom<RawSpec> for CodeSpec {
    type Error = SpecError;

    fn try_from(raw: RawSpec) -> Result<Self, SpecError> {
        if raw.k != raw.profile.len() {
            return Err(SpecError::KMismatch { declared: raw.k, actual: raw.profile.len() });
        }
        let offset = if raw.offset.is_empty() { vec![0; raw.n] } else { raw.offset };
        CodeSpec::new(raw.n, raw.profile, raw.poly, offset)
    }
}

impl CodeSpec {
    /// Build and validate a spec. `profile` holds 1-based positions and
    /// must be strictly increasing; `offset` needs one bit per position.
    pub fn new(
        block_len: usize,
        profile: Vec<usize>,
        poly: Vec<u8>,
        offset: Vec<u8>,
    ) -> Result<Self, SpecError> {
        if block_len < 2 || !block_len.is_power_of_two() {
            return Err(SpecError::BadBlockLen(block_len));
        }
        if profile.is_empty() {
            return Err(SpecError::BadProfile(0));
        }
        let mut prev = 0;
        for &idx in &profile {
            if idx == 0 || idx > block_len || idx <= prev {
                return Err(SpecError::BadProfile(idx));
            }
            prev = idx;
        }
        if poly.is_empty() || poly[0] != 1 || poly.iter().any(|&b| b > 1) {
            return Err(SpecError::BadPoly);
        }
        if offset.len() != block_len || offset.iter().any(|&b| b > 1) {
            return Err(SpecError::BadOffset);
        }
        Ok(Self { block_len, data_len: profile.len(), profile, poly, offset })
    }

    /// Spec with the default polynomial and zero offset.
    pub fn with_default_poly(block_len: usize, profile: Vec<usize>) -> Result<Self, SpecError> {
        let offset = vec![0; block_len];
        Self::new(block_len, profile, DEFAULT_POLY.to_vec(), offset)
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn data_len(&self) -> usize {
        self.data_len
    }

    pub fn rate(&self) -> f64 {
        self.data_len as f64 / self.block_len as f64
    }

    /// 1-based data positions, ascending.
    pub fn profile(&self) -> &[usize] {
        &self.profile
    }

    pub fn poly(&self) -> &[u8] {
        &self.poly
    }

    pub fn offset(&self) -> &[u8] {
        &self.offset
    }

    /// `true` at 0-based position `i` when it carries data.
    pub fn is_info(&self, i: usize) -> bool {
        self.profile.binary_search(&(i + 1)).is_ok()
    }

    /// 0-based info mask of length `N`.
    pub fn info_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.block_len];
        for &idx in &self.profile {
            mask[idx - 1] = true;
        }
        mask
    }
}

/// Scatter `K` data bits onto the profile positions of a length-`N` word.
pub fn insert_data(data: &[u8], spec: &CodeSpec) -> Result<Vec<u8>, SpecError> {
    if data.len() != spec.data_len() {
        return Err(SpecError::LengthMismatch { expected: spec.data_len(), got: data.len() });
    }
    check_bits(data)?;
    let mut v = vec![0u8; spec.block_len()];
    for (&idx, &bit) in spec.profile().iter().zip(data) {
        v[idx - 1] = bit;
    }
    Ok(v)
}

/// Gather the data bits back out of a length-`N` word.
pub fn extract_data(v: &[u8], spec: &CodeSpec) -> Result<Vec<u8>, SpecError> {
    if v.len() != spec.block_len() {
        return Err(SpecError::LengthMismatch { expected: spec.block_len(), got: v.len() });
    }
    check_bits(v)?;
    Ok(spec.profile().iter().map(|&idx| v[idx - 1]).collect())
}

/// Convolution feedback at position `v_prefix.len()`: the contribution of
/// already-chosen bits, `xor_{j>=1} poly[j] * v[i-j]`.
pub fn conv_feedback(poly: &[u8], v_prefix: &[u8]) -> u8 {
    let i = v_prefix.len();
    let mut acc = 0u8;
    for (j, &c) in poly.iter().enumerate().skip(1) {
        if c == 1 && j <= i {
            acc ^= v_prefix[i - j];
        }
    }
    acc
}

/// Full precoder pass `u = v T + offset` via the shift-register recurrence.
pub fn conv_encode(v: &[u8], spec: &CodeSpec) -> Result<Vec<u8>, SpecError> {
    if v.len() != spec.block_len() {
        return Err(SpecError::LengthMismatch { expected: spec.block_len(), got: v.len() });
    }
    check_bits(v)?;
    let mut u = Vec::with_capacity(v.len());
    for i in 0..v.len() {
        u.push(v[i] ^ conv_feedback(spec.poly(), &v[..i]) ^ spec.offset()[i]);
    }
    Ok(u)
}

/// Dense unit upper-triangular Toeplitz matrix of the polynomial:
/// `T[i][i+j] = poly[j]`. Reference form of the precoder for tests and
/// inspection; `conv_encode` is the streaming equivalent of `v T`.
pub fn toeplitz_matrix(poly: &[u8], n: usize) -> Vec<Vec<u8>> {
    let mut t = vec![vec![0u8; n]; n];
    for (i, row) in t.iter_mut().enumerate() {
        for (j, &c) in poly.iter().enumerate() {
            if i + j < n {
                row[i + j] = c;
            }
        }
    }
    t
}
