//! Polar transform and successive-cancellation demapping.
//!
//! The transform is `x = u F^{tensor n}` with `F = [[1,0],[1,1]]` in natural
//! bit order (no bit-reversal). Decoding works on LLRs in the natural-log
//! domain with the exact check-node rule
//! `f(a,b) = 2 atanh(tanh(a/2) tanh(b/2))` and the variable-node rule
//! `g(a,b,u) = b + (1-2u) a`.
//!
//! [`ScDemapper`] exposes the bit-channel LLR of the next undecided input
//! bit given the decisions so far, and supports rewinding those decisions —
//! the access pattern of a sequential (Fano) tree search. Internally it
//! keeps one LLR buffer per tree level as a checkpoint of the current
//! root-to-leaf path, so a rewind only recomputes buffers whose inputs
//! actually changed.
//!
//! ```
//! use paclab_core::polar::ScDemapper;
//!
//! let mut d = ScDemapper::new(vec![2.0, 2.0]).unwrap();
//! let l0 = d.next_llr().unwrap(); // about 1.325: both halves must agree
//! d.push(0).unwrap();
//! assert_eq!(d.next_llr().unwrap(), 4.0); // evidence adds up
//! d.rewind(0).unwrap();
//! assert_eq!(d.next_llr().unwrap(), l0);
//! ```

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PolarError {
    #[error("length {0} is not a power of two >= 2")]
    BadLength(usize),
    #[error("bits must be 0 or 1, got {0}")]
    BadBit(u8),
    #[error("all {0} input bits are already decided")]
    Exhausted(usize),
    #[error("cannot rewind to {target}, only {decided} bits decided")]
    RewindPastEnd { target: usize, decided: usize },
}

fn check_block_len(len: usize) -> Result<(), PolarError> {
    if len < 2 || !len.is_power_of_two() {
        return Err(PolarError::BadLength(len));
    }
    Ok(())
}

/// In-place polar transform; involutive, so it is its own inverse.
pub fn polar_transform_in_place(bits: &mut [u8]) {
    let n = bits.len();
    let mut block = n;
    while block > 1 {
        let half = block / 2;
        let mut start = 0;
        while start < n {
            for j in start..start + half {
                bits[j] ^= bits[j + half];
            }
            start += block;
        }
        block = half;
    }
}

/// `x = u F^{tensor n}`. Errors unless the length is a power of two >= 2.
pub fn polar_transform(u: &[u8]) -> Result<Vec<u8>, PolarError> {
    check_block_len(u.len())?;
    for &b in u {
        if b > 1 {
            return Err(PolarError::BadBit(b));
        }
    }
    let mut x = u.to_vec();
    polar_transform_in_place(&mut x);
    Ok(x)
}

/// Numerically stable `ln(1 + exp(x))` for `x <= 0`.
#[inline]
fn ln1p_exp_neg(x: f64) -> f64 {
    x.exp().ln_1p()
}

/// Exact check-node combination `2 atanh(tanh(a/2) tanh(b/2))`, evaluated
/// in the overflow-free form `sign(a)sign(b) min(|a|,|b|) +
/// ln1p(e^{-|a+b|}) - ln1p(e^{-|a-b|})`. Infinite inputs behave as certain
/// bits: `f(inf, b) = b`, `f(-inf, b) = -b`.
pub fn f_llr(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    if a.is_infinite() {
        return if a > 0.0 { b } else { -b };
    }
    if b.is_infinite() {
        return if b > 0.0 { a } else { -a };
    }
    let sign = if (a < 0.0) != (b < 0.0) { -1.0 } else { 1.0 };
    sign * a.abs().min(b.abs()) + ln1p_exp_neg(-(a + b).abs()) - ln1p_exp_neg(-(a - b).abs())
}

/// Variable-node combination `b + (1-2u) a`. Opposing certainties
/// (`+inf` against `-inf`) only arise below an impossible branch; they are
/// reported as an erasure rather than NaN.
pub fn g_llr(a: f64, b: f64, u: u8) -> f64 {
    let t = if u == 1 { -a } else { a };
    if t.is_infinite() && b.is_infinite() && (t > 0.0) != (b > 0.0) {
        return 0.0;
    }
    b + t
}

/// Hard decision with ties resolved to 0.
pub fn hard_decision(llr: f64) -> u8 {
    u8::from(llr < 0.0)
}

/// One cached LLR buffer: the values for `node` at its level, valid until a
/// decision strictly before the node's first leaf changes.
#[derive(Debug, Clone)]
struct LevelCache {
    node: usize,
    valid: bool,
    llrs: Vec<f64>,
}

/// Successive-cancellation demapper with rewind.
#[derive(Debug, Clone)]
pub struct ScDemapper {
    n: usize,
    channel_llrs: Vec<f64>,
    decided: Vec<u8>,
    /// `levels[l]` caches the level-`l+1` node on the current path
    /// (`l = 0` holds blocks of `N/2`, the last holds a single leaf LLR).
    levels: Vec<LevelCache>,
    scratch: Vec<u8>,
}

impl ScDemapper {
    pub fn new(channel_llrs: Vec<f64>) -> Result<Self, PolarError> {
        check_block_len(channel_llrs.len())?;
        let block_len = channel_llrs.len();
        let n = block_len.trailing_zeros() as usize;
        let levels = (1..=n)
            .map(|lev| LevelCache { node: 0, valid: false, llrs: vec![0.0; block_len >> lev] })
            .collect();
        Ok(Self {
            n,
            channel_llrs,
            decided: Vec::with_capacity(block_len),
            levels,
            scratch: vec![0; block_len / 2],
        })
    }

    pub fn block_len(&self) -> usize {
        self.channel_llrs.len()
    }

    pub fn decided_len(&self) -> usize {
        self.decided.len()
    }

    pub fn decisions(&self) -> &[u8] {
        &self.decided
    }

    /// Bit-channel LLR of input bit `decided_len()` given the decisions so
    /// far: `ln W(y, u^{i-1} | u_i = 0) / W(y, u^{i-1} | u_i = 1)`.
    pub fn next_llr(&mut self) -> Result<f64, PolarError> {
        let i = self.decided.len();
        if i >= self.block_len() {
            return Err(PolarError::Exhausted(self.block_len()));
        }
        let n = self.n;
        for lev in 1..=n {
            let node = i >> (n - lev);
            if self.levels[lev - 1].valid && self.levels[lev - 1].node == node {
                continue;
            }
            let half = self.block_len() >> lev;
            // Split the caches so we can read the parent while writing the child.
            let (upper, lower) = self.levels.split_at_mut(lev - 1);
            let parent: &[f64] = if lev == 1 { &self.channel_llrs } else { &upper[lev - 2].llrs };
            let child = &mut lower[0];
            if node & 1 == 0 {
                for j in 0..half {
                    child.llrs[j] = f_llr(parent[j], parent[j + half]);
                }
            } else {
                // Partial sums of the decided left half of the parent block.
                let parent_start = (node >> 1) << (n - lev + 1);
                let ps = &mut self.scratch[..half];
                ps.copy_from_slice(&self.decided[parent_start..parent_start + half]);
                polar_transform_in_place(ps);
                for j in 0..half {
                    child.llrs[j] = g_llr(parent[j], parent[j + half], ps[j]);
                }
            }
            child.node = node;
            child.valid = true;
        }
        Ok(self.levels[n - 1].llrs[0])
    }

    /// Commit the next input bit.
    pub fn push(&mut self, u: u8) -> Result<(), PolarError> {
        if u > 1 {
            return Err(PolarError::BadBit(u));
        }
        if self.decided.len() >= self.block_len() {
            return Err(PolarError::Exhausted(self.block_len()));
        }
        self.decided.push(u);
        Ok(())
    }

    /// Forget decisions from position `len` on. Cached buffers stay valid
    /// exactly when every decision they consumed is untouched.
    pub fn rewind(&mut self, len: usize) -> Result<(), PolarError> {
        if len > self.decided.len() {
            return Err(PolarError::RewindPastEnd { target: len, decided: self.decided.len() });
        }
        self.decided.truncate(len);
        let n = self.n;
        for lev in 1..=n {
            let cache = &mut self.levels[lev - 1];
            if cache.valid && (cache.node << (n - lev)) > len {
                cache.valid = false;
            }
        }
        Ok(())
    }
}

/// All `N` bit-channel LLRs of a genie-aided pass with the all-zero input,
/// in place. Equivalent to an [`ScDemapper`] run that pushes 0 everywhere,
/// but one butterfly: under all-zero decisions every partial sum is zero,
/// so the g-rule degenerates to addition.
pub fn genie_llrs_in_place(buf: &mut [f64]) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    let mut block = n;
    while block > 1 {
        let half = block / 2;
        let mut start = 0;
        while start < n {
            for j in start..start + half {
                let (a, b) = (buf[j], buf[j + half]);
                buf[j] = f_llr(a, b);
                buf[j + half] = a + b;
            }
            start += block;
        }
        block = half;
    }
}

/// Allocating wrapper around [`genie_llrs_in_place`].
pub fn genie_llrs(channel_llrs: &[f64]) -> Result<Vec<f64>, PolarError> {
    check_block_len(channel_llrs.len())?;
    let mut buf = channel_llrs.to_vec();
    genie_llrs_in_place(&mut buf);
    Ok(buf)
}
