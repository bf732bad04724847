//! Fano sequential decoding over the convolutionally precoded polar tree.
//!
//! The search engine is the classic single-pointer Fano algorithm: move to
//! the best untried child whose path metric clears a running threshold `T`
//! (a multiple of the spacing `delta`), tighten `T` on first visits, step
//! back when the predecessor still clears `T`, and otherwise lower `T` by
//! `delta`. It is generic over a [`SearchTree`] so the unit tests can drive
//! it with hand-assigned metrics and compare against a hand-worked trace.
//!
//! Branch metrics live in the log2 domain: an information branch scores
//! `1 - log2(1 + exp(-(1-2u) L)) - b_i` from the natural-log LLR `L` the
//! demapper computes for input position `i`, where `b_i` is a per-bit rate
//! bias (the bit channel's cutoff rate under the default policy, zero on
//! frozen positions).

use thiserror::Error;

use crate::cutoff::ChunkRates;
use crate::polar::{PolarError, ScDemapper};
use crate::precoder::{conv_feedback, extract_data, CodeSpec};

#[derive(Debug, Error, PartialEq)]
pub enum FanoError {
    #[error("delta must be positive and finite, got {0}")]
    BadDelta(f64),
    #[error("bias vector has length {got}, expected {expected}")]
    BiasLength { expected: usize, got: usize },
    #[error("bias[{0}] is not finite")]
    BadBias(usize),
    #[error("llrs[{0}] is NaN")]
    NanLlr(usize),
    #[error("chunk {chunk} out of range for {chunks} chunks")]
    ChunkOutOfRange { chunk: usize, chunks: usize },
    #[error("truth vector has length {got}, expected {expected}")]
    TruthLength { expected: usize, got: usize },
    #[error("chunk table of depth {k} does not fit block length {n}")]
    ChunkMismatch { k: usize, n: usize },
    #[error(transparent)]
    Polar(#[from] PolarError),
}

/// Metric of one branch: `1 - log2(1 + e^{-(1-2u) L}) - bias`, computed
/// without overflow for any LLR including `±inf`.
pub fn branch_metric(llr: f64, u: u8, bias: f64) -> f64 {
    let s = if u == 0 { llr } else { -llr };
    // log2(1 + e^{-s}), split by sign so the exponent never explodes.
    let log2_denom = if s >= 0.0 {
        (-s).exp().ln_1p() / std::f64::consts::LN_2
    } else {
        (-s + s.exp().ln_1p()) / std::f64::consts::LN_2
    };
    1.0 - log2_denom - bias
}

/// One outgoing branch of a search-tree node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub bit: u8,
    pub metric: f64,
}

/// Children of the current node, best first; frozen positions have no
/// second branch. Equal metrics put bit 0 first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branches {
    pub primary: Branch,
    pub secondary: Option<Branch>,
}

/// Tree interface the Fano engine walks. `branches` may be called
/// repeatedly at the same node (threshold retries) and must be consistent;
/// it is never called at full depth.
pub trait SearchTree {
    /// Number of decisions from this tree's origin to a leaf.
    fn depth(&self) -> usize;
    fn branches(&mut self) -> Branches;
    fn push(&mut self, bit: u8);
    fn pop(&mut self);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    Forward,
    Back,
    Lower,
}

/// One line of the move log: the move, the depth after it, the branch bit
/// for forward moves, the threshold after the move (tightening included),
/// and the path metric of the node the engine now stands on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEvent {
    pub kind: MoveKind,
    pub depth: usize,
    pub bit: Option<u8>,
    pub t: f64,
    pub gamma: f64,
}

/// Raw engine result over branch labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    /// Labels of the deepest path held at termination.
    pub path: Vec<u8>,
    /// Reached full depth.
    pub success: bool,
    /// Search abandoned: visit budget hit, or no leaf is reachable past
    /// metric barriers of `-inf`.
    pub budget_exhausted: bool,
    pub visits_total: u64,
    /// Forward moves into each depth (0-based decision index).
    pub visits_per_depth: Vec<u64>,
    /// Lowest path metric along the final path (origin included).
    pub gamma_min: f64,
    /// Path metric at termination depth.
    pub final_metric: f64,
    /// Lowest threshold used.
    pub t_min: f64,
}

/// Classic Fano search. Visits count forward moves; `max_visits` bounds
/// them. `trace`, when supplied, receives every move in order.
pub fn fano_search<T: SearchTree>(
    tree: &mut T,
    delta: f64,
    max_visits: Option<u64>,
    mut trace: Option<&mut Vec<TraceEvent>>,
) -> SearchResult {
    let depth = tree.depth();
    let mut path: Vec<u8> = Vec::with_capacity(depth);
    let mut ranks: Vec<u8> = Vec::with_capacity(depth);
    let mut gammas: Vec<f64> = Vec::with_capacity(depth);
    let mut visits_per_depth = vec![0u64; depth];
    let mut visits_total = 0u64;
    let mut t = 0.0f64;
    let mut t_min = 0.0f64;
    let mut next_rank = 0u8;
    // Lowest finite candidate metric examined so far. Once T sinks a full
    // step below it, every finite branch already clears T, so another
    // lowering proves the remaining walls are -inf and no leaf exists.
    let mut m_floor = 0.0f64;
    let mut success = depth == 0;
    let mut budget_exhausted = false;

    while !success {
        let gamma_cur = gammas.last().copied().unwrap_or(0.0);
        let br = tree.branches();
        for b in std::iter::once(&br.primary).chain(br.secondary.as_ref()) {
            let g = gamma_cur + b.metric;
            if g.is_finite() && g < m_floor {
                m_floor = g;
            }
        }
        let cand = match next_rank {
            0 => Some(br.primary),
            1 => br.secondary,
            _ => None,
        };
        if let Some(b) = cand {
            let g_new = gamma_cur + b.metric;
            if g_new >= t {
                let first_visit = gamma_cur < t + delta;
                tree.push(b.bit);
                path.push(b.bit);
                ranks.push(next_rank);
                gammas.push(g_new);
                visits_per_depth[path.len() - 1] += 1;
                visits_total += 1;
                if first_visit {
                    t += delta * ((g_new - t) / delta).floor();
                }
                if let Some(ev) = trace.as_deref_mut() {
                    ev.push(TraceEvent {
                        kind: MoveKind::Forward,
                        depth: path.len(),
                        bit: Some(b.bit),
                        t,
                        gamma: g_new,
                    });
                }
                next_rank = 0;
                if path.len() == depth {
                    success = true;
                } else if max_visits.is_some_and(|m| visits_total >= m) {
                    budget_exhausted = true;
                    break;
                }
                continue;
            }
        }
        let gamma_prev = match path.len() {
            0 => f64::NEG_INFINITY,
            1 => 0.0,
            l => gammas[l - 2],
        };
        if gamma_prev >= t {
            tree.pop();
            path.pop();
            gammas.pop();
            next_rank = ranks.pop().expect("backed over the origin") + 1;
            if let Some(ev) = trace.as_deref_mut() {
                ev.push(TraceEvent {
                    kind: MoveKind::Back,
                    depth: path.len(),
                    bit: None,
                    t,
                    gamma: gammas.last().copied().unwrap_or(0.0),
                });
            }
        } else {
            t -= delta;
            t_min = t_min.min(t);
            next_rank = 0;
            if let Some(ev) = trace.as_deref_mut() {
                ev.push(TraceEvent {
                    kind: MoveKind::Lower,
                    depth: path.len(),
                    bit: None,
                    t,
                    gamma: gamma_cur,
                });
            }
            if t < m_floor - 2.5 * delta {
                budget_exhausted = true;
                break;
            }
        }
    }
    let gamma_min = gammas.iter().copied().fold(0.0f64, f64::min);
    SearchResult {
        final_metric: gammas.last().copied().unwrap_or(0.0),
        success,
        budget_exhausted,
        visits_total,
        visits_per_depth,
        gamma_min,
        t_min,
        path,
    }
}

/// Decoder parameters: threshold spacing, per-bit metric bias, and an
/// optional forward-move budget.
#[derive(Debug, Clone, PartialEq)]
pub struct FanoConfig {
    pub delta: f64,
    /// Length-N bias vector in log2 units.
    pub bias: Vec<f64>,
    pub max_visits: Option<u64>,
}

impl FanoConfig {
    /// No rate bias anywhere.
    pub fn zero_bias(block_len: usize, delta: f64) -> Self {
        Self { delta, bias: vec![0.0; block_len], max_visits: None }
    }

    /// Bias each data position by its own bit-channel cutoff rate
    /// (`rates[i]` for 0-based position `i`); frozen positions get zero.
    pub fn from_bit_rates(spec: &CodeSpec, rates: &[f64], delta: f64) -> Result<Self, FanoError> {
        if rates.len() != spec.block_len() {
            return Err(FanoError::BiasLength { expected: spec.block_len(), got: rates.len() });
        }
        let bias =
            (0..spec.block_len()).map(|i| if spec.is_info(i) { rates[i] } else { 0.0 }).collect();
        Ok(Self { delta, bias, max_visits: None })
    }

    /// Bias each data position by its chunk's cutoff rate: a per-chunk
    /// constant over runs of `N / 2^k` consecutive positions.
    pub fn from_chunk_rates(
        spec: &CodeSpec,
        rates: &ChunkRates,
        delta: f64,
    ) -> Result<Self, FanoError> {
        let n = spec.block_len();
        let shift = n.trailing_zeros() as usize;
        if rates.k > shift || rates.rates.len() != 1 << rates.k {
            return Err(FanoError::ChunkMismatch { k: rates.k, n });
        }
        let bias = (0..n)
            .map(|i| if spec.is_info(i) { rates.rates[i >> (shift - rates.k)] } else { 0.0 })
            .collect();
        Ok(Self { delta, bias, max_visits: None })
    }

    pub fn with_max_visits(mut self, max_visits: u64) -> Self {
        self.max_visits = Some(max_visits);
        self
    }

    fn validate(&self, block_len: usize) -> Result<(), FanoError> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(FanoError::BadDelta(self.delta));
        }
        if self.bias.len() != block_len {
            return Err(FanoError::BiasLength { expected: block_len, got: self.bias.len() });
        }
        if let Some(i) = self.bias.iter().position(|b| !b.is_finite()) {
            return Err(FanoError::BadBias(i));
        }
        Ok(())
    }
}

/// The PAC decoding tree: branch labels are precoder inputs `v_i`, branch
/// metrics come from the demapper LLR of `u_i = v_i + feedback + offset`.
pub struct PacTree<'a> {
    spec: &'a CodeSpec,
    bias: &'a [f64],
    demapper: ScDemapper,
    v: Vec<u8>,
    base: usize,
    horizon: usize,
}

impl<'a> PacTree<'a> {
    pub fn new(spec: &'a CodeSpec, llrs: &[f64], bias: &'a [f64]) -> Result<Self, FanoError> {
        Self::with_prefix(spec, llrs, bias, &[], spec.block_len())
    }

    /// Tree rooted after a forced prefix of true decisions, searching up to
    /// `horizon` (exclusive 1-based position, `<= N`).
    pub fn with_prefix(
        spec: &'a CodeSpec,
        llrs: &[f64],
        bias: &'a [f64],
        v_prefix: &[u8],
        horizon: usize,
    ) -> Result<Self, FanoError> {
        if let Some(i) = llrs.iter().position(|l| l.is_nan()) {
            return Err(FanoError::NanLlr(i));
        }
        let mut tree = Self {
            spec,
            bias,
            demapper: ScDemapper::new(llrs.to_vec())?,
            v: Vec::with_capacity(spec.block_len()),
            base: v_prefix.len(),
            horizon,
        };
        for &bit in v_prefix {
            tree.feed(bit);
        }
        Ok(tree)
    }

    fn feed(&mut self, v_bit: u8) {
        let u = v_bit ^ conv_feedback(self.spec.poly(), &self.v) ^ self.spec.offset()[self.v.len()];
        // The LLR must be pulled even when the decision is forced: it
        // advances the demapper's level caches for this position.
        self.demapper.next_llr().expect("fed past block length");
        self.demapper.push(u).expect("fed past block length");
        self.v.push(v_bit);
    }

    /// Precoder-domain decisions taken so far, prefix included.
    pub fn decisions(&self) -> &[u8] {
        &self.v
    }
}

impl SearchTree for PacTree<'_> {
    fn depth(&self) -> usize {
        self.horizon - self.base
    }

    fn branches(&mut self) -> Branches {
        let i = self.v.len();
        debug_assert!(i < self.horizon, "examined past the search horizon");
        let llr = self.demapper.next_llr().expect("examined past block length");
        let fb = conv_feedback(self.spec.poly(), &self.v) ^ self.spec.offset()[i];
        let b = self.bias[i];
        let m0 = Branch { bit: 0, metric: branch_metric(llr, fb, b) };
        if !self.spec.is_info(i) {
            return Branches { primary: m0, secondary: None };
        }
        let m1 = Branch { bit: 1, metric: branch_metric(llr, fb ^ 1, b) };
        if m1.metric > m0.metric {
            Branches { primary: m1, secondary: Some(m0) }
        } else {
            Branches { primary: m0, secondary: Some(m1) }
        }
    }

    fn push(&mut self, bit: u8) {
        self.feed(bit);
    }

    fn pop(&mut self) {
        debug_assert!(self.v.len() > self.base, "popped into the genie prefix");
        self.v.pop();
        self.demapper.rewind(self.v.len()).expect("rewind within bounds");
    }
}

/// Outcome of a full-block decode.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    /// Decided precoder inputs; shorter than N only when the search was
    /// abandoned.
    pub v_hat: Vec<u8>,
    /// Data bits, zero-padded past the decided prefix on abandonment.
    pub d_hat: Vec<u8>,
    pub success: bool,
    pub budget_exhausted: bool,
    pub visits_total: u64,
    pub visits_per_bit: Vec<u64>,
    pub gamma_min: f64,
    pub t_min: f64,
}

fn outcome_from_search(spec: &CodeSpec, res: SearchResult) -> DecodeOutcome {
    let mut v_full = res.path.clone();
    v_full.resize(spec.block_len(), 0);
    let d_hat = extract_data(&v_full, spec).expect("full-length vector extracts");
    DecodeOutcome {
        v_hat: res.path,
        d_hat,
        success: res.success,
        budget_exhausted: res.budget_exhausted,
        visits_total: res.visits_total,
        visits_per_bit: res.visits_per_depth,
        gamma_min: res.gamma_min,
        t_min: res.t_min,
    }
}

/// Decode one block of channel LLRs.
pub fn fano_decode(
    llrs: &[f64],
    spec: &CodeSpec,
    cfg: &FanoConfig,
) -> Result<DecodeOutcome, FanoError> {
    cfg.validate(spec.block_len())?;
    let mut tree = PacTree::new(spec, llrs, &cfg.bias)?;
    let res = fano_search(&mut tree, cfg.delta, cfg.max_visits, None);
    Ok(outcome_from_search(spec, res))
}

/// Decode with a full move log for invariant checking.
pub fn fano_decode_traced(
    llrs: &[f64],
    spec: &CodeSpec,
    cfg: &FanoConfig,
) -> Result<(DecodeOutcome, Vec<TraceEvent>), FanoError> {
    cfg.validate(spec.block_len())?;
    let mut tree = PacTree::new(spec, llrs, &cfg.bias)?;
    let mut trace = Vec::new();
    let res = fano_search(&mut tree, cfg.delta, cfg.max_visits, Some(&mut trace));
    Ok((outcome_from_search(spec, res), trace))
}

/// Per-bit visit counts of one genie-assisted chunk decode.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkGenieOutcome {
    /// Decisions over the chunk's positions.
    pub v_hat: Vec<u8>,
    /// Decoded chunk equals the transmitted one.
    pub matches_truth: bool,
    pub success: bool,
    pub budget_exhausted: bool,
    pub visits_total: u64,
    /// Forward moves per chunk-local position.
    pub visits_per_bit: Vec<u64>,
}

/// Fano search restricted to chunk `chunk` of `2^k_steps`: all earlier
/// positions are forced to the transmitted values without visit cost, and
/// the search stops the first time it moves past the chunk's last bit.
pub fn chunk_genie_decode(
    llrs: &[f64],
    spec: &CodeSpec,
    cfg: &FanoConfig,
    k_steps: usize,
    chunk: usize,
    v_true: &[u8],
) -> Result<ChunkGenieOutcome, FanoError> {
    cfg.validate(spec.block_len())?;
    let n = spec.block_len();
    let chunks = 1usize << k_steps;
    if k_steps > n.trailing_zeros() as usize || chunk >= chunks {
        return Err(FanoError::ChunkOutOfRange { chunk, chunks });
    }
    if v_true.len() != n {
        return Err(FanoError::TruthLength { expected: n, got: v_true.len() });
    }
    let chunk_len = n / chunks;
    let base = chunk * chunk_len;
    let mut tree = PacTree::with_prefix(spec, llrs, &cfg.bias, &v_true[..base], base + chunk_len)?;
    let res = fano_search(&mut tree, cfg.delta, cfg.max_visits, None);
    let matches_truth = res.success && res.path == v_true[base..base + chunk_len];
    Ok(ChunkGenieOutcome {
        matches_truth,
        success: res.success,
        budget_exhausted: res.budget_exhausted,
        visits_total: res.visits_total,
        visits_per_bit: res.visits_per_depth,
        v_hat: res.path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polar::polar_transform;
    use crate::precoder::{conv_encode, insert_data, DEFAULT_POLY};
    use crate::profile::rm_profile;
    use crate::seeds::trial_rng;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};
    use std::collections::HashMap;

    #[test]
    fn branch_metric_examples() {
        assert_relative_eq!(branch_metric(0.0, 0, 0.0), 0.0);
        assert_relative_eq!(branch_metric(0.0, 1, 0.0), 0.0);
        assert_relative_eq!(branch_metric(f64::INFINITY, 0, 0.0), 1.0);
        assert_eq!(branch_metric(f64::INFINITY, 1, 0.0), f64::NEG_INFINITY);
        let l3 = 3f64.ln();
        assert_relative_eq!(branch_metric(l3, 0, 0.0), 1.0 + 0.75f64.log2(), epsilon = 1e-12);
        assert_relative_eq!(branch_metric(l3, 1, 0.0), -1.0, epsilon = 1e-12);
        assert_relative_eq!(branch_metric(l3, 0, 0.3), 1.0 + 0.75f64.log2() - 0.3, epsilon = 1e-12);
        // Large finite LLR must not overflow to NaN.
        assert!(branch_metric(800.0, 1, 0.0) < -1000.0);
        assert!(branch_metric(800.0, 1, 0.0).is_finite());
    }

    #[test]
    fn branch_metric_sum_identity() {
        // gamma(0) + gamma(1) = 2 + log2(p (1-p)) - 2b with p = sigmoid(L).
        let mut rng = trial_rng(11, 0, 0);
        for _ in 0..200 {
            let l: f64 = rng.gen_range(-30.0..30.0);
            let b: f64 = rng.gen_range(-1.0..1.0);
            // p (1-p) = q / (1+q)^2 with q = e^{-|L|}, stable at large |L|.
            let ln2 = std::f64::consts::LN_2;
            let want = 2.0 - l.abs() / ln2 - 2.0 * (-l.abs()).exp().ln_1p() / ln2 - 2.0 * b;
            let got = branch_metric(l, 0, b) + branch_metric(l, 1, b);
            assert_relative_eq!(got, want, epsilon = 1e-9, max_relative = 1e-9);
        }
    }

    /// Three-level tree with hand-assigned metrics. The best depth-2 branch
    /// is a trap whose subtree is dead; the worse branch leads home.
    struct ToyTree {
        path: Vec<u8>,
    }

    impl ToyTree {
        fn metric(prefix: &[u8], bit: u8) -> f64 {
            match (prefix, bit) {
                ([], 0) => 0.5,
                ([0], 0) => -0.3,
                ([0], 1) => -2.0,
                ([0, 1], 0) => 0.5,
                _ => -10.0,
            }
        }
    }

    impl SearchTree for ToyTree {
        fn depth(&self) -> usize {
            3
        }
        fn branches(&mut self) -> Branches {
            let m0 = Branch { bit: 0, metric: Self::metric(&self.path, 0) };
            let m1 = Branch { bit: 1, metric: Self::metric(&self.path, 1) };
            if m1.metric > m0.metric {
                Branches { primary: m1, secondary: Some(m0) }
            } else {
                Branches { primary: m0, secondary: Some(m1) }
            }
        }
        fn push(&mut self, bit: u8) {
            self.path.push(bit);
        }
        fn pop(&mut self) {
            self.path.pop();
        }
    }

    /// Frozen hand trace of the toy search at delta = 1. The decoder rides
    /// the -0.3 trap three times as T drops 0 -> -1 -> -2, then clears the
    /// -2.0 branch and finishes; 8 forward moves in all.
    #[test]
    fn toy_tree_matches_hand_trace() {
        let mut tree = ToyTree { path: Vec::new() };
        let mut trace = Vec::new();
        let res = fano_search(&mut tree, 1.0, None, Some(&mut trace));
        assert!(res.success && !res.budget_exhausted);
        assert_eq!(res.path, vec![0, 1, 0]);
        assert_eq!(res.visits_per_depth, vec![3, 4, 1]);
        assert_eq!(res.visits_total, 8);
        assert_relative_eq!(res.final_metric, -1.0);
        assert_relative_eq!(res.gamma_min, -1.5);
        assert_relative_eq!(res.t_min, -2.0);
        let kinds: String = trace
            .iter()
            .map(|e| match e.kind {
                MoveKind::Forward => 'F',
                MoveKind::Back => 'B',
                MoveKind::Lower => 'L',
            })
            .collect();
        assert_eq!(kinds, "FFBBLFFBBLFFBFF");
    }

    fn toy_spec(block_len: usize, k: usize) -> CodeSpec {
        CodeSpec::new(
            block_len,
            rm_profile(block_len, k).unwrap(),
            DEFAULT_POLY.to_vec(),
            vec![0; block_len],
        )
        .unwrap()
    }

    fn encode_frame(spec: &CodeSpec, rng: &mut impl Rng) -> (Vec<u8>, Vec<u8>, Vec<u8>) {
        let d: Vec<u8> = (0..spec.data_len()).map(|_| rng.gen_range(0..2u8)).collect();
        let v = insert_data(&d, spec).unwrap();
        let u = conv_encode(&v, spec).unwrap();
        let x = polar_transform(&u).unwrap();
        (d, v, x)
    }

    fn noiseless_llrs(x: &[u8]) -> Vec<f64> {
        x.iter().map(|&b| if b == 0 { f64::INFINITY } else { f64::NEG_INFINITY }).collect()
    }

    fn awgn_llrs(x: &[u8], es_n0: f64, rng: &mut impl Rng) -> Vec<f64> {
        let sigma = (1.0 / (2.0 * es_n0)).sqrt();
        let normal = Normal::new(0.0, sigma).unwrap();
        x.iter()
            .map(|&b| {
                let tx = 1.0 - 2.0 * f64::from(b);
                4.0 * es_n0 * (tx + normal.sample(rng))
            })
            .collect()
    }

    #[test]
    fn noiseless_roundtrip_is_forward_only() {
        for (block_len, k, frames) in [(32usize, 16usize, 500u64), (128, 64, 500)] {
            let spec = toy_spec(block_len, k);
            let cfg = FanoConfig::zero_bias(block_len, 2.0);
            for f in 0..frames {
                let mut rng = trial_rng(2024, block_len as u64, f);
                let (d, v, x) = encode_frame(&spec, &mut rng);
                let out = fano_decode(&noiseless_llrs(&x), &spec, &cfg).unwrap();
                assert!(out.success);
                assert_eq!(out.v_hat, v);
                assert_eq!(out.d_hat, d);
                assert!(out.visits_per_bit.iter().all(|&c| c == 1));
                assert_eq!(out.visits_total, block_len as u64);
            }
        }
    }

    #[test]
    fn budget_of_one_abandons_ambiguous_frame() {
        let spec = CodeSpec::new(4, vec![1, 2, 3, 4], vec![1], vec![0; 4]).unwrap();
        let cfg = FanoConfig::zero_bias(4, 2.0).with_max_visits(1);
        let out = fano_decode(&[0.0; 4], &spec, &cfg).unwrap();
        assert!(!out.success);
        assert!(out.budget_exhausted);
        assert_eq!(out.visits_total, 1);
        assert_eq!(out.v_hat.len(), 1);
        assert_eq!(out.d_hat.len(), 4, "data padded to full dimension");
    }

    #[test]
    fn config_validation() {
        let spec = toy_spec(32, 16);
        let llrs = vec![0.0; 32];
        let bad_delta = FanoConfig { delta: 0.0, bias: vec![0.0; 32], max_visits: None };
        assert_eq!(fano_decode(&llrs, &spec, &bad_delta), Err(FanoError::BadDelta(0.0)));
        let bad_bias = FanoConfig { delta: 1.0, bias: vec![0.0; 31], max_visits: None };
        assert!(matches!(
            fano_decode(&llrs, &spec, &bad_bias),
            Err(FanoError::BiasLength { expected: 32, got: 31 })
        ));
        let mut nan_llrs = llrs.clone();
        nan_llrs[3] = f64::NAN;
        let cfg = FanoConfig::zero_bias(32, 1.0);
        assert_eq!(fano_decode(&nan_llrs, &spec, &cfg), Err(FanoError::NanLlr(3)));
    }

    #[test]
    fn bias_constructors_zero_frozen_positions() {
        let spec = toy_spec(8, 4); // profile {4,6,7,8}
        let rates: Vec<f64> = (0..8).map(|i| 0.125 * i as f64).collect();
        let cfg = FanoConfig::from_bit_rates(&spec, &rates, 2.0).unwrap();
        assert_eq!(cfg.bias, vec![0.0, 0.0, 0.0, 0.375, 0.0, 0.625, 0.75, 0.875]);

        let table = ChunkRates {
            k: 1,
            es_n0: 0.0,
            rates: vec![0.2, 0.9],
            stderr: vec![0.0, 0.0],
            trials: 0,
        };
        let cfg = FanoConfig::from_chunk_rates(&spec, &table, 2.0).unwrap();
        assert_eq!(cfg.bias, vec![0.0, 0.0, 0.0, 0.2, 0.0, 0.9, 0.9, 0.9]);
    }

    /// An impossible frozen constraint (channel certain of the opposite
    /// value) walls off every leaf; the stall detector must notice instead
    /// of lowering T forever.
    #[test]
    fn unreachable_leaf_is_abandoned() {
        let spec = CodeSpec::new(2, vec![2], vec![1], vec![0, 0]).unwrap();
        let cfg = FanoConfig::zero_bias(2, 2.0);
        // f(+inf, -inf) = -inf: the frozen u_0 = 0 contradicts the channel.
        let out = fano_decode(&[f64::INFINITY, f64::NEG_INFINITY], &spec, &cfg).unwrap();
        assert!(!out.success);
        assert!(out.budget_exhausted);
        assert_eq!(out.visits_total, 0);
    }

    /// Replay a traced noisy decode and assert the classic Fano invariants:
    /// T stays on the delta grid, accepted moves clear T, and no node is
    /// visited more often than the threshold ladder allows.
    #[test]
    fn traced_search_obeys_threshold_invariants() {
        let spec = toy_spec(32, 16);
        let delta = 0.5;
        let cfg = FanoConfig { delta, bias: vec![0.1; 32], max_visits: Some(200_000) };
        let mut interesting = 0u32;
        for f in 0..60u64 {
            let mut rng = trial_rng(77, 5, f);
            let (_, v, x) = encode_frame(&spec, &mut rng);
            let llrs = awgn_llrs(&x, 0.8, &mut rng);
            let (out, trace) = fano_decode_traced(&llrs, &spec, &cfg).unwrap();
            assert_eq!(out.visits_total, out.visits_per_bit.iter().sum::<u64>());
            if out.success && out.v_hat != v {
                // Wrong codeword is fine for this test; still a full path.
                assert_eq!(out.v_hat.len(), 32);
            }
            let mut path: Vec<u8> = Vec::new();
            let mut node_stats: HashMap<Vec<u8>, (u64, f64)> = HashMap::new();
            let mut t_min = 0.0f64;
            for ev in &trace {
                assert_relative_eq!(
                    (ev.t / delta).round() * delta,
                    ev.t,
                    epsilon = 1e-9,
                    max_relative = 1e-9
                );
                t_min = t_min.min(ev.t);
                match ev.kind {
                    MoveKind::Forward => {
                        path.push(ev.bit.unwrap());
                        assert!(ev.gamma >= ev.t - 1e-9, "forward move below threshold");
                        let e = node_stats.entry(path.clone()).or_insert((0, ev.gamma));
                        e.0 += 1;
                    }
                    MoveKind::Back => {
                        path.pop();
                    }
                    MoveKind::Lower => {}
                }
                assert_eq!(path.len(), ev.depth);
            }
            if out.visits_total > 40 {
                interesting += 1;
            }
            for (node, (theta, gamma)) in &node_stats {
                let cap = ((gamma - t_min) / delta).ceil() + 1.0;
                assert!(
                    (*theta as f64) <= cap + 1e-9,
                    "node {node:?} visited {theta} times, ladder allows {cap}"
                );
            }
        }
        assert!(interesting >= 5, "SNR too high for a meaningful backtracking test");
    }

    #[test]
    fn chunk_genie_noiseless_counts_are_one() {
        let spec = toy_spec(32, 16);
        let cfg = FanoConfig::zero_bias(32, 2.0);
        let mut rng = trial_rng(5, 0, 9);
        let (_, v, x) = encode_frame(&spec, &mut rng);
        let llrs = noiseless_llrs(&x);
        for k_steps in [1usize, 2] {
            for chunk in 0..1usize << k_steps {
                let out = chunk_genie_decode(&llrs, &spec, &cfg, k_steps, chunk, &v).unwrap();
                assert!(out.success && out.matches_truth);
                assert_eq!(out.visits_per_bit, vec![1u64; 32 >> k_steps]);
            }
        }
    }

    #[test]
    fn chunk_genie_decodes_second_half_given_first() {
        let spec = toy_spec(32, 16);
        let cfg = FanoConfig::zero_bias(32, 2.0);
        let mut correct = 0u32;
        for f in 0..50u64 {
            let mut rng = trial_rng(6, 1, f);
            let (_, v, x) = encode_frame(&spec, &mut rng);
            let llrs = awgn_llrs(&x, 2.0, &mut rng);
            let out = chunk_genie_decode(&llrs, &spec, &cfg, 1, 1, &v).unwrap();
            assert_eq!(out.visits_per_bit.len(), 16);
            if out.matches_truth {
                correct += 1;
            }
        }
        assert!(correct >= 40, "genie-aided half should mostly decode: {correct}/50");
    }

    #[test]
    fn chunk_genie_validates_chunk_index() {
        let spec = toy_spec(32, 16);
        let cfg = FanoConfig::zero_bias(32, 2.0);
        let v = vec![0u8; 32];
        let llrs = vec![1.0; 32];
        assert!(matches!(
            chunk_genie_decode(&llrs, &spec, &cfg, 2, 4, &v),
            Err(FanoError::ChunkOutOfRange { chunk: 4, chunks: 4 })
        ));
    }
}
