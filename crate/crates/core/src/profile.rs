//! Rate-profile design: choose which input positions carry data.
//!
//! The pipeline starts from a Reed-Muller-style profile (largest generator
//! row weights), then freezes bits until every polarized chunk fits under
//! its estimated cutoff rate at the design SNR, and finally freezes
//! minimum-weight generator rows until the target dimension is reached.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cutoff::{bit_channel_stats, polarized_cutoff_rates, ChunkRates, CutoffError};
use crate::precoder::{CodeSpec, SpecError, DEFAULT_POLY};

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("cannot pick {k} of {n} rows")]
    InfeasibleRm { k: usize, n: usize },
    #[error("profile index {index} outside 1..={n}")]
    BadIndex { index: usize, n: usize },
    #[error("profile must be strictly increasing")]
    NotSorted,
    #[error("chunk table of depth {k} does not fit block length {n}")]
    ChunkMismatch { k: usize, n: usize },
    #[error("table length {got} does not match expectation {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("asked to freeze {count} rows but the minimum-weight class has {available}")]
    CountExceedsClass { count: usize, available: usize },
    #[error("cutoff-rate constraint leaves only {achieved} data bits; raise the design SNR")]
    Infeasible { achieved: usize },
    #[error("target dimension {k_target} not within 1..=rm_k={rm_k}<=n={n}")]
    BadTarget { k_target: usize, rm_k: usize, n: usize },
    #[error(transparent)]
    Cutoff(#[from] CutoffError),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

/// Weight of generator row `i` (1-based): `2^popcount(i-1)`.
pub fn row_weight(index1: usize) -> u64 {
    1u64 << (index1 - 1).count_ones()
}

/// Smallest generator-row weight used by a profile.
pub fn min_row_weight(profile: &[usize]) -> Option<u64> {
    profile.iter().map(|&i| row_weight(i)).min()
}

fn check_profile(profile: &[usize], block_len: usize) -> Result<(), ProfileError> {
    let mut prev = 0;
    for &i in profile {
        if i == 0 || i > block_len {
            return Err(ProfileError::BadIndex { index: i, n: block_len });
        }
        if i <= prev {
            return Err(ProfileError::NotSorted);
        }
        prev = i;
    }
    Ok(())
}

/// The `k` positions with the largest generator-row weights, 1-based and
/// sorted; ties at the boundary weight go to the larger index.
pub fn rm_profile(block_len: usize, k: usize) -> Result<Vec<usize>, ProfileError> {
    if k > block_len || !block_len.is_power_of_two() {
        return Err(ProfileError::InfeasibleRm { k, n: block_len });
    }
    let mut order: Vec<usize> = (1..=block_len).collect();
    order.sort_by_key(|&i| std::cmp::Reverse((row_weight(i), i)));
    let mut chosen: Vec<usize> = order[..k].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Result of the per-chunk cutoff-rate stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChunkConstraintOutcome {
    /// Surviving profile, still 1-based and sorted.
    pub profile: Vec<usize>,
    /// Frozen positions in freezing order.
    pub frozen: Vec<usize>,
}

/// Freeze data bits until every chunk of `2^k` consecutive positions obeys
/// its cutoff-rate budget.
///
/// For chunk `c` with estimated rate `r` and standard error `s`, the
/// effective budget is `r_eff = clamp(r - s, 0, 1)`: at most
/// `round(chunk_len * r_eff)` data bits in the chunk, and at most
/// `ceil(l * r_eff)` among its first `l` positions for every prefix `l`.
/// Violations are repaired by freezing the in-chunk data position with the
/// lowest per-bit cutoff rate (ties to the larger index).
pub fn apply_cutoff_constraint(
    profile: &[usize],
    chunk_rates: &ChunkRates,
    bit_rates: &[f64],
) -> Result<ChunkConstraintOutcome, ProfileError> {
    let block_len = bit_rates.len();
    if !block_len.is_power_of_two() || block_len >> chunk_rates.k == 0 {
        return Err(ProfileError::ChunkMismatch { k: chunk_rates.k, n: block_len });
    }
    let chunks = 1usize << chunk_rates.k;
    if chunk_rates.rates.len() != chunks || chunk_rates.stderr.len() != chunks {
        return Err(ProfileError::LengthMismatch {
            expected: chunks,
            got: chunk_rates.rates.len(),
        });
    }
    check_profile(profile, block_len)?;
    let chunk_len = block_len / chunks;

    let mut info = vec![false; block_len];
    for &i in profile {
        info[i - 1] = true;
    }
    let mut frozen = Vec::new();
    // Freeze the least reliable data position among the first `upto`
    // positions of the chunk.
    let freeze_one = |info: &mut Vec<bool>, frozen: &mut Vec<usize>, base: usize, upto: usize| {
        let pick = (base..base + upto)
            .filter(|&p| info[p])
            .min_by(|&a, &b| {
                (bit_rates[a], std::cmp::Reverse(a))
                    .partial_cmp(&(bit_rates[b], std::cmp::Reverse(b)))
                    .unwrap()
            })
            .expect("a violated cap implies a data bit to freeze");
        info[pick] = false;
        frozen.push(pick + 1);
    };

    for c in 0..chunks {
        let base = c * chunk_len;
        let r_eff = (chunk_rates.rates[c] - chunk_rates.stderr[c]).clamp(0.0, 1.0);
        // Nearest-integer cap: a cap of `floor` would demand a rate of
        // exactly 1.0 before admitting a fully loaded chunk, freezing one
        // bit in every near-perfect chunk no matter how deep the
        // polarization — rounding is what lets saturated chunks through
        // while still clamping genuinely weak ones.
        let cap_total = (chunk_len as f64 * r_eff).round() as usize;
        while (base..base + chunk_len).filter(|&p| info[p]).count() > cap_total {
            freeze_one(&mut info, &mut frozen, base, chunk_len);
        }
        for l in 1..=chunk_len {
            let cap = (l as f64 * r_eff).ceil() as usize;
            while (base..base + l).filter(|&p| info[p]).count() > cap {
                freeze_one(&mut info, &mut frozen, base, l);
            }
        }
    }
    let profile = (0..block_len).filter(|&p| info[p]).map(|p| p + 1).collect();
    Ok(ChunkConstraintOutcome { profile, frozen })
}

/// Which end of the minimum-weight row class to freeze.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreezeEnd {
    /// Highest indices first (the default construction).
    Last,
    /// Lowest indices first (the "FS" variant, known to decode worse).
    First,
}

/// Result of one minimum-weight freezing round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightFreezeOutcome {
    pub profile: Vec<usize>,
    /// Removed positions in freezing order.
    pub frozen: Vec<usize>,
}

/// Remove `count` positions from the current minimum-weight row class,
/// starting from the chosen end. Errors if the class is too small.
pub fn freeze_min_weight_rows(
    profile: &[usize],
    count: usize,
    end: FreezeEnd,
) -> Result<WeightFreezeOutcome, ProfileError> {
    if count == 0 {
        return Ok(WeightFreezeOutcome { profile: profile.to_vec(), frozen: Vec::new() });
    }
    let min_w =
        min_row_weight(profile).ok_or(ProfileError::CountExceedsClass { count, available: 0 })?;
    let mut class: Vec<usize> =
        profile.iter().copied().filter(|&i| row_weight(i) == min_w).collect();
    if count > class.len() {
        return Err(ProfileError::CountExceedsClass { count, available: class.len() });
    }
    if end == FreezeEnd::Last {
        class.reverse();
    }
    let frozen: Vec<usize> = class[..count].to_vec();
    let profile = profile.iter().copied().filter(|i| !frozen.contains(i)).collect();
    Ok(WeightFreezeOutcome { profile, frozen })
}

/// Inputs of the full design pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignParams {
    pub block_len: usize,
    /// Final code dimension.
    pub k_target: usize,
    /// Dimension of the starting RM-style profile.
    pub rm_k: usize,
    /// Polarization depth of the chunk constraint.
    pub k_steps: usize,
    /// Design point in `Eb/N0` (dB); converted at rate `k_target / block_len`.
    pub ebn0_db: f64,
    #[serde(default = "default_poly")]
    pub poly: Vec<u8>,
    #[serde(default = "default_end")]
    pub freeze_end: FreezeEnd,
    #[serde(default = "default_chunk_trials")]
    pub chunk_trials: u64,
    #[serde(default = "default_bit_trials")]
    pub bit_trials: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_poly() -> Vec<u8> {
    DEFAULT_POLY.to_vec()
}
fn default_end() -> FreezeEnd {
    FreezeEnd::Last
}
fn default_chunk_trials() -> u64 {
    1_000_000
}
fn default_bit_trials() -> u64 {
    200_000
}

impl DesignParams {
    /// `Es/N0` (linear) at the design point: `(K/N) * 10^(EbN0_dB / 10)`.
    pub fn es_n0(&self) -> f64 {
        (self.k_target as f64 / self.block_len as f64) * 10f64.powf(self.ebn0_db / 10.0)
    }
}

/// Full audit trail of one designed code.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileDesign {
    pub params: DesignParams,
    pub start_profile: Vec<usize>,
    pub chunk_rates: ChunkRates,
    pub frozen_by_constraint: Vec<usize>,
    pub frozen_by_weight: Vec<usize>,
    /// Dimension left after the cutoff-rate stage, before weight freezing.
    pub constrained_k: usize,
    pub spec: CodeSpec,
}

/// Run the design pipeline, estimating both rate tables by genie-aided
/// Monte Carlo at the design SNR.
pub fn design_pac_code(params: &DesignParams) -> Result<ProfileDesign, ProfileError> {
    let n_steps = params.block_len.trailing_zeros() as usize;
    let es_n0 = params.es_n0();
    let chunk_rates =
        polarized_cutoff_rates(n_steps, params.k_steps, es_n0, params.chunk_trials, params.seed)?;
    let bit_rates: Vec<f64> =
        bit_channel_stats(n_steps, es_n0, params.bit_trials, params.seed ^ 0xb17_5747)?
            .iter()
            .map(|s| s.r0)
            .collect();
    design_pac_code_with_tables(params, &chunk_rates, &bit_rates)
}

/// Design pipeline over precomputed rate tables. Deterministic; lets
/// callers reuse one set of tables across several design variants.
pub fn design_pac_code_with_tables(
    params: &DesignParams,
    chunk_rates: &ChunkRates,
    bit_rates: &[f64],
) -> Result<ProfileDesign, ProfileError> {
    let n = params.block_len;
    if params.k_target == 0 || params.k_target > params.rm_k || params.rm_k > n {
        return Err(ProfileError::BadTarget { k_target: params.k_target, rm_k: params.rm_k, n });
    }
    let start_profile = rm_profile(n, params.rm_k)?;
    let constrained = apply_cutoff_constraint(&start_profile, chunk_rates, bit_rates)?;
    let constrained_k = constrained.profile.len();
    if constrained_k < params.k_target {
        return Err(ProfileError::Infeasible { achieved: constrained_k });
    }
    let mut profile = constrained.profile;
    let mut frozen_by_weight = Vec::new();
    while profile.len() > params.k_target {
        let need = profile.len() - params.k_target;
        let min_w = min_row_weight(&profile).expect("profile nonempty above target");
        let class = profile.iter().filter(|&&i| row_weight(i) == min_w).count();
        let round = freeze_min_weight_rows(&profile, need.min(class), params.freeze_end)?;
        profile = round.profile;
        frozen_by_weight.extend(round.frozen);
    }
    let spec = CodeSpec::new(n, profile, params.poly.clone(), vec![0; n])?;
    Ok(ProfileDesign {
        params: params.clone(),
        start_profile,
        chunk_rates: chunk_rates.clone(),
        frozen_by_constraint: constrained.frozen,
        frozen_by_weight,
        constrained_k,
        spec,
    })
}
