//! Gallager exponents, cutoff rates, and sequential-decoding bounds.
//!
//! The analysis side of the crate. Exact quantities (`E0`, mutual
//! information, the BEC polarization recursion) are computed by summing
//! over finite alphabets. Polarized-channel cutoff rates for BI-AWGN are
//! estimated by genie-aided Monte Carlo: transmit the all-zero word,
//! run the successive-cancellation recursion with true decisions, and
//! average `exp(-L/2)` to get per-channel Bhattacharyya parameters.
//!
//! Estimation parallelizes over fixed-size trial blocks with one RNG per
//! trial, and partial sums are reduced in block order, so results depend
//! only on `(seed, trials)` — never on the number of worker threads.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{awgn_llr_allzero, DiscreteChannel};
use crate::polar::genie_llrs_in_place;
use crate::seeds::trial_rng;

const LN_2: f64 = std::f64::consts::LN_2;
/// Trials per parallel work unit; fixed so aggregation order is fixed.
const TRIAL_BLOCK: u64 = 4096;

#[derive(Debug, Error, PartialEq)]
pub enum CutoffError {
    #[error("rho must be finite and > -1, got {0}")]
    BadRho(f64),
    #[error("parameter {name} = {value} outside {range}")]
    BadParam { name: &'static str, value: f64, range: &'static str },
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("polarization depth {k} exceeds transform depth {n}")]
    DepthExceeded { k: usize, n: usize },
}

/// Gallager's function
/// `E0(rho, W) = -log2 sum_y [ sum_x q(x) W(y|x)^{1/(1+rho)} ]^{1+rho}`.
pub fn gallager_e0(ch: &DiscreteChannel, rho: f64) -> Result<f64, CutoffError> {
    if !rho.is_finite() || rho <= -1.0 {
        return Err(CutoffError::BadRho(rho));
    }
    let inv = 1.0 / (1.0 + rho);
    let mut total = 0.0;
    for y in 0..ch.num_outputs() {
        let mut inner = 0.0;
        for x in 0..2u8 {
            let w = ch.prob(x, y);
            if w > 0.0 {
                inner += ch.input_prob(x) * w.powf(inv);
            }
        }
        total += inner.powf(1.0 + rho);
    }
    Ok(-total.log2())
}

/// Channel cutoff rate `R0 = E0(1, W)`.
pub fn cutoff_rate(ch: &DiscreteChannel) -> f64 {
    gallager_e0(ch, 1.0).expect("rho = 1 is always valid")
}

/// Cutoff rate of a symmetric binary-input channel from its Bhattacharyya
/// parameter: `R0 = 1 - log2(1 + Z)`.
pub fn cutoff_rate_from_z(z: f64) -> f64 {
    1.0 - (1.0 + z).log2()
}

/// Monte-Carlo estimate of a Bhattacharyya parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZEstimate {
    /// Mean of `exp(-L/2)`, clamped into `[0, 1]`.
    pub z: f64,
    /// Standard error of the (unclamped) mean.
    pub stderr: f64,
    pub trials: u64,
}

impl ZEstimate {
    fn from_moments(sum: f64, sumsq: f64, n: u64) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = ((sumsq - nf * mean * mean) / (nf - 1.0)).max(0.0);
        Self { z: mean.clamp(0.0, 1.0), stderr: (var / nf).sqrt(), trials: n }
    }

    /// Induced cutoff-rate estimate and its propagated standard error.
    pub fn rate(&self) -> (f64, f64) {
        (cutoff_rate_from_z(self.z), self.stderr / ((1.0 + self.z) * LN_2))
    }
}

/// `Z = E[exp(-L/2)]` under the all-zero input, from LLR samples.
pub fn bhattacharyya_from_llrs(samples: &[f64]) -> Result<ZEstimate, CutoffError> {
    if samples.len() < 2 {
        return Err(CutoffError::TooFewSamples(samples.len()));
    }
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for &l in samples {
        let w = (-l / 2.0).exp();
        sum += w;
        sumsq += w * w;
    }
    Ok(ZEstimate::from_moments(sum, sumsq, samples.len() as u64))
}

/// Per-symbol LLR source seen by the genie estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GenieSource {
    /// BPSK over AWGN at the given `Es/N0` (linear).
    Awgn { es_n0: f64 },
    /// Erasure channel mimic: LLR 0 with probability `erasure`, else +inf.
    Bec { erasure: f64 },
}

impl GenieSource {
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            GenieSource::Awgn { es_n0 } => awgn_llr_allzero(es_n0, rng),
            GenieSource::Bec { erasure } => {
                if rng.gen::<f64>() < erasure {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    fn validate(&self) -> Result<(), CutoffError> {
        match *self {
            GenieSource::Awgn { es_n0 } => {
                if !(es_n0.is_finite() && es_n0 > 0.0) {
                    return Err(CutoffError::BadParam {
                        name: "es_n0",
                        value: es_n0,
                        range: "(0, inf)",
                    });
                }
            }
            GenieSource::Bec { erasure } => {
                if !(0.0..=1.0).contains(&erasure) {
                    return Err(CutoffError::BadParam {
                        name: "erasure",
                        value: erasure,
                        range: "[0, 1]",
                    });
                }
            }
        }
        Ok(())
    }
}

/// Genie-aided `Z` estimates for every bit channel of a `block_len`-wide
/// transform over the given source. `block_len = 1` measures the raw channel.
pub fn genie_z_table(
    block_len: usize,
    source: GenieSource,
    trials: u64,
    seed: u64,
) -> Result<Vec<ZEstimate>, CutoffError> {
    source.validate()?;
    if !block_len.is_power_of_two() {
        return Err(CutoffError::BadParam {
            name: "block_len",
            value: block_len as f64,
            range: "powers of two",
        });
    }
    if trials < 2 {
        return Err(CutoffError::TooFewSamples(trials as usize));
    }
    let blocks = trials.div_ceil(TRIAL_BLOCK);
    let partials: Vec<(Vec<f64>, Vec<f64>)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * TRIAL_BLOCK;
            let hi = (lo + TRIAL_BLOCK).min(trials);
            let mut sum = vec![0.0; block_len];
            let mut sumsq = vec![0.0; block_len];
            let mut buf = vec![0.0; block_len];
            for t in lo..hi {
                let mut rng = trial_rng(seed, 0x67_656e_6965, t);
                for v in buf.iter_mut() {
                    *v = source.sample(&mut rng);
                }
                genie_llrs_in_place(&mut buf);
                for (i, &l) in buf.iter().enumerate() {
                    let w = (-l / 2.0).exp();
                    sum[i] += w;
                    sumsq[i] += w * w;
                }
            }
            (sum, sumsq)
        })
        .collect();
    let mut sum = vec![0.0; block_len];
    let mut sumsq = vec![0.0; block_len];
    for (s, q) in &partials {
        for i in 0..block_len {
            sum[i] += s[i];
            sumsq[i] += q[i];
        }
    }
    Ok((0..block_len).map(|i| ZEstimate::from_moments(sum[i], sumsq[i], trials)).collect())
}

/// Cutoff rates of the `2^k` channels after `k` polarization steps.
///
/// Chunk `c` of a depth-`n` transform is the run of `2^{n-k}` consecutive
/// input positions sharing the top `k` index bits; all of them see channel
/// `c` of this table (index bits MSB-first, 0 = the "minus" branch).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkRates {
    pub k: usize,
    /// Operating point the table was estimated at (`Es/N0`, linear).
    pub es_n0: f64,
    /// Estimated `R0` per polarized channel, pattern-indexed.
    pub rates: Vec<f64>,
    /// Standard error of each rate estimate.
    pub stderr: Vec<f64>,
    #[serde(default)]
    pub trials: u64,
}

/// Estimate [`ChunkRates`] for a depth-`n` code split `k` ways over
/// BI-AWGN. The `2^k` polarized channels are realized as the bit channels
/// of a small `2^k` transform and measured by one genie pass per trial.
pub fn polarized_cutoff_rates(
    n: usize,
    k: usize,
    es_n0: f64,
    trials: u64,
    seed: u64,
) -> Result<ChunkRates, CutoffError> {
    polarized_cutoff_rates_with_source(n, k, GenieSource::Awgn { es_n0 }, trials, seed)
}

/// [`polarized_cutoff_rates`] over an arbitrary LLR source (tests use
/// the erasure mimic, whose exact answer is known).
pub fn polarized_cutoff_rates_with_source(
    n: usize,
    k: usize,
    source: GenieSource,
    trials: u64,
    seed: u64,
) -> Result<ChunkRates, CutoffError> {
    if k > n || n == 0 || n > 24 {
        return Err(CutoffError::DepthExceeded { k, n });
    }
    let zs = genie_z_table(1 << k, source, trials, seed)?;
    let (rates, stderr): (Vec<f64>, Vec<f64>) = zs.iter().map(|z| z.rate()).unzip();
    let es_n0 = match source {
        GenieSource::Awgn { es_n0 } => es_n0,
        GenieSource::Bec { .. } => f64::NAN,
    };
    Ok(ChunkRates { k, es_n0, rates, stderr, trials })
}

/// Per-bit-channel reliability of one polarized input position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BitChannelStats {
    /// 0-based input position.
    pub index: usize,
    /// Bhattacharyya estimate.
    pub z: f64,
    /// Cutoff rate `1 - log2(1 + z)`.
    pub r0: f64,
    /// Standard error of `r0`.
    pub stderr: f64,
    pub trials: u64,
}

/// Genie-estimated stats for all `2^n` bit channels over BI-AWGN.
pub fn bit_channel_stats(
    n: usize,
    es_n0: f64,
    trials: u64,
    seed: u64,
) -> Result<Vec<BitChannelStats>, CutoffError> {
    if n == 0 || n > 24 {
        return Err(CutoffError::DepthExceeded { k: n, n });
    }
    let zs = genie_z_table(1 << n, GenieSource::Awgn { es_n0 }, trials, seed)?;
    Ok(zs
        .iter()
        .enumerate()
        .map(|(index, z)| {
            let (r0, stderr) = z.rate();
            BitChannelStats { index, z: z.z, r0, stderr, trials: z.trials }
        })
        .collect())
}

/// Exact Bhattacharyya parameters of a BEC after `steps` polarization
/// levels: `Z- = 2Z - Z^2`, `Z+ = Z^2`. Output is pattern-indexed like
/// [`ChunkRates::rates`].
pub fn bec_polarize(z0: f64, steps: usize) -> Result<Vec<f64>, CutoffError> {
    if !(0.0..=1.0).contains(&z0) {
        return Err(CutoffError::BadParam { name: "z0", value: z0, range: "[0, 1]" });
    }
    let mut zs = vec![z0];
    for _ in 0..steps {
        let mut next = Vec::with_capacity(zs.len() * 2);
        for &z in &zs {
            next.push(2.0 * z - z * z);
            next.push(z * z);
        }
        zs = next;
    }
    Ok(zs)
}

/// Mean sequential-decoding workload bound for one polarized chunk whose
/// rate sits `eps` below its cutoff rate: `4 / (1 - 2^{-eps})^2`.
pub fn expected_computation_bound(eps: f64) -> Result<f64, CutoffError> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(CutoffError::BadParam { name: "eps", value: eps, range: "(0, inf)" });
    }
    let d = 1.0 - 2f64.powf(-eps);
    Ok(4.0 / (d * d))
}

/// Pareto-style tail bound on the chunk workload:
/// `P(C >= L) <= (4 / (L (1 - 2^{-eps/beta})^2))^beta`, clamped to 1.
pub fn pareto_ccdf_bound(l: f64, eps: f64, beta: f64) -> Result<f64, CutoffError> {
    if !(l.is_finite() && l > 0.0) {
        return Err(CutoffError::BadParam { name: "l", value: l, range: "(0, inf)" });
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(CutoffError::BadParam { name: "eps", value: eps, range: "(0, inf)" });
    }
    if !(beta.is_finite() && beta >= 1.0) {
        return Err(CutoffError::BadParam { name: "beta", value: beta, range: "[1, inf)" });
    }
    let d = 1.0 - 2f64.powf(-eps / beta);
    Ok((4.0 / (l * d * d)).powf(beta).min(1.0))
}

/// Probability bound that a wrong-path search thread advances `l` levels
/// with a head start of `alpha` metric units:
/// `(l+1) 2^{-r alpha} 2^{-r l (E0((1-r)/r, W) + b)}`.
pub fn wrong_path_advance_bound(
    ch: &DiscreteChannel,
    bias: f64,
    r: f64,
    l: u32,
    alpha: f64,
) -> Result<f64, CutoffError> {
    if !(r > 0.0 && r < 1.0) {
        return Err(CutoffError::BadParam { name: "r", value: r, range: "(0, 1)" });
    }
    let e0 = gallager_e0(ch, (1.0 - r) / r)?;
    Ok((f64::from(l) + 1.0) * 2f64.powf(-r * alpha) * 2f64.powf(-r * f64::from(l) * (e0 + bias)))
}

/// One grid point of an MGF audit: exact value vs. closed-form bound,
/// both in log2 units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MgfAuditPoint {
    /// Grid coordinate (`r0` for the correct-path audit, `r` otherwise).
    pub r: f64,
    pub exact: f64,
    pub bound: f64,
    /// `bound - exact`; nonnegative means the bound holds.
    pub margin: f64,
    /// Whether the bound's hypothesis on the bias holds at this point.
    pub precondition_ok: bool,
}

/// Exact-summation audit of the three semi-invariant MGF bounds behind the
/// sequential-decoding analysis, plus the metric drift at the origin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MgfAudit {
    pub bias: f64,
    /// Correct-path MGF `log2 E[2^{r0 gamma}]` vs
    /// `-r0 b - (1+r0) E0(-r0/(1+r0))`, on `r0 in (-1, 0)`.
    pub correct: Vec<MgfAuditPoint>,
    /// Wrong-path MGF (independent input draw) vs `-r b - r E0((1-r)/r)`,
    /// on `r in (0, 1)`. Unconditional.
    pub wrong: Vec<MgfAuditPoint>,
    /// Metric-difference MGF vs the same closed form; requires
    /// `b <= ((1-r)/r) E0(r/(1-r))` at each point.
    pub difference: Vec<MgfAuditPoint>,
    /// Finite-difference estimate of `d/dr0 log2 E[2^{r0 gamma}]` at 0.
    pub drift_fd: f64,
    /// `I(W) - b`, which the drift must equal.
    pub drift_expected: f64,
}

/// `log2 E[2^{r0 gamma(X, Y)}]` with `gamma = log2(W(y|x)/P(y)) - b`,
/// summed exactly over the joint law.
fn correct_path_mgf_log2(ch: &DiscreteChannel, bias: f64, r0: f64) -> f64 {
    let mut total = 0.0;
    for x in 0..2u8 {
        let q = ch.input_prob(x);
        for y in 0..ch.num_outputs() {
            let w = ch.prob(x, y);
            if q * w == 0.0 {
                continue;
            }
            let gamma = (w / ch.output_prob(y)).log2() - bias;
            total += q * w * 2f64.powf(r0 * gamma);
        }
    }
    total.log2()
}

/// Same MGF with the channel input replaced by an independent draw from
/// the prior — the law of the metric on a wrong branch.
fn wrong_path_mgf_log2(ch: &DiscreteChannel, bias: f64, r: f64) -> f64 {
    let mut total = 0.0;
    for y in 0..ch.num_outputs() {
        let py = ch.output_prob(y);
        if py == 0.0 {
            continue;
        }
        for xt in 0..2u8 {
            let w = ch.prob(xt, y);
            if w == 0.0 {
                continue;
            }
            let gamma = (w / py).log2() - bias;
            total += py * ch.input_prob(xt) * 2f64.powf(r * gamma);
        }
    }
    total.log2()
}

/// `log2 E[2^{r (gamma(X~, Y) - gamma(X, Y))}]`; the bias cancels inside.
fn difference_mgf_log2(ch: &DiscreteChannel, r: f64) -> f64 {
    let mut total = 0.0;
    for x in 0..2u8 {
        let qw = ch.input_prob(x);
        for y in 0..ch.num_outputs() {
            let w = ch.prob(x, y);
            if qw * w == 0.0 {
                continue;
            }
            for xt in 0..2u8 {
                let wt = ch.prob(xt, y);
                if wt == 0.0 {
                    continue;
                }
                total += qw * w * ch.input_prob(xt) * (wt / w).powf(r);
            }
        }
    }
    total.log2()
}

/// Run the audit over the given grids. Callers typically use
/// `bias = cutoff_rate(ch)`.
pub fn audit_metric_mgf(
    ch: &DiscreteChannel,
    bias: f64,
    r0_grid: &[f64],
    r_grid: &[f64],
) -> Result<MgfAudit, CutoffError> {
    for &r0 in r0_grid {
        if !(r0 > -1.0 && r0 < 0.0) {
            return Err(CutoffError::BadParam { name: "r0", value: r0, range: "(-1, 0)" });
        }
    }
    for &r in r_grid {
        if !(r > 0.0 && r < 1.0) {
            return Err(CutoffError::BadParam { name: "r", value: r, range: "(0, 1)" });
        }
    }
    let correct = r0_grid
        .iter()
        .map(|&r0| {
            let exact = correct_path_mgf_log2(ch, bias, r0);
            let bound = -r0 * bias - (1.0 + r0) * gallager_e0(ch, -r0 / (1.0 + r0))?;
            Ok(MgfAuditPoint { r: r0, exact, bound, margin: bound - exact, precondition_ok: true })
        })
        .collect::<Result<Vec<_>, CutoffError>>()?;
    let wrong = r_grid
        .iter()
        .map(|&r| {
            let exact = wrong_path_mgf_log2(ch, bias, r);
            let bound = -r * bias - r * gallager_e0(ch, (1.0 - r) / r)?;
            Ok(MgfAuditPoint { r, exact, bound, margin: bound - exact, precondition_ok: true })
        })
        .collect::<Result<Vec<_>, CutoffError>>()?;
    let difference = r_grid
        .iter()
        .map(|&r| {
            let exact = difference_mgf_log2(ch, r);
            let bound = -r * bias - r * gallager_e0(ch, (1.0 - r) / r)?;
            // The closed form only follows when the bias is no larger than
            // the slope-style quantity E0(delta)/delta at delta = r/(1-r).
            let delta = r / (1.0 - r);
            let cap = gallager_e0(ch, delta)? / delta;
            Ok(MgfAuditPoint {
                r,
                exact,
                bound,
                margin: bound - exact,
                precondition_ok: bias <= cap + 1e-12,
            })
        })
        .collect::<Result<Vec<_>, CutoffError>>()?;
    let h = 1e-5;
    let drift_fd =
        (correct_path_mgf_log2(ch, bias, h) - correct_path_mgf_log2(ch, bias, -h)) / (2.0 * h);
    Ok(MgfAudit {
        bias,
        correct,
        wrong,
        difference,
        drift_fd,
        drift_expected: ch.mutual_information() - bias,
    })
}
