//! Binary-input channel models.
//!
//! Two families live here. [`DiscreteChannel`] is an exact finite-alphabet
//! channel (BSC, BEC, or an arbitrary transition matrix) on which rate and
//! bound computations can sum over the whole output alphabet.
//! [`bpsk_awgn_llrs`] is the simulation channel: BPSK over real AWGN,
//! returning per-symbol LLRs in the natural-log domain.
//!
//! LLR convention throughout the crate: `L = ln W(y|0) / W(y|1)`, so
//! positive values favor bit 0. Bit 0 maps to +1 on the wire.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::seeds::trial_rng;

/// Tolerance for probability-vector validation.
const PROB_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("probability {0} outside [0, 1]")]
    ProbabilityRange(f64),
    #[error("distribution sums to {0}, expected 1")]
    NotNormalized(f64),
    #[error("transition matrix needs at least one output symbol")]
    EmptyAlphabet,
    #[error("rows have different output alphabet sizes")]
    RaggedRows,
    #[error("es_n0 must be positive and finite, got {0}")]
    BadSnr(f64),
    #[error("input must be nonempty")]
    EmptyInput,
}

/// A binary-input discrete memoryless channel: input prior `q(x)` and
/// transition probabilities `W(y|x)` over a finite output alphabet
/// addressed by index.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteChannel {
    input_dist: [f64; 2],
    /// `transition[x][y] = W(y|x)`; both rows have equal length.
    transition: [Vec<f64>; 2],
}

fn check_dist(p: &[f64]) -> Result<(), ChannelError> {
    let mut sum = 0.0;
    for &v in p {
        if !(0.0..=1.0).contains(&v) {
            return Err(ChannelError::ProbabilityRange(v));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(ChannelError::NotNormalized(sum));
    }
    Ok(())
}

impl DiscreteChannel {
    pub fn new(input_dist: [f64; 2], transition: [Vec<f64>; 2]) -> Result<Self, ChannelError> {
        if transition[0].is_empty() {
            return Err(ChannelError::EmptyAlphabet);
        }
        if transition[0].len() != transition[1].len() {
            return Err(ChannelError::RaggedRows);
        }
        check_dist(&input_dist)?;
        check_dist(&transition[0])?;
        check_dist(&transition[1])?;
        Ok(Self { input_dist, transition })
    }

    /// Uniform-input channel from a transition matrix.
    pub fn uniform(transition: [Vec<f64>; 2]) -> Result<Self, ChannelError> {
        Self::new([0.5, 0.5], transition)
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: f64) -> Result<Self, ChannelError> {
        Self::uniform([vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    /// Binary erasure channel; output order is `[0, 1, erasure]`.
    pub fn bec(e: f64) -> Result<Self, ChannelError> {
        Self::uniform([vec![1.0 - e, 0.0, e], vec![0.0, 1.0 - e, e]])
    }

    /// Random uniform-input channel with 2..=`max_outputs` outputs; rows are
    /// drawn from a flat Dirichlet. Used by the bound audits.
    pub fn random<R: Rng>(rng: &mut R, max_outputs: usize) -> Self {
        let m = rng.gen_range(2..=max_outputs.max(2));
        let mut rows: [Vec<f64>; 2] = [vec![0.0; m], vec![0.0; m]];
        for row in rows.iter_mut() {
            let mut sum = 0.0;
            for v in row.iter_mut() {
                // -ln(U) is Exp(1); normalized exponentials are Dirichlet(1).
                *v = -f64::ln(rng.gen_range(f64::MIN_POSITIVE..1.0));
                sum += *v;
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
        Self::uniform(rows).expect("rows normalized by construction")
    }

    pub fn num_outputs(&self) -> usize {
        self.transition[0].len()
    }

    /// `W(y|x)`.
    pub fn prob(&self, x: u8, y: usize) -> f64 {
        self.transition[x as usize][y]
    }

    /// `q(x)`.
    pub fn input_prob(&self, x: u8) -> f64 {
        self.input_dist[x as usize]
    }

    /// Output marginal `P(y) = sum_x q(x) W(y|x)`.
    pub fn output_prob(&self, y: usize) -> f64 {
        self.input_dist[0] * self.transition[0][y] + self.input_dist[1] * self.transition[1][y]
    }

    /// Mutual information `I(X; Y)` in bits under the stored input prior.
    pub fn mutual_information(&self) -> f64 {
        let mut i = 0.0;
        for x in 0..2u8 {
            let q = self.input_prob(x);
            if q == 0.0 {
                continue;
            }
            for y in 0..self.num_outputs() {
                let w = self.prob(x, y);
                if w == 0.0 {
                    continue;
                }
                i += q * w * (w / self.output_prob(y)).log2();
            }
        }
        i
    }

    /// Bhattacharyya parameter `Z = sum_y sqrt(W(y|0) W(y|1))`.
    pub fn bhattacharyya(&self) -> f64 {
        (0..self.num_outputs()).map(|y| (self.prob(0, y) * self.prob(1, y)).sqrt()).sum()
    }
}

/// BPSK-over-AWGN parameters. `es_n0` is the per-symbol SNR `Es/N0`
/// (linear); `seed` fixes the noise realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AwgnParams {
    pub es_n0: f64,
    pub seed: u64,
}

fn check_es_n0(es_n0: f64) -> Result<(), ChannelError> {
    if !(es_n0.is_finite() && es_n0 > 0.0) {
        return Err(ChannelError::BadSnr(es_n0));
    }
    Ok(())
}

/// Transmit codeword bits over BPSK/AWGN and return per-symbol LLRs.
///
/// Bit 0 is sent as +1, noise variance is `1/(2 es_n0)`, and the LLR of
/// observation `y` is `4 es_n0 y`. Deterministic in `params.seed`.
pub fn bpsk_awgn_llrs(x: &[u8], params: &AwgnParams) -> Result<Vec<f64>, ChannelError> {
    check_es_n0(params.es_n0)?;
    if x.is_empty() {
        return Err(ChannelError::EmptyInput);
    }
    let sigma = (0.5 / params.es_n0).sqrt();
    let mut rng = trial_rng(params.seed, 0, 0);
    Ok(x.iter()
        .map(|&bit| {
            let s = 1.0 - 2.0 * f64::from(bit);
            let z: f64 = rng.sample(StandardNormal);
            4.0 * params.es_n0 * (s + sigma * z)
        })
        .collect())
}

/// One LLR sample under the all-zero input, for genie-aided estimation.
pub fn awgn_llr_allzero<R: Rng>(es_n0: f64, rng: &mut R) -> f64 {
    let sigma = (0.5 / es_n0).sqrt();
    let z: f64 = rng.sample(StandardNormal);
    4.0 * es_n0 * (1.0 + sigma * z)
}
