//! Seeded Monte-Carlo harness: FER/BER sweeps over an `Eb/N0` grid, visit
//! accounting, computation-tail collection, and Pareto tail fitting.
//!
//! Determinism contract: a sweep's output depends only on its config. Each
//! frame draws its data and noise from `trial_rng(base_seed, point_index,
//! frame_index)`, frames are simulated in fixed-size batches whose results
//! are reduced in frame order, and the stop rule is evaluated at batch
//! boundaries — so any worker count produces byte-identical results, and
//! two decoders given the same seed face the same noise (paired runs).

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cutoff::{bit_channel_stats, polarized_cutoff_rates, CutoffError};
use crate::fano::{fano_decode, FanoConfig, FanoError};
use crate::list::{sc_decode, scl_decode, ListError};
use crate::polar::polar_transform;
use crate::precoder::{conv_encode, insert_data, CodeSpec, SpecError};
use crate::seeds::trial_rng;

/// Frames per work unit; fixed so reduction order is fixed.
const FRAME_BATCH: u64 = 512;
/// 97.5% normal quantile for two-sided 95% intervals.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("ebn0_grid_db must not be empty")]
    EmptyGrid,
    #[error("stop rule must demand at least one frame and one error")]
    BadStopRule,
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Fano(#[from] FanoError),
    #[error(transparent)]
    List(#[from] ListError),
    #[error(transparent)]
    Cutoff(#[from] CutoffError),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// How the Fano metric bias is chosen at each SNR point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BiasSpec {
    /// No bias anywhere.
    Zero,
    /// Per-bit cutoff rates from a genie run at the point's `Es/N0`.
    PerBit { trials: u64 },
    /// Per-chunk cutoff rates over `2^k` chunks.
    PerChunk { k: usize, trials: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecoderConfig {
    Fano {
        delta: f64,
        #[serde(default)]
        max_visits: Option<u64>,
        bias: BiasSpec,
    },
    Sc,
    Scl {
        list_size: usize,
    },
    /// Raw BPSK, one data bit per channel use; the analytic-BER baseline.
    Uncoded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopRule {
    #[serde(default = "default_min_errors")]
    pub min_frame_errors: u64,
    #[serde(default = "default_max_frames")]
    pub max_frames: u64,
}

fn default_min_errors() -> u64 {
    100
}
fn default_max_frames() -> u64 {
    10_000_000
}

impl Default for StopRule {
    fn default() -> Self {
        Self { min_frame_errors: default_min_errors(), max_frames: default_max_frames() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub spec: CodeSpec,
    pub decoder: DecoderConfig,
    pub ebn0_grid_db: Vec<f64>,
    #[serde(default)]
    pub stop: StopRule,
    #[serde(default)]
    pub base_seed: u64,
    /// 0 lets the runtime pick.
    #[serde(default)]
    pub workers: usize,
    /// Per-bit visit counts above this enter the tail reservoir.
    #[serde(default = "default_ccdf_threshold")]
    pub ccdf_threshold: u64,
    /// Replace the channel with certainty LLRs (encoder/decoder shakeout).
    #[serde(default)]
    pub noiseless: bool,
}

fn default_ccdf_threshold() -> u64 {
    4
}

impl ExperimentConfig {
    /// `Es/N0` (linear) at a grid point, at the decoder's working rate.
    pub fn es_n0(&self, ebn0_db: f64) -> f64 {
        let rate = match self.decoder {
            DecoderConfig::Uncoded => 1.0,
            _ => self.spec.rate(),
        };
        rate * 10f64.powf(ebn0_db / 10.0)
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.ebn0_grid_db.is_empty() {
            return Err(SimError::EmptyGrid);
        }
        if self.stop.min_frame_errors == 0 || self.stop.max_frames == 0 {
            return Err(SimError::BadStopRule);
        }
        Ok(())
    }
}

/// Aggregates of one SNR point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnrPoint {
    pub ebn0_db: f64,
    pub es_n0: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub bit_errors: u64,
    pub fer: f64,
    pub fer_ci_lo: f64,
    pub fer_ci_hi: f64,
    pub ber: f64,
    /// Decoding-tree visits over all frames.
    pub total_visits: u64,
    /// Average visits per input position per frame.
    pub anv: f64,
    /// Visit totals per input position.
    pub per_bit_visits: Vec<u64>,
    /// Frames abandoned by the search budget.
    pub exhausted: u64,
    pub exhausted_rate: f64,
    /// Per-bit visit counts above the reservoir threshold, frame order.
    pub ccdf_samples: Vec<u64>,
    /// Number of per-bit counts the reservoir was drawn from.
    pub ccdf_population: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub config: ExperimentConfig,
    /// Content hash of the code under test.
    pub spec_sha256: String,
    pub points: Vec<SnrPoint>,
}

/// Wilson 95% score interval for a binomial proportion.
pub fn wilson_ci(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = (Z95 / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// SHA-256 of the code's canonical JSON, for reproducibility manifests.
pub fn spec_sha256(spec: &CodeSpec) -> String {
    let json = serde_json::to_string(spec).expect("CodeSpec serializes");
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

struct FrameResult {
    error: bool,
    bit_errors: u64,
    visits: u64,
    per_bit: Vec<u64>,
    exhausted: bool,
    tail: Vec<u64>,
}

enum DecoderRt {
    Fano(FanoConfig),
    Sc,
    Scl(usize),
    Uncoded,
}

fn build_decoder(
    cfg: &ExperimentConfig,
    es_n0: f64,
    point_index: u64,
) -> Result<DecoderRt, SimError> {
    Ok(match &cfg.decoder {
        DecoderConfig::Fano { delta, max_visits, bias } => {
            let n_steps = cfg.spec.block_len().trailing_zeros() as usize;
            let seed = cfg.base_seed ^ 0xb1a5 ^ point_index.rotate_left(17);
            let mut fc = match *bias {
                BiasSpec::Zero => FanoConfig::zero_bias(cfg.spec.block_len(), *delta),
                BiasSpec::PerBit { trials } => {
                    let stats = bit_channel_stats(n_steps, es_n0, trials, seed)?;
                    let rates: Vec<f64> = stats.iter().map(|s| s.r0).collect();
                    FanoConfig::from_bit_rates(&cfg.spec, &rates, *delta)?
                }
                BiasSpec::PerChunk { k, trials } => {
                    let table = polarized_cutoff_rates(n_steps, k, es_n0, trials, seed)?;
                    FanoConfig::from_chunk_rates(&cfg.spec, &table, *delta)?
                }
            };
            fc.max_visits = *max_visits;
            DecoderRt::Fano(fc)
        }
        DecoderConfig::Sc => DecoderRt::Sc,
        DecoderConfig::Scl { list_size } => {
            if *list_size == 0 {
                return Err(SimError::List(ListError::BadListSize));
            }
            DecoderRt::Scl(*list_size)
        }
        DecoderConfig::Uncoded => DecoderRt::Uncoded,
    })
}

fn run_frame(
    cfg: &ExperimentConfig,
    rt: &DecoderRt,
    es_n0: f64,
    point_index: u64,
    frame: u64,
) -> Result<FrameResult, SimError> {
    let n = cfg.spec.block_len();
    let mut rng = trial_rng(cfg.base_seed, point_index, frame);
    let sigma = (1.0 / (2.0 * es_n0)).sqrt();
    let normal = Normal::new(0.0, sigma).expect("sigma is positive");
    let llr_of = |bit: u8, rng: &mut rand_chacha::ChaCha8Rng| {
        if cfg.noiseless {
            if bit == 0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        } else {
            let tx = 1.0 - 2.0 * f64::from(bit);
            4.0 * es_n0 * (tx + normal.sample(rng))
        }
    };

    if let DecoderRt::Uncoded = rt {
        let mut bit_errors = 0u64;
        for _ in 0..n {
            let bit = rng.gen_range(0..2u8);
            let llr = llr_of(bit, &mut rng);
            let hat = u8::from(llr < 0.0);
            bit_errors += u64::from(hat != bit);
        }
        return Ok(FrameResult {
            error: bit_errors > 0,
            bit_errors,
            visits: n as u64,
            per_bit: vec![1; n],
            exhausted: false,
            tail: Vec::new(),
        });
    }

    let d: Vec<u8> = (0..cfg.spec.data_len()).map(|_| rng.gen_range(0..2u8)).collect();
    let v = insert_data(&d, &cfg.spec)?;
    let u = conv_encode(&v, &cfg.spec)?;
    let x = polar_transform(&u).expect("spec length is a valid block length");
    let llrs: Vec<f64> = x.iter().map(|&b| llr_of(b, &mut rng)).collect();

    let (d_hat, success, visits, per_bit, exhausted) = match rt {
        DecoderRt::Fano(fc) => {
            let out = fano_decode(&llrs, &cfg.spec, fc)?;
            (out.d_hat, out.success, out.visits_total, out.visits_per_bit, out.budget_exhausted)
        }
        DecoderRt::Sc => {
            let out = sc_decode(&llrs, &cfg.spec)?;
            (out.d_hat, true, out.visits, vec![1; n], false)
        }
        DecoderRt::Scl(list) => {
            let out = scl_decode(&llrs, &cfg.spec, *list)?;
            // Spread the exact visit count evenly for the per-bit view.
            (out.d_hat, true, out.visits, vec![out.visits / n as u64; n], false)
        }
        DecoderRt::Uncoded => unreachable!("handled above"),
    };
    let bit_errors = d.iter().zip(&d_hat).filter(|(a, b)| a != b).count() as u64;
    let tail = per_bit.iter().copied().filter(|&c| c > cfg.ccdf_threshold).collect();
    Ok(FrameResult {
        error: !success || bit_errors > 0,
        bit_errors,
        visits,
        per_bit,
        exhausted,
        tail,
    })
}

fn run_point(cfg: &ExperimentConfig, ebn0_db: f64, point_index: u64) -> Result<SnrPoint, SimError> {
    let n = cfg.spec.block_len();
    let es_n0 = cfg.es_n0(ebn0_db);
    let rt = build_decoder(cfg, es_n0, point_index)?;

    let mut frames = 0u64;
    let mut frame_errors = 0u64;
    let mut bit_errors = 0u64;
    let mut total_visits = 0u64;
    let mut per_bit_visits = vec![0u64; n];
    let mut exhausted = 0u64;
    let mut ccdf_samples = Vec::new();

    while frames < cfg.stop.max_frames && frame_errors < cfg.stop.min_frame_errors {
        let batch = FRAME_BATCH.min(cfg.stop.max_frames - frames);
        let results: Vec<Result<FrameResult, SimError>> = (frames..frames + batch)
            .into_par_iter()
            .map(|f| run_frame(cfg, &rt, es_n0, point_index, f))
            .collect();
        for r in results {
            let r = r?;
            frames += 1;
            frame_errors += u64::from(r.error);
            bit_errors += r.bit_errors;
            total_visits += r.visits;
            exhausted += u64::from(r.exhausted);
            for (acc, c) in per_bit_visits.iter_mut().zip(&r.per_bit) {
                *acc += c;
            }
            ccdf_samples.extend_from_slice(&r.tail);
        }
    }

    let (fer_ci_lo, fer_ci_hi) = wilson_ci(frame_errors, frames);
    let data_bits = match cfg.decoder {
        DecoderConfig::Uncoded => n as u64,
        _ => cfg.spec.data_len() as u64,
    };
    Ok(SnrPoint {
        ebn0_db,
        es_n0,
        frames,
        frame_errors,
        bit_errors,
        fer: frame_errors as f64 / frames as f64,
        fer_ci_lo,
        fer_ci_hi,
        ber: bit_errors as f64 / (frames * data_bits) as f64,
        total_visits,
        anv: total_visits as f64 / (frames * n as u64) as f64,
        per_bit_visits,
        exhausted,
        exhausted_rate: exhausted as f64 / frames as f64,
        ccdf_samples,
        ccdf_population: frames * n as u64,
    })
}

/// Run the full sweep. Results are a pure function of the config.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SimSummary, SimError> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if cfg.workers > 0 {
        builder = builder.num_threads(cfg.workers);
    }
    let pool = builder.build().map_err(|e| SimError::Pool(e.to_string()))?;
    let points = pool.install(|| {
        cfg.ebn0_grid_db
            .iter()
            .enumerate()
            .map(|(i, &db)| run_point(cfg, db, i as u64))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(SimSummary { config: cfg.clone(), spec_sha256: spec_sha256(&cfg.spec), points })
}

/// Render the canonical CSV (stable header, stable formatting).
pub fn render_csv(summary: &SimSummary) -> String {
    let mut out = String::from(
        "ebn0_db,frames,frame_errors,fer,fer_ci_lo,fer_ci_hi,ber,anv,exhausted_rate\n",
    );
    for p in &summary.points {
        out.push_str(&format!(
            "{:.2},{},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}\n",
            p.ebn0_db,
            p.frames,
            p.frame_errors,
            p.fer,
            p.fer_ci_lo,
            p.fer_ci_hi,
            p.ber,
            p.anv,
            p.exhausted_rate,
        ));
    }
    out
}

#[derive(Debug, Error, PartialEq)]
pub enum TailError {
    #[error("tail holds {available} samples at or above the cutoff; need {needed}")]
    InsufficientTail { available: usize, needed: usize },
    #[error("cutoff must be positive and finite, got {0}")]
    BadCutoff(f64),
}

/// Hill tail-index fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailFit {
    pub beta: f64,
    /// Bootstrap 95% percentile interval.
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_tail: usize,
    pub l_min: f64,
}

/// Hill maximum-likelihood estimate of the tail exponent over samples
/// `>= l_min`: `beta = n / sum ln(x_i / l_min)`, with a seeded bootstrap
/// percentile CI. Needs at least 100 tail samples with some spread.
pub fn fit_pareto_tail(samples: &[u64], l_min: f64, seed: u64) -> Result<TailFit, TailError> {
    const NEEDED: usize = 100;
    const BOOT: usize = 200;
    if !(l_min.is_finite() && l_min > 0.0) {
        return Err(TailError::BadCutoff(l_min));
    }
    let tail: Vec<f64> = samples
        .iter()
        .copied()
        .filter(|&x| (x as f64) >= l_min)
        .map(|x| (x as f64 / l_min).ln())
        .collect();
    if tail.len() < NEEDED {
        return Err(TailError::InsufficientTail { available: tail.len(), needed: NEEDED });
    }
    let spread = tail.iter().any(|&t| t != tail[0]);
    let sum: f64 = tail.iter().sum();
    if !spread || sum <= 0.0 {
        // All-equal tails carry no slope information.
        return Err(TailError::InsufficientTail { available: 0, needed: NEEDED });
    }
    let n = tail.len();
    let beta = n as f64 / sum;
    let mut rng = trial_rng(seed, 0x7a11, 0);
    let mut boots: Vec<f64> = (0..BOOT)
        .map(|_| {
            let s: f64 = (0..n).map(|_| tail[rng.gen_range(0..n)]).sum();
            if s > 0.0 {
                n as f64 / s
            } else {
                f64::INFINITY
            }
        })
        .collect();
    boots.sort_by(|a, b| a.partial_cmp(b).expect("bootstrap betas are not NaN"));
    let lo = boots[(BOOT as f64 * 0.025) as usize];
    let hi = boots[(BOOT as f64 * 0.975) as usize - 1];
    Ok(TailFit { beta, ci_lo: lo, ci_hi: hi, n_tail: n, l_min })
}

/// One row of the tail-bound comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlayRow {
    pub l: f64,
    pub empirical: f64,
    pub bound: f64,
    pub within: bool,
}

/// Compare the empirical CCDF of per-bit counts against
/// [`crate::cutoff::pareto_ccdf_bound`] on a grid of levels. Soft check:
/// rows are flagged, never failed.
pub fn ccdf_overlay(
    samples: &[u64],
    population: u64,
    levels: &[f64],
    eps: f64,
    beta: f64,
) -> Result<Vec<OverlayRow>, CutoffError> {
    let mut sorted: Vec<u64> = samples.to_vec();
    sorted.sort_unstable();
    levels
        .iter()
        .map(|&l| {
            let idx = sorted.partition_point(|&x| (x as f64) < l);
            let empirical = (sorted.len() - idx) as f64 / population as f64;
            let bound = crate::cutoff::pareto_ccdf_bound(l, eps, beta)?;
            Ok(OverlayRow { l, empirical, bound, within: empirical <= bound })
        })
        .collect()
}
