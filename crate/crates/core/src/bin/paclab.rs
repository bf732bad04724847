//! `paclab` — code design, rate tables, Monte-Carlo sweeps, bound audits,
//! and tail fits from JSON configs.
//!
//! Exit codes: 0 success, 2 config/usage error, 3 infeasible design.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use paclab_core::channel::DiscreteChannel;
use paclab_core::cutoff::{audit_metric_mgf, cutoff_rate, polarized_cutoff_rates};
use paclab_core::profile::{design_pac_code, DesignParams, ProfileError};
use paclab_core::sim::{
    ccdf_overlay, fit_pareto_tail, render_csv, run_sweep, DecoderConfig, ExperimentConfig,
};

#[derive(Parser)]
#[command(name = "paclab", version, about = "PAC-code laboratory: design, decode, measure")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Design a code (RM seed, cutoff-rate constraint, weight freeze).
    ///
    /// Prints the resulting code JSON to stdout; --out stores the full
    /// design audit trail.
    Design(CommonArgs),
    /// Estimate the polarized per-chunk cutoff-rate table.
    Rates(CommonArgs),
    /// Run an FER/ANV sweep; emits CSV (+ companion JSON next to --out).
    Simulate(SimArgs),
    /// Audit the metric generating-function bounds on a discrete channel.
    Audit(CommonArgs),
    /// Fit a Pareto tail exponent to per-bit visit counts.
    Tail(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config path.
    #[arg(long)]
    config: PathBuf,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's seed.
    #[arg(long, env = "PACLAB_SEED")]
    seed: Option<u64>,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Override worker count (0 = all cores).
    #[arg(long, env = "PACLAB_WORKERS")]
    workers: Option<usize>,
    /// Override the Fano threshold spacing.
    #[arg(long)]
    delta: Option<f64>,
    /// Override the Fano visit budget.
    #[arg(long)]
    max_visits: Option<u64>,
}

#[derive(Deserialize)]
struct RatesConfig {
    /// Polarization steps (block length 2^n).
    n: usize,
    /// Chunk exponent (2^k chunks).
    k: usize,
    es_n0: f64,
    #[serde(default = "default_rate_trials")]
    trials: u64,
    #[serde(default)]
    seed: u64,
}

fn default_rate_trials() -> u64 {
    1_000_000
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ChannelSpec {
    Bsc {
        p: f64,
    },
    Bec {
        e: f64,
    },
    /// Two rows of output probabilities, equiprobable inputs.
    Dmc {
        outputs: [Vec<f64>; 2],
    },
}

#[derive(Deserialize)]
struct AuditConfig {
    channel: ChannelSpec,
    /// Metric bias; defaults to the channel's cutoff rate.
    bias: Option<f64>,
    r0_grid: Option<Vec<f64>>,
    r_grid: Option<Vec<f64>>,
}

#[derive(Deserialize)]
struct OverlayConfig {
    /// Total per-bit counts the samples were drawn from.
    population: u64,
    /// Per-bit rate margin in the analytic bound.
    eps: f64,
    /// Bound exponent.
    beta: f64,
    levels: Vec<f64>,
}

#[derive(Deserialize)]
struct TailConfig {
    samples: Vec<u64>,
    l_min: f64,
    #[serde(default)]
    seed: u64,
    overlay: Option<OverlayConfig>,
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Design(a) => run_design(a),
        Cmd::Rates(a) => run_rates(a),
        Cmd::Simulate(a) => run_simulate(a),
        Cmd::Audit(a) => run_audit(a),
        Cmd::Tail(a) => run_tail(a),
    }
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn load<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output types serialize")
}

fn run_design(args: CommonArgs) -> ExitCode {
    let mut params: DesignParams = match load(&args.config) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    if let Some(seed) = args.seed {
        params.seed = seed;
    }
    let design = match design_pac_code(&params) {
        Ok(d) => d,
        Err(e @ ProfileError::Infeasible { .. }) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
        Err(e) => return fail(e),
    };
    if let Some(out) = &args.out {
        if let Err(e) = emit(&Some(out.clone()), &to_json(&design)) {
            return fail(e);
        }
    }
    // The code itself always goes to stdout so designs can be piped.
    println!("{}", to_json(&design.spec));
    ExitCode::SUCCESS
}

fn run_rates(args: CommonArgs) -> ExitCode {
    let mut cfg: RatesConfig = match load(&args.config) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let table = match polarized_cutoff_rates(cfg.n, cfg.k, cfg.es_n0, cfg.trials, cfg.seed) {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    match emit(&args.out, &to_json(&table)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

fn run_simulate(args: SimArgs) -> ExitCode {
    let mut cfg: ExperimentConfig = match load(&args.common.config) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    if let Some(seed) = args.common.seed {
        cfg.base_seed = seed;
    }
    if let Some(workers) = args.workers {
        cfg.workers = workers;
    }
    if args.delta.is_some() || args.max_visits.is_some() {
        match &mut cfg.decoder {
            DecoderConfig::Fano { delta, max_visits, .. } => {
                if let Some(d) = args.delta {
                    *delta = d;
                }
                if let Some(m) = args.max_visits {
                    *max_visits = Some(m);
                }
            }
            _ => eprintln!("warning: --delta/--max-visits ignored for this decoder"),
        }
    }
    let summary = match run_sweep(&cfg) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    if let Err(e) = emit(&args.common.out, &render_csv(&summary)) {
        return fail(e);
    }
    if let Some(out) = &args.common.out {
        // Companion manifest: full config, content hash, raw aggregates.
        let companion = out.with_extension("json");
        if companion != *out {
            if let Err(e) = emit(&Some(companion), &to_json(&summary)) {
                return fail(e);
            }
        }
    }
    ExitCode::SUCCESS
}

fn run_audit(args: CommonArgs) -> ExitCode {
    let cfg: AuditConfig = match load(&args.config) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let ch = match cfg.channel {
        ChannelSpec::Bsc { p } => DiscreteChannel::bsc(p),
        ChannelSpec::Bec { e } => DiscreteChannel::bec(e),
        ChannelSpec::Dmc { outputs } => DiscreteChannel::uniform(outputs),
    };
    let ch = match ch {
        Ok(ch) => ch,
        Err(e) => return fail(e),
    };
    let bias = cfg.bias.unwrap_or_else(|| cutoff_rate(&ch));
    let grid = |lo: i32| -> Vec<f64> { (1..=9).map(|i| f64::from(lo * i) / 10.0).collect() };
    let r0s = cfg.r0_grid.unwrap_or_else(|| grid(-1));
    let rs = cfg.r_grid.unwrap_or_else(|| grid(1));
    match audit_metric_mgf(&ch, bias, &r0s, &rs) {
        Ok(audit) => match emit(&args.out, &to_json(&audit)) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(e),
        },
        Err(e) => fail(e),
    }
}

fn run_tail(args: CommonArgs) -> ExitCode {
    let mut cfg: TailConfig = match load(&args.config) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let fit = match fit_pareto_tail(&cfg.samples, cfg.l_min, cfg.seed) {
        Ok(f) => f,
        Err(e) => return fail(e),
    };
    let overlay = match &cfg.overlay {
        Some(o) => match ccdf_overlay(&cfg.samples, o.population, &o.levels, o.eps, o.beta) {
            Ok(rows) => Some(rows),
            Err(e) => return fail(e),
        },
        None => None,
    };
    let report = serde_json::json!({ "fit": fit, "overlay": overlay });
    match emit(&args.out, &to_json(&report)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
