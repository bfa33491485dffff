//! `selfmod-gate`: experiment runner for the capacity-gated
//! self-modification simulators.
//!
//! Subcommands map to the four experiment families: `mh` (representational
//! edits under four acceptance policies), `ma` (step-mass-capped vs
//! unconstrained SGD), `substrate` (finite-state vs unbounded-memory
//! threshold learning), and `oracle` (brute-force verification suites).
//!
//! Configuration comes from built-in defaults, an optional flat key=value
//! config file, and per-key flag overrides, in that priority order. Every
//! run writes a manifest whose key=value body is itself a valid config
//! file; re-running a manifest reproduces byte-identical CSVs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod config;
mod plot;
mod runner;

use config::KvMap;
use runner::RunContext;

/// Failure with a process exit code: 2 config, 3 fit, 1 other.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: String) -> Self {
        Self { code: 2, message }
    }

    pub fn fit(message: String) -> Self {
        Self { code: 3, message }
    }

    pub fn failure(message: String) -> Self {
        Self { code: 1, message }
    }
}

impl From<selfmod_core::mh::MhError> for CliError {
    fn from(e: selfmod_core::mh::MhError) -> Self {
        match e {
            selfmod_core::mh::MhError::Fit { .. } => Self::fit(e.to_string()),
            _ => Self::config(e.to_string()),
        }
    }
}

impl From<selfmod_core::ma::MaError> for CliError {
    fn from(e: selfmod_core::ma::MaError) -> Self {
        match e {
            selfmod_core::ma::MaError::Diverged(_) => Self::fit(e.to_string()),
            _ => Self::config(e.to_string()),
        }
    }
}

impl From<selfmod_core::substrate::SubstrateError> for CliError {
    fn from(e: selfmod_core::substrate::SubstrateError) -> Self {
        Self::config(e.to_string())
    }
}

impl From<selfmod_core::oracle::OracleError> for CliError {
    fn from(e: selfmod_core::oracle::OracleError) -> Self {
        Self::config(e.to_string())
    }
}

impl From<selfmod_core::synthdata::SynthError> for CliError {
    fn from(e: selfmod_core::synthdata::SynthError) -> Self {
        Self::config(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "selfmod-gate", version, about = "Capacity-gated self-modification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key=value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run with built-in defaults (no config file).
    #[arg(long, global = true)]
    defaults: bool,
    /// Also write SVG plots of the aggregate curves.
    #[arg(long, global = true)]
    plot: bool,
    /// Output directory (default: $SELFMOD_OUT, then ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed count N (seeds 0..N-1) or comma-separated list.
    #[arg(long, global = true)]
    seeds: Option<String>,
}

#[derive(Args)]
struct MhArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_val: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    flip_rate: Option<f64>,
    #[arg(long)]
    l2_c: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_newton_iters: Option<usize>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long)]
    delta_v: Option<f64>,
    #[arg(long)]
    tau_mult: Option<f64>,
    /// Capacity cap: an integer K, or `sqrt:SCALE` for K(m) = floor(SCALE sqrt(m)).
    #[arg(long)]
    cap: Option<String>,
    #[arg(long)]
    max_degree: Option<usize>,
    /// Comma-separated subset of two_gate,dest_val_nocap,dest_val,dest_train.
    #[arg(long)]
    policies: Option<String>,
    /// Force one stop-on-reject setting for all policies.
    #[arg(long)]
    stop_on_reject: Option<bool>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args)]
struct MaArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_val: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    flip_rate: Option<f64>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    eta0: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    t_max: Option<usize>,
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    log_every: Option<usize>,
}

#[derive(Args)]
struct SubstrateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of persistent states of the finite-state learner.
    #[arg(long = "N")]
    n_states: Option<usize>,
    /// Domain size D; inputs live in 1..=D.
    #[arg(long = "D")]
    domain_max: Option<u32>,
    /// Comma-separated sample sizes for the risk curves.
    #[arg(long)]
    sizes: Option<String>,
    /// Also run the state-collision witness search.
    #[arg(long)]
    find_collision: bool,
    #[arg(long)]
    collision_m: Option<usize>,
    #[arg(long)]
    collision_d: Option<u32>,
    #[arg(long)]
    collision_budget: Option<u64>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Suite: vc, proxy, deviation, or all.
    #[arg(default_value = "all")]
    suite: String,
    #[arg(long)]
    trials: Option<usize>,
    /// Hypothesis net size of the deviation probe.
    #[arg(long)]
    net: Option<usize>,
    /// Reference-risk sample count of the deviation probe.
    #[arg(long)]
    test_samples: Option<usize>,
    /// Generator seed of the probes.
    #[arg(long)]
    seed: Option<u64>,
    /// Sign-pattern enumeration budget.
    #[arg(long)]
    draws: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Representational axis: degree edits under four acceptance policies.
    Mh(MhArgs),
    /// Algorithmic axis: step-mass-capped vs unconstrained SGD.
    Ma(MaArgs),
    /// Substrate axis: finite-state vs unbounded-memory threshold learning.
    Substrate(SubstrateArgs),
    /// Brute-force verification suites.
    Oracle(OracleArgs),
}

fn out_dir(common: &CommonArgs) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| std::env::var_os("SELFMOD_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Mh(args) => {
            let mut overrides = KvMap::default();
            overrides.set_opt("dim", &args.dim);
            overrides.set_opt("n_train", &args.n_train);
            overrides.set_opt("n_val", &args.n_val);
            overrides.set_opt("n_test", &args.n_test);
            overrides.set_opt("noise_sigma", &args.noise_sigma);
            overrides.set_opt("flip_rate", &args.flip_rate);
            overrides.set_opt("l2_c", &args.l2_c);
            overrides.set_opt("tol", &args.tol);
            overrides.set_opt("max_newton_iters", &args.max_newton_iters);
            overrides.set_opt("c0", &args.c0);
            overrides.set_opt("delta_v", &args.delta_v);
            overrides.set_opt("tau_mult", &args.tau_mult);
            overrides.set_opt("cap", &args.cap);
            overrides.set_opt("max_degree", &args.max_degree);
            overrides.set_opt("policies", &args.policies);
            overrides.set_opt("stop_on_reject", &args.stop_on_reject);
            overrides.set_opt("alpha", &args.alpha);
            overrides.set_opt("beta", &args.beta);
            overrides.set_opt("seeds", &args.common.seeds);
            let resolved =
                runner::resolve_mh(&args.common.config, args.common.defaults, &overrides)?;
            let mut ctx = RunContext::prepare(&out_dir(&args.common))?;
            ctx.plot = args.common.plot;
            runner::run_mh_cmd(&ctx, resolved)
        }
        Command::Ma(args) => {
            let mut overrides = KvMap::default();
            overrides.set_opt("dim", &args.dim);
            overrides.set_opt("n_train", &args.n_train);
            overrides.set_opt("n_val", &args.n_val);
            overrides.set_opt("n_test", &args.n_test);
            overrides.set_opt("noise_sigma", &args.noise_sigma);
            overrides.set_opt("flip_rate", &args.flip_rate);
            overrides.set_opt("degree", &args.degree);
            overrides.set_opt("eta0", &args.eta0);
            overrides.set_opt("batch", &args.batch);
            overrides.set_opt("t_max", &args.t_max);
            overrides.set_opt("l2", &args.l2);
            overrides.set_opt("budget", &args.budget);
            overrides.set_opt("log_every", &args.log_every);
            overrides.set_opt("seeds", &args.common.seeds);
            let resolved =
                runner::resolve_ma(&args.common.config, args.common.defaults, &overrides)?;
            let mut ctx = RunContext::prepare(&out_dir(&args.common))?;
            ctx.plot = args.common.plot;
            runner::run_ma_cmd(&ctx, resolved)
        }
        Command::Substrate(args) => {
            let mut overrides = KvMap::default();
            overrides.set_opt("n_states", &args.n_states);
            overrides.set_opt("domain_max", &args.domain_max);
            overrides.set_opt("sizes", &args.sizes);
            overrides.set_opt("seeds", &args.common.seeds);
            if args.find_collision {
                overrides.set("find_collision", true);
            }
            overrides.set_opt("collision_m", &args.collision_m);
            overrides.set_opt("collision_d", &args.collision_d);
            overrides.set_opt("collision_budget", &args.collision_budget);
            let resolved =
                runner::resolve_substrate(&args.common.config, args.common.defaults, &overrides)?;
            let mut ctx = RunContext::prepare(&out_dir(&args.common))?;
            ctx.plot = args.common.plot;
            runner::run_substrate_cmd(&ctx, resolved)
        }
        Command::Oracle(args) => {
            let mut overrides = KvMap::default();
            overrides.set_opt("trials", &args.trials);
            overrides.set_opt("net", &args.net);
            overrides.set_opt("test_samples", &args.test_samples);
            overrides.set_opt("seed", &args.seed);
            overrides.set_opt("draws", &args.draws);
            let resolved = runner::resolve_oracle(
                &args.suite,
                &args.common.config,
                args.common.defaults,
                &overrides,
            )?;
            let mut ctx = RunContext::prepare(&out_dir(&args.common))?;
            ctx.plot = args.common.plot;
            runner::run_oracle_cmd(&ctx, resolved)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
