//! Experiment orchestration: resolve a configuration, write its manifest,
//! run, and emit CSVs, reports, and optional plots.

use std::fs;
use std::path::{Path, PathBuf};

use selfmod_core::gates::{DestructiveUtilityConfig, GateConfig, Policy};
use selfmod_core::hypothesis::{capacity, TrainConfig};
use selfmod_core::ma::{self, MaConfig};
use selfmod_core::mh::{self, MhConfig};
use selfmod_core::oracle;
use selfmod_core::substrate;
use selfmod_core::synthdata::SynthConfig;

use crate::config::{
    manifest_finish_line, manifest_text, parse_cap, parse_seeds, parse_sizes, seeds_to_string,
    sizes_to_string, KvMap,
};
use crate::plot::{line_plot, Series, PALETTE};
use crate::CliError;

pub struct RunContext {
    pub out_dir: PathBuf,
    pub plot: bool,
}

impl RunContext {
    fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.out_dir.join(name);
        fs::write(&path, contents)
            .map_err(|e| CliError::failure(format!("cannot write {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn append(&self, name: &str, contents: &str) -> Result<(), CliError> {
        use std::io::Write as _;
        let path = self.out_dir.join(name);
        let mut f = fs::OpenOptions::new()
            .append(true)
            .open(&path)
            .map_err(|e| CliError::failure(format!("cannot append {}: {e}", path.display())))?;
        f.write_all(contents.as_bytes())
            .map_err(|e| CliError::failure(format!("cannot append {}: {e}", path.display())))?;
        Ok(())
    }

    pub fn prepare(out: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(out)
            .map_err(|e| CliError::config(format!("cannot create {}: {e}", out.display())))?;
        Ok(Self {
            out_dir: out.to_path_buf(),
            plot: false,
        })
    }
}

fn load_file_config(path: &Option<PathBuf>, defaults_flag: bool) -> Result<KvMap, CliError> {
    if path.is_some() && defaults_flag {
        return Err(CliError::config(
            "--config and --defaults are mutually exclusive".to_string(),
        ));
    }
    match path {
        None => Ok(KvMap::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::config(format!("cannot read {}: {e}", p.display())))?;
            KvMap::parse(&text)
        }
    }
}

// ---------------------------------------------------------------------------
// representational axis
// ---------------------------------------------------------------------------

pub struct MhArgsResolved {
    pub resolved: KvMap,
    pub base: MhConfig,
    pub policies: Vec<Policy>,
    pub stop_override: Option<bool>,
}

const MH_KEYS: &[&str] = &[
    "dim",
    "n_train",
    "n_val",
    "n_test",
    "noise_sigma",
    "flip_rate",
    "l2_c",
    "tol",
    "max_newton_iters",
    "c0",
    "delta_v",
    "tau_mult",
    "cap",
    "max_degree",
    "policies",
    "stop_on_reject",
    "alpha",
    "beta",
    "seeds",
];

pub fn resolve_mh(
    file: &Option<PathBuf>,
    defaults_flag: bool,
    overrides: &KvMap,
) -> Result<MhArgsResolved, CliError> {
    let d = MhConfig::reference_defaults();
    let mut kv = KvMap::default();
    kv.set("dim", d.synth.dim);
    kv.set("n_train", d.synth.n_train);
    kv.set("n_val", d.synth.n_val);
    kv.set("n_test", d.synth.n_test);
    kv.set("noise_sigma", d.synth.noise_sigma);
    kv.set("flip_rate", d.synth.flip_rate);
    kv.set("l2_c", d.train_cfg.l2_c);
    kv.set("tol", d.train_cfg.tol);
    kv.set("max_newton_iters", d.train_cfg.max_newton_iters);
    kv.set("c0", d.gate_cfg.c0);
    kv.set("delta_v", d.gate_cfg.delta_v);
    kv.set("tau_mult", d.gate_cfg.tau_mult);
    kv.set("cap", d.gate_cfg.cap);
    kv.set("max_degree", d.max_degree);
    kv.set("policies", "two_gate,dest_val_nocap,dest_val,dest_train");
    kv.set("alpha", d.util_cfg.alpha);
    kv.set("beta", d.util_cfg.beta);
    kv.set("seeds", seeds_to_string(&d.seeds));

    let from_file = load_file_config(file, defaults_flag)?;
    from_file.check_known(MH_KEYS)?;
    kv.merge(&from_file);
    overrides.check_known(MH_KEYS)?;
    kv.merge(overrides);

    let synth = SynthConfig {
        dim: kv.require_parsed("dim")?,
        n_train: kv.require_parsed("n_train")?,
        n_val: kv.require_parsed("n_val")?,
        n_test: kv.require_parsed("n_test")?,
        noise_sigma: kv.require_parsed("noise_sigma")?,
        flip_rate: kv.require_parsed("flip_rate")?,
        seed: 0,
    };
    let n_val = synth.n_val;
    let base = MhConfig {
        synth,
        train_cfg: TrainConfig {
            l2_c: kv.require_parsed("l2_c")?,
            tol: kv.require_parsed("tol")?,
            max_newton_iters: kv.require_parsed("max_newton_iters")?,
        },
        gate_cfg: GateConfig {
            c0: kv.require_parsed("c0")?,
            delta_v: kv.require_parsed("delta_v")?,
            tau_mult: kv.require_parsed("tau_mult")?,
            cap: parse_cap(kv.get("cap").unwrap_or("31"))?,
            n_val,
        },
        util_cfg: DestructiveUtilityConfig {
            alpha: kv.require_parsed("alpha")?,
            beta: kv.require_parsed("beta")?,
        },
        max_degree: kv.require_parsed("max_degree")?,
        policy: Policy::TwoGate,
        stop_on_reject: true,
        seeds: parse_seeds(kv.get("seeds").unwrap_or("5"))?,
    };
    let policies = kv
        .get("policies")
        .unwrap_or_default()
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<Policy>()
                .map_err(|e| CliError::config(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if policies.is_empty() {
        return Err(CliError::config("policies must be nonempty".to_string()));
    }
    let stop_override = match kv.get("stop_on_reject") {
        None => None,
        Some(raw) => Some(raw.parse::<bool>().map_err(|e| {
            CliError::config(format!("bad value for `stop_on_reject`: {e}"))
        })?),
    };
    base.validate().map_err(CliError::from)?;
    Ok(MhArgsResolved {
        resolved: kv,
        base,
        policies,
        stop_override,
    })
}

pub fn run_mh_cmd(ctx: &RunContext, resolved: MhArgsResolved) -> Result<(), CliError> {
    ctx.write("manifest_mh.txt", &manifest_text("mh", &resolved.resolved))?;
    let exp = mh::run_mh_experiment(&resolved.base, &resolved.policies, resolved.stop_override)?;

    let m = resolved.base.synth.n_train;
    for policy in &resolved.policies {
        let mut trajs = exp.trajectories(*policy);
        trajs.sort_by_key(|t| t.seed);
        for traj in trajs {
            let mut buf = Vec::new();
            mh::write_run_csv(traj, &resolved.base.gate_cfg, m, &mut buf)
                .map_err(|e| CliError::failure(e.to_string()))?;
            ctx.write(
                &format!("mh_run_{}_seed{}.csv", policy.as_str(), traj.seed),
                &String::from_utf8(buf).expect("utf8 csv"),
            )?;
        }
    }

    let mut curves = Vec::new();
    for policy in &resolved.policies {
        curves.push(exp.aggregate(*policy)?);
    }
    let mut buf = Vec::new();
    mh::write_aggregate_csv(&curves, &mut buf).map_err(|e| CliError::failure(e.to_string()))?;
    ctx.write("mh_aggregate.csv", &String::from_utf8(buf).expect("utf8 csv"))?;

    let mut buf = Vec::new();
    mh::write_decisions_csv(&exp, &resolved.base.gate_cfg, m, &mut buf)
        .map_err(|e| CliError::failure(e.to_string()))?;
    ctx.write("mh_decisions.csv", &String::from_utf8(buf).expect("utf8 csv"))?;

    for policy in &resolved.policies {
        println!(
            "policy {:15} mean final test loss {:.4}",
            policy.as_str(),
            exp.mean_final_test_loss(*policy)
        );
    }

    if ctx.plot {
        let series: Vec<Series> = curves
            .iter()
            .enumerate()
            .map(|(i, c)| Series {
                label: c.policy.as_str(),
                color: PALETTE[i % PALETTE.len()],
                points: c
                    .mean
                    .iter()
                    .enumerate()
                    .map(|(s, &v)| (s as f64, v))
                    .collect(),
            })
            .collect();
        ctx.write(
            "mh_curves.svg",
            &line_plot(
                "incumbent test loss per edit step",
                "step",
                "test 0-1 loss",
                &series,
            ),
        )?;
    }
    ctx.append("manifest_mh.txt", &manifest_finish_line())?;
    Ok(())
}

// ---------------------------------------------------------------------------
// algorithmic axis
// ---------------------------------------------------------------------------

pub struct MaArgsResolved {
    pub resolved: KvMap,
    pub cfg: MaConfig,
}

const MA_KEYS: &[&str] = &[
    "dim",
    "n_train",
    "n_val",
    "n_test",
    "noise_sigma",
    "flip_rate",
    "degree",
    "eta0",
    "batch",
    "t_max",
    "l2",
    "budget",
    "log_every",
    "seeds",
];

pub fn resolve_ma(
    file: &Option<PathBuf>,
    defaults_flag: bool,
    overrides: &KvMap,
) -> Result<MaArgsResolved, CliError> {
    let d = MaConfig::reference_defaults();
    let mut kv = KvMap::default();
    kv.set("dim", d.synth.dim);
    kv.set("n_train", d.synth.n_train);
    kv.set("n_val", d.synth.n_val);
    kv.set("n_test", d.synth.n_test);
    kv.set("noise_sigma", d.synth.noise_sigma);
    kv.set("flip_rate", d.synth.flip_rate);
    kv.set("degree", d.degree);
    kv.set("eta0", d.eta0);
    kv.set("batch", d.batch);
    kv.set("t_max", d.t_max);
    kv.set("l2", d.l2);
    kv.set("budget", d.budget);
    kv.set("log_every", d.log_every);
    kv.set("seeds", seeds_to_string(&d.seeds));

    let from_file = load_file_config(file, defaults_flag)?;
    from_file.check_known(MA_KEYS)?;
    kv.merge(&from_file);
    overrides.check_known(MA_KEYS)?;
    kv.merge(overrides);

    let cfg = MaConfig {
        synth: SynthConfig {
            dim: kv.require_parsed("dim")?,
            n_train: kv.require_parsed("n_train")?,
            n_val: kv.require_parsed("n_val")?,
            n_test: kv.require_parsed("n_test")?,
            noise_sigma: kv.require_parsed("noise_sigma")?,
            flip_rate: kv.require_parsed("flip_rate")?,
            seed: 0,
        },
        degree: kv.require_parsed("degree")?,
        eta0: kv.require_parsed("eta0")?,
        batch: kv.require_parsed("batch")?,
        t_max: kv.require_parsed("t_max")?,
        l2: kv.require_parsed("l2")?,
        budget: kv.require_parsed("budget")?,
        seeds: parse_seeds(kv.get("seeds").unwrap_or("20"))?,
        log_every: kv.require_parsed("log_every")?,
    };
    cfg.validate().map_err(CliError::from)?;
    Ok(MaArgsResolved { resolved: kv, cfg })
}

pub fn run_ma_cmd(ctx: &RunContext, resolved: MaArgsResolved) -> Result<(), CliError> {
    ctx.write("manifest_ma.txt", &manifest_text("ma", &resolved.resolved))?;
    let (capped, uncapped) = ma::run_ma_experiment(&resolved.cfg)?;

    for (label, runs) in [("capped", &capped), ("uncapped", &uncapped)] {
        for run in runs {
            let mut buf = Vec::new();
            ma::write_run_csv(run, &mut buf).map_err(|e| CliError::failure(e.to_string()))?;
            ctx.write(
                &format!("ma_run_{label}_seed{}.csv", run.seed),
                &String::from_utf8(buf).expect("utf8 csv"),
            )?;
        }
    }

    let mut buf = Vec::new();
    ma::write_aggregate_csv(&[("capped", &capped), ("uncapped", &uncapped)], &mut buf)
        .map_err(|e| CliError::failure(e.to_string()))?;
    ctx.write("ma_aggregate.csv", &String::from_utf8(buf).expect("utf8 csv"))?;

    let m = resolved.cfg.synth.n_train;
    for (label, runs) in [("capped", &capped), ("uncapped", &uncapped)] {
        let report = ma::gap_envelope_check(runs, m)?;
        let mut buf = Vec::new();
        ma::write_envelope_report(label, &report, m, &mut buf)
            .map_err(|e| CliError::failure(e.to_string()))?;
        ctx.write(
            &format!("ma_envelope_{label}.txt"),
            &String::from_utf8(buf).expect("utf8 report"),
        )?;
        println!(
            "{label}: halted at t={} M={} | c_hat={:.3} violations={}",
            runs[0].halted_at,
            runs[0].final_step_mass,
            report.c_hat,
            report.violations.len()
        );
    }

    if ctx.plot {
        let mk = |label: &'static str, color: &'static str, runs: &[ma::SgdRun]| {
            let grid = runs[0].points.len();
            let points = (0..grid)
                .map(|i| {
                    let gaps: Vec<f64> = runs.iter().map(|r| r.points[i].gap01).collect();
                    (
                        runs[0].points[i].step_mass,
                        selfmod_core::stats::mean(&gaps),
                    )
                })
                .collect();
            Series {
                label,
                color,
                points,
            }
        };
        ctx.write(
            "ma_gap.svg",
            &line_plot(
                "generalization gap vs cumulative step-mass",
                "step-mass",
                "test - train 0-1 loss",
                &[
                    mk("capped", PALETTE[0], &capped),
                    mk("uncapped", PALETTE[1], &uncapped),
                ],
            ),
        )?;
    }
    ctx.append("manifest_ma.txt", &manifest_finish_line())?;
    Ok(())
}

// ---------------------------------------------------------------------------
// substrate axis
// ---------------------------------------------------------------------------

pub struct SubstrateArgsResolved {
    pub resolved: KvMap,
    pub n_states: usize,
    pub domain_max: u32,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub find_collision: bool,
    pub collision_m: usize,
    pub collision_d: u32,
    pub collision_budget: u64,
}

const SUBSTRATE_KEYS: &[&str] = &[
    "n_states",
    "domain_max",
    "sizes",
    "seeds",
    "find_collision",
    "collision_m",
    "collision_d",
    "collision_budget",
];

pub fn resolve_substrate(
    file: &Option<PathBuf>,
    defaults_flag: bool,
    overrides: &KvMap,
) -> Result<SubstrateArgsResolved, CliError> {
    let mut kv = KvMap::default();
    kv.set("n_states", 4);
    kv.set("domain_max", 256);
    kv.set("sizes", "250,500,1000,2000,4000");
    kv.set("seeds", "50");
    kv.set("find_collision", false);
    kv.set("collision_budget", 5_000_000u64);

    let from_file = load_file_config(file, defaults_flag)?;
    from_file.check_known(SUBSTRATE_KEYS)?;
    kv.merge(&from_file);
    overrides.check_known(SUBSTRATE_KEYS)?;
    kv.merge(overrides);

    let n_states: usize = kv.require_parsed("n_states")?;
    let domain_max: u32 = kv.require_parsed("domain_max")?;
    if n_states == 0 {
        return Err(CliError::config("n_states must be >= 1".to_string()));
    }
    if domain_max == 0 {
        return Err(CliError::config("domain_max must be >= 1".to_string()));
    }
    // Collision search defaults: the shortest super-critical stream length
    // over a small domain.
    let collision_m = match kv.get("collision_m") {
        Some(raw) => raw
            .parse()
            .map_err(|e| CliError::config(format!("bad collision_m: {e}")))?,
        None => n_states + 1,
    };
    let collision_d = match kv.get("collision_d") {
        Some(raw) => raw
            .parse()
            .map_err(|e| CliError::config(format!("bad collision_d: {e}")))?,
        None => (4 * n_states) as u32,
    };
    let sizes = parse_sizes(kv.get("sizes").unwrap_or_default())?;
    kv.set("collision_m", collision_m);
    kv.set("collision_d", collision_d);
    kv.set("sizes", sizes_to_string(&sizes));
    Ok(SubstrateArgsResolved {
        n_states,
        domain_max,
        sizes,
        seeds: parse_seeds(kv.get("seeds").unwrap_or("50"))?,
        find_collision: kv.require_parsed("find_collision")?,
        collision_m,
        collision_d,
        collision_budget: kv.require_parsed("collision_budget")?,
        resolved: kv,
    })
}

pub fn run_substrate_cmd(ctx: &RunContext, resolved: SubstrateArgsResolved) -> Result<(), CliError> {
    ctx.write(
        "manifest_substrate.txt",
        &manifest_text("substrate", &resolved.resolved),
    )?;
    let curve = substrate::run_substrate_experiment(
        resolved.n_states,
        &resolved.sizes,
        resolved.domain_max,
        &resolved.seeds,
    )?;
    let mut buf = Vec::new();
    substrate::write_curve_csv(&curve, &mut buf).map_err(|e| CliError::failure(e.to_string()))?;
    ctx.write(
        "substrate_curves.csv",
        &String::from_utf8(buf).expect("utf8 csv"),
    )?;
    for p in &curve {
        println!(
            "m={:6} {:4} mean_risk={:.6} stderr={:.6}",
            p.m, p.learner, p.mean_risk, p.stderr
        );
    }

    if resolved.find_collision {
        let witness = substrate::find_state_collision(
            resolved.n_states,
            resolved.collision_m,
            resolved.collision_d,
            resolved.collision_budget,
        )?;
        match witness {
            Some(w) => {
                let mut buf = Vec::new();
                substrate::write_witness(&w, &mut buf)
                    .map_err(|e| CliError::failure(e.to_string()))?;
                ctx.write(
                    &format!("substrate_witness_N{}.txt", resolved.n_states),
                    &String::from_utf8(buf).expect("utf8 witness"),
                )?;
                println!(
                    "collision witness found: state {} intervals [{},{}] vs [{},{}]",
                    w.final_state, w.interval_a.0, w.interval_a.1, w.interval_b.0, w.interval_b.1
                );
            }
            None => {
                ctx.write(
                    &format!("substrate_witness_N{}.txt", resolved.n_states),
                    "no witness found within the enumeration budget\n",
                )?;
                println!("no collision witness within budget");
            }
        }
    }
    ctx.append("manifest_substrate.txt", &manifest_finish_line())?;
    Ok(())
}

// ---------------------------------------------------------------------------
// oracle suites
// ---------------------------------------------------------------------------

pub struct OracleArgsResolved {
    pub resolved: KvMap,
    pub suite: String,
    pub trials: usize,
    pub net_size: usize,
    pub test_size: usize,
    pub seed: u64,
    pub draws: usize,
}

const ORACLE_KEYS: &[&str] = &["suite", "trials", "net", "test_samples", "seed", "draws"];

pub fn resolve_oracle(
    suite: &str,
    file: &Option<PathBuf>,
    defaults_flag: bool,
    overrides: &KvMap,
) -> Result<OracleArgsResolved, CliError> {
    if !["vc", "proxy", "deviation", "all"].contains(&suite) {
        return Err(CliError::config(format!(
            "unknown oracle suite `{suite}` (expected vc, proxy, deviation, or all)"
        )));
    }
    let mut kv = KvMap::default();
    kv.set("suite", suite);
    kv.set("trials", 200);
    kv.set("net", 10_000);
    kv.set("test_samples", 20_000);
    kv.set("seed", 7);
    kv.set("draws", 100_000);
    let from_file = load_file_config(file, defaults_flag)?;
    from_file.check_known(ORACLE_KEYS)?;
    kv.merge(&from_file);
    overrides.check_known(ORACLE_KEYS)?;
    kv.merge(overrides);
    Ok(OracleArgsResolved {
        suite: kv.get("suite").unwrap_or("all").to_string(),
        trials: kv.require_parsed("trials")?,
        net_size: kv.require_parsed("net")?,
        test_size: kv.require_parsed("test_samples")?,
        seed: kv.require_parsed("seed")?,
        draws: kv.require_parsed("draws")?,
        resolved: kv,
    })
}

pub fn run_oracle_cmd(ctx: &RunContext, resolved: OracleArgsResolved) -> Result<(), CliError> {
    ctx.write(
        "manifest_oracle.txt",
        &manifest_text("oracle", &resolved.resolved),
    )?;
    let mut failures: Vec<String> = Vec::new();
    let suite = resolved.suite.as_str();

    if suite == "vc" || suite == "all" {
        let mut report = String::new();
        let thresholds = oracle::threshold_class(10);
        let vc_thr = oracle::vc_bruteforce(&thresholds)?;
        report.push_str(&format!(
            "thresholds on 10 points: vc={vc_thr} expected=1 {}\n",
            verdict(vc_thr == 1, &mut failures, "threshold class vc")
        ));
        let points = vec![0.0, 1.0, 2.0];
        let all: Vec<Vec<bool>> = (0..8u32)
            .map(|m| (0..3).map(|i| m & (1 << i) != 0).collect())
            .collect();
        let cube = oracle::FiniteClass::from_label_vectors(points, &all)?;
        let vc_cube = oracle::vc_bruteforce(&cube)?;
        report.push_str(&format!(
            "all labelings of 3 points: vc={vc_cube} expected=3 {}\n",
            verdict(vc_cube == 3, &mut failures, "full cube vc")
        ));
        let consts = oracle::FiniteClass::from_label_vectors(
            vec![1.0, 2.0, 3.0],
            &[vec![false; 3], vec![true; 3]],
        )?;
        let vc_const = oracle::vc_bruteforce(&consts)?;
        report.push_str(&format!(
            "constant classifiers: vc={vc_const} expected=1 {}\n",
            verdict(vc_const == 1, &mut failures, "constant class vc")
        ));
        ctx.write("oracle_vc_report.txt", &report)?;
    }

    if suite == "proxy" || suite == "all" {
        let mut report = String::new();
        let grids: [(usize, Vec<f64>); 3] = [
            (0, vec![0.5, 1.5, 2.5, 3.5, 4.5]),
            (1, vec![1.0, 2.0, 3.0, 4.0]),
            (2, (0..8).map(|i| -2.0 + 4.0 * f64::from(i) / 7.0).collect()),
        ];
        for (degree, grid) in grids {
            let class = oracle::sign_class_on_grid(degree, &grid, resolved.draws, resolved.seed)?;
            let vc = oracle::vc_bruteforce(&class)?;
            let proxy = capacity(degree).value as usize;
            report.push_str(&format!(
                "degree {degree} on {} points: enumerated vc={vc} proxy={proxy} {}\n",
                grid.len(),
                verdict(vc <= proxy, &mut failures, "proxy soundness")
            ));
        }
        report.push_str("note=sign patterns enumerated by sampling; vc values are lower bounds\n");
        ctx.write("oracle_proxy_report.txt", &report)?;
    }

    if suite == "deviation" || suite == "all" {
        let synth = SynthConfig {
            dim: 1,
            n_train: 150,
            n_val: 60,
            n_test: 1000,
            noise_sigma: 1.2,
            flip_rate: 0.35,
            seed: resolved.seed,
        };
        let mut report = String::new();

        // Two-hypothesis class: the Hoeffding-plus-union bound is the oracle.
        let probe0 = oracle::deviation_probe(
            0,
            capacity(0).value,
            60,
            0.05,
            resolved.trials,
            &synth,
            resolved.net_size,
            resolved.test_size,
            0.10,
        )?;
        let hoeffding = ((2.0f64 / 0.05).ln() / (2.0 * 60.0)).sqrt();
        let mut buf = Vec::new();
        oracle::write_deviation_report(&probe0, &mut buf)
            .map_err(|e| CliError::failure(e.to_string()))?;
        report.push_str(std::str::from_utf8(&buf).expect("utf8"));
        report.push_str(&format!(
            "hoeffding_bound={hoeffding}\nhoeffding_check={} {}\n\n",
            probe0.observed_quantile <= hoeffding,
            verdict(
                probe0.observed_quantile <= hoeffding,
                &mut failures,
                "hoeffding deviation example",
            )
        ));

        // The scaled VC bound with the experiment constant c0 = 0.10 is a
        // tuning knob, not a certificate; the probe documents the gap.
        let probe1 = oracle::deviation_probe(
            1,
            capacity(1).value,
            60,
            0.05,
            resolved.trials,
            &synth,
            resolved.net_size,
            resolved.test_size,
            0.10,
        )?;
        let mut buf = Vec::new();
        oracle::write_deviation_report(&probe1, &mut buf)
            .map_err(|e| CliError::failure(e.to_string()))?;
        report.push_str(std::str::from_utf8(&buf).expect("utf8"));
        report.push_str("expected=VIOLATED (c0 is an experiment constant, not a certified bound)\n");
        ctx.write("oracle_deviation_report.txt", &report)?;
    }

    ctx.append("manifest_oracle.txt", &manifest_finish_line())?;
    if failures.is_empty() {
        println!("oracle suite `{suite}`: all soundness checks passed");
        Ok(())
    } else {
        Err(CliError::failure(format!(
            "oracle soundness failures: {}",
            failures.join("; ")
        )))
    }
}

fn verdict(ok: bool, failures: &mut Vec<String>, what: &str) -> &'static str {
    if ok {
        "PASS"
    } else {
        failures.push(what.to_string());
        "FAIL"
    }
}
