//! Algorithmic-axis runs: minibatch SGD on a fixed polynomial-logistic
//! class, with and without a cumulative step-mass cap.
//!
//! The step-mass of a run is `M_T = sum_t eta_t`. With the constant step
//! size used here, `M_T = eta0 * t` exactly; a compensated accumulator is
//! carried alongside and checked against the closed form. The capped
//! policy halts at the first step where the step-mass reaches the budget;
//! the unconstrained policy runs to `t_max`.

use std::io::{self, Write};

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::hypothesis::featurize;
use crate::rng::{stream_rng, STREAM_SGD};
use crate::stats::{self, KahanSum};
use crate::synthdata::{generate_split, SynthConfig, SynthError};

#[derive(Debug, Error)]
pub enum MaError {
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("invalid config: {0}")]
    InvalidConfig(&'static str),
    #[error("SGD diverged (non-finite parameters) at step {0}")]
    Diverged(usize),
    #[error("gap envelope needs at least two distinct step-mass values")]
    InsufficientPoints,
}

/// Configuration of one algorithmic-axis experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct MaConfig {
    pub synth: SynthConfig,
    /// Fixed class degree; the class never changes during a run.
    pub degree: usize,
    pub eta0: f64,
    pub batch: usize,
    pub t_max: usize,
    pub l2: f64,
    /// Step-mass budget of the capped policy.
    pub budget: f64,
    pub seeds: Vec<u64>,
    pub log_every: usize,
}

impl MaConfig {
    /// Reference defaults of the algorithmic experiment: degree-5 logistic
    /// on a 500/1000/2000 split, noise 0.6, flip 0.20, eta0 = 0.01,
    /// batch 32, 50000 iterations, L2 1e-5, budget 2.5, twenty seeds.
    pub fn reference_defaults() -> Self {
        Self {
            synth: SynthConfig {
                dim: 1,
                n_train: 500,
                n_val: 1000,
                n_test: 2000,
                noise_sigma: 0.6,
                flip_rate: 0.20,
                seed: 0,
            },
            degree: 5,
            eta0: 0.01,
            batch: 32,
            t_max: 50_000,
            l2: 1e-5,
            budget: 2.5,
            seeds: (0..20).collect(),
            log_every: 250,
        }
    }

    pub fn validate(&self) -> Result<(), MaError> {
        self.synth.validate()?;
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return Err(MaError::InvalidConfig("eta0 must be positive"));
        }
        if self.batch == 0 {
            return Err(MaError::InvalidConfig("batch must be >= 1"));
        }
        if self.t_max == 0 {
            return Err(MaError::InvalidConfig("t_max must be >= 1"));
        }
        if !(self.budget > 0.0 && self.budget.is_finite()) {
            return Err(MaError::InvalidConfig("budget must be positive"));
        }
        if self.l2 < 0.0 || !self.l2.is_finite() {
            return Err(MaError::InvalidConfig("l2 must be >= 0"));
        }
        if self.log_every == 0 {
            return Err(MaError::InvalidConfig("log_every must be >= 1"));
        }
        if self.seeds.is_empty() {
            return Err(MaError::InvalidConfig("seeds must be nonempty"));
        }
        if self.degree > 60 {
            return Err(MaError::InvalidConfig("degree exceeds the overflow guard"));
        }
        Ok(())
    }
}

/// One logged point of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapPoint {
    pub t: usize,
    /// Cumulative step-mass at t; equals eta0 * t for the constant step.
    pub step_mass: f64,
    pub train01: f64,
    pub test01: f64,
    pub train_logistic: f64,
    pub test_logistic: f64,
    /// test01 - train01.
    pub gap01: f64,
}

/// A completed SGD run.
#[derive(Debug, Clone)]
pub struct SgdRun {
    pub seed: u64,
    pub capped: bool,
    pub points: Vec<GapPoint>,
    pub halted_at: usize,
    pub final_step_mass: f64,
    /// Steps on which the norm projection actually bound.
    pub projection_hits: usize,
    /// Largest divergence between the compensated accumulator and the
    /// closed-form step-mass, in units of one ulp of the closed form.
    pub step_mass_drift_ulps: f64,
}

const PROJECTION_RADIUS: f64 = 50.0;

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

fn log_loss(score: f64, y: u8) -> f64 {
    let t = if y == 1 { score } else { -score };
    if t > 0.0 {
        (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p() - t
    }
}

fn losses_on(theta: &[f64], feats: &[Vec<f64>], labels: &[u8]) -> (f64, f64) {
    let mut wrong = 0usize;
    let mut ll = 0.0f64;
    for (f, &y) in feats.iter().zip(labels) {
        let s: f64 = f.iter().zip(theta).map(|(a, b)| a * b).sum();
        if u8::from(s >= 0.0) != y {
            wrong += 1;
        }
        ll += log_loss(s, y);
    }
    let n = labels.len() as f64;
    (wrong as f64 / n, ll / n)
}

/// Run minibatch SGD; if `capped`, halt at the first step whose step-mass
/// reaches the budget, else run to `t_max`. A point is logged at t = 0,
/// every `log_every` steps, and at the halt.
pub fn sgd_run(cfg: &MaConfig, capped: bool, seed: u64) -> Result<SgdRun, MaError> {
    cfg.validate()?;
    let split = generate_split(&cfg.synth.clone().with_seed(seed))?;
    let n = cfg.degree + 1;
    let to_feats = |samples: &[crate::synthdata::LabeledSample]| -> Vec<Vec<f64>> {
        samples
            .iter()
            .map(|s| featurize(s.x1(), cfg.degree, None).expect("finite input"))
            .collect()
    };
    let train_feats = to_feats(&split.train);
    let test_feats = to_feats(&split.test);
    let train_labels: Vec<u8> = split.train.iter().map(|s| s.y).collect();
    let test_labels: Vec<u8> = split.test.iter().map(|s| s.y).collect();
    let m = train_labels.len();

    let mut rng = stream_rng(seed, STREAM_SGD);
    let mut theta = vec![0.0f64; n];
    let mut mass = KahanSum::new();
    let mut projection_hits = 0usize;
    let mut drift_ulps = 0.0f64;
    let mut points = Vec::new();

    let log_point = |t: usize, theta: &[f64], points: &mut Vec<GapPoint>| {
        let (train01, train_logistic) = losses_on(theta, &train_feats, &train_labels);
        let (test01, test_logistic) = losses_on(theta, &test_feats, &test_labels);
        points.push(GapPoint {
            t,
            step_mass: cfg.eta0 * t as f64,
            train01,
            test01,
            train_logistic,
            test_logistic,
            gap01: test01 - train01,
        });
    };
    log_point(0, &theta, &mut points);

    let mut grad = vec![0.0f64; n];
    let mut t = 0usize;
    while t < cfg.t_max {
        t += 1;
        grad.iter_mut().for_each(|g| *g = 0.0);
        for _ in 0..cfg.batch {
            let idx = rng.random_range(0..m);
            let f = &train_feats[idx];
            let s: f64 = f.iter().zip(&theta).map(|(a, b)| a * b).sum();
            let r = sigmoid(s) - f64::from(train_labels[idx]);
            for (g, &fi) in grad.iter_mut().zip(f) {
                *g += r * fi;
            }
        }
        let scale = 1.0 / cfg.batch as f64;
        for (th, g) in theta.iter_mut().zip(&grad) {
            *th -= cfg.eta0 * (g * scale + cfg.l2 * *th);
        }
        let norm: f64 = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > PROJECTION_RADIUS {
            let shrink = PROJECTION_RADIUS / norm;
            theta.iter_mut().for_each(|v| *v *= shrink);
            projection_hits += 1;
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(MaError::Diverged(t));
        }

        mass.add(cfg.eta0);
        let closed = cfg.eta0 * t as f64;
        let ulp_size = f64::from_bits(closed.to_bits() + 1) - closed;
        if ulp_size > 0.0 {
            drift_ulps = drift_ulps.max((mass.value() - closed).abs() / ulp_size);
        }

        let halt = capped && mass.value() >= cfg.budget;
        if t % cfg.log_every == 0 || halt || t == cfg.t_max {
            log_point(t, &theta, &mut points);
        }
        if halt {
            break;
        }
    }

    Ok(SgdRun {
        seed,
        capped,
        points,
        halted_at: t,
        final_step_mass: mass.value(),
        projection_hits,
        step_mass_drift_ulps: drift_ulps,
    })
}

/// Run both policies over the seed list in parallel, seeds gathered in
/// order. Capped and uncapped runs of one seed share the split and the
/// sampling stream.
pub fn run_ma_experiment(cfg: &MaConfig) -> Result<(Vec<SgdRun>, Vec<SgdRun>), MaError> {
    cfg.validate()?;
    let capped: Vec<Result<SgdRun, MaError>> = cfg
        .seeds
        .par_iter()
        .map(|&s| sgd_run(cfg, true, s))
        .collect();
    let uncapped: Vec<Result<SgdRun, MaError>> = cfg
        .seeds
        .par_iter()
        .map(|&s| sgd_run(cfg, false, s))
        .collect();
    Ok((
        capped.into_iter().collect::<Result<Vec<_>, _>>()?,
        uncapped.into_iter().collect::<Result<Vec<_>, _>>()?,
    ))
}

/// Seed-mean gap per logged step-mass, the fitted envelope slope, and
/// monotonicity violations.
#[derive(Debug, Clone)]
pub struct EnvelopeReport {
    /// Least C such that mean_gap(M) <= C * M / m + intercept at every
    /// logged point (clamped at zero).
    pub c_hat: f64,
    /// Seed-mean gap at t = 0.
    pub intercept: f64,
    pub step_mass: Vec<f64>,
    pub mean_gap: Vec<f64>,
    pub stderr_gap: Vec<f64>,
    /// Indices i where mean_gap[i+1] < mean_gap[i] - 2 stderr[i+1].
    pub violations: Vec<usize>,
}

/// Pool runs of one policy by their shared logging grid and check the
/// linear step-mass envelope.
pub fn gap_envelope_check(runs: &[SgdRun], m: usize) -> Result<EnvelopeReport, MaError> {
    if runs.is_empty() {
        return Err(MaError::InsufficientPoints);
    }
    let grid_len = runs[0].points.len();
    if grid_len < 2 || runs.iter().any(|r| r.points.len() != grid_len) {
        return Err(MaError::InsufficientPoints);
    }
    let step_mass: Vec<f64> = runs[0].points.iter().map(|p| p.step_mass).collect();
    let mut mean_gap = Vec::with_capacity(grid_len);
    let mut stderr_gap = Vec::with_capacity(grid_len);
    for i in 0..grid_len {
        let vals: Vec<f64> = runs.iter().map(|r| r.points[i].gap01).collect();
        mean_gap.push(stats::mean(&vals));
        stderr_gap.push(stats::stderr(&vals));
    }
    let intercept = mean_gap[0];
    let mut c_hat = 0.0f64;
    for i in 0..grid_len {
        if step_mass[i] > 0.0 {
            c_hat = c_hat.max((mean_gap[i] - intercept) * m as f64 / step_mass[i]);
        }
    }
    let violations = (0..grid_len - 1)
        .filter(|&i| mean_gap[i + 1] < mean_gap[i] - 2.0 * stderr_gap[i + 1])
        .collect();
    Ok(EnvelopeReport {
        c_hat,
        intercept,
        step_mass,
        mean_gap,
        stderr_gap,
        violations,
    })
}

pub const RUN_CSV_HEADER: &str =
    "t,step_mass,train01,test01,train_logistic,test_logistic,gap01";

pub fn write_run_csv<W: Write>(run: &SgdRun, w: &mut W) -> io::Result<()> {
    writeln!(w, "{RUN_CSV_HEADER}")?;
    for p in &run.points {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            p.t, p.step_mass, p.train01, p.test01, p.train_logistic, p.test_logistic, p.gap01
        )?;
    }
    Ok(())
}

pub const AGGREGATE_CSV_HEADER: &str =
    "policy,t,step_mass,mean_gap01,stderr_gap01,mean_train01,mean_test01";

/// Aggregate CSV keyed by the shared step-mass grid of each policy.
pub fn write_aggregate_csv<W: Write>(
    sets: &[(&str, &[SgdRun])],
    w: &mut W,
) -> io::Result<()> {
    writeln!(w, "{AGGREGATE_CSV_HEADER}")?;
    for (label, runs) in sets {
        if runs.is_empty() {
            continue;
        }
        let grid_len = runs[0].points.len();
        for i in 0..grid_len {
            let gaps: Vec<f64> = runs.iter().map(|r| r.points[i].gap01).collect();
            let trains: Vec<f64> = runs.iter().map(|r| r.points[i].train01).collect();
            let tests: Vec<f64> = runs.iter().map(|r| r.points[i].test01).collect();
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                label,
                runs[0].points[i].t,
                runs[0].points[i].step_mass,
                stats::mean(&gaps),
                stats::stderr(&gaps),
                stats::mean(&trains),
                stats::mean(&tests),
            )?;
        }
    }
    Ok(())
}

pub fn write_envelope_report<W: Write>(
    label: &str,
    report: &EnvelopeReport,
    m: usize,
    w: &mut W,
) -> io::Result<()> {
    writeln!(w, "gap envelope check: {label}")?;
    writeln!(w, "m={m}")?;
    writeln!(w, "points={}", report.step_mass.len())?;
    writeln!(w, "intercept={}", report.intercept)?;
    writeln!(w, "c_hat={}", report.c_hat)?;
    writeln!(w, "violations={}", report.violations.len())?;
    for &i in &report.violations {
        writeln!(
            w,
            "  violation at M={} -> M={}: {} -> {} (2se={})",
            report.step_mass[i],
            report.step_mass[i + 1],
            report.mean_gap[i],
            report.mean_gap[i + 1],
            2.0 * report.stderr_gap[i + 1]
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> MaConfig {
        let mut cfg = MaConfig::reference_defaults();
        cfg.t_max = 2000;
        cfg.seeds = vec![0, 1];
        cfg
    }

    #[test]
    fn capped_run_halts_exactly_at_budget() {
        let cfg = MaConfig::reference_defaults();
        let run = sgd_run(&cfg, true, 0).unwrap();
        assert_eq!(run.halted_at, 250);
        assert_eq!(run.final_step_mass, 2.5);
        let last = run.points.last().unwrap();
        assert_eq!(last.t, 250);
        assert_eq!(last.step_mass, 2.5);
        // Never a logged point beyond budget + eta0.
        assert!(run
            .points
            .iter()
            .all(|p| p.step_mass <= cfg.budget + cfg.eta0));
    }

    #[test]
    fn uncapped_run_reaches_full_step_mass() {
        let mut cfg = MaConfig::reference_defaults();
        cfg.log_every = 10_000;
        let run = sgd_run(&cfg, false, 1).unwrap();
        assert_eq!(run.halted_at, 50_000);
        assert!((run.final_step_mass - 500.0).abs() < 1e-9);
        assert!(run.step_mass_drift_ulps <= 50_000.0);
        assert_eq!(run.points.last().unwrap().step_mass, 500.0);
    }

    #[test]
    fn step_mass_is_closed_form_on_grid() {
        let mut cfg = small_cfg();
        cfg.log_every = 137;
        let run = sgd_run(&cfg, false, 3).unwrap();
        for p in &run.points {
            assert_eq!(p.step_mass, cfg.eta0 * p.t as f64);
            assert!((p.gap01 - (p.test01 - p.train01)).abs() < 1e-15);
        }
    }

    #[test]
    fn vanishing_step_size_moves_parameters_negligibly() {
        // The no-update limit: after 100 steps at eta0 = 1e-9 the iterate
        // is still within 1e-4 of the origin, so the logistic losses match
        // the initial hypothesis's to high accuracy. The 0-1 gap is NOT
        // continuous here: every initial score is exactly zero, and any
        // infinitesimal step replaces the degenerate all-ones predictor
        // with the sign of the accumulated gradient direction.
        let mut cfg = small_cfg();
        cfg.eta0 = 1e-9;
        cfg.t_max = 100;
        cfg.log_every = 100;
        let run = sgd_run(&cfg, false, 0).unwrap();
        let first = run.points.first().unwrap();
        let last = run.points.last().unwrap();
        assert!((last.train_logistic - first.train_logistic).abs() < 1e-3);
        assert!((last.test_logistic - first.test_logistic).abs() < 1e-3);
        assert_eq!(run.halted_at, 100);
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = small_cfg();
        let a = sgd_run(&cfg, false, 5).unwrap();
        let b = sgd_run(&cfg, false, 5).unwrap();
        assert_eq!(a.points, b.points);
    }

    #[test]
    fn class_is_fixed_for_the_whole_run() {
        let cfg = small_cfg();
        let run = sgd_run(&cfg, true, 0).unwrap();
        // All points come from one run of one fixed-degree class; the
        // projection never bound on this task.
        assert_eq!(run.projection_hits, 0);
        assert!(run.points.len() >= 2);
    }

    #[test]
    fn envelope_on_synthetic_gaps() {
        // Exactly linear gaps 0.001 * M with zero intercept give
        // C_hat = m * 0.001.
        let mk = |gaps: &[f64]| SgdRun {
            seed: 0,
            capped: false,
            points: gaps
                .iter()
                .enumerate()
                .map(|(i, &g)| GapPoint {
                    t: i * 100,
                    step_mass: i as f64,
                    train01: 0.0,
                    test01: g,
                    train_logistic: 0.0,
                    test_logistic: 0.0,
                    gap01: g,
                })
                .collect(),
            halted_at: 0,
            final_step_mass: 0.0,
            projection_hits: 0,
            step_mass_drift_ulps: 0.0,
        };
        let runs = vec![mk(&[0.0, 0.001, 0.002, 0.003]); 3];
        let rep = gap_envelope_check(&runs, 500).unwrap();
        assert!((rep.c_hat - 0.5).abs() < 1e-12);
        assert!(rep.violations.is_empty());

        let zero = vec![mk(&[0.0, 0.0, 0.0]); 2];
        let rep = gap_envelope_check(&zero, 500).unwrap();
        assert_eq!(rep.c_hat, 0.0);

        assert!(gap_envelope_check(&[], 500).is_err());
    }

    #[test]
    fn csv_shapes() {
        let mut cfg = small_cfg();
        cfg.t_max = 200;
        cfg.log_every = 100;
        let run = sgd_run(&cfg, false, 0).unwrap();
        let mut buf = Vec::new();
        write_run_csv(&run, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(RUN_CSV_HEADER));
        assert_eq!(text.lines().count(), run.points.len() + 1);

        let runs = [run];
        let mut buf = Vec::new();
        write_aggregate_csv(&[("uncapped", &runs)], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with(AGGREGATE_CSV_HEADER));
    }
}
