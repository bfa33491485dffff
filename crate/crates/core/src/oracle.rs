//! Independent brute-force verifiers: exact VC dimension of small finite
//! classes, sign-pattern enumeration of low-degree polynomial classes on a
//! grid, and empirical uniform-deviation probes.
//!
//! These run against the capacity proxy rather than through it, so a
//! proxy bug cannot vouch for itself. Sign-pattern enumeration samples
//! coefficient lines and closes over each line's sign changes; it can
//! only undercount, which keeps the `VC <= proxy` assertions conservative.

use std::collections::HashSet;
use std::io::{self, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::rng::stream_rng;
use crate::stats;
use crate::synthdata::{self, SynthConfig};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("class has {0} points; the enumeration bound is 24")]
    TooManyPoints(usize),
    #[error("label vector length {got} does not match {expected} points")]
    BadLabelLength { got: usize, expected: usize },
    #[error("invalid probe parameters: {0}")]
    BadProbe(&'static str),
}

/// A finite hypothesis class restricted to finitely many points: one
/// label vector per function.
#[derive(Debug, Clone)]
pub struct FiniteClass {
    pub points: Vec<f64>,
    /// Bit i of a pattern is the label of `points[i]`.
    patterns: Vec<u32>,
}

impl FiniteClass {
    pub fn from_label_vectors(
        points: Vec<f64>,
        functions: &[Vec<bool>],
    ) -> Result<Self, OracleError> {
        if points.len() > 24 {
            return Err(OracleError::TooManyPoints(points.len()));
        }
        let mut patterns = Vec::with_capacity(functions.len());
        for f in functions {
            if f.len() != points.len() {
                return Err(OracleError::BadLabelLength {
                    got: f.len(),
                    expected: points.len(),
                });
            }
            let mut bits = 0u32;
            for (i, &b) in f.iter().enumerate() {
                if b {
                    bits |= 1 << i;
                }
            }
            patterns.push(bits);
        }
        Ok(Self { points, patterns })
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn n_functions(&self) -> usize {
        self.patterns.len()
    }

    pub fn distinct_patterns(&self) -> usize {
        self.patterns.iter().collect::<HashSet<_>>().len()
    }
}

fn project(pattern: u32, subset: u32) -> u32 {
    // Gather the bits of `pattern` selected by `subset`, compacted.
    let mut out = 0u32;
    let mut bit = 0;
    let mut s = subset;
    while s != 0 {
        let i = s.trailing_zeros();
        if pattern & (1 << i) != 0 {
            out |= 1 << bit;
        }
        bit += 1;
        s &= s - 1;
    }
    out
}

/// Largest d such that some d-subset of the points is shattered, by
/// exhaustive subset enumeration in increasing size with early exit.
pub fn vc_bruteforce(class: &FiniteClass) -> Result<usize, OracleError> {
    let n = class.n_points();
    if n > 24 {
        return Err(OracleError::TooManyPoints(n));
    }
    let distinct: Vec<u32> = class
        .patterns
        .iter()
        .copied()
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    if distinct.is_empty() {
        return Ok(0);
    }
    // A class with p distinct patterns cannot shatter more than log2(p)
    // points.
    let log_cap = usize::BITS as usize - 1 - (distinct.len().leading_zeros() as usize);
    let d_max = n.min(log_cap);

    let mut vc = 0;
    for d in 1..=d_max {
        let mut shattered_found = false;
        // Gosper's hack over all d-subsets of n bits.
        let mut subset: u32 = (1 << d) - 1;
        let limit: u32 = 1 << n;
        let full: u32 = 1 << d;
        while subset < limit {
            let mut seen = HashSet::with_capacity(full as usize);
            for &p in &distinct {
                seen.insert(project(p, subset));
                if seen.len() == full as usize {
                    break;
                }
            }
            if seen.len() == full as usize {
                shattered_found = true;
                break;
            }
            let c = subset & subset.wrapping_neg();
            let r = subset + c;
            subset = (((r ^ subset) >> 2) / c) | r;
        }
        if shattered_found {
            vc = d;
        } else {
            break;
        }
    }
    Ok(vc)
}

/// Sign patterns of degree-d polynomials on a grid, enumerated by random
/// coefficient lines with exact closure over each line's sign changes.
/// The result is a lower bound on the true restriction (possible
/// undercount), deduplicated.
pub fn sign_class_on_grid(
    degree: usize,
    grid: &[f64],
    draws: usize,
    seed: u64,
) -> Result<FiniteClass, OracleError> {
    if grid.len() > 24 {
        return Err(OracleError::TooManyPoints(grid.len()));
    }
    if degree > 3 {
        return Err(OracleError::BadProbe("sign enumeration supports degree <= 3"));
    }
    let n = grid.len();
    let dim = degree + 1;
    let feats: Vec<Vec<f64>> = grid
        .iter()
        .map(|&x| {
            (0..dim)
                .map(|j| x.powi(j as i32))
                .collect()
        })
        .collect();
    let mut rng = stream_rng(seed, 40);
    let mut seen: HashSet<u32> = HashSet::new();
    let per_line = n + 1;
    let lines = draws.div_ceil(per_line).max(1);

    let pattern_at = |a: &[f64], b: &[f64], t: f64| -> u32 {
        let mut bits = 0u32;
        for (i, f) in feats.iter().enumerate() {
            let mut s = 0.0;
            for j in 0..dim {
                s += (a[j] + t * b[j]) * f[j];
            }
            if s >= 0.0 {
                bits |= 1 << i;
            }
        }
        bits
    };

    for _ in 0..lines {
        let a: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let b: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        // Sign of point i flips at t_i = -(a . f_i) / (b . f_i).
        let mut crossings: Vec<f64> = feats
            .iter()
            .filter_map(|f| {
                let num: f64 = a.iter().zip(f).map(|(x, y)| x * y).sum();
                let den: f64 = b.iter().zip(f).map(|(x, y)| x * y).sum();
                (den.abs() > 1e-300).then(|| -num / den)
            })
            .collect();
        crossings.sort_by(|x, y| x.partial_cmp(y).expect("finite crossing"));
        let mut probes = Vec::with_capacity(crossings.len() + 1);
        match crossings.first() {
            None => probes.push(0.0),
            Some(&first) => {
                probes.push(first - 1.0);
                for w in crossings.windows(2) {
                    probes.push(0.5 * (w[0] + w[1]));
                }
                probes.push(crossings.last().unwrap() + 1.0);
            }
        }
        for t in probes {
            seen.insert(pattern_at(&a, &b, t));
        }
    }

    Ok(FiniteClass {
        points: grid.to_vec(),
        patterns: seen.into_iter().collect(),
    })
}

/// The threshold class `1{x >= k}` for k in 1..=n_points+1, restricted to
/// the integer grid 1..=n_points.
pub fn threshold_class(n_points: usize) -> FiniteClass {
    let points: Vec<f64> = (1..=n_points).map(|i| i as f64).collect();
    let functions: Vec<Vec<bool>> = (1..=n_points + 1)
        .map(|k| (1..=n_points).map(|x| x >= k).collect())
        .collect();
    FiniteClass::from_label_vectors(points, &functions).expect("small fixed class")
}

/// Outcome of one empirical sup-deviation probe.
#[derive(Debug, Clone)]
pub struct DeviationReport {
    pub degree: usize,
    pub k: u32,
    pub n: usize,
    pub delta: f64,
    pub c0: f64,
    pub trials: usize,
    pub net_size: usize,
    pub test_size: usize,
    /// c0 * sqrt((K + ln(1/delta)) / n).
    pub bound: f64,
    /// Empirical (1 - delta) quantile of the per-trial sup-deviation.
    pub observed_quantile: f64,
    pub violated: bool,
}

/// For `trials` fresh n-sample draws from the generator, compute the sup
/// over a random coefficient net of |reference risk - n-sample empirical
/// risk| and report the (1 - delta) quantile against the scaled VC bound.
/// The reference risk is measured once per hypothesis on a fixed
/// `test_size`-sample draw; the net makes the sup an under-estimate.
#[allow(clippy::too_many_arguments)]
pub fn deviation_probe(
    degree: usize,
    k: u32,
    n: usize,
    delta: f64,
    trials: usize,
    synth: &SynthConfig,
    net_size: usize,
    test_size: usize,
    c0: f64,
) -> Result<DeviationReport, OracleError> {
    if trials < 200 {
        return Err(OracleError::BadProbe("deviation probe needs trials >= 200"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(OracleError::BadProbe("delta must lie in (0, 1)"));
    }
    if n == 0 || net_size == 0 || test_size == 0 {
        return Err(OracleError::BadProbe("n, net_size, test_size must be >= 1"));
    }

    let dim = degree + 1;
    let mut net_rng = stream_rng(synth.seed, 41);
    // Coefficient net over several scales so both timid and sharp
    // hypotheses are represented.
    let scales = [0.25, 1.0, 4.0];
    let net: Vec<Vec<f64>> = (0..net_size)
        .map(|i| {
            let s = scales[i % scales.len()];
            (0..dim)
                .map(|_| {
                    let z: f64 = net_rng.sample(StandardNormal);
                    s * z
                })
                .collect()
        })
        .collect();

    // Fresh draws reuse the shared generator under derived seeds.
    let draw = |tag: u64, count: usize| -> (Vec<f64>, Vec<u8>) {
        let gen_cfg = SynthConfig {
            n_train: count,
            n_val: 1,
            n_test: 1,
            seed: synth.seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15),
            ..synth.clone()
        };
        let split = synthdata::generate_split(&gen_cfg).expect("valid probe config");
        let xs: Vec<f64> = split.train.iter().map(|s| s.x1()).collect();
        let ys: Vec<u8> = split.train.iter().map(|s| s.y).collect();
        (xs, ys)
    };

    let risk_of = |coeffs: &[f64], xs: &[f64], ys: &[u8]| -> f64 {
        let mut wrong = 0usize;
        for (&x, &y) in xs.iter().zip(ys) {
            let mut s = 0.0;
            for &c in coeffs.iter().rev() {
                s = s * x + c;
            }
            if u8::from(s >= 0.0) != y {
                wrong += 1;
            }
        }
        wrong as f64 / xs.len() as f64
    };

    let (test_xs, test_ys) = draw(42, test_size);
    let reference: Vec<f64> = net
        .par_iter()
        .map(|c| risk_of(c, &test_xs, &test_ys))
        .collect();

    let sups: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let (xs, ys) = draw(1000 + trial as u64, n);
            net.iter()
                .zip(&reference)
                .map(|(c, &r)| (risk_of(c, &xs, &ys) - r).abs())
                .fold(0.0f64, f64::max)
        })
        .collect();

    let bound = c0 * ((f64::from(k) + (1.0 / delta).ln()) / n as f64).sqrt();
    let observed_quantile = stats::upper_quantile(&sups, 1.0 - delta);
    Ok(DeviationReport {
        degree,
        k,
        n,
        delta,
        c0,
        trials,
        net_size,
        test_size,
        bound,
        observed_quantile,
        violated: observed_quantile > bound,
    })
}

pub fn write_deviation_report<W: Write>(r: &DeviationReport, w: &mut W) -> io::Result<()> {
    writeln!(w, "deviation probe")?;
    writeln!(
        w,
        "degree={} K={} n={} delta={} c0={} trials={} net={} test_samples={}",
        r.degree, r.k, r.n, r.delta, r.c0, r.trials, r.net_size, r.test_size
    )?;
    writeln!(w, "bound={}", r.bound)?;
    writeln!(w, "observed_quantile={}", r.observed_quantile)?;
    writeln!(
        w,
        "verdict={}",
        if r.violated { "VIOLATED" } else { "HELD" }
    )?;
    writeln!(
        w,
        "note=sup taken over a finite coefficient net; the observed quantile is an under-estimate"
    )?;
    Ok(())
}
