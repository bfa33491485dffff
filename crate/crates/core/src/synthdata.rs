//! Seeded synthetic binary-classification task.
//!
//! Inputs are standard Gaussian. A fixed smooth score is passed through a
//! logistic link to draw clean labels, labels are flipped independently
//! with a configurable rate, and bounded (clipped) Gaussian noise is then
//! added to the features. Labels therefore depend on the clean features;
//! the feature noise is input corruption observed by the learner.
//!
//! Generation is a pure function of [`SynthConfig`]: identical configs
//! produce bit-identical splits. The three splits come from independent
//! streams of the seeded generator, so changing one split's size never
//! changes another split's contents.

use std::io::{self, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::rng::{stream_rng, STREAM_MC, STREAM_TEST, STREAM_TRAIN, STREAM_VAL};
use crate::stats;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid config: {0}")]
    InvalidConfig(&'static str),
}

/// Configuration of the synthetic task.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Input dimension d.
    pub dim: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    /// Feature-noise scale sigma; noise is clipped at +-3 sigma.
    pub noise_sigma: f64,
    /// Independent label-flip probability, in [0, 0.5].
    pub flip_rate: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.dim == 0 {
            return Err(SynthError::InvalidConfig("dim must be >= 1"));
        }
        if self.n_train == 0 || self.n_val == 0 || self.n_test == 0 {
            return Err(SynthError::InvalidConfig("split sizes must be >= 1"));
        }
        if !(0.0..=0.5).contains(&self.flip_rate) {
            return Err(SynthError::InvalidConfig("flip_rate must lie in [0, 0.5]"));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(SynthError::InvalidConfig("noise_sigma must be >= 0"));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// One labeled observation.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    /// Label in {0, 1}.
    pub y: u8,
}

impl LabeledSample {
    /// First coordinate; the univariate experiments use dim = 1.
    pub fn x1(&self) -> f64 {
        self.x[0]
    }
}

/// Train/validation/test partition.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSplit {
    pub train: Vec<LabeledSample>,
    pub val: Vec<LabeledSample>,
    pub test: Vec<LabeledSample>,
}

/// The fixed ground-truth score.
///
/// For dim = 1: `1.5 sin(2x) + 0.5 x`. For higher dimensions an
/// interaction term `0.25 x1 x2` is added. Smooth, non-polynomial, odd in
/// x1, so no low-degree polynomial matches its sign structure exactly.
pub fn true_score(x: &[f64]) -> f64 {
    debug_assert!(x.iter().all(|v| v.is_finite()));
    let base = 1.5 * (2.0 * x[0]).sin() + 0.5 * x[0];
    if x.len() >= 2 {
        base + 0.25 * x[0] * x[1]
    } else {
        base
    }
}

fn logistic(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

fn generate_samples(cfg: &SynthConfig, n: usize, stream: u64) -> Vec<LabeledSample> {
    let mut rng = stream_rng(cfg.seed, stream);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let clean: Vec<f64> = (0..cfg.dim).map(|_| rng.sample(StandardNormal)).collect();
        let p = logistic(true_score(&clean));
        let mut y = u8::from(rng.random::<f64>() < p);
        if rng.random::<f64>() < cfg.flip_rate {
            y ^= 1;
        }
        let x = clean
            .iter()
            .map(|&c| {
                let z: f64 = rng.sample(StandardNormal);
                c + cfg.noise_sigma * z.clamp(-3.0, 3.0)
            })
            .collect();
        out.push(LabeledSample { x, y });
    }
    out
}

/// Generate the three splits from independent streams of `cfg.seed`.
pub fn generate_split(cfg: &SynthConfig) -> Result<DataSplit, SynthError> {
    cfg.validate()?;
    Ok(DataSplit {
        train: generate_samples(cfg, cfg.n_train, STREAM_TRAIN),
        val: generate_samples(cfg, cfg.n_val, STREAM_VAL),
        test: generate_samples(cfg, cfg.n_test, STREAM_TEST),
    })
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct BayesEstimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Bayes 0-1 risk of the label-generating process under an arbitrary link,
/// i.e. the label uncertainty contributed by the link and the flip rate,
/// evaluated on clean features. See [`bayes_error_estimate`].
pub fn bayes_error_estimate_with_link<F>(cfg: &SynthConfig, n_mc: usize, link: F) -> BayesEstimate
where
    F: Fn(f64) -> f64,
{
    assert!(n_mc >= 10_000, "bayes_error_estimate needs n_mc >= 1e4");
    let mut rng = stream_rng(cfg.seed, STREAM_MC);
    let mut vals = Vec::with_capacity(n_mc);
    for _ in 0..n_mc {
        let clean: Vec<f64> = (0..cfg.dim).map(|_| rng.sample(StandardNormal)).collect();
        let p = link(true_score(&clean));
        let p_flipped = p * (1.0 - cfg.flip_rate) + (1.0 - p) * cfg.flip_rate;
        vals.push(p_flipped.min(1.0 - p_flipped));
    }
    BayesEstimate {
        mean: stats::mean(&vals),
        stderr: stats::stderr(&vals),
    }
}

/// Bayes 0-1 risk of the generating process (logistic link plus flips).
pub fn bayes_error_estimate(cfg: &SynthConfig, n_mc: usize) -> BayesEstimate {
    bayes_error_estimate_with_link(cfg, n_mc, logistic)
}

/// Export samples as plain text: one sample per line, `x_1 ... x_d y`,
/// space-separated, 17-significant-digit decimals.
pub fn write_split_text<W: Write>(samples: &[LabeledSample], w: &mut W) -> io::Result<()> {
    for s in samples {
        for xi in &s.x {
            write!(w, "{:.16e} ", xi)?;
        }
        writeln!(w, "{}", s.y)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1() -> SynthConfig {
        SynthConfig {
            dim: 1,
            n_train: 150,
            n_val: 60,
            n_test: 1000,
            noise_sigma: 1.2,
            flip_rate: 0.35,
            seed: 7,
        }
    }

    #[test]
    fn score_fixed_points() {
        assert_eq!(true_score(&[0.0]), 0.0);
        let s = true_score(&[std::f64::consts::FRAC_PI_4]);
        assert!((s - 1.8927).abs() < 1e-4, "s(pi/4) = {s}");
        assert!(true_score(&[0.1]) > true_score(&[0.05]));
    }

    #[test]
    fn split_sizes_match_config() {
        let split = generate_split(&table1()).unwrap();
        assert_eq!(split.train.len(), 150);
        assert_eq!(split.val.len(), 60);
        assert_eq!(split.test.len(), 1000);
        assert!(split
            .train
            .iter()
            .all(|s| s.x.len() == 1 && s.x[0].is_finite()));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_split(&table1()).unwrap();
        let b = generate_split(&table1()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn splits_come_from_independent_streams() {
        let mut big = table1();
        big.n_test = 2000;
        let a = generate_split(&table1()).unwrap();
        let b = generate_split(&big).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.val, b.val);
        assert_eq!(a.test[..], b.test[..1000]);
    }

    #[test]
    fn rejects_invalid_configs() {
        let mut bad = table1();
        bad.flip_rate = 0.6;
        assert!(generate_split(&bad).is_err());
        let mut bad = table1();
        bad.n_val = 0;
        assert!(generate_split(&bad).is_err());
        let mut bad = table1();
        bad.noise_sigma = -1.0;
        assert!(generate_split(&bad).is_err());
    }

    #[test]
    fn full_flip_rate_destroys_signal() {
        let cfg = SynthConfig {
            dim: 1,
            n_train: 100_000,
            n_val: 1,
            n_test: 1,
            noise_sigma: 0.0,
            flip_rate: 0.5,
            seed: 3,
        };
        let split = generate_split(&cfg).unwrap();
        let xs: Vec<f64> = split.train.iter().map(|s| s.x[0]).collect();
        let ys: Vec<f64> = split.train.iter().map(|s| f64::from(s.y)).collect();
        let mx = stats::mean(&xs);
        let my = stats::mean(&ys);
        let cov: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / xs.len() as f64;
        let sx = (xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>() / xs.len() as f64).sqrt();
        let sy = (ys.iter().map(|y| (y - my) * (y - my)).sum::<f64>() / ys.len() as f64).sqrt();
        let corr = cov / (sx * sy);
        assert!(corr.abs() < 0.02, "corr = {corr}");

        // Empirical mutual information between sign(x) and y, in nats.
        let mut counts = [[0usize; 2]; 2];
        for s in &split.train {
            counts[usize::from(s.x[0] >= 0.0)][usize::from(s.y)] += 1;
        }
        let n = split.train.len() as f64;
        let mut mi = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let p_ab = counts[a][b] as f64 / n;
                if p_ab == 0.0 {
                    continue;
                }
                let p_a = (counts[a][0] + counts[a][1]) as f64 / n;
                let p_b = (counts[0][b] + counts[1][b]) as f64 / n;
                mi += p_ab * (p_ab / (p_a * p_b)).ln();
            }
        }
        assert!(mi < 1e-3, "mutual information = {mi}");
    }

    #[test]
    fn bayes_error_pure_noise_is_half() {
        let cfg = SynthConfig {
            flip_rate: 0.5,
            ..table1()
        };
        let est = bayes_error_estimate(&cfg, 20_000);
        assert!((est.mean - 0.5).abs() < 0.01);
    }

    #[test]
    fn bayes_error_hard_link_no_flips_is_zero() {
        let cfg = SynthConfig {
            flip_rate: 0.0,
            noise_sigma: 0.0,
            ..table1()
        };
        let est = bayes_error_estimate_with_link(&cfg, 20_000, |s| f64::from(s >= 0.0));
        assert_eq!(est.mean, 0.0);
    }

    #[test]
    fn bayes_error_reference_config() {
        let est = bayes_error_estimate(&table1(), 100_000);
        assert!(est.mean > 0.35 && est.mean < 0.48, "bayes = {}", est.mean);
        // Regression pin from the first run of this estimator (seed 7).
        assert!(
            (est.mean - 0.425134).abs() < 0.001,
            "bayes drifted: {}",
            est.mean
        );
    }

    #[test]
    fn text_export_format() {
        let samples = vec![LabeledSample {
            x: vec![1.5],
            y: 1,
        }];
        let mut buf = Vec::new();
        write_split_text(&samples, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1.5000000000000000e0 1\n");
    }
}
