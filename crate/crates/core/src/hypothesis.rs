//! Polynomial logistic hypotheses, their regularized trainer, and the
//! parameter-count capacity proxy.
//!
//! A hypothesis of degree k is a coefficient vector on the raw monomial
//! features `1, x, x^2, ..., x^k`; prediction thresholds the score at 0
//! (a score of exactly 0 predicts 1). The trainer minimizes
//!
//! ```text
//!   mean logistic loss  +  (1 / (2 C m)) * ||coeffs||^2
//! ```
//!
//! by damped Newton iterations. The penalty is on the raw-basis
//! coefficients, so the objective does not depend on the basis used to
//! carry out the optimization. Above [`STANDARDIZE_ABOVE_DEGREE`] the
//! solver works in a Chebyshev basis of the min-max standardized input
//! (raw monomials of a spread-out sample are numerically unusable there)
//! and maps the result back; the reported coefficients are always raw.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::synthdata::LabeledSample;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("non-finite input x")]
    NonFiniteInput,
    #[error("degree {0} exceeds the overflow guard (60)")]
    DegreeTooLarge(usize),
    #[error("empty data")]
    EmptyData,
    #[error("hypothesis fitting requires univariate samples")]
    NotUnivariate,
    #[error("Newton did not converge at degree {degree} after {iters} iterations (|grad| = {grad_norm:.3e})")]
    NonConvergence {
        degree: usize,
        iters: usize,
        grad_norm: f64,
    },
    #[error("malformed hypothesis record: {0}")]
    MalformedRecord(String),
}

/// Degree-k polynomial logistic classifier in the raw monomial basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyHypothesis {
    pub degree: usize,
    /// Length degree + 1: weights on 1, x, ..., x^degree.
    pub coeffs: Vec<f64>,
}

impl PolyHypothesis {
    /// Score via Horner evaluation of the raw polynomial.
    pub fn score(&self, x: f64) -> f64 {
        let mut s = 0.0;
        for &c in self.coeffs.iter().rev() {
            s = s * x + c;
        }
        s
    }

    /// Predicted label; score >= 0 predicts 1.
    pub fn predict(&self, x: f64) -> u8 {
        u8::from(self.score(x) >= 0.0)
    }

    /// Plain-text record: `degree`, then one coefficient per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.degree);
        for c in &self.coeffs {
            let _ = writeln!(out, "{c}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, FitError> {
        let mut lines = text.lines();
        let degree: usize = lines
            .next()
            .ok_or_else(|| FitError::MalformedRecord("empty record".into()))?
            .trim()
            .parse()
            .map_err(|e| FitError::MalformedRecord(format!("bad degree line: {e}")))?;
        let coeffs: Vec<f64> = lines
            .map(|l| {
                l.trim()
                    .parse::<f64>()
                    .map_err(|e| FitError::MalformedRecord(format!("bad coefficient: {e}")))
            })
            .collect::<Result<_, _>>()?;
        if coeffs.len() != degree + 1 {
            return Err(FitError::MalformedRecord(format!(
                "expected {} coefficients, found {}",
                degree + 1,
                coeffs.len()
            )));
        }
        Ok(Self { degree, coeffs })
    }
}

/// Computable capacity proxy: parameter count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CapacityProxy {
    pub value: u32,
}

/// Capacity proxy of the degree-k class: k + 1 parameters.
pub fn capacity(degree: usize) -> CapacityProxy {
    CapacityProxy {
        value: degree as u32 + 1,
    }
}

/// Trainer settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Inverse regularization strength C.
    pub l2_c: f64,
    /// Optimizer stopping tolerance on the gradient infinity norm.
    pub tol: f64,
    pub max_newton_iters: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            l2_c: 1.0,
            tol: 1e-8,
            max_newton_iters: 1000,
        }
    }
}

/// Gradient level (scaled) below which a fit that can no longer improve
/// the objective in f64 counts as converged.
const STALL_GRAD_BOUND: f64 = 1e-4;

/// Tiny ridge added in the fitting basis. Above the basis switch the raw
/// penalty leaves high-degree directions almost free and saturated fits
/// would creep outward indefinitely; this bounds them. The objective
/// perturbation is at most `1e-10 * ||w||^2`, orders of magnitude below
/// sample resolution.
const NUMERICAL_RIDGE: f64 = 1e-10;

/// Degrees above this are fit in a basis of the standardized input.
pub const STANDARDIZE_ABOVE_DEGREE: usize = 8;

/// Fixed affine map of the input onto [-1, 1], bounds from the train split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputMap {
    pub center: f64,
    pub half_width: f64,
}

impl InputMap {
    pub fn from_train(train: &[LabeledSample]) -> Self {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in train {
            lo = lo.min(s.x1());
            hi = hi.max(s.x1());
        }
        let center = 0.5 * (lo + hi);
        let half_width = (0.5 * (hi - lo)).max(f64::MIN_POSITIVE);
        Self { center, half_width }
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.center) / self.half_width
    }
}

/// Monomial feature vector `[1, x, ..., x^degree]`. Features above
/// [`STANDARDIZE_ABOVE_DEGREE`] are powers of the standardized input when
/// a map is supplied; without a map the powers are raw at every degree.
pub fn featurize(x: f64, degree: usize, map: Option<&InputMap>) -> Result<Vec<f64>, FitError> {
    if !x.is_finite() {
        return Err(FitError::NonFiniteInput);
    }
    if degree > 60 {
        return Err(FitError::DegreeTooLarge(degree));
    }
    let base = match map {
        Some(m) if degree > STANDARDIZE_ABOVE_DEGREE => m.apply(x),
        _ => x,
    };
    let mut out = Vec::with_capacity(degree + 1);
    let mut p = 1.0;
    for _ in 0..=degree {
        out.push(p);
        p *= base;
    }
    Ok(out)
}

/// Fraction of samples misclassified by `h` (score >= 0 predicts 1).
pub fn risk01(h: &PolyHypothesis, data: &[LabeledSample]) -> Result<f64, FitError> {
    if data.is_empty() {
        return Err(FitError::EmptyData);
    }
    let wrong = data.iter().filter(|s| h.predict(s.x1()) != s.y).count();
    Ok(wrong as f64 / data.len() as f64)
}

fn stable_log_loss(score: f64, y: u8) -> f64 {
    // ln(1 + exp(-t)) with t = +-score, without overflow.
    let t = if y == 1 { score } else { -score };
    if t > 0.0 {
        (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p() - t
    }
}

/// Mean logistic loss of `h` on `data` (no penalty term).
pub fn logistic_loss(h: &PolyHypothesis, data: &[LabeledSample]) -> Result<f64, FitError> {
    if data.is_empty() {
        return Err(FitError::EmptyData);
    }
    let sum: f64 = data
        .iter()
        .map(|s| stable_log_loss(h.score(s.x1()), s.y))
        .sum();
    Ok(sum / data.len() as f64)
}

/// The trainer's objective at `h`: mean logistic loss plus the raw-basis
/// ridge term `(1 / (2 C m)) ||coeffs||^2`.
pub fn penalized_objective(
    h: &PolyHypothesis,
    data: &[LabeledSample],
    cfg: &TrainConfig,
) -> Result<f64, FitError> {
    let loss = logistic_loss(h, data)?;
    let alpha = 1.0 / (2.0 * cfg.l2_c * data.len() as f64);
    let sq: f64 = h.coeffs.iter().map(|c| c * c).sum();
    Ok(loss + alpha * sq)
}

/// Raw-monomial coefficient columns of the fitting basis, as a matrix
/// mapping basis coefficients to raw coefficients.
fn basis_to_raw(degree: usize, map: Option<&InputMap>) -> DMatrix<f64> {
    let n = degree + 1;
    let mut m = DMatrix::zeros(n, n);
    match map {
        None => {
            for j in 0..n {
                m[(j, j)] = 1.0;
            }
        }
        Some(im) => {
            // Chebyshev polynomials of z = (x - c) / h via the recurrence
            // T_j = 2 z T_{j-1} - T_{j-2}, tracked in raw coefficients.
            let (c, h) = (im.center, im.half_width);
            m[(0, 0)] = 1.0;
            if degree >= 1 {
                m[(0, 1)] = -c / h;
                m[(1, 1)] = 1.0 / h;
            }
            for j in 2..n {
                // 2 z T_{j-1}: multiply column j-1 by (x - c) / h, scale 2.
                for i in 0..j {
                    let v = 2.0 * m[(i, j - 1)] / h;
                    m[(i + 1, j)] += v;
                    m[(i, j)] -= v * c;
                }
                for i in 0..n {
                    let t = m[(i, j - 2)];
                    m[(i, j)] -= t;
                }
            }
        }
    }
    m
}

fn basis_features(x: f64, degree: usize, map: Option<&InputMap>) -> Vec<f64> {
    match map {
        None => {
            let mut out = Vec::with_capacity(degree + 1);
            let mut p = 1.0;
            for _ in 0..=degree {
                out.push(p);
                p *= x;
            }
            out
        }
        Some(im) => {
            let z = im.apply(x);
            let mut out = Vec::with_capacity(degree + 1);
            out.push(1.0);
            if degree >= 1 {
                out.push(z);
            }
            for j in 2..=degree {
                let v = 2.0 * z * out[j - 1] - out[j - 2];
                out.push(v);
            }
            out
        }
    }
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// Regularized logistic fit of the degree-k class on `train`.
///
/// Deterministic damped Newton on a convex objective; the unique minimizer
/// is found to `cfg.tol` in the gradient infinity norm.
pub fn fit_erm(
    train: &[LabeledSample],
    degree: usize,
    cfg: &TrainConfig,
) -> Result<PolyHypothesis, FitError> {
    if train.is_empty() {
        return Err(FitError::EmptyData);
    }
    if train.iter().any(|s| s.x.len() != 1) {
        return Err(FitError::NotUnivariate);
    }
    if train.iter().any(|s| !s.x1().is_finite()) {
        return Err(FitError::NonFiniteInput);
    }
    if degree > 60 {
        return Err(FitError::DegreeTooLarge(degree));
    }

    let m = train.len();
    let n = degree + 1;
    let alpha = 1.0 / (2.0 * cfg.l2_c * m as f64);
    let map_owned;
    let map = if degree > STANDARDIZE_ABOVE_DEGREE {
        map_owned = InputMap::from_train(train);
        Some(&map_owned)
    } else {
        None
    };

    let to_raw = basis_to_raw(degree, map);
    // Penalty in the fitting basis: alpha * w' (R^T R) w, plus the
    // numerical ridge.
    let mut rtr = to_raw.transpose() * &to_raw;
    for j in 0..n {
        rtr[(j, j)] += NUMERICAL_RIDGE / alpha;
    }

    let feats = DMatrix::from_row_iterator(
        m,
        n,
        train
            .iter()
            .flat_map(|s| basis_features(s.x1(), degree, map)),
    );
    let ys: Vec<u8> = train.iter().map(|s| s.y).collect();

    let objective = |w: &DVector<f64>| -> f64 {
        let scores = &feats * w;
        let loss: f64 = scores
            .iter()
            .zip(&ys)
            .map(|(&s, &y)| stable_log_loss(s, y))
            .sum::<f64>()
            / m as f64;
        loss + alpha * (w.transpose() * &rtr * w)[(0, 0)]
    };

    // Convergence is judged on the gradient scaled per coordinate by the
    // feature magnitude, so raw powers and order-one features share one
    // tolerance.
    let col_scale: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| feats[(i, j)].abs()).fold(1.0f64, f64::max))
        .collect();
    let scaled_inf = |g: &DVector<f64>| -> f64 {
        g.iter()
            .zip(&col_scale)
            .map(|(gj, sj)| gj.abs() / sj)
            .fold(0.0f64, f64::max)
    };

    let mut w = DVector::zeros(n);
    let mut obj = objective(&w);
    let mut converged = false;
    let mut stalled = false;
    let mut flat_iters = 0usize;

    for _iter in 0..cfg.max_newton_iters {
        let scores = &feats * &w;
        let probs: Vec<f64> = scores.iter().map(|&s| sigmoid(s)).collect();
        let resid = DVector::from_iterator(
            m,
            probs.iter().zip(&ys).map(|(&p, &y)| p - f64::from(y)),
        );
        let grad = feats.transpose() * resid / m as f64 + 2.0 * alpha * (&rtr * &w);
        if scaled_inf(&grad) <= cfg.tol {
            converged = true;
            break;
        }

        let mut weighted = feats.clone();
        for (i, &p) in probs.iter().enumerate() {
            let d = (p * (1.0 - p)).max(1e-12);
            for j in 0..n {
                weighted[(i, j)] *= d;
            }
        }
        let hess = feats.transpose() * weighted / m as f64 + 2.0 * alpha * &rtr;

        // Levenberg damping: grow mu until the system factors and the
        // Armijo-damped step decreases the objective.
        let mut mu = 0.0f64;
        let mut advanced = false;
        let obj_before = obj;
        for _attempt in 0..60 {
            let mut damped = hess.clone();
            if mu > 0.0 {
                for j in 0..n {
                    damped[(j, j)] += mu;
                }
            }
            if let Some(chol) = damped.cholesky() {
                let step = chol.solve(&grad);
                let slope = grad.dot(&step);
                if slope.is_finite() && slope > 0.0 {
                    let mut t = 1.0f64;
                    while t > 1e-14 {
                        let cand = &w - t * &step;
                        let cand_obj = objective(&cand);
                        if cand_obj <= obj - 1e-4 * t * slope {
                            w = cand;
                            obj = cand_obj;
                            advanced = true;
                            break;
                        }
                        t *= 0.5;
                    }
                }
            }
            if advanced {
                break;
            }
            mu = if mu == 0.0 { 1e-10 } else { mu * 100.0 };
        }
        if !advanced {
            // The objective can no longer decrease in f64.
            stalled = true;
            break;
        }
        // Consecutive iterations without measurable objective progress are
        // a float-resolution stall even when each line search "succeeds".
        if obj_before - obj <= 4.0 * f64::EPSILON * obj_before.abs().max(1e-3) {
            flat_iters += 1;
            if flat_iters >= 3 {
                stalled = true;
                break;
            }
        } else {
            flat_iters = 0;
        }
    }

    if !converged {
        let scores = &feats * &w;
        let resid = DVector::from_iterator(
            m,
            scores
                .iter()
                .zip(&ys)
                .map(|(&s, &y)| sigmoid(s) - f64::from(y)),
        );
        let grad = feats.transpose() * resid / m as f64 + 2.0 * alpha * (&rtr * &w);
        let level = scaled_inf(&grad);
        let acceptable = if stalled { STALL_GRAD_BOUND } else { cfg.tol };
        if level > acceptable {
            return Err(FitError::NonConvergence {
                degree,
                iters: cfg.max_newton_iters,
                grad_norm: level,
            });
        }
    }

    let raw = &to_raw * w;
    Ok(PolyHypothesis {
        degree,
        coeffs: raw.iter().copied().collect(),
    })
}
