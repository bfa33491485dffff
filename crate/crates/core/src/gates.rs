//! Edit-acceptance rules: the two-gate policy and its destructive
//! counterparts.
//!
//! The two-gate rule accepts a candidate hypothesis only if
//!
//! 1. (capacity) its capacity proxy stays within the cap `K(m)`, and
//! 2. (validation) its validation risk improves on the incumbent's by at
//!    least `2 eps_V + tau`, where `eps_V = c0 sqrt((K + ln(1/delta_V)) / n_v)`
//!    is the uniform-deviation level of the capped family and
//!    `tau = tau_mult * eps_V`.
//!
//! Thresholds are a function of the configuration and the train size only;
//! they never depend on the validation data, so the same validation set can
//! be reused across the whole edit sequence.
//!
//! The destructive rules accept on raw empirical improvement. Each
//! destructive acceptance weakly increases the bonus-carrying utility
//! `u = alpha (1 - train risk) + beta g(capacity)` with `g(k) = 1 - 1/(1+k)`,
//! strictly when capacity grew and fit did not worsen.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GateError {
    #[error("unknown policy tag `{0}`")]
    UnknownPolicy(String),
    #[error("utility weights must satisfy alpha + beta = 1 (got {0})")]
    BadUtilityWeights(f64),
}

/// Capacity cap: a constant `K(m) = K`, or the square-root schedule
/// `K(m) = floor(scale * sqrt(m))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CapRule {
    Constant(u32),
    Sqrt { scale: f64 },
}

impl CapRule {
    pub fn resolve(&self, m: usize) -> u32 {
        match *self {
            CapRule::Constant(k) => k,
            CapRule::Sqrt { scale } => (scale * (m as f64).sqrt()).floor() as u32,
        }
    }
}

impl fmt::Display for CapRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CapRule::Constant(k) => write!(f, "{k}"),
            CapRule::Sqrt { scale } => write!(f, "sqrt:{scale}"),
        }
    }
}

impl FromStr for CapRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(scale) = s.strip_prefix("sqrt:") {
            let scale: f64 = scale
                .parse()
                .map_err(|e| format!("bad sqrt cap scale: {e}"))?;
            if !(scale.is_finite() && scale >= 0.0) {
                return Err("sqrt cap scale must be >= 0".into());
            }
            Ok(CapRule::Sqrt { scale })
        } else {
            let k: u32 = s.parse().map_err(|e| format!("bad cap: {e}"))?;
            Ok(CapRule::Constant(k))
        }
    }
}

/// All gate thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct GateConfig {
    /// Instantiation of the uniform-convergence constant.
    pub c0: f64,
    /// Validation confidence level, in (0, 1).
    pub delta_v: f64,
    /// Margin multiplier: tau = tau_mult * eps_v.
    pub tau_mult: f64,
    pub cap: CapRule,
    pub n_val: usize,
}

impl GateConfig {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err("c0 must be positive");
        }
        if !(self.delta_v > 0.0 && self.delta_v < 1.0) {
            return Err("delta_v must lie in (0, 1)");
        }
        if !(self.tau_mult >= 0.0 && self.tau_mult.is_finite()) {
            return Err("tau_mult must be >= 0");
        }
        if self.n_val == 0 {
            return Err("n_val must be >= 1");
        }
        Ok(())
    }
}

/// Uniform validation deviation level over the capped family:
/// `c0 * sqrt((K + ln(1/delta_v)) / n_val)`.
pub fn epsilon_v(k: u32, n_val: usize, delta_v: f64, c0: f64) -> f64 {
    assert!(n_val >= 1);
    c0 * ((f64::from(k) + (1.0 / delta_v).ln()) / n_val as f64).sqrt()
}

/// Margin: `tau = tau_mult * eps_v`.
pub fn tau_margin(eps_v: f64, tau_mult: f64) -> f64 {
    tau_mult * eps_v
}

/// Validation gate: true iff `rv_new <= rv_old - (2 eps_v + tau)`.
/// The comparison is exact, with no epsilon slack.
pub fn validation_gate(rv_new: f64, rv_old: f64, eps_v: f64, tau: f64) -> bool {
    rv_new <= rv_old - (2.0 * eps_v + tau)
}

/// Capacity gate: true iff `cap_new <= k`.
pub fn capacity_gate(cap_new: u32, k: u32) -> bool {
    cap_new <= k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateReason {
    Accepted,
    FailValidation,
    FailCapacity,
}

impl GateReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            GateReason::Accepted => "accepted",
            GateReason::FailValidation => "fail_validation",
            GateReason::FailCapacity => "fail_capacity",
        }
    }
}

/// Audited outcome of one two-gate decision.
#[derive(Debug, Clone, PartialEq)]
pub struct GateDecision {
    pub accepted: bool,
    pub reason: GateReason,
    pub eps_v: f64,
    pub tau: f64,
    /// 2 eps_v + tau, exactly.
    pub required_drop: f64,
    /// rv_old - rv_new.
    pub observed_drop: f64,
}

/// Evaluate both gates; capacity first, then validation. Thresholds depend
/// only on `cfg` and `m`.
pub fn two_gate_decide(
    rv_new: f64,
    rv_old: f64,
    cap_new: u32,
    cfg: &GateConfig,
    m: usize,
) -> GateDecision {
    let k = cfg.cap.resolve(m);
    let eps_v = epsilon_v(k, cfg.n_val, cfg.delta_v, cfg.c0);
    let tau = tau_margin(eps_v, cfg.tau_mult);
    let required_drop = 2.0 * eps_v + tau;
    let observed_drop = rv_old - rv_new;
    if !capacity_gate(cap_new, k) {
        return GateDecision {
            accepted: false,
            reason: GateReason::FailCapacity,
            eps_v,
            tau,
            required_drop,
            observed_drop,
        };
    }
    if !validation_gate(rv_new, rv_old, eps_v, tau) {
        return GateDecision {
            accepted: false,
            reason: GateReason::FailValidation,
            eps_v,
            tau,
            required_drop,
            observed_drop,
        };
    }
    GateDecision {
        accepted: true,
        reason: GateReason::Accepted,
        eps_v,
        tau,
        required_drop,
        observed_drop,
    }
}

/// Destructive accept rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DestructivePolicy {
    /// Accept iff training risk did not increase; no cap.
    Train,
    /// Accept iff validation risk strictly improved and capacity is capped.
    Val,
    /// Accept iff validation risk strictly improved; no cap.
    ValNocap,
}

/// An edit policy: the safe two-gate rule or a destructive baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    TwoGate,
    Dest(DestructivePolicy),
}

impl Policy {
    pub const ALL: [Policy; 4] = [
        Policy::TwoGate,
        Policy::Dest(DestructivePolicy::ValNocap),
        Policy::Dest(DestructivePolicy::Val),
        Policy::Dest(DestructivePolicy::Train),
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Policy::TwoGate => "two_gate",
            Policy::Dest(DestructivePolicy::Train) => "dest_train",
            Policy::Dest(DestructivePolicy::Val) => "dest_val",
            Policy::Dest(DestructivePolicy::ValNocap) => "dest_val_nocap",
        }
    }

    /// Destructive policies keep proposing after a rejection; the two-gate
    /// trajectory ends at its first rejection.
    pub fn default_stop_on_reject(&self) -> bool {
        matches!(self, Policy::TwoGate)
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = GateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "two_gate" => Ok(Policy::TwoGate),
            "dest_train" => Ok(Policy::Dest(DestructivePolicy::Train)),
            "dest_val" => Ok(Policy::Dest(DestructivePolicy::Val)),
            "dest_val_nocap" => Ok(Policy::Dest(DestructivePolicy::ValNocap)),
            other => Err(GateError::UnknownPolicy(other.to_string())),
        }
    }
}

/// Weights of the capacity-bonus utility; `alpha + beta = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DestructiveUtilityConfig {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for DestructiveUtilityConfig {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            beta: 0.1,
        }
    }
}

impl DestructiveUtilityConfig {
    pub fn validate(&self) -> Result<(), GateError> {
        let sum = self.alpha + self.beta;
        if (sum - 1.0).abs() > 1e-12 || self.alpha < 0.0 || self.beta < 0.0 {
            return Err(GateError::BadUtilityWeights(sum));
        }
        Ok(())
    }
}

/// The fixed strictly increasing capacity bonus `g(k) = 1 - 1/(1+k)`.
pub fn capacity_bonus(cap: u32) -> f64 {
    1.0 - 1.0 / (1.0 + f64::from(cap))
}

/// `u = alpha (1 - rs) + beta g(cap)`, in [0, 1].
pub fn destructive_utility(rs: f64, cap: u32, cfg: &DestructiveUtilityConfig) -> f64 {
    cfg.alpha * (1.0 - rs) + cfg.beta * capacity_bonus(cap)
}

/// Accept decision of a destructive policy.
#[allow(clippy::too_many_arguments)]
pub fn destructive_decide(
    policy: DestructivePolicy,
    rs_new: f64,
    rs_old: f64,
    rv_new: f64,
    rv_old: f64,
    cap_new: u32,
    k: u32,
) -> bool {
    match policy {
        DestructivePolicy::Train => rs_new <= rs_old,
        DestructivePolicy::Val => rv_new < rv_old && capacity_gate(cap_new, k),
        DestructivePolicy::ValNocap => rv_new < rv_old,
    }
}

pub const DECISION_CSV_HEADER: &str =
    "step,policy,degree,cap,rs_new,rv_new,eps_v,tau,required_drop,observed_drop,reason";

/// One audited decision as a CSV row under [`DECISION_CSV_HEADER`].
#[allow(clippy::too_many_arguments)]
pub fn write_decision_row<W: Write>(
    w: &mut W,
    step: usize,
    policy: Policy,
    degree: usize,
    cap: u32,
    rs_new: f64,
    rv_new: f64,
    decision: &GateDecision,
) -> io::Result<()> {
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{},{},{}",
        step,
        policy,
        degree,
        cap,
        rs_new,
        rv_new,
        decision.eps_v,
        decision.tau,
        decision.required_drop,
        decision.observed_drop,
        decision.reason.as_str()
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table1_gate() -> GateConfig {
        GateConfig {
            c0: 0.10,
            delta_v: 0.05,
            tau_mult: 0.20,
            cap: CapRule::Constant(31),
            n_val: 60,
        }
    }

    #[test]
    fn epsilon_v_reference_values() {
        let e = epsilon_v(31, 60, 0.05, 0.10);
        assert!((e - 0.07527).abs() < 1e-5, "eps_v = {e}");
        // Quadrupling n_val halves eps_v.
        let e4 = epsilon_v(31, 240, 0.05, 0.10);
        assert!((e4 - 0.03764).abs() < 1e-5, "eps_v = {e4}");
        assert!((e4 - e / 2.0).abs() < 1e-12);
        // delta_v -> 1 with K = 0 sends the bound to 0.
        let e0 = epsilon_v(0, 1, 1.0 - 1e-12, 1.0);
        assert!(e0 < 1e-5, "eps_v = {e0}");
    }

    #[test]
    fn tau_margin_examples() {
        assert!((tau_margin(0.07527, 0.20) - 0.015054).abs() < 1e-6);
        assert_eq!(tau_margin(0.33, 0.0), 0.0);
        assert_eq!(tau_margin(0.1, 1.0), 0.1);
    }

    #[test]
    fn validation_gate_examples() {
        assert!(validation_gate(0.20, 0.40, 0.075, 0.015));
        assert!(!validation_gate(0.30, 0.30, 0.075, 0.015));
        // Boundary is inclusive.
        let (eps, tau) = (0.06, 0.01);
        let rv_old = 0.4;
        let rv_new = rv_old - 2.0 * eps - tau;
        assert!(validation_gate(rv_new, rv_old, eps, tau));
    }

    #[test]
    fn capacity_gate_examples() {
        assert!(capacity_gate(31, 31));
        assert!(!capacity_gate(32, 31));
        assert!(capacity_gate(0, 31));
    }

    #[test]
    fn two_gate_reference_decisions() {
        let cfg = table1_gate();
        let d = two_gate_decide(0.25, 0.45, 40, &cfg, 150);
        assert!(!d.accepted);
        assert_eq!(d.reason, GateReason::FailCapacity);

        let d = two_gate_decide(0.25, 0.45, 2, &cfg, 150);
        assert!(d.accepted);
        assert!((d.required_drop - 0.16559).abs() < 1e-5);
        assert!((d.observed_drop - 0.20).abs() < 1e-12);

        let d = two_gate_decide(0.30, 0.45, 2, &cfg, 150);
        assert!(!d.accepted);
        assert_eq!(d.reason, GateReason::FailValidation);
    }

    #[test]
    fn sqrt_cap_schedule() {
        let cap = CapRule::Sqrt { scale: 2.5 };
        assert_eq!(cap.resolve(150), 30);
        assert_eq!(cap.resolve(100), 25);
        assert_eq!("sqrt:2.5".parse::<CapRule>().unwrap(), cap);
        assert_eq!("31".parse::<CapRule>().unwrap(), CapRule::Constant(31));
        assert!("sqrt:x".parse::<CapRule>().is_err());
    }

    #[test]
    fn thresholds_depend_only_on_config_and_m() {
        let cfg = table1_gate();
        let a = two_gate_decide(0.9, 0.1, 2, &cfg, 150);
        let b = two_gate_decide(0.2, 0.8, 5, &cfg, 150);
        assert_eq!(a.eps_v, b.eps_v);
        assert_eq!(a.tau, b.tau);
        assert_eq!(a.required_drop, b.required_drop);
    }

    #[test]
    fn destructive_utility_examples() {
        let cfg = DestructiveUtilityConfig::default();
        let u = destructive_utility(0.2, 5, &cfg);
        assert!((u - 0.80333).abs() < 1e-5, "u = {u}");
        assert_eq!(destructive_utility(1.0, 0, &cfg), 0.0 + 0.1 * 0.0);
        // rs = 0 and growing capacity approach 1.
        let u_big = destructive_utility(0.0, 1_000_000, &cfg);
        assert!(u_big > 0.9999999 * cfg.alpha + 0.0999 && u_big <= 1.0);
    }

    #[test]
    fn destructive_decide_examples() {
        use DestructivePolicy::*;
        assert!(destructive_decide(Train, 0.10, 0.10, 0.9, 0.1, 99, 31));
        assert!(!destructive_decide(Val, 0.0, 0.0, 0.30, 0.30, 2, 31));
        assert!(destructive_decide(ValNocap, 0.9, 0.0, 0.3 - 1e-6, 0.3, 1_000_000, 31));
        assert!(!destructive_decide(Val, 0.0, 0.0, 0.2, 0.3, 32, 31));
    }

    #[test]
    fn policy_tags_round_trip() {
        for p in Policy::ALL {
            assert_eq!(p.as_str().parse::<Policy>().unwrap(), p);
        }
        assert!("two_gates".parse::<Policy>().is_err());
    }

    #[test]
    fn decision_csv_row_shape() {
        let cfg = table1_gate();
        let d = two_gate_decide(0.25, 0.45, 2, &cfg, 150);
        let mut buf = Vec::new();
        write_decision_row(&mut buf, 3, Policy::TwoGate, 1, 2, 0.31, 0.25, &d).unwrap();
        let row = String::from_utf8(buf).unwrap();
        assert_eq!(row.matches(',').count(), DECISION_CSV_HEADER.matches(',').count());
        assert!(row.starts_with("3,two_gate,1,2,"));
        assert!(row.trim_end().ends_with("accepted"));
    }

    proptest! {
        /// Audit consistency: acceptance implies the observed drop met the
        /// requirement and the capacity gate passed; rejections carry the
        /// first failing gate.
        #[test]
        fn audit_consistency(
            rv_new in 0.0f64..1.0,
            rv_old in 0.0f64..1.0,
            cap_new in 0u32..64,
            k in 0u32..64,
            m in 1usize..10_000,
        ) {
            let cfg = GateConfig { cap: CapRule::Constant(k), ..table1_gate() };
            let d = two_gate_decide(rv_new, rv_old, cap_new, &cfg, m);
            prop_assert_eq!(d.accepted, d.reason == GateReason::Accepted);
            prop_assert_eq!(d.required_drop, 2.0 * d.eps_v + d.tau);
            if d.accepted {
                prop_assert!(d.observed_drop >= d.required_drop);
                prop_assert!(cap_new <= k);
            } else if d.reason == GateReason::FailCapacity {
                prop_assert!(cap_new > k);
            } else {
                prop_assert!(cap_new <= k);
                prop_assert!(d.observed_drop < d.required_drop);
            }
        }

        /// Restorative filtering: on any proposal stream, the two-gate
        /// subsequence of accepted capacities never exceeds K(m).
        #[test]
        fn accepted_capacity_stays_capped(
            stream in proptest::collection::vec((0.0f64..1.0, 1u32..200), 1..80),
            k in 1u32..40,
        ) {
            let cfg = GateConfig { cap: CapRule::Constant(k), ..table1_gate() };
            let mut rv_old = 1.0f64;
            let mut max_cap = 0u32;
            for (rv_new, cap_new) in stream {
                let d = two_gate_decide(rv_new, rv_old, cap_new, &cfg, 150);
                if d.accepted {
                    rv_old = rv_new;
                    max_cap = max_cap.max(cap_new);
                }
            }
            prop_assert!(max_cap <= k);
        }

        /// Any train-accepted step that grew capacity without worsening fit
        /// strictly increases the destructive utility.
        #[test]
        fn destruction_strictly_raises_utility(
            rs_old in 0.0f64..1.0,
            drop in 0.0f64..0.5,
            cap_old in 0u32..1000,
            grow in 1u32..100,
        ) {
            let cfg = DestructiveUtilityConfig::default();
            let rs_new = (rs_old - drop).max(0.0);
            let cap_new = cap_old + grow;
            prop_assert!(destructive_decide(
                DestructivePolicy::Train, rs_new, rs_old, 0.5, 0.5, cap_new, 0));
            let u_old = destructive_utility(rs_old, cap_old, &cfg);
            let u_new = destructive_utility(rs_new, cap_new, &cfg);
            prop_assert!(u_new > u_old);
        }
    }
}
