//! Simulators and verifiers for capacity-gated self-modification.
//!
//! The crate models a learner that proposes edits to its own hypothesis
//! class and filters them through an acceptance policy. The safe policy
//! (`two_gate`) accepts an edit only when validation risk improves by a
//! margin derived from a uniform-deviation bound *and* a computable
//! capacity proxy stays under a cap `K(m)`. Destructive baselines accept
//! on raw empirical improvement and, without the cap, drive capacity
//! without bound.
//!
//! Modules:
//! - [`synthdata`]: seeded synthetic binary-classification task shared by
//!   all experiments.
//! - [`hypothesis`]: polynomial logistic classifiers, their regularized
//!   trainer, 0-1 risk, and the parameter-count capacity proxy.
//! - [`gates`]: the two-gate acceptance rule and destructive accept rules.
//! - [`mh`]: representational-axis trajectories (degree-increasing edits).
//! - [`ma`]: algorithmic-axis runs (step-mass-capped vs unconstrained SGD).
//! - [`substrate`]: finite-state streaming learner vs unbounded-memory ERM
//!   on threshold concepts, plus a state-collision witness search.
//! - [`oracle`]: brute-force VC dimension and empirical deviation probes.
//!
//! Every experiment is a pure function of its configuration: identical
//! configurations produce bit-identical outputs.

pub mod gates;
pub mod hypothesis;
pub mod ma;
pub mod mh;
pub mod oracle;
pub mod rng;
pub mod stats;
pub mod substrate;
pub mod synthdata;

pub use gates::{DestructivePolicy, GateConfig, GateDecision, GateReason, Policy};
pub use hypothesis::{PolyHypothesis, TrainConfig};
pub use synthdata::{DataSplit, LabeledSample, SynthConfig};
