//! Learning homogeneous halfspaces under malicious and nasty noise.
//!
//! The learner localizes in phases: each phase draws instances, keeps those
//! in a band around the current direction, reweights them with soft outlier
//! removal, and minimizes a reweighted hinge loss over a shrinking ball.
//! Alongside the learner live the oracle simulators that corrupt its data and
//! the spectral tooling used to check the concentration it relies on.

pub mod adversary;
pub mod dist;
pub mod error;
pub mod geometry;
pub mod hinge;
pub mod learner;
pub mod linalg;
pub mod outlier;
pub mod profile;
pub mod report;
pub mod rng;
pub mod schedule;
pub mod spectral;
pub mod stats;
pub mod types;

pub use adversary::{
    AttackKind, AttackStrategy, Audit, BatchOracle, InstanceOracle, LabelToken, LearnerStateView, MaliciousOracle,
    NastyOracle, OracleCounters,
};
pub use dist::{DistributionKind, DistributionSpec};
pub use error::{Error, InfeasibleReason, Result};
pub use hinge::{hinge_loss, minimize_hinge, HingeProblem};
pub use learner::{phase_diagnostics, run_malicious, run_nasty, LearnerConfig, LearnerOutput, Mode};
pub use outlier::{soft_outlier_removal, RemovalProblem, RemovalResult, WeightMap};
pub use profile::ConstantsProfile;
pub use report::{PhaseReport, RunReport};
pub use schedule::{build_schedule, Phase, PhaseSchedule};
pub use types::{BandSpec, Label, LabeledSample, Provenance, SearchBall, UnitVec};
