//! Truthful one-of-`k` facility location on candidate locations in `[0, 1]`.
//!
//! One facility out of `k` heterogeneous ones must be built at a location
//! chosen from a finite candidate set. Agents have positions in `[0, 1]` and
//! binary approval preferences over the facilities, derive utility
//! `approval * (1 - distance)` from the chosen pair, and may lie about their
//! private information. This crate provides:
//!
//! * the instance model with exact rational arithmetic throughout
//!   ([`model`]),
//! * brute-force welfare oracles ([`solver`]),
//! * the truthful mechanisms: a randomized `k`-approximation for the general
//!   setting and two deterministic known-positions mechanisms
//!   ([`mechanisms`]),
//! * exhaustive misreport auditors and exact ratio computation ([`audit`]),
//! * seeded random families, the exhaustive small-grid family, and the
//!   adversarial lower-bound families ([`generators`]),
//! * versioned file formats and reports ([`io`]) and the sweep harness
//!   ([`sweep`]) behind the `facloc` CLI.

pub mod audit;
pub mod generators;
pub mod io;
pub mod mechanisms;
pub mod model;
pub mod solver;
pub mod sweep;

pub use audit::{audit_joint, audit_positions, audit_preferences, empirical_ratio};
pub use audit::{AuditReport, Deviation, DeviationKind, RatioReport, RatioValue};
pub use mechanisms::{
    classify_general, classify_theta, mech_general, mech_minisum, mech_theta, theta_default,
    theta_ratio_bound, GeneralCase, MechGeneral, MechMinisum, MechTheta, Mechanism,
    OptAsMechanism, ThetaCase,
};
pub use model::{Agent, Instance, Lottery, ModelError, Rational, Solution};
pub use solver::{best_facility_at, optimal_solution, OptResult};
