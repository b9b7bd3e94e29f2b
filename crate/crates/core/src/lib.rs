//! Decentralized joint condition-based maintenance and unit commitment.
//!
//! Regions solve their own mixed-integer models, one per maintenance epoch,
//! and agree on tie-line flows through consensus rounds. Maintenance
//! cardinality is handled by a subgradient loop on its dual multipliers.

pub mod case_model;
pub mod consensus;
pub mod degradation;
pub mod runtime;
pub mod subproblem;

pub use gridmaint_milp::Scalar;
