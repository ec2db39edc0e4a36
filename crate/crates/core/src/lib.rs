//! Scheduling and capacity analysis for entanglement-distribution networks.
//!
//! A network is a set of links that each produce one link-level entanglement
//! per slot with some probability, and request classes that each consume one
//! entanglement on every link of a fixed link set (plus a measurement that
//! succeeds with probability `q`). The crate provides:
//!
//! - [`model`] / [`scenario`]: network descriptions and the JSON spec format;
//! - [`matching`]: the conflict-free class selections a scheduler can pick;
//! - [`capacity`]: per-link and decomposition-budget region checks, backed
//!   by the in-repo simplex in [`lp`];
//! - [`policy`]: Max-Weight, longest-queue-first and random schedulers;
//! - [`sim`]: a seeded slot-by-slot simulator with stability diagnostics;
//! - [`repro`]: the figure reproduction table.
//!
//! Capacity computations are generic over [`Scalar`]; `f64` is the default
//! and [`Rational`] gives exact answers.

pub mod capacity;
pub mod lp;
pub mod matching;
pub mod model;
pub mod policy;
pub mod repro;
pub mod scalar;
pub mod scenario;
pub mod sim;

pub use capacity::{CapacityError, CapacityVerdict, ExactVerdict, Verdict};
pub use matching::{ClassSet, Matching, MatchingTable, ServiceVector};
pub use model::{parse_spec, serialize_spec, ArrivalSpec, NetworkSpec, RequestClass, SpecError};
pub use policy::{PolicyContext, PolicyKind};
pub use scalar::{Rational, Scalar};
pub use scenario::builtin_scenario;

/// Simplex over doubles.
pub type Lp = lp::LinearProgram<f64>;
/// Exact simplex over rationals.
pub type ExactLp = lp::LinearProgram<Rational>;
/// Scheduler data with double-precision weights.
pub type Policies = PolicyContext<f64>;
