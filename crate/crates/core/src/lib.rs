//! Allocation of a budget-funded service across facilities where scarcity is
//! rationed by waiting times instead of prices.
//!
//! The crate is organized around a small set of building blocks:
//!
//! - [`model`]: instances, assignments, welfare accounting, and the
//!   equilibrium/feasibility predicates shared by every solver.
//! - [`matching`]: bidder-optimal stable matching for unit-demand auctions
//!   with integer valuations, plus the bridge between quota vectors and
//!   auctions.
//! - [`exact`]: exact optimal-equilibrium search by quota enumeration, a
//!   brute-force oracle over assignment functions, and the knapsack
//!   reduction.
//! - [`approx`]: the deficit solver that trades an `(1+eps)` budget overrun
//!   for a geometric grid over quota vectors.
//! - [`dynamics`]: minimum equilibrium waiting times, the demand graph, and
//!   the discretized waiting-time dynamics with potential diagnostics.
//! - [`lottery`]: the two-hospital continuous model comparing randomized
//!   assignment against contract menus.
//! - [`generate`]: seeded instance generators for experiments and tests.

pub mod approx;
pub mod dynamics;
pub mod error;
pub mod exact;
pub mod generate;
pub mod independence;
pub mod io;
pub mod lottery;
pub mod matching;
pub mod model;
pub mod rational;

pub use error::Error;
pub use model::{Assignment, EquilibriumViolation, Instance, WelfareReport};
pub use rational::Rational;

/// Convenient alias for fallible operations in this crate.
pub type Result<T> = std::result::Result<T, Error>;
