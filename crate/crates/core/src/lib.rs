//! Minimum-energy, delay-constrained multiflow transmission in cooperative
//! wireless networks under the SINR threshold model.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command line
//! and the experiment harness live in the `coopflow-cli` crate.
//!
//! Module map:
//!
//! - [`netmodel`]: network instances and the seeded Rayleigh-gain generator.
//! - [`validator`]: solver-agnostic schedule audit (SINR decode checks plus the
//!   causality / single-role rules).
//! - [`singleflow`]: optimal single-flow dynamic program and path oracle.
//! - [`bounds`]: interference-free lower bound and multiplexing upper bound.
//! - [`linprog`]: dense two-phase simplex.
//! - [`pam`]: per-slot power allocation against a blacklist of earlier flows.
//! - [`mcuh`]: the greedy multiflow heuristic.
//! - [`mosp`]: graph coloring to one-hop scheduling reduction.
//! - [`oracle`]: exact solver for tiny instances.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bounds;
pub mod linprog;
pub mod mcuh;
pub mod mosp;
pub mod netmodel;
pub mod oracle;
pub mod pam;
pub mod singleflow;
pub mod validator;

pub use netmodel::{ChannelMatrix, FlowSpec, NetworkInstance, NodeId};
pub use validator::{Schedule, SlotAction};

#[cfg(test)]
pub(crate) mod testutil;
