//! File formats and the experiment harness behind the `coopflow` binary.

pub mod experiment;
pub mod format;
