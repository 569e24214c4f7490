//! Experiment runner: configuration, dispatch to `plab-core` and report
//! rendering for the `plab` binary.

pub mod config;
pub mod experiments;
