//! Support library for the `allelic` binary: law files, run configuration,
//! forest dump encoding and loading, deterministic parallel Monte Carlo,
//! and the report writers shared by the subcommands.

pub mod commands;
pub mod config;
pub mod dump;
pub mod lawspec;
pub mod parallel;
pub mod report;
