//! Subcommand implementations. Each `run` returns the process exit code:
//! 0 for success, 1 for a verification failure; usage and IO problems
//! surface as errors and exit 2.

pub mod exact;
pub mod scaling;
pub mod simulate;
pub mod verify;
