//! Core algorithms for critical and subcritical Galton-Watson forests whose
//! individuals carry neutral mutations under the infinite-alleles convention.
//!
//! Everything in this crate is pure computation over `alloc` containers:
//! joint offspring laws and their convolution powers, depth-first forest
//! encodings and the two skip-free walks they drive, allelic partitions and
//! allelic forests, closed-form distributions of tree sizes, allele counts
//! and cluster sizes, exponential tilting, and the enumeration / Monte Carlo
//! machinery that cross-checks all of the above. File formats, reports and
//! parallel drivers live in the companion CLI crate.
#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]
#![warn(missing_docs)]

extern crate alloc;

pub mod asymptotic;
pub mod ballot;
pub mod conv;
pub mod dist;
pub mod enumerate;
pub mod exact;
pub mod forest;
pub mod genealogy;
pub mod gof;
pub mod height;
pub mod law;
pub mod montecarlo;
mod numeric;
pub mod partition;
pub mod tilt;
pub mod walk;

pub use conv::ConvolutionTable;
pub use forest::DfsSequence;
pub use law::{JointOffspringLaw, Marginal};
pub use partition::{AllelicForest, AllelicPartition, MassPartition, PartitionKey};
pub use tilt::TiltingResult;
pub use walk::Step;
