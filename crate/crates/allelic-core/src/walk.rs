//! Step sequences and the two downward skip-free walks they drive.
//!
//! A step records the (clone, mutant) child counts of one individual in
//! DFS-with-mutations order. The total walk S+ (increments c + m - 1) first
//! hits -i at the end of the i-th tree; the clone walk Sc (increments c - 1)
//! first hits -j at the end of the j-th allelic cluster.

use alloc::vec::Vec;
use thiserror::Error;

/// Child counts of one individual: clones carry the parent's allele, mutants
/// found new ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Step {
    /// Clone children.
    pub clones: u32,
    /// Mutant children.
    pub mutants: u32,
}

impl Step {
    /// Convenience constructor.
    pub fn new(clones: u32, mutants: u32) -> Self {
        Self { clones, mutants }
    }

    /// Total children.
    pub fn total(self) -> u32 {
        self.clones + self.mutants
    }
}

/// Errors from walk scans.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WalkError {
    /// The sequence ends inside an unfinished tree or cluster.
    #[error("sequence ends inside an unfinished block ({trailing} trailing steps)")]
    IncompleteSequence {
        /// Steps after the last completed block boundary.
        trailing: usize,
    },
}

/// First-passage scan: 1-based positions where the walk with increments
/// f(step) - 1 first hits each of -1, -2, ... in turn. Errors unless the
/// sequence ends exactly at a boundary.
fn boundaries(steps: &[Step], f: impl Fn(Step) -> u32) -> Result<Vec<usize>, WalkError> {
    let mut ends = Vec::new();
    let mut level: i64 = 0;
    for (i, &st) in steps.iter().enumerate() {
        level += f(st) as i64 - 1;
        if level == -(ends.len() as i64) - 1 {
            ends.push(i + 1);
        }
    }
    match ends.last() {
        Some(&last) if last == steps.len() => Ok(ends),
        _ if steps.is_empty() => Ok(ends),
        _ => Err(WalkError::IncompleteSequence {
            trailing: steps.len() - ends.last().copied().unwrap_or(0),
        }),
    }
}

/// Tree boundaries: 1-based end positions of each complete tree (first
/// passage of the total walk).
pub fn tree_boundaries(steps: &[Step]) -> Result<Vec<usize>, WalkError> {
    boundaries(steps, Step::total)
}

/// Cluster boundaries: 1-based end positions of each complete allelic
/// cluster (first passage of the clone walk).
pub fn cluster_boundaries(steps: &[Step]) -> Result<Vec<usize>, WalkError> {
    boundaries(steps, |s| s.clones)
}

/// Running values of the total walk S+ after each step.
pub fn total_walk(steps: &[Step]) -> Vec<i64> {
    let mut out = Vec::with_capacity(steps.len());
    let mut level = 0i64;
    for &st in steps {
        level += st.total() as i64 - 1;
        out.push(level);
    }
    out
}

/// Running values of the clone walk Sc after each step.
pub fn clone_walk(steps: &[Step]) -> Vec<i64> {
    let mut out = Vec::with_capacity(steps.len());
    let mut level = 0i64;
    for &st in steps {
        level += st.clones as i64 - 1;
        out.push(level);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn s(c: u32, m: u32) -> Step {
        Step::new(c, m)
    }

    #[test]
    fn hand_trace_tree_boundary() {
        // S+ runs 1, 0, -1: one tree of size 3.
        let steps = vec![s(1, 1), s(0, 0), s(0, 0)];
        assert_eq!(tree_boundaries(&steps).unwrap(), vec![3]);
    }

    #[test]
    fn hand_trace_cluster_boundaries() {
        // Sc runs 0, -1, -2: clusters of sizes 2 and 1.
        let steps = vec![s(1, 1), s(0, 0), s(0, 0)];
        assert_eq!(cluster_boundaries(&steps).unwrap(), vec![2, 3]);
    }

    #[test]
    fn single_childless_individual() {
        let steps = vec![s(0, 0)];
        assert_eq!(tree_boundaries(&steps).unwrap(), vec![1]);
        assert_eq!(cluster_boundaries(&steps).unwrap(), vec![1]);
    }

    #[test]
    fn boundaries_strictly_increase() {
        let steps = vec![s(2, 0), s(0, 0), s(0, 1), s(0, 0), s(0, 0), s(0, 0)];
        let t = tree_boundaries(&steps).unwrap();
        assert!(t.windows(2).all(|w| w[0] < w[1]));
        let c = cluster_boundaries(&steps).unwrap();
        assert!(c.windows(2).all(|w| w[0] < w[1]));
        // Every tree boundary is also a cluster boundary.
        assert!(t.iter().all(|b| c.contains(b)));
    }

    #[test]
    fn incomplete_sequence_rejected() {
        let steps = vec![s(2, 0), s(0, 0)];
        let err = tree_boundaries(&steps).unwrap_err();
        assert_eq!(err, WalkError::IncompleteSequence { trailing: 2 });
        // Complete for clusters only: Sc = 1, 0 never hits -1 either.
        assert!(cluster_boundaries(&steps).is_err());
    }

    #[test]
    fn empty_sequence_is_zero_trees() {
        assert_eq!(tree_boundaries(&[]).unwrap(), Vec::<usize>::new());
    }
}
