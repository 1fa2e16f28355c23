//! Brute-force enumeration of small trees and cluster prefixes in exact
//! arithmetic.
//!
//! The walk visits every step sequence directly, so each recorded outcome
//! carries an exact product probability and no combinatorial identity is
//! assumed. This is the independent oracle the closed-form layer is
//! checked against: agreement is rational equality.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::dist::DistError;
use crate::exact::{ExactJointLaw, Rational};
use crate::forest::DfsSequence;
use crate::partition::{allelic_partition, PartitionKey};
use crate::walk::Step;

/// Default cap on visited search states.
pub const DEFAULT_STATE_BUDGET: u64 = 50_000_000;

/// Errors from the enumeration walks.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HarnessError {
    /// The search tree outgrew its state budget.
    #[error("enumeration visited {states} states, budget is {budget}")]
    ExplosionGuard {
        /// States visited when the walk gave up.
        states: u64,
        /// The configured cap.
        budget: u64,
    },
}

/// What a distribution's keys range over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnumerationScope {
    /// Complete trees up to the size cap.
    WholeTrees,
    /// The first k clusters of a tree, complete or not beyond them.
    FirstClusters(usize),
}

/// Exact outcome masses keyed by per-tree cluster summary.
#[derive(Debug, Clone)]
pub struct EnumeratedDistribution {
    by_partition: BTreeMap<PartitionKey, Rational>,
    scope: EnumerationScope,
    max_size: usize,
    states: u64,
}

impl EnumeratedDistribution {
    /// Outcome keys and their exact masses.
    pub fn entries(&self) -> impl Iterator<Item = (&PartitionKey, &Rational)> {
        self.by_partition.iter()
    }

    /// What the keys describe.
    pub fn scope(&self) -> EnumerationScope {
        self.scope
    }

    /// The size cap the walk ran under.
    pub fn max_size(&self) -> usize {
        self.max_size
    }

    /// Search states visited.
    pub fn states(&self) -> u64 {
        self.states
    }

    /// Total recorded mass; for whole trees this is P(tree size <= cap).
    pub fn total_mass(&self) -> Rational {
        self.by_partition.values().sum()
    }

    /// Mass summed by (tree size, allele count).
    pub fn joint_size_alleles(&self) -> BTreeMap<(usize, usize), Rational> {
        let mut out = BTreeMap::new();
        for (key, p) in &self.by_partition {
            *out.entry((key.tree_size(), key.alleles()))
                .or_insert_with(Rational::zero) += p;
        }
        out
    }

    /// Conditional law of the cluster-size tuple after a uniform random
    /// cyclic shift, given tree size n and allele count k.
    pub fn conditional_rotations(
        &self,
        n: usize,
        k: usize,
    ) -> Result<BTreeMap<Vec<u32>, Rational>, DistError> {
        assert_eq!(
            self.scope,
            EnumerationScope::WholeTrees,
            "rotation law is a whole-tree statistic"
        );
        let mut rotated: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
        let mut total = Rational::zero();
        for (key, p) in &self.by_partition {
            if key.tree_size() != n || key.alleles() != k {
                continue;
            }
            total += p;
            let share = p / Rational::from_integer(k.into());
            for shift in 0..k {
                let mut sizes = key.sizes.clone();
                sizes.rotate_left(shift);
                *rotated.entry(sizes).or_insert_with(Rational::zero) += &share;
            }
        }
        if total.is_zero() {
            return Err(DistError::ZeroDenominator);
        }
        for v in rotated.values_mut() {
            *v /= &total;
        }
        Ok(rotated)
    }
}

struct TreeWalk<'a> {
    support: &'a [(Step, Rational)],
    max_size: usize,
    budget: u64,
    states: u64,
    steps: Vec<Step>,
    out: BTreeMap<PartitionKey, Rational>,
}

impl TreeWalk<'_> {
    fn visit(&mut self, open: u64, prob: &Rational) -> Result<(), HarnessError> {
        self.states += 1;
        if self.states > self.budget {
            return Err(HarnessError::ExplosionGuard {
                states: self.states,
                budget: self.budget,
            });
        }
        for (step, pi) in self.support {
            let open_after = open - 1 + step.total() as u64;
            let p = prob * pi;
            self.steps.push(*step);
            if open_after == 0 {
                let seq = DfsSequence::from_steps(self.steps.clone())
                    .expect("closed walk is a complete tree");
                let partition = allelic_partition(&seq);
                let key = PartitionKey::from_partition(&partition, 0);
                *self.out.entry(key).or_insert_with(Rational::zero) += p;
            } else if self.steps.len() < self.max_size {
                self.visit(open_after, &p)?;
            }
            self.steps.pop();
        }
        Ok(())
    }
}

fn support_of(law: &ExactJointLaw) -> Vec<(Step, Rational)> {
    law.grid()
        .iter()
        .filter(|(_, _, p)| !p.is_zero())
        .map(|(k, l, p)| (Step::new(k as u32, l as u32), p.clone()))
        .collect()
}

/// Enumerates every complete tree of size at most `max_size`, with exact
/// product probabilities.
pub fn enumerate_trees(
    law: &ExactJointLaw,
    max_size: usize,
    state_budget: u64,
) -> Result<EnumeratedDistribution, HarnessError> {
    assert!(max_size >= 1, "need room for at least the ancestor");
    let support = support_of(law);
    let mut walk = TreeWalk {
        support: &support,
        max_size,
        budget: state_budget,
        states: 0,
        steps: Vec::with_capacity(max_size),
        out: BTreeMap::new(),
    };
    walk.visit(1, &Rational::one())?;
    Ok(EnumeratedDistribution {
        by_partition: walk.out,
        scope: EnumerationScope::WholeTrees,
        max_size,
        states: walk.states,
    })
}

struct ClusterWalk<'a> {
    support: &'a [(Step, Rational)],
    k_target: usize,
    max_total: usize,
    budget: u64,
    states: u64,
    sizes: Vec<u32>,
    mutants: Vec<u32>,
    out: BTreeMap<PartitionKey, Rational>,
}

impl ClusterWalk<'_> {
    fn visit(
        &mut self,
        cluster_defect: u64,
        cur_size: u32,
        cur_mutants: u32,
        total_len: usize,
        mutant_total: u64,
        prob: &Rational,
    ) -> Result<(), HarnessError> {
        self.states += 1;
        if self.states > self.budget {
            return Err(HarnessError::ExplosionGuard {
                states: self.states,
                budget: self.budget,
            });
        }
        for (step, pi) in self.support {
            let defect_after = cluster_defect - 1 + step.clones as u64;
            let size = cur_size + 1;
            let muts = cur_mutants + step.mutants;
            let len = total_len + 1;
            let mt = mutant_total + step.mutants as u64;
            let p = prob * pi;
            if defect_after == 0 {
                self.sizes.push(size);
                self.mutants.push(muts);
                let done = self.sizes.len();
                if done == self.k_target {
                    let key = PartitionKey {
                        sizes: self.sizes.clone(),
                        mutants: self.mutants.clone(),
                    };
                    *self.out.entry(key).or_insert_with(Rational::zero) += p;
                } else if mt >= done as u64 && len < self.max_total {
                    // mt >= done keeps the tree walk above its floor, so a
                    // further cluster root is pending.
                    self.visit(1, 0, 0, len, mt, &p)?;
                }
                self.sizes.pop();
                self.mutants.pop();
            } else if len < self.max_total {
                self.visit(defect_after, size, muts, len, mt, &p)?;
            }
        }
        Ok(())
    }
}

/// Enumerates the joint law of the first `k_clusters` clusters, cutting off
/// at `max_total` individuals overall.
///
/// Each recorded prefix's mass is exactly the product of its step
/// probabilities: the remaining tree completes with probability 1 for any
/// law with full unit mass, so no factor for the unseen future is needed.
pub fn enumerate_cluster_prefix(
    law: &ExactJointLaw,
    k_clusters: usize,
    max_total: usize,
    state_budget: u64,
) -> Result<EnumeratedDistribution, HarnessError> {
    assert!(k_clusters >= 1, "need at least one cluster");
    assert!(max_total >= k_clusters, "cap below the minimum prefix size");
    let support = support_of(law);
    let mut walk = ClusterWalk {
        support: &support,
        k_target: k_clusters,
        max_total,
        budget: state_budget,
        states: 0,
        sizes: Vec::with_capacity(k_clusters),
        mutants: Vec::with_capacity(k_clusters),
        out: BTreeMap::new(),
    };
    walk.visit(1, 0, 0, 0, 0, &Rational::one())?;
    Ok(EnumeratedDistribution {
        by_partition: walk.out,
        scope: EnumerationScope::FirstClusters(k_clusters),
        max_size: max_total,
        states: walk.states,
    })
}
