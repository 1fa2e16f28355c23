//! Monte Carlo estimation of partition statistics, with deterministic
//! per-tree substreams and rejection sampling for conditioned laws.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::ops::Range;
use thiserror::Error;

use crate::conv::ConvolutionTable;
use crate::forest::{sample_tree_into, stream_rng, StepSampler};
use crate::law::{JointOffspringLaw, LawError};
use crate::partition::PartitionKey;
use crate::walk::Step;

/// Default tree-size bound for keeping full partition detail.
///
/// Full keys are only worth counting where single cells can still be
/// statistically resolved; beyond this size every cell's mass is far below
/// any testable level and only the (size, alleles) pair is kept.
pub const DEFAULT_DETAIL_MAX: usize = 16;

/// Empirical counts from a batch of sampled trees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct McCounts {
    /// Completed trees by (tree size, allele count).
    pub joint: BTreeMap<(u32, u32), u64>,
    /// Completed trees by full cluster summary, sizes up to `detail_max`.
    pub detail: BTreeMap<PartitionKey, u64>,
    /// Completed trees.
    pub trees: u64,
    /// Trees abandoned at the per-tree cap.
    pub censored: u64,
    /// Individuals across completed trees.
    pub individuals: u64,
    /// Alleles across completed trees.
    pub alleles_total: u64,
    /// Size bound for the `detail` map.
    pub detail_max: usize,
}

impl McCounts {
    /// An empty batch.
    pub fn new(detail_max: usize) -> Self {
        Self {
            joint: BTreeMap::new(),
            detail: BTreeMap::new(),
            trees: 0,
            censored: 0,
            individuals: 0,
            alleles_total: 0,
            detail_max,
        }
    }

    fn record(&mut self, steps: &[Step]) {
        let key = PartitionKey::from_tree_steps(steps);
        let n = key.tree_size();
        let k = key.alleles();
        *self.joint.entry((n as u32, k as u32)).or_insert(0) += 1;
        self.trees += 1;
        self.individuals += n as u64;
        self.alleles_total += k as u64;
        if n <= self.detail_max {
            *self.detail.entry(key).or_insert(0) += 1;
        }
    }

    /// Folds another batch into this one; batches must share `detail_max`
    /// for the union to mean anything.
    pub fn merge(mut self, other: Self) -> Self {
        assert_eq!(
            self.detail_max, other.detail_max,
            "incompatible detail bounds"
        );
        for (cell, c) in other.joint {
            *self.joint.entry(cell).or_insert(0) += c;
        }
        for (key, c) in other.detail {
            *self.detail.entry(key).or_insert(0) += c;
        }
        self.trees += other.trees;
        self.censored += other.censored;
        self.individuals += other.individuals;
        self.alleles_total += other.alleles_total;
        self
    }

    /// Fraction of attempted trees that hit the cap.
    pub fn censoring_rate(&self) -> f64 {
        let attempted = self.trees + self.censored;
        if attempted == 0 {
            0.0
        } else {
            self.censored as f64 / attempted as f64
        }
    }
}

/// Samples trees `trees.start..trees.end` of the seed's stream and counts
/// their partitions. Tree `i` always uses substream `i`, so a union of
/// disjoint ranges is independent of how work was split.
pub fn monte_carlo_range(
    law: &JointOffspringLaw,
    trees: Range<u64>,
    seed: u64,
    cap: usize,
    detail_max: usize,
) -> Result<McCounts, LawError> {
    let sampler = StepSampler::new(law)?;
    let mut counts = McCounts::new(detail_max);
    let mut steps: Vec<Step> = Vec::new();
    for index in trees {
        let mut rng = stream_rng(seed, index);
        steps.clear();
        if sample_tree_into(&sampler, &mut rng, cap, &mut steps) {
            counts.record(&steps);
        } else {
            counts.censored += 1;
        }
    }
    Ok(counts)
}

/// Samples `n_trees` trees and counts their partitions.
pub fn monte_carlo(
    law: &JointOffspringLaw,
    n_trees: u64,
    seed: u64,
    cap: usize,
    detail_max: usize,
) -> Result<McCounts, LawError> {
    monte_carlo_range(law, 0..n_trees, seed, cap, detail_max)
}

/// Errors from conditioned sampling.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConditionError {
    /// Law construction or sampling setup failed.
    #[error(transparent)]
    Law(#[from] LawError),
    /// The event (tree size, allele count) has probability zero.
    #[error("conditioning on size {n} with {k} alleles is impossible")]
    InfeasibleCondition {
        /// Tree size conditioned on.
        n: u32,
        /// Allele count conditioned on.
        k: u32,
    },
    /// Rejection sampling ran out of attempts.
    #[error("{attempts} attempts yielded {accepted} of {wanted} samples")]
    RejectionBudgetExceeded {
        /// Attempts consumed.
        attempts: u64,
        /// Samples accepted before giving up.
        accepted: u64,
        /// Samples requested.
        wanted: u64,
    },
}

/// Conditioned samples of the ranked cluster-size vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedPartitions {
    /// Ranked cluster sizes per accepted sample, each summing to n.
    pub samples: Vec<Vec<u32>>,
    /// Trees drawn, including rejected ones.
    pub attempts: u64,
    /// Mean of (largest cluster)/n over samples.
    pub mean_largest_share: f64,
    /// Cluster counts by size, pooled over samples.
    pub block_size_histogram: BTreeMap<u32, u64>,
}

/// Draws `n_samples` trees conditioned on tree size `n` and allele count
/// `k` by rejection, never by reweighting, and summarizes their ranked
/// cluster sizes.
pub fn conditioned_mass_partitions(
    law: &JointOffspringLaw,
    n: u32,
    k: u32,
    n_samples: u64,
    seed: u64,
    max_attempts: u64,
) -> Result<ConditionedPartitions, ConditionError> {
    if n == 0 || k == 0 || k > n {
        return Err(ConditionError::InfeasibleCondition { n, k });
    }
    let table = ConvolutionTable::build(law, n as usize, ConvolutionTable::DEFAULT_MEMORY_CAP)?;
    let joint = table
        .entry(n as usize, (n - k) as usize, (k - 1) as usize)
        .expect("n within the table just built");
    if joint == 0.0 {
        return Err(ConditionError::InfeasibleCondition { n, k });
    }
    let sampler = StepSampler::new(law)?;
    let mut samples: Vec<Vec<u32>> = Vec::with_capacity(n_samples as usize);
    let mut attempts: u64 = 0;
    let mut steps: Vec<Step> = Vec::new();
    while (samples.len() as u64) < n_samples {
        if attempts >= max_attempts {
            return Err(ConditionError::RejectionBudgetExceeded {
                attempts,
                accepted: samples.len() as u64,
                wanted: n_samples,
            });
        }
        let mut rng = stream_rng(seed, attempts);
        attempts += 1;
        steps.clear();
        // A tree larger than n can never match, so n itself is the cap.
        if !sample_tree_into(&sampler, &mut rng, n as usize, &mut steps) {
            continue;
        }
        let key = PartitionKey::from_tree_steps(&steps);
        if key.tree_size() == n as usize && key.alleles() == k as usize {
            samples.push(key.ranked_sizes());
        }
    }
    let mut histogram: BTreeMap<u32, u64> = BTreeMap::new();
    let mut largest_sum = 0.0;
    for sample in &samples {
        largest_sum += sample[0] as f64 / n as f64;
        for &size in sample {
            *histogram.entry(size).or_insert(0) += 1;
        }
    }
    let mean_largest_share = if samples.is_empty() {
        0.0
    } else {
        largest_sum / samples.len() as f64
    };
    Ok(ConditionedPartitions {
        samples,
        attempts,
        mean_largest_share,
        block_size_histogram: histogram,
    })
}
