//! Allelic partitions, allelic forests, and mass partitions.
//!
//! Clusters are the maximal same-allele blocks of a forest; in
//! DFS-with-mutations order each cluster is a contiguous interval ending at a
//! clone-walk first passage. The allelic forest arranges the clusters
//! themselves as a forest whose breadth-first offspring counts are the
//! per-cluster mutant totals M_j.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use num_rational::Ratio;
use thiserror::Error;

use crate::forest::DfsSequence;
use crate::walk::{cluster_boundaries, Step};

/// One allelic cluster: a maximal same-allele block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cluster {
    /// Number of individuals carrying the allele.
    pub size: usize,
    /// Mutant children spawned by the cluster (new alleles it founds).
    pub mutants: usize,
    /// 0-based index of the tree the cluster belongs to.
    pub tree: usize,
}

/// The allelic partition of a forest: clusters in DFS order plus per-tree
/// allele counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllelicPartition {
    clusters: Vec<Cluster>,
    cluster_ends: Vec<usize>,
    alleles_per_tree: Vec<usize>,
}

impl AllelicPartition {
    /// Clusters in DFS (= cluster-index) order.
    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    /// 1-based end positions of each cluster in the step sequence.
    pub fn cluster_ends(&self) -> &[usize] {
        &self.cluster_ends
    }

    /// Number of alleles A_i in each tree.
    pub fn alleles_per_tree(&self) -> &[usize] {
        &self.alleles_per_tree
    }

    /// Range of cluster indices belonging to tree `tree`.
    pub fn cluster_range(&self, tree: usize) -> core::ops::Range<usize> {
        let start: usize = self.alleles_per_tree[..tree].iter().sum();
        start..start + self.alleles_per_tree[tree]
    }
}

/// Reads the allelic partition off the clone walk of a complete forest.
///
/// Asserts the structural identities that tie the three decompositions
/// together: tree boundaries embed into cluster boundaries, per-tree allele
/// counts match both the mutant-total formula and the first-passage formula
/// on the M-sequence.
pub fn allelic_partition(seq: &DfsSequence) -> AllelicPartition {
    let cluster_ends =
        cluster_boundaries(seq.steps()).expect("complete trees always close their clusters");
    let mut clusters = Vec::with_capacity(cluster_ends.len());
    let mut alleles_per_tree = Vec::with_capacity(seq.complete_trees());
    let mut tree_iter = seq.tree_ends().iter().copied();
    let mut tree_end = tree_iter.next();
    let mut tree_index = 0usize;
    let mut alleles_in_tree = 0usize;
    let mut hitting_defect: i64 = 1;
    let mut start = 0usize;
    for &end in &cluster_ends {
        let slice = &seq.steps()[start..end];
        let mutants: usize = slice.iter().map(|s| s.mutants as usize).sum();
        clusters.push(Cluster {
            size: end - start,
            mutants,
            tree: tree_index,
        });
        alleles_in_tree += 1;
        // First passage on the M-sequence: the tree's cluster block closes
        // exactly when the defect returns to 0.
        hitting_defect += mutants as i64 - 1;
        if hitting_defect == 0 {
            assert_eq!(
                Some(end),
                tree_end,
                "cluster block must close exactly at a tree boundary"
            );
            let tree_view = seq.tree(tree_index);
            let mutant_total: usize = tree_view.steps.iter().map(|s| s.mutants as usize).sum();
            assert_eq!(alleles_in_tree, 1 + mutant_total);
            alleles_per_tree.push(alleles_in_tree);
            alleles_in_tree = 0;
            hitting_defect = 1;
            tree_end = tree_iter.next();
            tree_index += 1;
        } else if let Some(te) = tree_end {
            assert!(end < te, "cluster may not straddle a tree boundary");
        }
        start = end;
    }
    assert_eq!(tree_end, None, "every tree closed");
    AllelicPartition {
        clusters,
        cluster_ends,
        alleles_per_tree,
    }
}

/// The forest of alleles: nodes are clusters, children are the alleles each
/// cluster founded, in breadth-first order per tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllelicForest {
    parent: Vec<Option<usize>>,
    offspring: Vec<usize>,
    roots: Vec<usize>,
}

impl AllelicForest {
    /// Parent cluster index of each cluster; None for ancestor alleles.
    pub fn parent(&self) -> &[Option<usize>] {
        &self.parent
    }

    /// Offspring count of each cluster (equals its mutant total M_j).
    pub fn offspring(&self) -> &[usize] {
        &self.offspring
    }

    /// Root cluster index of each tree.
    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    /// Depth of each cluster within its allelic tree (roots at 0). Equals
    /// the mutation count of the allele.
    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0usize; self.parent.len()];
        for (j, p) in self.parent.iter().enumerate() {
            if let Some(p) = p {
                // Parents precede children in cluster order.
                depth[j] = depth[*p] + 1;
            }
        }
        depth
    }
}

/// Decodes the allelic forest from a partition: within each tree, cluster
/// order is breadth-first, so children are dealt out of a FIFO queue.
pub fn allelic_forest(partition: &AllelicPartition) -> AllelicForest {
    let n = partition.clusters().len();
    let mut parent = Vec::new();
    parent.resize(n, None);
    let mut offspring = Vec::with_capacity(n);
    let mut roots = Vec::new();
    for c in partition.clusters() {
        offspring.push(c.mutants);
    }
    for tree in 0..partition.alleles_per_tree().len() {
        let range = partition.cluster_range(tree);
        let root = range.start;
        roots.push(root);
        let mut queue: VecDeque<usize> = VecDeque::new();
        queue.push_back(root);
        let mut next_child = root + 1;
        while let Some(j) = queue.pop_front() {
            for _ in 0..offspring[j] {
                assert!(
                    next_child < range.end,
                    "M-sequence must stay inside the tree block"
                );
                parent[next_child] = Some(j);
                queue.push_back(next_child);
                next_child += 1;
            }
        }
        assert_eq!(next_child, range.end, "every cluster must receive a parent");
    }
    AllelicForest {
        parent,
        offspring,
        roots,
    }
}

/// Ranked cluster-size ratios of one tree, exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MassPartition {
    /// Tree size (the common denominator).
    pub total: usize,
    /// Cluster sizes in decreasing order; ties keep cluster-index order.
    pub ranked_sizes: Vec<usize>,
}

impl MassPartition {
    /// The ranked ratios as exact rationals, summing to 1.
    pub fn ratios(&self) -> Vec<Ratio<u64>> {
        self.ranked_sizes
            .iter()
            .map(|&s| Ratio::new(s as u64, self.total as u64))
            .collect()
    }
}

/// Ranked mass partition of tree `tree` under `partition`.
pub fn mass_partition(partition: &AllelicPartition, tree: usize) -> MassPartition {
    let range = partition.cluster_range(tree);
    let mut sizes: Vec<usize> = partition.clusters()[range].iter().map(|c| c.size).collect();
    let total = sizes.iter().sum();
    // Stable sort keeps equal sizes in cluster-index order.
    sizes.sort_by(|a, b| b.cmp(a));
    MassPartition {
        total,
        ranked_sizes: sizes,
    }
}

/// Canonical per-tree summary: cluster sizes and mutant counts in DFS order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PartitionKey {
    /// Cluster sizes in DFS (cluster-index) order.
    pub sizes: Vec<u32>,
    /// Mutant totals M_j in the same order.
    pub mutants: Vec<u32>,
}

impl PartitionKey {
    /// Reads the key straight off one complete tree's steps.
    pub fn from_tree_steps(steps: &[Step]) -> Self {
        let mut sizes = Vec::new();
        let mut mutants = Vec::new();
        let mut level: i64 = 0;
        let mut start = 0usize;
        let mut m: u32 = 0;
        for (i, st) in steps.iter().enumerate() {
            m += st.mutants;
            level += st.clones as i64 - 1;
            if level == -((sizes.len() as i64) + 1) {
                sizes.push((i + 1 - start) as u32);
                mutants.push(m);
                start = i + 1;
                m = 0;
            }
        }
        assert_eq!(start, steps.len(), "tree must close all clusters");
        Self { sizes, mutants }
    }

    /// Key of tree `tree` in a decoded partition.
    pub fn from_partition(partition: &AllelicPartition, tree: usize) -> Self {
        let range = partition.cluster_range(tree);
        let clusters = &partition.clusters()[range];
        Self {
            sizes: clusters.iter().map(|c| c.size as u32).collect(),
            mutants: clusters.iter().map(|c| c.mutants as u32).collect(),
        }
    }

    /// Total tree size.
    pub fn tree_size(&self) -> usize {
        self.sizes.iter().map(|&s| s as usize).sum()
    }

    /// Number of alleles (clusters).
    pub fn alleles(&self) -> usize {
        self.sizes.len()
    }

    /// Cluster sizes in decreasing order.
    pub fn ranked_sizes(&self) -> Vec<u32> {
        let mut v = self.sizes.clone();
        v.sort_by(|a, b| b.cmp(a));
        v
    }
}

/// Errors from partition-based reconstruction.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PartitionError {
    /// A cluster slice is not one complete cluster tree.
    #[error("cluster {index}: clone steps do not form exactly one complete cluster")]
    MalformedCluster {
        /// 0-based cluster index.
        index: usize,
    },
    /// The mutant totals cannot be grouped into complete trees.
    #[error("mutant prefix sums close no tree by cluster {index}")]
    InconsistentPartition {
        /// 0-based cluster index where grouping failed.
        index: usize,
    },
}

/// Splits a forest's steps into per-cluster slices.
pub fn cluster_slices<'a>(seq: &'a DfsSequence, partition: &AllelicPartition) -> Vec<&'a [Step]> {
    let mut out = Vec::with_capacity(partition.cluster_ends().len());
    let mut start = 0usize;
    for &end in partition.cluster_ends() {
        out.push(&seq.steps()[start..end]);
        start = end;
    }
    out
}

/// Rebuilds the DFS sequence from per-cluster step slices.
///
/// Each slice must be one complete cluster (its clone walk first hits -1 at
/// its end); the per-cluster mutant totals must group into trees by the
/// first-passage rule that defines allele counts.
pub fn reconstruct_from_partition(slices: &[&[Step]]) -> Result<DfsSequence, PartitionError> {
    let mut steps = Vec::new();
    let mut defect: i64 = 1;
    let mut open_clusters = 0usize;
    for (index, slice) in slices.iter().enumerate() {
        let mut level: i64 = 0;
        for (i, st) in slice.iter().enumerate() {
            level += st.clones as i64 - 1;
            if level == -1 && i + 1 != slice.len() {
                return Err(PartitionError::MalformedCluster { index });
            }
        }
        if level != -1 {
            return Err(PartitionError::MalformedCluster { index });
        }
        let mutants: i64 = slice.iter().map(|s| s.mutants as i64).sum();
        open_clusters += 1;
        defect += mutants - 1;
        if defect == 0 {
            defect = 1;
            open_clusters = 0;
        }
        steps.extend_from_slice(slice);
    }
    if open_clusters != 0 {
        return Err(PartitionError::InconsistentPartition {
            index: slices.len().saturating_sub(1),
        });
    }
    DfsSequence::from_steps(steps).map_err(|_| PartitionError::InconsistentPartition {
        index: slices.len().saturating_sub(1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn s(c: u32, m: u32) -> Step {
        Step::new(c, m)
    }

    fn seq(steps: Vec<Step>) -> DfsSequence {
        DfsSequence::from_steps(steps).unwrap()
    }

    /// A 12-individual tree with 5 alleles, cluster sizes 5,1,3,2,1 in DFS
    /// order and M-sequence (3,0,0,1,0).
    fn twelve_node_tree() -> DfsSequence {
        seq(vec![
            // Cluster 1: size 5, three mutant children.
            s(2, 1),
            s(1, 1),
            s(1, 1),
            s(0, 0),
            s(0, 0),
            // Cluster 2: size 1.
            s(0, 0),
            // Cluster 3: size 3.
            s(2, 0),
            s(0, 0),
            s(0, 0),
            // Cluster 4: size 2, one mutant child.
            s(1, 1),
            s(0, 0),
            // Cluster 5: size 1.
            s(0, 0),
        ])
    }

    #[test]
    fn hand_trace_partition() {
        let p = allelic_partition(&seq(vec![s(1, 1), s(0, 0), s(0, 0)]));
        assert_eq!(
            p.clusters(),
            &[
                Cluster {
                    size: 2,
                    mutants: 1,
                    tree: 0
                },
                Cluster {
                    size: 1,
                    mutants: 0,
                    tree: 0
                },
            ]
        );
        assert_eq!(p.alleles_per_tree(), &[2]);
    }

    #[test]
    fn single_node_partition() {
        let p = allelic_partition(&seq(vec![s(0, 0)]));
        assert_eq!(
            p.clusters(),
            &[Cluster {
                size: 1,
                mutants: 0,
                tree: 0
            }]
        );
        assert_eq!(p.alleles_per_tree(), &[1]);
    }

    #[test]
    fn twelve_node_tree_partition() {
        let p = allelic_partition(&twelve_node_tree());
        assert_eq!(p.alleles_per_tree(), &[5]);
        let sizes: Vec<usize> = p.clusters().iter().map(|c| c.size).collect();
        assert_eq!(sizes, vec![5, 1, 3, 2, 1]);
        let m: Vec<usize> = p.clusters().iter().map(|c| c.mutants).collect();
        assert_eq!(m, vec![3, 0, 0, 1, 0]);
    }

    #[test]
    fn twelve_node_tree_allelic_forest() {
        let p = allelic_partition(&twelve_node_tree());
        let f = allelic_forest(&p);
        // Root with three children, one grandchild under the middle child.
        assert_eq!(f.roots(), &[0]);
        assert_eq!(f.parent(), &[None, Some(0), Some(0), Some(0), Some(3)]);
        assert_eq!(f.offspring(), &[3, 0, 0, 1, 0]);
        assert_eq!(f.depths(), vec![0, 1, 1, 1, 2]);
    }

    #[test]
    fn small_allelic_forests() {
        // M-sequence (0): single-node allelic tree.
        let p = allelic_partition(&seq(vec![s(0, 0)]));
        let f = allelic_forest(&p);
        assert_eq!(f.parent(), &[None]);
        // M-sequence (2,0,0): root with two leaf children.
        let p = allelic_partition(&seq(vec![s(0, 2), s(0, 0), s(0, 0)]));
        assert_eq!(p.alleles_per_tree(), &[3]);
        let f = allelic_forest(&p);
        assert_eq!(f.parent(), &[None, Some(0), Some(0)]);
    }

    #[test]
    fn twelve_node_mass_partition() {
        let p = allelic_partition(&twelve_node_tree());
        let gamma = mass_partition(&p, 0);
        assert_eq!(gamma.total, 12);
        assert_eq!(gamma.ranked_sizes, vec![5, 3, 2, 1, 1]);
        let ratios = gamma.ratios();
        let sum: Ratio<u64> = ratios.iter().sum();
        assert_eq!(sum, Ratio::new(1, 1));
        assert_eq!(ratios[0], Ratio::new(5, 12));
    }

    #[test]
    fn partition_key_from_both_routes() {
        let t = twelve_node_tree();
        let p = allelic_partition(&t);
        let from_steps = PartitionKey::from_tree_steps(t.tree(0).steps);
        let from_partition = PartitionKey::from_partition(&p, 0);
        assert_eq!(from_steps, from_partition);
        assert_eq!(from_steps.tree_size(), 12);
        assert_eq!(from_steps.alleles(), 5);
        assert_eq!(from_steps.ranked_sizes(), vec![5, 3, 2, 1, 1]);
    }

    #[test]
    fn reconstruction_round_trip() {
        for steps in [
            vec![s(1, 1), s(0, 0), s(0, 0)],
            vec![s(0, 0)],
            twelve_node_tree().steps().to_vec(),
        ] {
            let original = seq(steps);
            let p = allelic_partition(&original);
            let slices = cluster_slices(&original, &p);
            let rebuilt = reconstruct_from_partition(&slices).unwrap();
            assert_eq!(rebuilt, original);
        }
    }

    #[test]
    fn reconstruction_rejects_bad_input() {
        // Two mutantless singleton clusters cannot share a tree, and the
        // first one closes tree 1, so the second is a fresh complete tree:
        // the pair is fine. Make it inconsistent with a dangling mutant.
        let dangling: &[&[Step]] = &[&[s(0, 1)]];
        assert!(matches!(
            reconstruct_from_partition(dangling),
            Err(PartitionError::InconsistentPartition { .. })
        ));
        let malformed: &[&[Step]] = &[&[s(1, 0)]];
        assert!(matches!(
            reconstruct_from_partition(malformed),
            Err(PartitionError::MalformedCluster { index: 0 })
        ));
        let early_close: &[&[Step]] = &[&[s(0, 0), s(0, 0)]];
        assert!(matches!(
            reconstruct_from_partition(early_close),
            Err(PartitionError::MalformedCluster { index: 0 })
        ));
    }

    #[test]
    fn multi_tree_partition_counts() {
        // Tree 1: [(0,1),(0,0)] has A=2; tree 2: [(0,0)] has A=1.
        let f = seq(vec![s(0, 1), s(0, 0), s(0, 0)]);
        let p = allelic_partition(&f);
        assert_eq!(p.alleles_per_tree(), &[2, 1]);
        assert_eq!(p.cluster_range(0), 0..2);
        assert_eq!(p.cluster_range(1), 2..3);
        let keys: Vec<PartitionKey> = (0..2)
            .map(|i| PartitionKey::from_partition(&p, i))
            .collect();
        assert_eq!(keys[0].sizes, vec![1, 1]);
        assert_eq!(keys[1].sizes, vec![1]);
    }
}
