//! Per-individual reconstruction of the forest from its step sequence.
//!
//! DFS-with-mutations lists each cluster as a clone-DFS block and defers
//! mutant children to a FIFO of future cluster roots: when an individual's
//! clone subtree closes, its mutant children join the queue; when a cluster
//! block ends, the queue front is the next cluster's root. Replaying those
//! rules recovers parents, generations, labels and cluster membership, which
//! is exactly the inverse of the encoding bijection.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::forest::DfsSequence;
use crate::walk::Step;

/// Everything known about one individual after the replay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Individual {
    /// The individual's own child counts.
    pub step: Step,
    /// 0-based tree (ancestor) index.
    pub tree: u32,
    /// Global 0-based cluster index.
    pub cluster: u32,
    /// Generation in the genealogical tree (ancestors at 0).
    pub generation: u32,
    /// Mutations along the ancestral line (allelic depth).
    pub mutations: u32,
    /// Generations since the cluster's founding individual.
    pub cluster_depth: u32,
    /// Global index of the parent; None for ancestors.
    pub parent: Option<u32>,
    /// 1-based rank among the parent's children (clones first, then
    /// mutants); 0 for ancestors.
    pub child_rank: u32,
}

/// Label of an individual: ancestor number, mutation count, and the child
/// ranks along its ancestral line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Label {
    /// 1-based ancestor (tree) number.
    pub ancestor: u32,
    /// Mutation count.
    pub mutations: u32,
    /// Child ranks from the ancestor down to the individual.
    pub lineage: Vec<u32>,
}

struct Frame {
    idx: u32,
    remaining_clones: u32,
    step: Step,
    generation: u32,
    mutations: u32,
    cluster_depth: u32,
}

struct PendingMutant {
    parent: u32,
    rank: u32,
    generation: u32,
    mutations: u32,
}

/// Replays the encoding over a complete forest.
pub fn generation_view(seq: &DfsSequence) -> Vec<Individual> {
    let mut view: Vec<Individual> = Vec::with_capacity(seq.len());
    let mut next_cluster: u32 = 0;
    for tree in seq.trees() {
        let mut stack: Vec<Frame> = Vec::new();
        let mut pending: VecDeque<PendingMutant> = VecDeque::new();
        for (local, &step) in tree.steps.iter().enumerate() {
            let idx = (tree.offset + local) as u32;
            let rec = if let Some(top) = stack.last_mut() {
                let rank = top.step.clones - top.remaining_clones + 1;
                top.remaining_clones -= 1;
                Individual {
                    step,
                    tree: tree.index as u32,
                    cluster: next_cluster - 1,
                    generation: top.generation + 1,
                    mutations: top.mutations,
                    cluster_depth: top.cluster_depth + 1,
                    parent: Some(top.idx),
                    child_rank: rank,
                }
            } else if let Some(p) = pending.pop_front() {
                let rec = Individual {
                    step,
                    tree: tree.index as u32,
                    cluster: next_cluster,
                    generation: p.generation,
                    mutations: p.mutations,
                    cluster_depth: 0,
                    parent: Some(p.parent),
                    child_rank: p.rank,
                };
                next_cluster += 1;
                rec
            } else {
                assert_eq!(local, 0, "a fresh ancestor can only start a tree");
                let rec = Individual {
                    step,
                    tree: tree.index as u32,
                    cluster: next_cluster,
                    generation: 0,
                    mutations: 0,
                    cluster_depth: 0,
                    parent: None,
                    child_rank: 0,
                };
                next_cluster += 1;
                rec
            };
            view.push(rec);
            stack.push(Frame {
                idx,
                remaining_clones: step.clones,
                step,
                generation: rec.generation,
                mutations: rec.mutations,
                cluster_depth: rec.cluster_depth,
            });
            // Close finished frames; a closing individual releases its mutant
            // children to the queue, in rank order.
            while stack.last().is_some_and(|f| f.remaining_clones == 0) {
                let f = stack.pop().unwrap();
                for r in 1..=f.step.mutants {
                    pending.push_back(PendingMutant {
                        parent: f.idx,
                        rank: f.step.clones + r,
                        generation: f.generation + 1,
                        mutations: f.mutations + 1,
                    });
                }
            }
        }
        assert!(stack.is_empty(), "tree boundary inside an open cluster");
        assert!(pending.is_empty(), "tree boundary with unvisited mutants");
    }
    view
}

/// Label of individual `idx` in a replayed view.
pub fn label(view: &[Individual], idx: usize) -> Label {
    let mut lineage = Vec::new();
    let mut cursor = idx;
    loop {
        let rec = &view[cursor];
        match rec.parent {
            Some(p) => {
                lineage.push(rec.child_rank);
                cursor = p as usize;
            }
            None => break,
        }
    }
    lineage.reverse();
    Label {
        ancestor: view[idx].tree + 1,
        mutations: view[idx].mutations,
        lineage,
    }
}

/// Children of each individual, in child-rank order.
pub fn children_lists(view: &[Individual]) -> Vec<Vec<u32>> {
    let mut children: Vec<Vec<u32>> = Vec::new();
    children.resize(view.len(), Vec::new());
    for (idx, rec) in view.iter().enumerate() {
        if let Some(p) = rec.parent {
            let list = &mut children[p as usize];
            debug_assert!(list
                .last()
                .is_none_or(|&prev| view[prev as usize].child_rank < rec.child_rank));
            list.push(idx as u32);
        }
    }
    children
}

/// Visit order of the plain depth-first search (all children in rank order,
/// mutation marks ignored).
pub fn plain_dfs_order(view: &[Individual]) -> Vec<usize> {
    let children = children_lists(view);
    let roots = view
        .iter()
        .enumerate()
        .filter(|(_, r)| r.parent.is_none())
        .map(|(i, _)| i);
    let mut order = Vec::with_capacity(view.len());
    let mut stack: Vec<usize> = Vec::new();
    for root in roots {
        stack.push(root);
        while let Some(idx) = stack.pop() {
            order.push(idx);
            for &c in children[idx].iter().rev() {
                stack.push(c as usize);
            }
        }
    }
    order
}

/// Visit order of DFS-with-mutations, recomputed from the decoded structure
/// alone. On a view produced by [`generation_view`] this is the identity,
/// which is the round-trip check on the encoding bijection.
pub fn dfs_with_mutations_order(view: &[Individual]) -> Vec<usize> {
    let children = children_lists(view);
    let mut order = Vec::with_capacity(view.len());
    let mut roots = view
        .iter()
        .enumerate()
        .filter(|(_, r)| r.parent.is_none())
        .map(|(i, _)| i);
    // Stack frames carry the node and how many of its clone children have
    // been entered; mutant children go to the cluster-root queue at close.
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut stack: Vec<(usize, usize)> = Vec::new();
    loop {
        let next = if let Some(&(node, taken)) = stack.last() {
            let clone_children = view[node].step.clones as usize;
            if taken < clone_children {
                stack.last_mut().unwrap().1 += 1;
                Some(children[node][taken] as usize)
            } else {
                // Clone subtree finished: release mutants, close the frame.
                stack.pop();
                for &c in &children[node][clone_children..] {
                    queue.push_back(c as usize);
                }
                continue;
            }
        } else if let Some(root) = queue.pop_front() {
            Some(root)
        } else if let Some(root) = roots.next() {
            Some(root)
        } else {
            break;
        };
        if let Some(idx) = next {
            order.push(idx);
            stack.push((idx, 0));
        }
    }
    order
}

/// Rank of each individual within its generation, counted in plain DFS
/// order.
pub fn generation_ranks(view: &[Individual]) -> Vec<u32> {
    let mut counters: Vec<u32> = Vec::new();
    let mut ranks = vec![0u32; view.len()];
    for idx in plain_dfs_order(view) {
        let g = view[idx].generation as usize;
        if counters.len() <= g {
            counters.resize(g + 1, 0);
        }
        counters[g] += 1;
        ranks[idx] = counters[g];
    }
    ranks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{cluster_boundaries, tree_boundaries};
    use alloc::vec;

    fn s(c: u32, m: u32) -> Step {
        Step::new(c, m)
    }

    fn seq(steps: Vec<Step>) -> DfsSequence {
        DfsSequence::from_steps(steps).unwrap()
    }

    #[test]
    fn single_individual() {
        let view = generation_view(&seq(vec![s(0, 0)]));
        assert_eq!(view.len(), 1);
        let r = view[0];
        assert_eq!(r.generation, 0);
        assert_eq!(r.parent, None);
        assert_eq!(
            label(&view, 0),
            Label {
                ancestor: 1,
                mutations: 0,
                lineage: vec![]
            }
        );
    }

    #[test]
    fn hand_trace_three_individuals() {
        // Root (1,1); its clone child is visited second, its mutant child
        // third (a new cluster root).
        let view = generation_view(&seq(vec![s(1, 1), s(0, 0), s(0, 0)]));
        assert_eq!(view[0].generation, 0);
        assert_eq!(view[1].generation, 1);
        assert_eq!(view[2].generation, 1);
        assert_eq!(view[1].mutations, 0);
        assert_eq!(view[2].mutations, 1);
        assert_eq!(view[1].cluster, 0);
        assert_eq!(view[2].cluster, 1);
        assert_eq!(label(&view, 1).lineage, vec![1]);
        assert_eq!(label(&view, 2).lineage, vec![2]);
        assert_eq!(view[2].parent, Some(0));
        assert_eq!(view[2].cluster_depth, 0);
    }

    #[test]
    fn mutant_queue_is_fifo_across_the_cluster() {
        // Cluster 1 is root r with clone children u, v; u mutates once, r
        // once. u closes before v, so u's mutant founds cluster 2 and r's
        // founds cluster 3, even though r is shallower.
        let steps = vec![s(2, 1), s(0, 1), s(0, 0), s(0, 0), s(0, 0)];
        let view = generation_view(&seq(steps));
        // Individuals: 0=r, 1=u, 2=v, 3=u's mutant, 4=r's mutant.
        assert_eq!(view[3].parent, Some(1));
        assert_eq!(view[3].generation, 2);
        assert_eq!(view[3].cluster, 1);
        assert_eq!(view[4].parent, Some(0));
        assert_eq!(view[4].generation, 1);
        assert_eq!(view[4].cluster, 2);
        // Label of u's mutant: second child of u (after 0 clones): rank 1.
        assert_eq!(label(&view, 3).lineage, vec![1, 1]);
        assert_eq!(label(&view, 4).lineage, vec![3]);
    }

    #[test]
    fn round_trip_is_identity() {
        let steps = vec![
            s(2, 1),
            s(1, 1),
            s(1, 1),
            s(0, 0),
            s(0, 0),
            s(0, 0),
            s(2, 0),
            s(0, 0),
            s(0, 0),
            s(1, 1),
            s(0, 0),
            s(0, 0),
        ];
        let view = generation_view(&seq(steps));
        let order = dfs_with_mutations_order(&view);
        assert_eq!(order, (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn boundary_identities_from_view() {
        let forest = seq(vec![s(1, 1), s(0, 0), s(0, 0), s(0, 1), s(0, 0), s(0, 0)]);
        let view = generation_view(&forest);
        // Ancestors sit right after each tree boundary.
        let tb = tree_boundaries(forest.steps()).unwrap();
        let ancestors: Vec<usize> = view
            .iter()
            .enumerate()
            .filter(|(_, r)| r.parent.is_none())
            .map(|(i, _)| i)
            .collect();
        assert_eq!(ancestors, vec![0, 3, 5]);
        for (i, &a) in ancestors.iter().enumerate().skip(1) {
            assert_eq!(a, tb[i - 1]);
        }
        // Cluster roots sit right after each cluster boundary.
        let cb = cluster_boundaries(forest.steps()).unwrap();
        let roots: Vec<usize> = view
            .iter()
            .enumerate()
            .filter(|(_, r)| r.cluster_depth == 0)
            .map(|(i, _)| i)
            .collect();
        for (j, &r) in roots.iter().enumerate().skip(1) {
            assert_eq!(r, cb[j - 1]);
        }
    }

    #[test]
    fn plain_dfs_respects_child_ranks() {
        let steps = vec![s(2, 1), s(0, 1), s(0, 0), s(0, 0), s(0, 0)];
        let view = generation_view(&seq(steps));
        let order = plain_dfs_order(&view);
        // Plain DFS: r, u, u's mutant, v, r's mutant = 0, 1, 3, 2, 4.
        assert_eq!(order, vec![0, 1, 3, 2, 4]);
        let ranks = generation_ranks(&view);
        // Generation 1 in plain order: u(1), v(2), r's mutant(3).
        assert_eq!(ranks[1], 1);
        assert_eq!(ranks[2], 2);
        assert_eq!(ranks[4], 3);
        // Generation 2: u's mutant first.
        assert_eq!(ranks[3], 1);
    }
}
