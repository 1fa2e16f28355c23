//! Discrete height functions of a forest.
//!
//! The genealogical variant lists generations in plain depth-first order
//! (mutation marks ignored); it is computed by replaying the encoding, since
//! mutant subtrees sit elsewhere in DFS-with-mutations order. The allelic
//! variant is the height function of the forest of clusters: within a
//! cluster, sequence order is already plain clone-DFS, so a direct stack
//! walk over clone counts suffices.

use alloc::vec::Vec;

use crate::forest::DfsSequence;
use crate::genealogy::{generation_view, plain_dfs_order};

/// Which forest the heights describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeightVariant {
    /// Generations in the genealogical forest, plain DFS order.
    Genealogical,
    /// Depth within each allelic cluster, sequence order.
    AllelicClusters,
}

/// A height path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeightPath {
    /// Which construction produced the values.
    pub variant: HeightVariant,
    /// One height per individual.
    pub values: Vec<u32>,
}

/// Computes the requested height function of a complete forest.
pub fn height_function(seq: &DfsSequence, variant: HeightVariant) -> HeightPath {
    let values = match variant {
        HeightVariant::Genealogical => {
            let view = generation_view(seq);
            plain_dfs_order(&view)
                .into_iter()
                .map(|i| view[i].generation)
                .collect()
        }
        HeightVariant::AllelicClusters => {
            // Lukasiewicz-style stack walk on clone counts: depth rises by 1
            // per open clone slot, clusters restart at 0.
            let mut values = Vec::with_capacity(seq.len());
            let mut slots: Vec<u32> = Vec::new();
            for &st in seq.steps() {
                values.push(slots.len() as u32);
                slots.push(st.clones);
                while slots.last().is_some_and(|&r| r == 0) {
                    slots.pop();
                    if let Some(r) = slots.last_mut() {
                        *r -= 1;
                    }
                }
            }
            values
        }
    };
    HeightPath { variant, values }
}
