//! Worker-count-independent Monte Carlo: the tree range is cut into fixed
//! chunks, each chunk is sampled on its own per-tree substreams, and the
//! partial counts are folded in chunk order. Changing the worker count can
//! only change scheduling, never the counts.

use allelic_core::law::LawError;
use allelic_core::montecarlo::{monte_carlo_range, McCounts};
use allelic_core::JointOffspringLaw;
use anyhow::Result;
use rayon::prelude::*;

/// Trees per work item; fixed so the partition never depends on workers.
const CHUNK: u64 = 8_192;

/// Samples `n_trees` trees of `seed`'s stream on up to `workers` threads.
pub fn parallel_monte_carlo(
    law: &JointOffspringLaw,
    n_trees: u64,
    seed: u64,
    cap: usize,
    detail_max: usize,
    workers: usize,
) -> Result<McCounts> {
    if workers <= 1 || n_trees <= CHUNK {
        return Ok(monte_carlo_range(law, 0..n_trees, seed, cap, detail_max)?);
    }
    let ranges: Vec<_> = (0..n_trees.div_ceil(CHUNK))
        .map(|i| (i * CHUNK)..((i + 1) * CHUNK).min(n_trees))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()?;
    let partials: Result<Vec<McCounts>, LawError> = pool.install(|| {
        ranges
            .into_par_iter()
            .map(|r| monte_carlo_range(law, r, seed, cap, detail_max))
            .collect()
    });
    let mut merged = McCounts::new(detail_max);
    for part in partials? {
        merged = merged.merge(part);
    }
    Ok(merged)
}
