//! Numeric probes of the two scaling statements: the polynomial cluster-size
//! tail under the tilted clone law, and the linear drift of the
//! mutation-count walk under vanishing mutation rates.

use alloc::vec;
use alloc::vec::Vec;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use crate::forest::stream_rng;
use crate::law::{JointOffspringLaw, LawError, Marginal};
use crate::tilt::{tilt_clone_marginal, tilted_probs, TiltError, TiltingResult};

/// One probe of n^{3/2} P(cluster size = n) against its limit.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAsymptotic {
    /// Probed cluster size.
    pub n: usize,
    /// P(cluster size = n) under the tilted clone law.
    pub p_cluster: f64,
    /// n^{3/2} times that probability.
    pub scaled: f64,
    /// The limit 1/sqrt(2 pi sigma_sq).
    pub limit: f64,
    /// The tilt that equalized the clone mean.
    pub tilt: TiltingResult,
}

/// Convolution power `pmf^{*n}` evaluated at one index.
///
/// Powers are built by repeated squaring with every intermediate truncated
/// to `target + 1` entries; indices only ever add, so the value at `target`
/// is exact.
pub fn pmf_power_at(pmf: &[f64], n: u64, target: usize) -> f64 {
    fn conv_to(a: &[f64], b: &[f64], cap: usize) -> Vec<f64> {
        let len = core::cmp::min(a.len() + b.len() - 1, cap);
        let mut out = vec![0.0; len];
        for (i, &x) in a.iter().enumerate() {
            if x == 0.0 || i >= len {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                if i + j >= len {
                    break;
                }
                out[i + j] += x * y;
            }
        }
        out
    }
    assert!(n >= 1, "zeroth power is a point mass, not a pmf query");
    let cap = target + 1;
    let mut base: Vec<f64> = pmf.iter().copied().take(cap).collect();
    let mut result: Option<Vec<f64>> = None;
    let mut exp = n;
    loop {
        if exp & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => conv_to(&r, &base, cap),
            });
        }
        exp >>= 1;
        if exp == 0 {
            break;
        }
        base = conv_to(&base, &base, cap);
    }
    result.unwrap().get(target).copied().unwrap_or(0.0)
}

/// Tilts the clone marginal to criticality and probes
/// n^{3/2} P(cluster size = n) at `n_probe` against 1/sqrt(2 pi sigma_sq).
pub fn tilted_cluster_asymptotic(
    law: &JointOffspringLaw,
    n_probe: usize,
) -> Result<ClusterAsymptotic, TiltError> {
    assert!(n_probe >= 1, "cluster sizes start at 1");
    let clone = law.clone_marginal();
    if let Some(period) = clone.period() {
        if period > 1 {
            return Err(TiltError::PeriodicSupport { period });
        }
    }
    let tilt = tilt_clone_marginal(law)?;
    let (tilted, _z) = tilted_probs(&clone, tilt.theta);
    // First passage to -1 at n: (1/n) P(sum of n tilted counts = n - 1).
    let p_cluster = pmf_power_at(&tilted, n_probe as u64, n_probe - 1) / n_probe as f64;
    let nf = n_probe as f64;
    let scaled = nf * libm::sqrt(nf) * p_cluster;
    let limit = 1.0 / libm::sqrt(2.0 * core::f64::consts::PI * tilt.sigma_sq);
    Ok(ClusterAsymptotic {
        n: n_probe,
        p_cluster,
        scaled,
        limit,
        tilt,
    })
}

/// One sampled path of the scaled mutation-count walk.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftProbe {
    /// Population-size parameter; the mutation probability is d/n.
    pub n: usize,
    /// Drift coefficient.
    pub d: f64,
    /// Times the path was recorded at.
    pub t_grid: Vec<f64>,
    /// n^{-1} (mutants so far) at each grid time.
    pub path: Vec<f64>,
    /// Sup over all steps of |path - d t|.
    pub sup_deviation: f64,
}

/// Walks `[t_max n^2]` individuals under the pruning law with mutation
/// probability d/n and tracks n^{-1} (S-total minus S-clone), which is the
/// running mutant count. Run `run` of a seed uses its own substream.
pub fn drift_probe(
    base: &Marginal,
    d: f64,
    n: usize,
    t_max: f64,
    grid: usize,
    seed: u64,
    run: u64,
) -> Result<DriftProbe, LawError> {
    assert!(n >= 1 && grid >= 1);
    assert!(t_max > 0.0 && d >= 0.0);
    let law = JointOffspringLaw::from_pruning_relaxed(base, d / n as f64)?;
    let mutant = law.mutant_marginal();
    // Only the mutant counts move the difference walk.
    let weights =
        WeightedIndex::new(mutant.probs().iter().copied()).map_err(|_| LawError::EmptySupport)?;
    let mut rng = stream_rng(seed, run);
    let horizon = (t_max * (n as f64) * (n as f64)) as u64;
    let steps_per_cell = horizon.div_ceil(grid as u64);
    let inv_n = 1.0 / n as f64;
    let time_scale = inv_n * inv_n;
    let mut mutants: u64 = 0;
    let mut sup: f64 = 0.0;
    let mut t_grid = Vec::with_capacity(grid);
    let mut path = Vec::with_capacity(grid);
    for m in 1..=horizon {
        let value = mutants as f64 * inv_n;
        let t = m as f64 * time_scale;
        // The path is flat across the step, so the deviation peaks at one
        // of the two endpoints.
        sup = crate::numeric::fmax(sup, crate::numeric::fabs(value - d * t));
        mutants += weights.sample(&mut rng) as u64;
        let value = mutants as f64 * inv_n;
        sup = crate::numeric::fmax(sup, crate::numeric::fabs(value - d * t));
        if m % steps_per_cell == 0 || m == horizon {
            t_grid.push(t);
            path.push(value);
        }
    }
    Ok(DriftProbe {
        n,
        d,
        t_grid,
        path,
        sup_deviation: sup,
    })
}

/// Convenience: `runs` independent probes, returning each sup-deviation.
pub fn drift_probe_sups(
    base: &Marginal,
    d: f64,
    n: usize,
    t_max: f64,
    grid: usize,
    seed: u64,
    runs: u64,
) -> Result<Vec<f64>, LawError> {
    (0..runs)
        .map(|run| Ok(drift_probe(base, d, n, t_max, grid, seed, run)?.sup_deviation))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_at_matches_direct_convolution() {
        let pmf = [0.2, 0.5, 0.3];
        // Direct 4-fold convolution.
        let mut direct = vec![1.0];
        for _ in 0..4 {
            let mut next = vec![0.0; direct.len() + pmf.len() - 1];
            for (i, &x) in direct.iter().enumerate() {
                for (j, &y) in pmf.iter().enumerate() {
                    next[i + j] += x * y;
                }
            }
            direct = next;
        }
        for (target, &want) in direct.iter().enumerate() {
            let got = pmf_power_at(&pmf, 4, target);
            assert!((got - want).abs() < 1e-15, "target {target}");
        }
        assert_eq!(pmf_power_at(&pmf, 1, 1), 0.5);
        assert_eq!(pmf_power_at(&pmf, 3, 40), 0.0);
    }

    #[test]
    fn geometric_law_approaches_its_limit() {
        // Geometric(1/3) clone marginal tilts to criticality with
        // sigma_sq = 2; the scaled pmf must creep up on 1/sqrt(4 pi).
        let clone = Marginal::geometric(1.0 / 3.0, 1e-22).unwrap();
        let mutant = Marginal::delta(0);
        let law = JointOffspringLaw::independent(&clone, &mutant).unwrap();
        let mut last_gap = f64::INFINITY;
        for n in [250usize, 500, 1000, 2000] {
            let probe = tilted_cluster_asymptotic(&law, n).unwrap();
            let gap = (probe.scaled / probe.limit - 1.0).abs();
            assert!(gap < last_gap, "n {n}: gap {gap} after {last_gap}");
            last_gap = gap;
        }
        assert!(last_gap < 0.05, "gap at 2000 is {last_gap}");
        let probe = tilted_cluster_asymptotic(&law, 2000).unwrap();
        assert!((probe.tilt.theta - 1.5).abs() < 1e-9);
        assert!((probe.limit - 1.0 / libm::sqrt(4.0 * core::f64::consts::PI)).abs() < 1e-9);
    }

    #[test]
    fn periodic_clone_support_is_rejected() {
        let clone = Marginal::from_probs(vec![0.6, 0.0, 0.4], 0.0).unwrap();
        let mutant = Marginal::delta(0);
        let law = JointOffspringLaw::independent(&clone, &mutant).unwrap();
        assert_eq!(
            tilted_cluster_asymptotic(&law, 100).unwrap_err(),
            TiltError::PeriodicSupport { period: 2 }
        );
    }

    #[test]
    fn bernoulli_clone_has_no_tilt() {
        let clone = Marginal::bernoulli(0.4).unwrap();
        let law = JointOffspringLaw::independent(&clone, &Marginal::delta(0)).unwrap();
        assert!(matches!(
            tilted_cluster_asymptotic(&law, 100),
            Err(TiltError::NoTiltExists(_))
        ));
    }

    #[test]
    fn zero_drift_keeps_the_path_flat() {
        let base = Marginal::geometric(0.5, 1e-12).unwrap();
        let probe = drift_probe(&base, 0.0, 50, 1.0, 10, 9, 0).unwrap();
        assert_eq!(probe.sup_deviation, 0.0);
        assert!(probe.path.iter().all(|&v| v == 0.0));
        assert_eq!(probe.t_grid.len(), probe.path.len());
    }

    #[test]
    fn drift_paths_track_the_line() {
        let base = Marginal::geometric(0.5, 1e-12).unwrap();
        let probe = drift_probe(&base, 2.0, 100, 1.0, 20, 9, 0).unwrap();
        // End value should be near d * t_max = 2.
        let end = *probe.path.last().unwrap();
        assert!((end - 2.0).abs() < 0.6, "end {end}");
        assert!(probe.sup_deviation < 0.6);
        assert!(probe.sup_deviation > 0.0);
        // Deterministic given (seed, run).
        let again = drift_probe(&base, 2.0, 100, 1.0, 20, 9, 0).unwrap();
        assert_eq!(probe, again);
        let other = drift_probe(&base, 2.0, 100, 1.0, 20, 9, 1).unwrap();
        assert_ne!(probe.path, other.path);
    }

    #[test]
    fn deviation_scale_shrinks_with_n() {
        let base = Marginal::geometric(0.5, 1e-12).unwrap();
        let small: f64 = drift_probe_sups(&base, 2.0, 50, 0.5, 10, 4, 20)
            .unwrap()
            .iter()
            .sum::<f64>()
            / 20.0;
        let large: f64 = drift_probe_sups(&base, 2.0, 200, 0.5, 10, 4, 20)
            .unwrap()
            .iter()
            .sum::<f64>()
            / 20.0;
        assert!(
            large < small,
            "mean sup-deviation grew from {small} to {large}"
        );
    }
}
