//! Closed-form laws of tree sizes, allele counts and cluster sizes, all
//! evaluated from a table of convolution powers.
//!
//! Everything rests on first-passage identities for the two skip-free walks:
//! P(tree size = n, alleles = k) = (1/n) pi^{*n}(n-k, k-1), and
//! P(first cluster size = n, mutants = l) = (1/n) pi^{*n}(n-1, l). Infinite
//! sums are truncated at the table's n_max with the unallocated mass
//! returned as an explicit residual bound.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::conv::ConvolutionTable;
use crate::numeric;

/// Errors from distribution queries.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    /// The query needs a convolution power beyond the table.
    #[error("n = {n} beyond the table's n_max = {n_max}")]
    OutOfTable {
        /// Requested power.
        n: usize,
        /// Largest stored power.
        n_max: usize,
    },
    /// A size or count parameter is outside its domain.
    #[error("parameter out of domain: {0}")]
    DomainError(&'static str),
    /// Cluster mutant counts must keep every proper prefix sum above the
    /// cluster index minus one.
    #[error("mutant prefix sum through cluster {index} is {sum}, needs at least {index}")]
    PrefixConditionViolated {
        /// 1-based cluster position j where the condition failed.
        index: usize,
        /// The prefix sum at that position.
        sum: usize,
    },
    /// The conditioning event has probability zero under this law.
    #[error("conditioning event has probability zero")]
    ZeroDenominator,
    /// Cluster sizes do not sum to the conditioning tree size.
    #[error("cluster sizes sum to {got}, expected {expected}")]
    SizeMismatch {
        /// Sum of the provided sizes.
        got: usize,
        /// The tree size conditioned on.
        expected: usize,
    },
}

/// P(tree size = n, allele count = k).
pub fn p_tree_size_alleles(table: &ConvolutionTable, n: usize, k: usize) -> Result<f64, DistError> {
    if n == 0 {
        return Err(DistError::DomainError("tree size must be at least 1"));
    }
    if k == 0 || k > n {
        return Ok(0.0);
    }
    match table.entry(n, n - k, k - 1) {
        Some(p) => Ok(p / n as f64),
        None => Err(DistError::OutOfTable {
            n,
            n_max: table.n_max(),
        }),
    }
}

/// P(first cluster size = n, cluster mutant total = l).
pub fn p_cluster_size_mutants(
    table: &ConvolutionTable,
    n: usize,
    l: usize,
) -> Result<f64, DistError> {
    if n == 0 {
        return Err(DistError::DomainError("cluster size must be at least 1"));
    }
    match table.entry(n, n - 1, l) {
        Some(p) => Ok(p / n as f64),
        None => Err(DistError::OutOfTable {
            n,
            n_max: table.n_max(),
        }),
    }
}

/// Checks the prefix condition on cluster mutant counts: every proper prefix
/// sum must exceed its index minus one (the first j clusters cannot close a
/// tree early).
pub fn check_prefix_condition(pairs: &[(usize, usize)]) -> Result<(), DistError> {
    let mut sum = 0usize;
    for (j, &(_, l)) in pairs.iter().enumerate().take(pairs.len().saturating_sub(1)) {
        sum += l;
        if sum <= j {
            return Err(DistError::PrefixConditionViolated { index: j + 1, sum });
        }
    }
    Ok(())
}

/// Joint law of the first k clusters: product of per-cluster factors
/// (1/n_j) pi^{*n_j}(n_j - 1, l_j) under the prefix condition.
pub fn p_allelic_tree(
    table: &ConvolutionTable,
    pairs: &[(usize, usize)],
) -> Result<f64, DistError> {
    if pairs.is_empty() {
        return Err(DistError::DomainError("at least one cluster required"));
    }
    check_prefix_condition(pairs)?;
    let mut prod = 1.0;
    for &(n, l) in pairs {
        prod *= p_cluster_size_mutants(table, n, l)?;
    }
    Ok(prod)
}

/// A pmf truncated to a finite index range, with the unallocated mass kept
/// as an explicit residual.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedLaw {
    /// Probabilities by index.
    pub probs: Vec<f64>,
    /// Mass not allocated to any stored index.
    pub residual: f64,
}

impl TruncatedLaw {
    /// P(index = l), 0 beyond the stored range.
    pub fn prob(&self, l: usize) -> f64 {
        self.probs.get(l).copied().unwrap_or(0.0)
    }
}

/// The offspring law nu of the allelic forest: nu_l = sum_n (1/n)
/// pi^{*n}(n-1, l), truncated at the table's n_max.
pub fn mutant_offspring_law(table: &ConvolutionTable) -> TruncatedLaw {
    let mut probs: Vec<f64> = Vec::new();
    for n in 1..=table.n_max() {
        let slice = table.slice(n).expect("n within table");
        if n > slice.rows() {
            continue;
        }
        for l in 0..slice.cols() {
            let p = *slice.get(n - 1, l).unwrap() / n as f64;
            if l >= probs.len() {
                probs.resize(l + 1, 0.0);
            }
            probs[l] += p;
        }
    }
    let mass: f64 = probs.iter().sum();
    TruncatedLaw {
        probs,
        residual: numeric::fmax(1.0 - mass, 0.0),
    }
}

/// Which identity computes the allele-count law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllelesRoute {
    /// Sum the joint tree-size/allele-count law over sizes.
    Direct,
    /// First-passage law of the allelic forest: (1/k) nu^{*k}(k-1).
    ViaMutantLaw,
}

/// A probability together with a truncation residual bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbWithResidual {
    /// The computed (truncated) value.
    pub value: f64,
    /// Upper bound on the truncation error.
    pub residual: f64,
}

/// P(allele count of a tree = k) by the chosen route.
pub fn p_num_alleles(
    table: &ConvolutionTable,
    k: usize,
    route: AllelesRoute,
) -> Result<ProbWithResidual, DistError> {
    if k == 0 {
        return Err(DistError::DomainError("allele count must be at least 1"));
    }
    match route {
        AllelesRoute::Direct => {
            let mut value = 0.0;
            let mut allocated = 0.0;
            for n in 1..=table.n_max() {
                for kk in 1..=n {
                    let p = p_tree_size_alleles(table, n, kk)?;
                    allocated += p;
                    if kk == k {
                        value += p;
                    }
                }
            }
            Ok(ProbWithResidual {
                value,
                residual: numeric::fmax(1.0 - allocated, 0.0),
            })
        }
        AllelesRoute::ViaMutantLaw => {
            let nu = mutant_offspring_law(table);
            // k-fold convolution of nu, evaluated at k-1.
            let mut pow = vec![1.0];
            for _ in 0..k {
                pow = convolve_1d(&pow, &nu.probs);
            }
            let value = pow.get(k - 1).copied().unwrap_or(0.0) / k as f64;
            // Mass escaping the k-fold product of the truncated nu.
            let kept = libm::pow(1.0 - nu.residual, k as f64);
            Ok(ProbWithResidual {
                value,
                residual: numeric::fmax(1.0 - kept, 0.0),
            })
        }
    }
}

fn convolve_1d(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Conditional law of the (cyclically permuted) cluster sizes given tree
/// size n and allele count k:
/// n / (k pi^{*n}(n-k, k-1)) * sum over mutant compositions of the
/// per-cluster product. The composition sum runs by dynamic programming
/// over (cluster index, remaining mutant budget).
pub fn conditional_cluster_sizes(
    table: &ConvolutionTable,
    n: usize,
    k: usize,
    sizes: &[usize],
) -> Result<f64, DistError> {
    if n == 0 || k == 0 || k > n {
        return Err(DistError::DomainError("need 1 <= k <= n"));
    }
    if sizes.len() != k {
        return Err(DistError::DomainError("need exactly k cluster sizes"));
    }
    if sizes.contains(&0) {
        return Err(DistError::DomainError("cluster sizes must be at least 1"));
    }
    let got: usize = sizes.iter().sum();
    if got != n {
        return Err(DistError::SizeMismatch { got, expected: n });
    }
    let denom = match table.entry(n, n - k, k - 1) {
        Some(p) => p,
        None => {
            return Err(DistError::OutOfTable {
                n,
                n_max: table.n_max(),
            })
        }
    };
    if denom == 0.0 {
        return Err(DistError::ZeroDenominator);
    }
    // dp[b] = sum over the clusters seen so far of products with total
    // mutant budget b spent; budget caps at k-1.
    let budget = k - 1;
    let mut dp = vec![0.0; budget + 1];
    dp[0] = 1.0;
    for &size in sizes {
        let mut next = vec![0.0; budget + 1];
        for (b, &acc) in dp.iter().enumerate() {
            if acc == 0.0 {
                continue;
            }
            for l in 0..=(budget - b) {
                let f = p_cluster_size_mutants(table, size, l)?;
                if f != 0.0 {
                    next[b + l] += acc * f;
                }
            }
        }
        dp = next;
    }
    Ok(dp[budget] * n as f64 / (k as f64 * denom))
}

/// Intensity constant of the limiting mass-partition point process:
/// b / sqrt(2 pi sigma_sq a^3).
pub fn limit_mass_partition_intensity(b: f64, sigma_sq: f64, a: f64) -> Result<f64, DistError> {
    if b <= 0.0 || !b.is_finite() {
        return Err(DistError::DomainError("b must be positive and finite"));
    }
    if sigma_sq <= 0.0 || !sigma_sq.is_finite() {
        return Err(DistError::DomainError(
            "sigma_sq must be positive and finite",
        ));
    }
    if a <= 0.0 || !a.is_finite() {
        return Err(DistError::DomainError("a must be positive and finite"));
    }
    Ok(b / libm::sqrt(2.0 * core::f64::consts::PI * sigma_sq * a * a * a))
}

/// Tree-size marginal by the first-passage identity on the total walk:
/// P(tree size = n) = (1/n) P(total offspring of n individuals = n - 1).
pub fn p_tree_size(table: &ConvolutionTable, n: usize) -> Result<f64, DistError> {
    if n == 0 {
        return Err(DistError::DomainError("tree size must be at least 1"));
    }
    let slice = table.slice(n).ok_or(DistError::OutOfTable {
        n,
        n_max: table.n_max(),
    })?;
    let mut total = 0.0;
    for (k, l, p) in slice.entries() {
        if k + l == n - 1 {
            total += p;
        }
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::{JointOffspringLaw, Marginal};

    fn l0_table(n_max: usize) -> ConvolutionTable {
        let half = Marginal::bernoulli(0.5).unwrap();
        let law = JointOffspringLaw::independent(&half, &half).unwrap();
        ConvolutionTable::build(&law, n_max, ConvolutionTable::DEFAULT_MEMORY_CAP).unwrap()
    }

    #[test]
    fn tree_size_alleles_hand_values() {
        let t = l0_table(4);
        assert_eq!(p_tree_size_alleles(&t, 1, 1).unwrap(), 0.25);
        assert_eq!(p_tree_size_alleles(&t, 2, 1).unwrap(), 0.0625);
        assert_eq!(p_tree_size_alleles(&t, 2, 2).unwrap(), 0.0625);
        assert_eq!(p_tree_size_alleles(&t, 2, 3).unwrap(), 0.0);
        assert!(p_tree_size_alleles(&t, 9, 1).is_err());
    }

    #[test]
    fn cluster_size_mutants_hand_values() {
        let t = l0_table(4);
        assert_eq!(p_cluster_size_mutants(&t, 1, 0).unwrap(), 0.25);
        assert_eq!(p_cluster_size_mutants(&t, 1, 1).unwrap(), 0.25);
        assert_eq!(p_cluster_size_mutants(&t, 1, 2).unwrap(), 0.0);
        assert_eq!(p_cluster_size_mutants(&t, 2, 1).unwrap(), 0.125);
        assert_eq!(p_cluster_size_mutants(&t, 2, 0).unwrap(), 0.0625);
    }

    #[test]
    fn allelic_tree_product() {
        let t = l0_table(4);
        let p = p_allelic_tree(&t, &[(2, 1), (1, 0)]).unwrap();
        assert_eq!(p, 0.125 * 0.25);
        assert_eq!(p_allelic_tree(&t, &[(1, 0)]).unwrap(), 0.25);
        let err = p_allelic_tree(&t, &[(1, 0), (1, 0)]).unwrap_err();
        assert_eq!(err, DistError::PrefixConditionViolated { index: 1, sum: 0 });
    }

    #[test]
    fn nu_series_for_l0() {
        // pi^{*n}(n-1, 0) = n 4^{-n}, so nu_0 = sum 4^{-n} = 1/3.
        let t = l0_table(60);
        let nu = mutant_offspring_law(&t);
        assert!((nu.prob(0) - 1.0 / 3.0).abs() < 1e-12);
        assert!(nu.residual < 0.2, "residual {}", nu.residual);
        // Monotone residual in n_max.
        let r20 = mutant_offspring_law(&l0_table(20)).residual;
        let r40 = mutant_offspring_law(&l0_table(40)).residual;
        assert!(r20 > r40 && r40 > nu.residual);
    }

    #[test]
    fn nu_for_clone_degenerate_delta_law() {
        // All clusters have size 1, so nu_l is just the mutant-count pmf.
        let q = 0.3;
        let law = JointOffspringLaw::from_entries(&[(0, 1, q), (0, 0, 1.0 - q)], 0.0).unwrap();
        let t = ConvolutionTable::build(&law, 10, ConvolutionTable::DEFAULT_MEMORY_CAP).unwrap();
        let nu = mutant_offspring_law(&t);
        assert!((nu.prob(0) - (1.0 - q)).abs() < 1e-15);
        assert!((nu.prob(1) - q).abs() < 1e-15);
        assert!(nu.residual < 1e-12);
    }

    #[test]
    fn allele_count_routes_agree() {
        let t = l0_table(60);
        let direct = p_num_alleles(&t, 1, AllelesRoute::Direct).unwrap();
        let via = p_num_alleles(&t, 1, AllelesRoute::ViaMutantLaw).unwrap();
        assert!((direct.value - 1.0 / 3.0).abs() <= direct.residual + 1e-12);
        assert!((via.value - 1.0 / 3.0).abs() <= via.residual + 1e-12);
        for k in 1..=8 {
            let d = p_num_alleles(&t, k, AllelesRoute::Direct).unwrap();
            let v = p_num_alleles(&t, k, AllelesRoute::ViaMutantLaw).unwrap();
            assert!(
                (d.value - v.value).abs() <= d.residual + v.residual,
                "k = {k}: {} vs {} (residuals {} + {})",
                d.value,
                v.value,
                d.residual,
                v.residual
            );
        }
    }

    #[test]
    fn conditional_sizes_forced_cases() {
        let t = l0_table(12);
        assert!((conditional_cluster_sizes(&t, 2, 2, &[1, 1]).unwrap() - 1.0).abs() < 1e-12);
        assert!((conditional_cluster_sizes(&t, 3, 1, &[3]).unwrap() - 1.0).abs() < 1e-12);
        // (3,2): the two orderings are equally likely and sum to 1.
        let a = conditional_cluster_sizes(&t, 3, 2, &[1, 2]).unwrap();
        let b = conditional_cluster_sizes(&t, 3, 2, &[2, 1]).unwrap();
        assert!((a - b).abs() < 1e-14);
        assert!((a + b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conditional_sizes_error_paths() {
        let t = l0_table(12);
        assert_eq!(
            conditional_cluster_sizes(&t, 3, 2, &[1, 1]).unwrap_err(),
            DistError::SizeMismatch {
                got: 2,
                expected: 3
            }
        );
        // An always-one-child law never makes finite trees, so every
        // conditioning event has probability zero.
        let law = JointOffspringLaw::from_pruning(&Marginal::delta(1), 0.5).unwrap();
        let t1 = ConvolutionTable::build(&law, 6, ConvolutionTable::DEFAULT_MEMORY_CAP).unwrap();
        assert_eq!(
            conditional_cluster_sizes(&t1, 3, 2, &[1, 2]).unwrap_err(),
            DistError::ZeroDenominator
        );
    }

    #[test]
    fn tree_size_marginal_consistency() {
        // Summing the joint law over k reproduces the total-walk marginal.
        let t = l0_table(20);
        for n in 1..=20usize {
            let joint: f64 = (1..=n)
                .map(|k| p_tree_size_alleles(&t, n, k).unwrap())
                .sum();
            let marginal = p_tree_size(&t, n).unwrap();
            assert!(
                (joint - marginal).abs() < 1e-13,
                "n = {n}: {joint} vs {marginal}"
            );
        }
    }

    #[test]
    fn intensity_values() {
        let tau = 2.0 * core::f64::consts::PI;
        assert!(
            (limit_mass_partition_intensity(libm::sqrt(tau), 1.0, 1.0).unwrap() - 1.0).abs()
                < 1e-14
        );
        let base = limit_mass_partition_intensity(1.0, 2.0, 1.0).unwrap();
        assert!((base - 1.0 / libm::sqrt(4.0 * core::f64::consts::PI)).abs() < 1e-14);
        let quad = limit_mass_partition_intensity(1.0, 2.0, 4.0).unwrap();
        assert!((quad - base / 8.0).abs() < 1e-14);
        assert!(limit_mass_partition_intensity(0.0, 1.0, 1.0).is_err());
        assert!(limit_mass_partition_intensity(1.0, -1.0, 1.0).is_err());
    }
}
