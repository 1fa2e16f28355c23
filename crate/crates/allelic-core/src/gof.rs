//! Statistical comparison of empirical counts against an exact law:
//! total-variation distance, pooled chi-square, per-cell z-scores, and a
//! Kolmogorov-Smirnov sanity check on the z-scores themselves.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use thiserror::Error;

use crate::numeric;

/// Minimum expected count a chi-square bucket must carry.
pub const POOL_MIN_EXPECTED: f64 = 5.0;

/// Errors from statistical comparison.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GofError {
    /// No observations to test.
    #[error("observation is empty")]
    EmptyObservation,
}

/// Empirical counts over a keyed cell space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation<K: Ord> {
    /// Counts per cell.
    pub counts: BTreeMap<K, u64>,
    /// Observations known to fall outside the listed cells (for a
    /// truncated expected law, the mass beyond the truncation).
    pub other: u64,
    /// Trials censored before producing an observation.
    pub censored: u64,
}

/// One unpooled cell of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CellStat<K> {
    /// Cell key.
    pub key: K,
    /// Probability under the expected law.
    pub probability: f64,
    /// Expected count.
    pub expected: f64,
    /// Observed count.
    pub observed: u64,
    /// Binomial z-score of the observed count.
    pub z: f64,
}

/// Outcome of comparing observed counts to an exact law.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport<K> {
    /// Per-cell statistics, unpooled, in expected-count order.
    pub cells: Vec<CellStat<K>>,
    /// Expected probability outside the listed cells.
    pub other_probability: f64,
    /// Observed count outside the listed cells.
    pub other_observed: u64,
    /// Observations on cells the law gives probability zero.
    pub impossible: u64,
    /// Total-variation distance, computed before any pooling.
    pub tv: f64,
    /// Pooled chi-square statistic.
    pub chi_square: f64,
    /// Degrees of freedom after pooling.
    pub dof: usize,
    /// Chi-square p-value.
    pub p_value: f64,
    /// Cells folded into the pooled bucket.
    pub pooled_cells: usize,
    /// Fraction of trials censored.
    pub censoring_rate: f64,
    /// Observations used (censored trials excluded).
    pub n: u64,
}

impl<K> ComparisonReport<K> {
    /// True when the chi-square test does not reject at `significance`.
    pub fn passes(&self, significance: f64) -> bool {
        self.impossible == 0 && self.p_value > significance
    }
}

/// Compares observed counts against an expected law given as explicit cell
/// probabilities plus the probability mass `other_expected` outside them.
/// Observed keys missing from `expected` count as impossible and force a
/// zero p-value.
pub fn compare<K: Ord + Clone>(
    expected: &BTreeMap<K, f64>,
    other_expected: f64,
    observed: &Observation<K>,
) -> Result<ComparisonReport<K>, GofError> {
    let in_cells: u64 = observed
        .counts
        .iter()
        .filter(|(k, _)| expected.contains_key(k))
        .map(|(_, &c)| c)
        .sum();
    let impossible: u64 = observed
        .counts
        .iter()
        .filter(|(k, _)| !expected.contains_key(k))
        .map(|(_, &c)| c)
        .sum();
    let n = in_cells + impossible + observed.other;
    if n == 0 {
        return Err(GofError::EmptyObservation);
    }
    let nf = n as f64;

    let mut cells: Vec<CellStat<K>> = expected
        .iter()
        .map(|(key, &p)| {
            let observed_count = observed.counts.get(key).copied().unwrap_or(0);
            let exp = p * nf;
            let var = nf * p * (1.0 - p);
            let z = if var > 0.0 {
                (observed_count as f64 - exp) / libm::sqrt(var)
            } else if observed_count as f64 == exp {
                0.0
            } else {
                f64::INFINITY
            };
            CellStat {
                key: key.clone(),
                probability: p,
                expected: exp,
                observed: observed_count,
                z,
            }
        })
        .collect();
    cells.sort_by(|a, b| b.expected.total_cmp(&a.expected));

    let mut tv = 0.0;
    for cell in &cells {
        tv += numeric::fabs(cell.probability - cell.observed as f64 / nf);
    }
    tv += numeric::fabs(other_expected - observed.other as f64 / nf);
    tv += impossible as f64 / nf;
    tv = numeric::fmin(tv / 2.0, 1.0);

    // Pool every cell under the expected-count floor, together with the
    // out-of-range bucket; a still-light pool folds into the smallest
    // retained cell.
    let mut kept: Vec<(f64, u64)> = Vec::new();
    let mut pool = (other_expected * nf, observed.other);
    let mut pooled_cells = 0usize;
    for cell in &cells {
        if cell.expected >= POOL_MIN_EXPECTED {
            kept.push((cell.expected, cell.observed));
        } else {
            pool.0 += cell.expected;
            pool.1 += cell.observed;
            pooled_cells += 1;
        }
    }
    let mut buckets = kept;
    if pool.0 > 0.0 || pool.1 > 0 {
        if pool.0 < POOL_MIN_EXPECTED && !buckets.is_empty() {
            let last = buckets.last_mut().unwrap();
            last.0 += pool.0;
            last.1 += pool.1;
        } else {
            buckets.push(pool);
        }
    }
    let (chi_square, dof, p_value) = if impossible > 0 {
        (f64::INFINITY, buckets.len().saturating_sub(1), 0.0)
    } else {
        let mut chi = 0.0;
        for &(exp, obs) in &buckets {
            if exp > 0.0 {
                let d = obs as f64 - exp;
                chi += d * d / exp;
            } else if obs > 0 {
                chi = f64::INFINITY;
            }
        }
        let dof = buckets.len().saturating_sub(1);
        (chi, dof, numeric::chi_square_sf(chi, dof))
    };

    let attempted = n + observed.censored;
    Ok(ComparisonReport {
        cells,
        other_probability: other_expected,
        other_observed: observed.other,
        impossible,
        tv,
        chi_square,
        dof,
        p_value,
        pooled_cells,
        censoring_rate: observed.censored as f64 / attempted as f64,
        n,
    })
}

/// Kolmogorov-Smirnov statistic and p-value of a sample against the
/// standard normal law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsReport {
    /// Sup distance between empirical and normal CDFs.
    pub statistic: f64,
    /// Asymptotic tail probability.
    pub p_value: f64,
}

/// Tests a sample of z-scores for standard normality.
pub fn ks_normal(zs: &[f64]) -> Result<KsReport, GofError> {
    if zs.is_empty() {
        return Err(GofError::EmptyObservation);
    }
    let mut sorted: Vec<f64> = zs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &z) in sorted.iter().enumerate() {
        let cdf = numeric::std_normal_cdf(z);
        d = numeric::fmax(d, numeric::fabs(cdf - i as f64 / n));
        d = numeric::fmax(d, numeric::fabs(cdf - (i + 1) as f64 / n));
    }
    let root = libm::sqrt(n);
    let lambda = (root + 0.12 + 0.11 / root) * d;
    Ok(KsReport {
        statistic: d,
        p_value: numeric::kolmogorov_tail(lambda),
    })
}
