//! Exact rational mirror of the offspring-law and distribution layers.
//!
//! Laws with small finite support can be carried in arbitrary-precision
//! rationals, making every convolution power and closed-form probability
//! bit-exact. The enumeration oracle compares against this layer so that
//! agreement means equality, not closeness.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::conv::{convolve, Grid};
use crate::dist::{check_prefix_condition, DistError};
use crate::law::{JointOffspringLaw, LawError};

/// Arbitrary-precision rational probability.
pub type Rational = num_rational::BigRational;

/// Failure to read a string as a rational number.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse {input:?} as a rational number")]
pub struct ParseRatioError {
    /// The offending input.
    pub input: String,
}

/// Parses `"1/3"`, `"0.25"`, or `"2"` into an exact rational.
pub fn parse_ratio(s: &str) -> Result<Rational, ParseRatioError> {
    let s = s.trim();
    let err = || ParseRatioError {
        input: String::from(s),
    };
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| err())?;
        let d: BigInt = den.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let (neg, int_digits) = match int_part.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, int_part),
        };
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        if !int_digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let ip: BigInt = if int_digits.is_empty() {
            BigInt::zero()
        } else {
            int_digits.parse().map_err(|_| err())?
        };
        let fp: BigInt = frac_part.parse().map_err(|_| err())?;
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let mut value = Rational::new(ip * &scale + fp, scale);
        if neg {
            value = -value;
        }
        return Ok(value);
    }
    let n: BigInt = s.parse().map_err(|_| err())?;
    Ok(Rational::from_integer(n))
}

fn ratio(n: usize, d: usize) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// A joint offspring law with exact rational entries. Mass must sum to 1
/// exactly; there is no truncation deficit in this mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactJointLaw {
    grid: Grid<Rational>,
}

impl ExactJointLaw {
    fn checked(grid: Grid<Rational>) -> Result<Self, LawError> {
        let mut mass = Rational::zero();
        let mut mean = Rational::zero();
        for (k, l, p) in grid.iter() {
            if p.is_negative() {
                return Err(LawError::InvalidProbability {
                    context: "joint law entry",
                    value: p.to_f64().unwrap_or(f64::NAN),
                });
            }
            mass += p;
            mean += Rational::from_integer(BigInt::from(k + l)) * p;
        }
        if !mass.is_one() {
            let m = mass.to_f64().unwrap_or(f64::NAN);
            return Err(LawError::MassDeficit {
                mass: m,
                deficit: 1.0 - m,
            });
        }
        if mean > Rational::one() {
            return Err(LawError::NotSubcritical {
                mean: mean.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { grid })
    }

    /// Builds from sparse `(clones, mutants, probability)` entries;
    /// duplicate cells accumulate.
    pub fn from_entries(entries: &[(usize, usize, Rational)]) -> Result<Self, LawError> {
        if entries.is_empty() {
            return Err(LawError::EmptySupport);
        }
        let rows = entries.iter().map(|e| e.0).max().unwrap() + 1;
        let cols = entries.iter().map(|e| e.1).max().unwrap() + 1;
        let mut grid = Grid::zeros(rows, cols);
        for (k, l, p) in entries {
            *grid.get_mut(*k, *l) += p.clone();
        }
        Self::checked(grid)
    }

    /// Product law of independent clone and mutant counts; each marginal
    /// pmf must sum to 1 exactly.
    pub fn independent(clone: &[Rational], mutant: &[Rational]) -> Result<Self, LawError> {
        for (name, probs) in [("clone marginal", clone), ("mutant marginal", mutant)] {
            let mass: Rational = probs.iter().sum();
            if probs.iter().any(|p| p.is_negative()) {
                return Err(LawError::InvalidProbability {
                    context: name,
                    value: f64::NAN,
                });
            }
            if !mass.is_one() {
                let m = mass.to_f64().unwrap_or(f64::NAN);
                return Err(LawError::MassDeficit {
                    mass: m,
                    deficit: 1.0 - m,
                });
            }
        }
        let mut grid = Grid::zeros(clone.len(), mutant.len());
        for (k, c) in clone.iter().enumerate() {
            for (l, m) in mutant.iter().enumerate() {
                *grid.get_mut(k, l) = c * m;
            }
        }
        Self::checked(grid)
    }

    /// Marks each of a parent's offspring independently as a mutant with
    /// probability `p`, splitting a total-count law into a joint law.
    pub fn from_pruning(base: &[Rational], p: &Rational) -> Result<Self, LawError> {
        if p <= &Rational::zero() || p >= &Rational::one() {
            return Err(LawError::InvalidProbability {
                context: "mutation probability",
                value: p.to_f64().unwrap_or(f64::NAN),
            });
        }
        let mass: Rational = base.iter().sum();
        if base.iter().any(|q| q.is_negative()) {
            return Err(LawError::InvalidProbability {
                context: "total offspring pmf",
                value: f64::NAN,
            });
        }
        if !mass.is_one() {
            let m = mass.to_f64().unwrap_or(f64::NAN);
            return Err(LawError::MassDeficit {
                mass: m,
                deficit: 1.0 - m,
            });
        }
        let top = base.iter().rposition(|q| !q.is_zero());
        if top.unwrap_or(0) == 0 {
            return Err(LawError::Degenerate(
                "total offspring count is always 0, nothing to split",
            ));
        }
        let top = top.unwrap();
        let q = Rational::one() - p;
        let mut grid: Grid<Rational> = Grid::zeros(top + 1, top + 1);
        for (j, pj) in base.iter().enumerate() {
            if pj.is_zero() {
                continue;
            }
            for k in 0..=j {
                let coeff = num_integer::binomial(BigInt::from(j), BigInt::from(k));
                let split = Rational::from_integer(coeff) * pow_ratio(&q, k) * pow_ratio(p, j - k);
                *grid.get_mut(k, j - k) += pj * &split;
            }
        }
        Self::checked(grid)
    }

    /// P(clones = k, mutants = l).
    pub fn prob(&self, k: usize, l: usize) -> Rational {
        self.grid.get(k, l).cloned().unwrap_or_else(Rational::zero)
    }

    /// The entry grid.
    pub fn grid(&self) -> &Grid<Rational> {
        &self.grid
    }

    /// E(clones + mutants).
    pub fn mean_total(&self) -> Rational {
        let mut mean = Rational::zero();
        for (k, l, p) in self.grid.iter() {
            mean += Rational::from_integer(BigInt::from(k + l)) * p;
        }
        mean
    }

    /// Rounds to the float law layer.
    pub fn to_f64(&self) -> Result<JointOffspringLaw, LawError> {
        let entries: Vec<(usize, usize, f64)> = self
            .grid
            .iter()
            .map(|(k, l, p)| (k, l, p.to_f64().unwrap_or(0.0)))
            .collect();
        JointOffspringLaw::from_entries(&entries, 0.0)
    }
}

fn pow_ratio(base: &Rational, exp: usize) -> Rational {
    let mut out = Rational::one();
    for _ in 0..exp {
        out *= base;
    }
    out
}

/// Exact convolution powers pi^{*n} for n = 1..=n_max.
#[derive(Debug, Clone)]
pub struct ExactConvolutionTable {
    slices: Vec<Grid<Rational>>,
}

impl ExactConvolutionTable {
    /// Builds all powers up to `n_max` by iterated convolution.
    pub fn build(law: &ExactJointLaw, n_max: usize) -> Self {
        assert!(n_max >= 1, "need at least the first power");
        let mut slices = Vec::with_capacity(n_max);
        slices.push(law.grid().clone());
        for _ in 1..n_max {
            let next = convolve(slices.last().unwrap(), law.grid());
            slices.push(next);
        }
        Self { slices }
    }

    /// Largest stored power.
    pub fn n_max(&self) -> usize {
        self.slices.len()
    }

    /// pi^{*n}(k, l); None if n is out of range, zero outside the box.
    pub fn entry(&self, n: usize, k: usize, l: usize) -> Option<Rational> {
        if n == 0 || n > self.slices.len() {
            return None;
        }
        let slice = &self.slices[n - 1];
        Some(slice.get(k, l).cloned().unwrap_or_else(Rational::zero))
    }
}

/// Exact P(tree size = n, allele count = k).
pub fn p_tree_size_alleles_exact(
    table: &ExactConvolutionTable,
    n: usize,
    k: usize,
) -> Result<Rational, DistError> {
    if n == 0 {
        return Err(DistError::DomainError("tree size must be at least 1"));
    }
    if k == 0 || k > n {
        return Ok(Rational::zero());
    }
    match table.entry(n, n - k, k - 1) {
        Some(p) => Ok(p * ratio(1, n)),
        None => Err(DistError::OutOfTable {
            n,
            n_max: table.n_max(),
        }),
    }
}

/// Exact P(first cluster size = n, cluster mutant total = l).
pub fn p_cluster_size_mutants_exact(
    table: &ExactConvolutionTable,
    n: usize,
    l: usize,
) -> Result<Rational, DistError> {
    if n == 0 {
        return Err(DistError::DomainError("cluster size must be at least 1"));
    }
    match table.entry(n, n - 1, l) {
        Some(p) => Ok(p * ratio(1, n)),
        None => Err(DistError::OutOfTable {
            n,
            n_max: table.n_max(),
        }),
    }
}

/// Exact joint law of the first k clusters under the prefix condition.
pub fn p_allelic_tree_exact(
    table: &ExactConvolutionTable,
    pairs: &[(usize, usize)],
) -> Result<Rational, DistError> {
    if pairs.is_empty() {
        return Err(DistError::DomainError("at least one cluster required"));
    }
    check_prefix_condition(pairs)?;
    let mut prod = Rational::one();
    for &(n, l) in pairs {
        prod *= p_cluster_size_mutants_exact(table, n, l)?;
    }
    Ok(prod)
}

/// Exact conditional law of the cluster sizes given tree size n and allele
/// count k, by the same budgeted dynamic program as the float route.
pub fn conditional_cluster_sizes_exact(
    table: &ExactConvolutionTable,
    n: usize,
    k: usize,
    sizes: &[usize],
) -> Result<Rational, DistError> {
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
    let denom = table.entry(n, n - k, k - 1).ok_or(DistError::OutOfTable {
        n,
        n_max: table.n_max(),
    })?;
    if denom.is_zero() {
        return Err(DistError::ZeroDenominator);
    }
    let budget = k - 1;
    let mut dp = vec![Rational::zero(); budget + 1];
    dp[0] = Rational::one();
    for &size in sizes {
        let mut next = vec![Rational::zero(); budget + 1];
        for (b, acc) in dp.iter().enumerate() {
            if acc.is_zero() {
                continue;
            }
            for l in 0..=(budget - b) {
                let f = p_cluster_size_mutants_exact(table, size, l)?;
                if !f.is_zero() {
                    next[b + l] += acc * &f;
                }
            }
        }
        dp = next;
    }
    let dp_val = dp.swap_remove(budget);
    Ok(dp_val * ratio(n, k) / denom)
}

/// Exact tree-size marginal (1/n) P(total offspring of n individuals = n-1).
pub fn p_tree_size_exact(table: &ExactConvolutionTable, n: usize) -> Result<Rational, DistError> {
    if n == 0 {
        return Err(DistError::DomainError("tree size must be at least 1"));
    }
    if n > table.n_max() {
        return Err(DistError::OutOfTable {
            n,
            n_max: table.n_max(),
        });
    }
    let slice = &table.slices[n - 1];
    let mut total = Rational::zero();
    for (k, l, p) in slice.iter() {
        if k + l == n - 1 {
            total += p;
        }
    }
    Ok(total * ratio(1, n))
}
