//! Joint offspring laws over (clone children, mutant children).
//!
//! A law stores P(clone = k, mutant = l) on a dense finite box. Families with
//! unbounded support (Poisson, geometric) are truncated at a requested tail
//! mass and the trimmed mass is carried along as an explicit `deficit`, so
//! downstream error bounds stay honest. Construction enforces probability
//! range, mass accounting and (sub)criticality; degeneracy (no clone children
//! ever, or no mutant children ever) is only flagged by [`JointOffspringLaw::validate`],
//! since degenerate laws are legitimate inputs elsewhere (single-node forests,
//! the all-mutant law behind the mutant offspring distribution).

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::conv::Grid;
use crate::numeric;

/// Absolute tolerance for mass accounting and the criticality bound.
pub const MASS_TOL: f64 = 1e-12;

/// Default tail mass at which unbounded marginals are truncated.
pub const DEFAULT_TAIL: f64 = 1e-12;

/// Errors raised by law construction and validation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LawError {
    /// A probability parameter or entry is outside [0, 1] or not finite.
    #[error("{context}: probability {value} is not a finite number in [0, 1]")]
    InvalidProbability {
        /// What the offending value was supposed to be.
        context: &'static str,
        /// The offending value.
        value: f64,
    },
    /// Probabilities plus the declared truncation deficit do not sum to 1.
    #[error("mass {mass} plus declared deficit {deficit} differs from 1 by more than {MASS_TOL}")]
    MassDeficit {
        /// Sum of the stored probabilities.
        mass: f64,
        /// Declared truncation deficit.
        deficit: f64,
    },
    /// Mean total offspring exceeds 1; forests would be infinite.
    #[error("mean total offspring {mean} exceeds 1 + {MASS_TOL}")]
    NotSubcritical {
        /// The offending mean.
        mean: f64,
    },
    /// The law can never produce clone children or never mutant children.
    #[error("degenerate law: {0}")]
    Degenerate(&'static str),
    /// The support is empty.
    #[error("law support is empty")]
    EmptySupport,
    /// A convolution table would exceed its memory budget.
    #[error("convolution table needs {required} bytes, cap is {cap}")]
    BudgetExceeded {
        /// Bytes the table would occupy.
        required: u64,
        /// Configured cap in bytes.
        cap: u64,
    },
}

/// One-dimensional offspring pmf on {0, 1, ..., len-1}, possibly truncated
/// from an unbounded family with the trimmed tail recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    probs: Vec<f64>,
    deficit: f64,
}

impl Marginal {
    /// Wraps explicit probabilities with a declared truncation deficit.
    pub fn from_probs(probs: Vec<f64>, deficit: f64) -> Result<Self, LawError> {
        if probs.is_empty() {
            return Err(LawError::EmptySupport);
        }
        for &p in &probs {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(LawError::InvalidProbability {
                    context: "pmf entry",
                    value: p,
                });
            }
        }
        if !deficit.is_finite() || !(0.0..=1.0).contains(&deficit) {
            return Err(LawError::InvalidProbability {
                context: "deficit",
                value: deficit,
            });
        }
        let mass: f64 = probs.iter().sum();
        if numeric::fabs(mass + deficit - 1.0) > MASS_TOL {
            return Err(LawError::MassDeficit { mass, deficit });
        }
        Ok(Self { probs, deficit })
    }

    /// Point mass at `j`.
    pub fn delta(j: usize) -> Self {
        let mut probs = vec![0.0; j + 1];
        probs[j] = 1.0;
        Self {
            probs,
            deficit: 0.0,
        }
    }

    /// Bernoulli(p) on {0, 1}.
    pub fn bernoulli(p: f64) -> Result<Self, LawError> {
        if !p.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(LawError::InvalidProbability {
                context: "bernoulli parameter",
                value: p,
            });
        }
        Self::from_probs(vec![1.0 - p, p], 0.0)
    }

    /// Geometric P(j) = (1-a) a^j on {0, 1, ...}, truncated once the tail
    /// a^{j+1} drops to `tail` or below.
    pub fn geometric(a: f64, tail: f64) -> Result<Self, LawError> {
        if !a.is_finite() || !(0.0..1.0).contains(&a) {
            return Err(LawError::InvalidProbability {
                context: "geometric ratio",
                value: a,
            });
        }
        if a == 0.0 {
            return Ok(Self::delta(0));
        }
        let mut probs = Vec::new();
        // The tail after term j is a^{j+1} exactly; tracking it as a
        // running product keeps requests far below f64 epsilon honest.
        let mut remaining = 1.0;
        loop {
            probs.push((1.0 - a) * remaining);
            remaining *= a;
            if remaining <= tail || probs.len() > 100_000 {
                break;
            }
        }
        Self::from_probs(probs, remaining)
    }

    /// Poisson(lambda), truncated once the remaining tail mass drops to
    /// `tail` or below.
    pub fn poisson(lambda: f64, tail: f64) -> Result<Self, LawError> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(LawError::InvalidProbability {
                context: "poisson rate",
                value: lambda,
            });
        }
        let mut probs = Vec::new();
        let mut p = libm::exp(-lambda);
        let mut remaining = 1.0;
        let mut j = 0usize;
        loop {
            probs.push(p);
            remaining -= p;
            if (remaining <= tail && j as f64 >= lambda) || probs.len() > 100_000 {
                break;
            }
            j += 1;
            p *= lambda / j as f64;
        }
        Self::from_probs(probs, numeric::fmax(remaining, 0.0))
    }

    /// Stored probabilities, index = count.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Truncated tail mass.
    pub fn deficit(&self) -> f64 {
        self.deficit
    }

    /// Mean over the stored support (a lower bound when deficit > 0).
    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(j, p)| j as f64 * p)
            .sum()
    }

    /// Largest count with positive probability; 0 for the all-zero pmf.
    pub fn max_support(&self) -> usize {
        self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }

    /// Lattice span of the support: gcd of all counts with positive mass,
    /// ignoring 0. `None` when the support is contained in {0}.
    pub fn period(&self) -> Option<usize> {
        let mut g = 0usize;
        for (j, &p) in self.probs.iter().enumerate() {
            if j > 0 && p > 0.0 {
                g = num_integer::gcd(g, j);
            }
        }
        if g == 0 {
            None
        } else {
            Some(g)
        }
    }
}

/// Validation summary for a joint offspring law.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// Total stored probability mass.
    pub mass: f64,
    /// Declared truncation deficit.
    pub deficit: f64,
    /// Mean clone offspring.
    pub mean_clone: f64,
    /// Mean mutant offspring.
    pub mean_mutant: f64,
    /// Mean total offspring.
    pub mean_total: f64,
    /// Whether the mean total offspring equals 1 within tolerance.
    pub critical: bool,
    /// Lattice span of the clone marginal support (None: clone count always 0).
    pub clone_period: Option<usize>,
    /// Lattice span of the mutant marginal support (None: mutant count always 0).
    pub mutant_period: Option<usize>,
}

/// Joint offspring law P(clone = k, mutant = l) on a dense finite box.
#[derive(Debug, Clone, PartialEq)]
pub struct JointOffspringLaw {
    grid: Grid<f64>,
    deficit: f64,
}

impl JointOffspringLaw {
    fn checked(grid: Grid<f64>, deficit: f64) -> Result<Self, LawError> {
        let mut mass = 0.0;
        let mut mean = 0.0;
        for (k, l, p) in grid.entries() {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(LawError::InvalidProbability {
                    context: "law entry",
                    value: p,
                });
            }
            mass += p;
            mean += (k + l) as f64 * p;
        }
        if !deficit.is_finite() || !(0.0..=1.0).contains(&deficit) {
            return Err(LawError::InvalidProbability {
                context: "deficit",
                value: deficit,
            });
        }
        if numeric::fabs(mass + deficit - 1.0) > MASS_TOL {
            return Err(LawError::MassDeficit { mass, deficit });
        }
        if mean > 1.0 + MASS_TOL {
            return Err(LawError::NotSubcritical { mean });
        }
        Ok(Self { grid, deficit })
    }

    /// Builds a law from explicit (clone, mutant, probability) entries.
    /// Duplicate cells accumulate. `deficit` declares truncated mass.
    pub fn from_entries(entries: &[(usize, usize, f64)], deficit: f64) -> Result<Self, LawError> {
        if entries.is_empty() {
            return Err(LawError::EmptySupport);
        }
        let kdim = entries.iter().map(|e| e.0).max().unwrap_or(0) + 1;
        let ldim = entries.iter().map(|e| e.1).max().unwrap_or(0) + 1;
        let mut grid = Grid::zeros(kdim, ldim);
        for &(k, l, p) in entries {
            *grid.get_mut(k, l) += p;
        }
        Self::checked(grid, deficit)
    }

    /// Product law of independent clone and mutant marginals.
    pub fn independent(clone: &Marginal, mutant: &Marginal) -> Result<Self, LawError> {
        let mut grid = Grid::zeros(clone.probs().len(), mutant.probs().len());
        for (k, &pc) in clone.probs().iter().enumerate() {
            for (l, &pm) in mutant.probs().iter().enumerate() {
                *grid.get_mut(k, l) = pc * pm;
            }
        }
        let deficit = clone.deficit() + mutant.deficit() - clone.deficit() * mutant.deficit();
        Self::checked(grid, deficit)
    }

    /// Percolation construction: each of the `base` children is independently
    /// a mutant with probability `p`, so given total = t the mutant count is
    /// Binomial(t, p).
    pub fn from_pruning(base: &Marginal, p: f64) -> Result<Self, LawError> {
        if !p.is_finite() || !(0.0 < p && p < 1.0) {
            return Err(LawError::InvalidProbability {
                context: "pruning probability",
                value: p,
            });
        }
        if base.max_support() == 0 {
            return Err(LawError::Degenerate(
                "pruning a law with no children can never produce mutants",
            ));
        }
        Self::pruning_impl(base, p)
    }

    /// Pruning without the p > 0 and degeneracy gates. The drift probe needs
    /// p = d/n = 0 when d = 0.
    pub(crate) fn from_pruning_relaxed(base: &Marginal, p: f64) -> Result<Self, LawError> {
        if !p.is_finite() || !(0.0..1.0).contains(&p) {
            return Err(LawError::InvalidProbability {
                context: "pruning probability",
                value: p,
            });
        }
        Self::pruning_impl(base, p)
    }

    fn pruning_impl(base: &Marginal, p: f64) -> Result<Self, LawError> {
        let dim = base.probs().len();
        let mut grid = Grid::zeros(dim, dim);
        for (t, &pt) in base.probs().iter().enumerate() {
            if pt == 0.0 {
                continue;
            }
            for l in 0..=t {
                let k = t - l;
                let w = numeric::binomial_f64(t as u64, k as u64)
                    * libm::pow(1.0 - p, k as f64)
                    * libm::pow(p, l as f64);
                *grid.get_mut(k, l) += pt * w;
            }
        }
        Self::checked(grid, base.deficit())
    }

    /// P(clone = k, mutant = l); 0 outside the stored box.
    pub fn prob(&self, k: usize, l: usize) -> f64 {
        self.grid.get(k, l).copied().unwrap_or(0.0)
    }

    /// The dense probability box.
    pub fn grid(&self) -> &Grid<f64> {
        &self.grid
    }

    /// Truncated tail mass.
    pub fn deficit(&self) -> f64 {
        self.deficit
    }

    /// Largest clone count in the box.
    pub fn clone_bound(&self) -> usize {
        self.grid.rows() - 1
    }

    /// Largest mutant count in the box.
    pub fn mutant_bound(&self) -> usize {
        self.grid.cols() - 1
    }

    /// Mean total offspring over the stored support.
    pub fn mean_total(&self) -> f64 {
        self.grid
            .entries()
            .map(|(k, l, p)| (k + l) as f64 * p)
            .sum()
    }

    /// Row sums: pmf of the clone count.
    pub fn clone_marginal(&self) -> Marginal {
        let mut probs = vec![0.0; self.grid.rows()];
        for (k, _, p) in self.grid.entries() {
            probs[k] += p;
        }
        Marginal {
            probs,
            deficit: self.deficit,
        }
    }

    /// Column sums: pmf of the mutant count.
    pub fn mutant_marginal(&self) -> Marginal {
        let mut probs = vec![0.0; self.grid.cols()];
        for (_, l, p) in self.grid.entries() {
            probs[l] += p;
        }
        Marginal {
            probs,
            deficit: self.deficit,
        }
    }

    /// Anti-diagonal sums: pmf of the total count.
    pub fn total_marginal(&self) -> Marginal {
        let mut probs = vec![0.0; self.grid.rows() + self.grid.cols() - 1];
        for (k, l, p) in self.grid.entries() {
            probs[k + l] += p;
        }
        Marginal {
            probs,
            deficit: self.deficit,
        }
    }

    /// (clone, mutant, total) marginals in one call.
    pub fn marginals(&self) -> (Marginal, Marginal, Marginal) {
        (
            self.clone_marginal(),
            self.mutant_marginal(),
            self.total_marginal(),
        )
    }

    /// Full validation: recomputes mass and means, flags degeneracy.
    pub fn validate(&self) -> Result<ValidationReport, LawError> {
        let mut mass = 0.0;
        let mut mean_clone = 0.0;
        let mut mean_mutant = 0.0;
        for (k, l, p) in self.grid.entries() {
            mass += p;
            mean_clone += k as f64 * p;
            mean_mutant += l as f64 * p;
        }
        let mean_total = mean_clone + mean_mutant;
        if numeric::fabs(mass + self.deficit - 1.0) > MASS_TOL {
            return Err(LawError::MassDeficit {
                mass,
                deficit: self.deficit,
            });
        }
        if mean_total > 1.0 + MASS_TOL {
            return Err(LawError::NotSubcritical { mean: mean_total });
        }
        let clone_m = self.clone_marginal();
        let mutant_m = self.mutant_marginal();
        if clone_m.max_support() == 0 {
            return Err(LawError::Degenerate("clone count is always 0"));
        }
        if mutant_m.max_support() == 0 {
            return Err(LawError::Degenerate("mutant count is always 0"));
        }
        Ok(ValidationReport {
            mass,
            deficit: self.deficit,
            mean_clone,
            mean_mutant,
            mean_total,
            critical: numeric::fabs(mean_total - 1.0) <= MASS_TOL,
            clone_period: clone_m.period(),
            mutant_period: mutant_m.period(),
        })
    }
}
