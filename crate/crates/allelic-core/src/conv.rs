//! Dense 2-D grids over (clone sum, mutant sum) and their convolution powers.
//!
//! Convolution is the direct O(support^2) double loop, generic over the entry
//! type so the same code serves f64 tables and exact rationals.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{AddAssign, Mul};

use num_traits::Zero;

use crate::law::{JointOffspringLaw, LawError};

/// Dense rows x cols matrix; row = clone sum, column = mutant sum.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Zero + Clone> Grid<T> {
    /// All-zero grid with the given dimensions.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }
}

impl<T> Grid<T> {
    /// Number of rows (clone-sum range).
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns (mutant-sum range).
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry at (row, col), None outside the box.
    pub fn get(&self, row: usize, col: usize) -> Option<&T> {
        if row < self.rows && col < self.cols {
            Some(&self.data[row * self.cols + col])
        } else {
            None
        }
    }

    /// Mutable entry at (row, col); panics outside the box.
    pub fn get_mut(&mut self, row: usize, col: usize) -> &mut T {
        assert!(row < self.rows && col < self.cols);
        &mut self.data[row * self.cols + col]
    }

    /// Iterates (row, col, value) over the whole box.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, T)> + '_
    where
        T: Copy,
    {
        self.data
            .iter()
            .enumerate()
            .map(move |(i, &v)| (i / self.cols, i % self.cols, v))
    }

    /// Iterates (row, col, &value) over the whole box.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &T)> + '_ {
        self.data
            .iter()
            .enumerate()
            .map(move |(i, v)| (i / self.cols, i % self.cols, v))
    }
}

/// 2-D convolution of two grids; output dimensions are the sums minus 1.
pub fn convolve<T>(a: &Grid<T>, b: &Grid<T>) -> Grid<T>
where
    T: Zero + Clone + AddAssign + PartialEq,
    for<'x> &'x T: Mul<&'x T, Output = T>,
{
    let mut out = Grid::zeros(a.rows + b.rows - 1, a.cols + b.cols - 1);
    let zero = T::zero();
    for (ra, ca, va) in a.iter() {
        if *va == zero {
            continue;
        }
        for (rb, cb, vb) in b.iter() {
            if *vb == zero {
                continue;
            }
            *out.get_mut(ra + rb, ca + cb) += va * vb;
        }
    }
    out
}

/// Table of the convolution powers law^{*n}, n = 1..n_max.
///
/// Slice n lives on the box [0, n*clone_bound] x [0, n*mutant_bound]. When
/// the law carries a truncation deficit, slice n sums to (1 - deficit)^n;
/// nothing is renormalized.
#[derive(Debug, Clone)]
pub struct ConvolutionTable {
    slices: Vec<Grid<f64>>,
    law_deficit: f64,
}

impl ConvolutionTable {
    /// Default memory budget for [`ConvolutionTable::build`]: 1 GiB.
    pub const DEFAULT_MEMORY_CAP: u64 = 1 << 30;

    /// Computes law^{*n} for n = 1..=n_max by iterated convolution.
    pub fn build(law: &JointOffspringLaw, n_max: usize, memory_cap: u64) -> Result<Self, LawError> {
        assert!(n_max >= 1, "need at least one convolution power");
        let (kb, lb) = (law.clone_bound() as u64, law.mutant_bound() as u64);
        let required: u64 = (1..=n_max as u64)
            .map(|n| (n * kb + 1) * (n * lb + 1) * core::mem::size_of::<f64>() as u64)
            .sum();
        if required > memory_cap {
            return Err(LawError::BudgetExceeded {
                required,
                cap: memory_cap,
            });
        }
        let mut slices = Vec::with_capacity(n_max);
        slices.push(law.grid().clone());
        for _ in 1..n_max {
            let next = convolve(slices.last().unwrap(), law.grid());
            slices.push(next);
        }
        Ok(Self {
            slices,
            law_deficit: law.deficit(),
        })
    }

    /// Largest stored power.
    pub fn n_max(&self) -> usize {
        self.slices.len()
    }

    /// The grid of law^{*n}; None when n is 0 or beyond n_max.
    pub fn slice(&self, n: usize) -> Option<&Grid<f64>> {
        if n == 0 {
            None
        } else {
            self.slices.get(n - 1)
        }
    }

    /// P(clone sum = k, mutant sum = l) under law^{*n}. None when n is out of
    /// range; Some(0.0) outside the support box.
    pub fn entry(&self, n: usize, k: usize, l: usize) -> Option<f64> {
        self.slice(n).map(|g| g.get(k, l).copied().unwrap_or(0.0))
    }

    /// Deficit of the underlying single-step law.
    pub fn law_deficit(&self) -> f64 {
        self.law_deficit
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::Marginal;

    fn l0() -> JointOffspringLaw {
        let half = Marginal::bernoulli(0.5).unwrap();
        JointOffspringLaw::independent(&half, &half).unwrap()
    }

    fn table(n: usize) -> ConvolutionTable {
        ConvolutionTable::build(&l0(), n, ConvolutionTable::DEFAULT_MEMORY_CAP).unwrap()
    }

    #[test]
    fn first_power_is_the_law() {
        let t = table(1);
        for k in 0..2 {
            for l in 0..2 {
                assert_eq!(t.entry(1, k, l), Some(0.25));
            }
        }
        assert_eq!(t.entry(1, 2, 0), Some(0.0));
        assert_eq!(t.entry(2, 0, 0), None);
    }

    #[test]
    fn l0_second_power_hand_values() {
        let t = table(2);
        // Four (k,l)-pairs each 1/16 land on (1,1); two land on (1,0).
        assert_eq!(t.entry(2, 1, 1), Some(0.25));
        assert_eq!(t.entry(2, 1, 0), Some(0.125));
        assert_eq!(t.entry(2, 0, 0), Some(0.0625));
        assert_eq!(t.entry(2, 2, 2), Some(0.0625));
    }

    #[test]
    fn slices_sum_to_one() {
        let t = table(12);
        for n in 1..=12 {
            let total: f64 = t.slice(n).unwrap().iter().map(|(_, _, &v)| v).sum();
            assert!(
                (total - 1.0).abs() < n as f64 * 1e-14,
                "slice {n} sums to {total}"
            );
        }
    }

    #[test]
    fn convolution_is_associative_on_powers() {
        let t = table(7);
        for (a, b) in [(1usize, 2usize), (2, 2), (3, 4), (2, 5)] {
            let direct = t.slice(a + b).unwrap();
            let composed = convolve(t.slice(a).unwrap(), t.slice(b).unwrap());
            assert_eq!(direct.rows(), composed.rows());
            for (r, c, &v) in direct.iter() {
                let w = *composed.get(r, c).unwrap();
                assert!((v - w).abs() < 1e-11, "({r},{c}): {v} vs {w}");
            }
        }
    }

    #[test]
    fn budget_cap_enforced() {
        let err = ConvolutionTable::build(&l0(), 100, 100).unwrap_err();
        assert!(matches!(err, LawError::BudgetExceeded { .. }));
    }

    #[test]
    fn binomial_structure_of_l0_powers() {
        // L0 powers are independent Binomial(n, 1/2) x Binomial(n, 1/2).
        let t = table(6);
        for n in 1..=6usize {
            for k in 0..=n {
                for l in 0..=n {
                    let expect = crate::numeric::binomial_f64(n as u64, k as u64)
                        * crate::numeric::binomial_f64(n as u64, l as u64)
                        * libm::pow(0.25, n as f64);
                    let got = t.entry(n, k, l).unwrap();
                    assert!((got - expect).abs() < 1e-13);
                }
            }
        }
    }
}
