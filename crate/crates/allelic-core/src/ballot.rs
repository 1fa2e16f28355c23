//! Exact cyclic-shift first-passage counts (the discrete ballot problem).
//!
//! For integer steps bounded below by -1 with total -k, exactly k of the n
//! cyclic shifts produce a path whose partial sums first hit -k at step n.
//! The count here is computed by brute force over all shifts, not from that
//! theorem, so the two can be checked against each other.

use num_rational::Ratio;
use thiserror::Error;

/// Errors from the ballot oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BallotError {
    /// An entry is below -1 (the walk must be downward skip-free).
    #[error("entry {value} at index {index} is below -1")]
    StepBelowFloor {
        /// Offending position.
        index: usize,
        /// Offending value.
        value: i64,
    },
    /// The entries do not sum to a negative total.
    #[error("entries sum to {sum}, expected a strictly negative total")]
    BadSum {
        /// The actual total.
        sum: i64,
    },
}

fn check(values: &[i64]) -> Result<u64, BallotError> {
    for (index, &value) in values.iter().enumerate() {
        if value < -1 {
            return Err(BallotError::StepBelowFloor { index, value });
        }
    }
    let sum: i64 = values.iter().sum();
    if sum >= 0 || values.is_empty() {
        return Err(BallotError::BadSum { sum });
    }
    Ok((-sum) as u64)
}

/// Number of cyclic shifts of `values` whose partial sums first hit the
/// total -k exactly at the last step.
pub fn first_passage_shift_count(values: &[i64]) -> Result<u64, BallotError> {
    let k = check(values)? as i64;
    let n = values.len();
    let mut count = 0u64;
    for shift in 0..n {
        let mut partial = 0i64;
        let mut hit_at = None;
        for i in 0..n {
            partial += values[(shift + i) % n];
            if partial == -k {
                hit_at = Some(i + 1);
                break;
            }
        }
        if hit_at == Some(n) {
            count += 1;
        }
    }
    Ok(count)
}

/// The exact shift-count probability: count / n, reduced.
pub fn ballot_probability(values: &[i64]) -> Result<Ratio<u64>, BallotError> {
    let count = first_passage_shift_count(values)?;
    Ok(Ratio::new(count, values.len() as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn hand_example() {
        // Shifts of (1,-1,-1): only the unshifted path first hits -1 at 3.
        assert_eq!(first_passage_shift_count(&[1, -1, -1]).unwrap(), 1);
        assert_eq!(ballot_probability(&[1, -1, -1]).unwrap(), Ratio::new(1, 3));
    }

    #[test]
    fn single_down_step() {
        assert_eq!(ballot_probability(&[-1]).unwrap(), Ratio::new(1, 1));
    }

    #[test]
    fn deeper_total() {
        // Sum -2 over 4 entries: exactly 2 shifts work.
        assert_eq!(first_passage_shift_count(&[0, -1, 0, -1]).unwrap(), 2);
        assert_eq!(
            ballot_probability(&[0, -1, 0, -1]).unwrap(),
            Ratio::new(1, 2)
        );
    }

    #[test]
    fn errors() {
        assert_eq!(
            ballot_probability(&[1, 0, -1]).unwrap_err(),
            BallotError::BadSum { sum: 0 }
        );
        assert_eq!(
            ballot_probability(&[]).unwrap_err(),
            BallotError::BadSum { sum: 0 }
        );
        assert_eq!(
            ballot_probability(&[-2, 0]).unwrap_err(),
            BallotError::StepBelowFloor {
                index: 0,
                value: -2
            }
        );
    }

    #[test]
    fn exhaustive_small_sequences() {
        // Every sequence over {-1,...,3} of length <= 5 with negative sum:
        // the count equals -sum exactly.
        for len in 1..=5usize {
            let mut values = Vec::new();
            values.resize(len, -1i64);
            loop {
                let sum: i64 = values.iter().sum();
                if sum < 0 {
                    let count = first_passage_shift_count(&values).unwrap();
                    assert_eq!(count as i64, -sum, "values {values:?}");
                }
                // Odometer increment over the alphabet.
                let mut pos = 0;
                loop {
                    if pos == len {
                        break;
                    }
                    if values[pos] == 3 {
                        values[pos] = -1;
                        pos += 1;
                    } else {
                        values[pos] += 1;
                        break;
                    }
                }
                if pos == len {
                    break;
                }
            }
        }
    }
}
