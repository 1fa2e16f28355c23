//! Exponential tilting of the clone marginal to criticality.
//!
//! For a strictly subcritical clone pmf p, the tilt parameter theta > 1
//! solves E(xi theta^xi) = E(theta^xi). The tilted pmf p~_j proportional to
//! p_j theta^j then has mean exactly 1. The tilted-mean defect
//! f(theta) = sum_j (j - 1) p_j theta^j is strictly increasing where finite,
//! so a doubling bracket plus bisection pins the root.

use alloc::vec::Vec;
use thiserror::Error;

use crate::law::{JointOffspringLaw, Marginal};
use crate::numeric;

/// Bisection stops when the bracket width falls below this (absolute, and
/// relative to the root location).
pub const THETA_TOL: f64 = 1e-12;

/// Result of tilting a clone marginal to criticality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltingResult {
    /// The tilt parameter theta > 1.
    pub theta: f64,
    /// Normalizer E(theta^xi).
    pub z_theta: f64,
    /// Variance of the tilted pmf.
    pub sigma_sq: f64,
}

/// Errors raised by the tilt solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TiltError {
    /// No theta > 1 reaches mean 1 (e.g. support inside {0, 1}, or the
    /// marginal is already critical).
    #[error("no tilt to criticality exists: {0}")]
    NoTiltExists(&'static str),
    /// Tilted moments blow up numerically before the mean reaches 1.
    #[error("tilted moments diverge before criticality near theta = {theta:.3e}")]
    DivergenceBeforeCriticality {
        /// Last finite bracket endpoint tried.
        theta: f64,
    },
    /// The support lies in a strict sublattice of the integers; local-limit
    /// asymptotics are not available.
    #[error("support lies in a lattice of span {period}")]
    PeriodicSupport {
        /// The lattice span.
        period: usize,
    },
}

/// Tilted-mean defect f(theta) = sum_j (j-1) p_j theta^j.
fn mean_defect(probs: &[f64], theta: f64) -> f64 {
    let mut acc = 0.0;
    let mut pow = 1.0;
    for (j, &p) in probs.iter().enumerate() {
        acc += (j as f64 - 1.0) * p * pow;
        pow *= theta;
    }
    acc
}

/// Tilted pmf and its normalizer: (p_j theta^j / z, z).
pub fn tilted_probs(marginal: &Marginal, theta: f64) -> (Vec<f64>, f64) {
    let mut z = 0.0;
    let mut pow = 1.0;
    let mut probs: Vec<f64> = Vec::with_capacity(marginal.probs().len());
    for &p in marginal.probs() {
        probs.push(p * pow);
        z += p * pow;
        pow *= theta;
    }
    for q in &mut probs {
        *q /= z;
    }
    (probs, z)
}

/// Solves for the tilt of a bare clone pmf.
pub fn tilt_marginal(marginal: &Marginal) -> Result<TiltingResult, TiltError> {
    let probs = marginal.probs();
    if marginal.max_support() <= 1 {
        return Err(TiltError::NoTiltExists(
            "tilted mean stays below 1 when the support lies in {0, 1}",
        ));
    }
    let mean = marginal.mean();
    if mean >= 1.0 {
        return Err(TiltError::NoTiltExists(
            "marginal is already critical or supercritical",
        ));
    }
    // Bracket the root: f(1) = mean - 1 < 0, f increasing. Double until
    // positive; bail out if the moments overflow first.
    let mut lo = 1.0f64;
    let mut hi = 2.0f64;
    loop {
        let f = mean_defect(probs, hi);
        if !f.is_finite() {
            return Err(TiltError::DivergenceBeforeCriticality { theta: hi });
        }
        if f > 0.0 {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > 1e100 {
            return Err(TiltError::DivergenceBeforeCriticality { theta: hi });
        }
    }
    while hi - lo > THETA_TOL * numeric::fmax(1.0, lo) {
        let mid = 0.5 * (lo + hi);
        if mean_defect(probs, mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    let (tilted, z_theta) = tilted_probs(marginal, theta);
    let tilted_mean: f64 = tilted.iter().enumerate().map(|(j, &p)| j as f64 * p).sum();
    let second: f64 = tilted
        .iter()
        .enumerate()
        .map(|(j, &p)| (j * j) as f64 * p)
        .sum();
    let sigma_sq = second - tilted_mean * tilted_mean;
    Ok(TiltingResult {
        theta,
        z_theta,
        sigma_sq,
    })
}

/// Solves for the tilt of the law's clone marginal.
pub fn tilt_clone_marginal(law: &JointOffspringLaw) -> Result<TiltingResult, TiltError> {
    tilt_marginal(&law.clone_marginal())
}
