//! Small f64 special-function kit over `libm`.
//!
//! The crate is no_std, so everything transcendental routes through `libm`.
//! The incomplete-gamma and Kolmogorov tails here back the goodness-of-fit
//! p-values; accuracy on the order of 1e-12 relative is plenty for that.

pub(crate) fn fabs(x: f64) -> f64 {
    libm::fabs(x)
}

pub(crate) fn fmax(a: f64, b: f64) -> f64 {
    if a > b {
        a
    } else {
        b
    }
}

pub(crate) fn fmin(a: f64, b: f64) -> f64 {
    if a < b {
        a
    } else {
        b
    }
}

/// Binomial coefficient as f64, multiplicative form. Exact for results below
/// 2^53, which covers every coefficient the pruning identity touches.
pub(crate) fn binomial_f64(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 1..=k {
        acc = acc * ((n - k + i) as f64) / (i as f64);
    }
    acc
}

/// Regularized lower incomplete gamma P(a, x) by series expansion.
/// Requires x < a + 1 for fast convergence.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut n = 1.0;
    while fabs(term) > fabs(sum) * 1e-16 && n < 1e6 {
        term *= x / (a + n);
        sum += term;
        n += 1.0;
    }
    sum * libm::exp(-x + a * libm::log(x) - libm::lgamma(a))
}

/// Regularized upper incomplete gamma Q(a, x) by Lentz continued fraction.
/// Requires x >= a + 1.
fn gamma_q_cf(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    let mut i = 1.0;
    loop {
        let an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if fabs(d) < tiny {
            d = tiny;
        }
        c = b + an / c;
        if fabs(c) < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if fabs(del - 1.0) < 1e-16 || i > 1e6 {
            break;
        }
        i += 1.0;
    }
    libm::exp(-x + a * libm::log(x) - libm::lgamma(a)) * h
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), a > 0, x >= 0.
pub(crate) fn reg_gamma_upper(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_cf(a, x)
    }
}

/// Survival function of the chi-square distribution with `dof` degrees of
/// freedom at `stat`.
pub(crate) fn chi_square_sf(stat: f64, dof: usize) -> f64 {
    if dof == 0 {
        return if stat > 0.0 { 0.0 } else { 1.0 };
    }
    reg_gamma_upper(dof as f64 / 2.0, stat / 2.0)
}

/// Standard normal CDF.
pub(crate) fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

/// Kolmogorov distribution tail Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
pub(crate) fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100u32 {
        let t = libm::exp(-2.0 * (j as f64) * (j as f64) * lambda * lambda);
        sum += sign * t;
        if t < 1e-16 {
            break;
        }
        sign = -sign;
    }
    fmin(fmax(2.0 * sum, 0.0), 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial_f64(0, 0), 1.0);
        assert_eq!(binomial_f64(5, 2), 10.0);
        assert_eq!(binomial_f64(10, 5), 252.0);
        assert_eq!(binomial_f64(3, 7), 0.0);
    }

    #[test]
    fn chi_square_known_points() {
        // Chi-square with 1 dof at x: Q = erfc(sqrt(x/2)).
        let q = chi_square_sf(3.841458820694124, 1);
        assert!((q - 0.05).abs() < 1e-9, "q = {q}");
        // 2 dof is exponential(1/2): Q(x) = exp(-x/2).
        let q = chi_square_sf(4.0, 2);
        assert!((q - libm::exp(-2.0)).abs() < 1e-12);
        // Large dof sanity: mean dof, Q near 1/2.
        let q = chi_square_sf(100.0, 100);
        assert!((q - 0.4811).abs() < 1e-3, "q = {q}");
    }

    #[test]
    fn normal_cdf_symmetry() {
        assert!((std_normal_cdf(0.0) - 0.5).abs() < 1e-15);
        let p = std_normal_cdf(1.959963984540054);
        assert!((p - 0.975).abs() < 1e-9);
        assert!((std_normal_cdf(-1.0) + std_normal_cdf(1.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kolmogorov_tail_known_point() {
        // Q(1.2238...) = 0.10 is the classical 10% critical value.
        let q = kolmogorov_tail(1.2238478702170825);
        assert!((q - 0.10).abs() < 1e-4, "q = {q}");
        assert_eq!(kolmogorov_tail(1e-9), 1.0);
        assert!(kolmogorov_tail(3.0) < 1e-7);
    }
}
