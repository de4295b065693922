//! Small statistical utilities: normal CDF wrappers, empirical quantiles,
//! Kolmogorov-Smirnov statistics, and Monte Carlo standard errors.

use statrs::distribution::{ContinuousCDF, Normal};

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Standard normal quantile function.
pub fn norm_inv_cdf(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Empirical quantile at level `q` in [0, 1]: the smallest order statistic
/// `x_(k)` with `k >= ceil(q * N)` (inverse of the empirical CDF).
///
/// Panics on an empty slice.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN in quantile input"));
    let n = sorted.len();
    let k = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[k - 1]
}

/// Sample mean.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance (denominator n - 1).
pub fn variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() as f64 - 1.0)
}

/// Standard error of a Bernoulli proportion estimate `p_hat` from `reps`
/// replications.
pub fn proportion_se(p_hat: f64, reps: usize) -> f64 {
    (p_hat * (1.0 - p_hat) / reps as f64).sqrt()
}

/// One-sample Kolmogorov-Smirnov statistic against Uniform[0, 1]:
/// `sup_x |F_n(x) - x|` computed exactly at the jump points.
pub fn ks_uniform(sample: &[f64]) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN in KS input"));
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let hi = (i as f64 + 1.0) / n - x;
        let lo = x - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    d
}

/// Two-sample Kolmogorov-Smirnov statistic `sup_x |F_n(x) - G_m(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|u, v| u.partial_cmp(v).expect("NaN in KS input"));
    ys.sort_by(|u, v| u.partial_cmp(v).expect("NaN in KS input"));
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xs.len() && j < ys.len() {
        if xs[i] <= ys[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic one-sample KS critical value at significance `alpha`
/// (`c(alpha) / sqrt(n)` with the Kolmogorov constant).
pub fn ks_critical_one_sample(n: usize, alpha: f64) -> f64 {
    kolmogorov_constant(alpha) / (n as f64).sqrt()
}

/// Asymptotic two-sample KS critical value at significance `alpha`.
pub fn ks_critical_two_sample(n: usize, m: usize, alpha: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    kolmogorov_constant(alpha) * ((n + m) / (n * m)).sqrt()
}

fn kolmogorov_constant(alpha: f64) -> f64 {
    // c(alpha) = sqrt(-ln(alpha / 2) / 2)
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn normal_cdf_symmetry() {
        assert_relative_eq!(norm_cdf(0.0), 0.5, epsilon = 1e-12);
        assert_relative_eq!(norm_cdf(1.0) + norm_cdf(-1.0), 1.0, epsilon = 1e-12);
        assert_relative_eq!(norm_inv_cdf(norm_cdf(0.7)), 0.7, epsilon = 1e-8);
    }

    #[test]
    fn quantile_order_statistics() {
        let xs = [5.0, 1.0, 3.0, 2.0, 4.0];
        assert_eq!(quantile(&xs, 0.2), 1.0);
        assert_eq!(quantile(&xs, 0.5), 3.0);
        assert_eq!(quantile(&xs, 1.0), 5.0);
    }

    #[test]
    fn ks_two_sample_identical_is_zero() {
        let xs = [0.1, 0.4, 0.7];
        assert_eq!(ks_two_sample(&xs, &xs), 0.0);
    }

    #[test]
    fn ks_uniform_exact_small_case() {
        // F_n jumps by 1/2 at 0.2 and 0.8; sup deviation is 0.3 at x = 0.2.
        let d = ks_uniform(&[0.2, 0.8]);
        assert_relative_eq!(d, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn kolmogorov_constants_match_tables() {
        assert_relative_eq!(kolmogorov_constant(0.05), 1.3581, epsilon = 1e-3);
        assert_relative_eq!(kolmogorov_constant(0.01), 1.6276, epsilon = 1e-3);
    }
}
