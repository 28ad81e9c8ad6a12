//! Statistics used by the experiments: batch-means standard errors, the
//! two-sample Kolmogorov–Smirnov test and small least-squares fits.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn std_dev(xs: &[f64]) -> f64 {
    libm::sqrt(variance(xs))
}

/// Mean and standard error from `batches` contiguous batch means. With fewer
/// values than batches the i.i.d. standard error is used instead.
pub fn batch_mean_se(values: &[f64], batches: usize) -> (f64, f64) {
    let n = values.len();
    let m = mean(values);
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    if batches < 2 || n < batches {
        return (m, libm::sqrt(variance(values) / n as f64));
    }
    let means: Vec<f64> = (0..batches).map(|b| mean(&values[b * n / batches..(b + 1) * n / batches])).collect();
    (m, libm::sqrt(variance(&means) / batches as f64))
}

/// Complementary Kolmogorov distribution `P(K > λ)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = libm::exp(-2.0 * kf * kf * lambda * lambda);
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value and the
/// usual small-sample correction of the effective size.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    if na == 0 || nb == 0 {
        return KsResult { statistic: 0.0, p_value: 1.0 };
    }
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        d = d.max(libm::fabs(i as f64 / na as f64 - j as f64 / nb as f64));
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    let sq = libm::sqrt(ne);
    let p = kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d);
    KsResult { statistic: d, p_value: p }
}

/// Ordinary least squares. `design` holds one row of `cols` regressors per
/// observation. Returns the coefficients and the residual RMS.
pub fn ols(design: &[f64], cols: usize, y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let n = y.len();
    if n < cols || design.len() != n * cols {
        return None;
    }
    let mut xtx = vec![0.0; cols * cols];
    let mut xty = vec![0.0; cols];
    for r in 0..n {
        let row = &design[r * cols..(r + 1) * cols];
        for a in 0..cols {
            xty[a] += row[a] * y[r];
            for b in 0..cols {
                xtx[a * cols + b] += row[a] * row[b];
            }
        }
    }
    let beta = linalg::solve(&xtx, &xty, cols)?;
    let rss: f64 = (0..n)
        .map(|r| {
            let fit = linalg::dot(&design[r * cols..(r + 1) * cols], &beta);
            (y[r] - fit) * (y[r] - fit)
        })
        .sum();
    Some((beta, libm::sqrt(rss / n as f64)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let design: Vec<f64> = x.iter().flat_map(|&v| [1.0, v]).collect();
    let (beta, residual_rms) = ols(&design, 2, y)?;
    Some(LinearFit { slope: beta[1], intercept: beta[0], residual_rms })
}

/// Silverman's rule-of-thumb factor for a `dim`-variate Gaussian kernel;
/// multiply by the per-coordinate standard deviation.
pub fn silverman_factor(n: usize, dim: usize) -> f64 {
    let d = dim as f64;
    libm::pow(4.0 / (d + 2.0), 1.0 / (d + 4.0)) * libm::pow(n as f64, -1.0 / (d + 4.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_identical_samples() {
        let a: Vec<f64> = (0..200).map(|i| (i as f64 * 0.37).sin()).collect();
        let r = ks_two_sample(&a, &a);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn ks_disjoint_samples() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..100).map(|i| 1000.0 + i as f64).collect();
        let r = ks_two_sample(&a, &b);
        assert_eq!(r.statistic, 1.0);
        assert!(r.p_value < 1e-10);
    }

    #[test]
    fn kolmogorov_reference_values() {
        // Q(1.36) ≈ 0.049, Q(1.63) ≈ 0.0098 (classical 5% and 1% critical values).
        assert!((kolmogorov_survival(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_survival(1.628) - 0.01).abs() < 5e-4);
    }

    #[test]
    fn ols_recovers_quadratic() {
        let xs = [0.1, 0.2, 0.3, 0.5, 0.8];
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 - 2.0 * x + 0.5 * x * x).collect();
        let design: Vec<f64> = xs.iter().flat_map(|&x| [1.0, x, x * x]).collect();
        let (b, rms) = ols(&design, 3, &ys).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-10 && (b[1] + 2.0).abs() < 1e-10 && (b[2] - 0.5).abs() < 1e-10);
        assert!(rms < 1e-12);
    }

    #[test]
    fn batch_se_of_constant_is_zero() {
        let (m, se) = batch_mean_se(&[2.0; 100], 20);
        assert_eq!(m, 2.0);
        assert_eq!(se, 0.0);
    }
}
