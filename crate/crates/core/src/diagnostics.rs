//! Goodness-of-fit and normality checks for Monte Carlo output.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub const MIN_NORMALITY_VALUES: usize = 100;

/// Standard normal df.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Kolmogorov–Smirnov distance sup |F_n − F| of a sample to a continuous df.
pub fn ks_statistic(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = cdf(*x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// 1% critical value of the KS statistic, Stephens' finite-n correction of
/// the asymptotic quantile 1.6276.
pub fn ks_critical_1pct(n: usize) -> f64 {
    let r = (n as f64).sqrt();
    1.6276 / (r + 0.12 + 0.11 / r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsTest {
    pub n: usize,
    pub statistic: f64,
    pub critical_1pct: f64,
    pub reject: bool,
}

pub fn ks_test(values: &[f64], cdf: impl Fn(f64) -> f64) -> KsTest {
    let statistic = ks_statistic(values, cdf);
    let critical_1pct = ks_critical_1pct(values.len());
    KsTest {
        n: values.len(),
        statistic,
        critical_1pct,
        reject: statistic > critical_1pct,
    }
}

/// KS test against uniform(0, 1).
pub fn ks_uniform(values: &[f64]) -> KsTest {
    ks_test(values, |x| x.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalityDiagnostic {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub target_mean: f64,
    pub target_variance: f64,
    pub mean_std_error: f64,
    /// From the fourth central moment.
    pub variance_std_error: f64,
    /// (variance − target) / target.
    pub variance_rel_error: f64,
    pub mean_within_3se: bool,
    pub variance_within_3se: bool,
    pub ks: KsTest,
    /// Zero sample variance; the KS comparison is meaningless.
    pub degenerate: bool,
}

/// Compares a sample with N(target_mean, target_variance).
pub fn normality_diagnostics(
    values: &[f64],
    target_mean: f64,
    target_variance: f64,
) -> Result<NormalityDiagnostic> {
    if values.len() < MIN_NORMALITY_VALUES {
        return Err(domain(format!(
            "normality diagnostics need at least {MIN_NORMALITY_VALUES} values, got {}",
            values.len()
        )));
    }
    if !(target_variance > 0.0) {
        return Err(domain(format!(
            "target variance must be positive, got {target_variance}"
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let variance = m2 * n / (n - 1.0);
    let mean_std_error = (variance / n).sqrt();
    let variance_std_error = ((m4 - m2 * m2).max(0.0) / n).sqrt();
    let degenerate = variance == 0.0;
    let sd = target_variance.sqrt();
    let ks = ks_test(values, |x| normal_cdf((x - target_mean) / sd));
    Ok(NormalityDiagnostic {
        n: values.len(),
        mean,
        variance,
        target_mean,
        target_variance,
        mean_std_error,
        variance_std_error,
        variance_rel_error: (variance - target_variance) / target_variance,
        mean_within_3se: !degenerate && (mean - target_mean).abs() <= 3.0 * mean_std_error,
        variance_within_3se: !degenerate
            && (variance - target_variance).abs() <= 3.0 * variance_std_error,
        ks,
        degenerate,
    })
}
