//! Verification statistics: Kolmogorov–Smirnov, moments, autocorrelation and
//! least-squares slopes.

use crate::error::{precondition, Error, Result};
use serde::Serialize;

/// Significance level of a KS test. Thresholds are the asymptotic
/// `c(α)/√n` with `c(α) = sqrt(-ln(α/2)/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum KsLevel {
    FivePercent,
    OnePercent,
    /// Arbitrary family-wise level, e.g. after a Bonferroni split.
    Alpha(f64),
}

impl KsLevel {
    pub fn alpha(self) -> f64 {
        match self {
            KsLevel::FivePercent => 0.05,
            KsLevel::OnePercent => 0.01,
            KsLevel::Alpha(a) => a,
        }
    }

    pub fn coefficient(self) -> f64 {
        match self {
            KsLevel::FivePercent => 1.36,
            KsLevel::OnePercent => 1.63,
            KsLevel::Alpha(a) => (-(a / 2.0).ln() / 2.0).sqrt(),
        }
    }

    /// The level that controls family-wise error `self` over `count` tests.
    pub fn bonferroni(self, count: usize) -> KsLevel {
        KsLevel::Alpha(self.alpha() / count.max(1) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsReport {
    pub n: usize,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

fn check_sorted(samples: &[f64]) -> Result<()> {
    if let Some(k) = samples.windows(2).position(|w| !(w[0] <= w[1])) {
        return Err(precondition(format!("KS samples not sorted at index {k}")));
    }
    Ok(())
}

/// `D = max_i max(i/n - F(x_i), F(x_i) - (i-1)/n)` for sorted samples.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(precondition("KS statistic of an empty sample"));
    }
    check_sorted(samples)?;
    let n = samples.len() as f64;
    let d = samples.iter().enumerate().fold(0.0_f64, |d, (k, &x)| {
        let f = cdf(x);
        let i = (k + 1) as f64;
        d.max(i / n - f).max(f - (i - 1.0) / n)
    });
    Ok(d)
}

/// One-sample KS test of sorted `samples` against `cdf`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64, level: KsLevel) -> Result<KsReport> {
    if samples.len() < 8 {
        return Err(precondition(format!("KS test needs n >= 8, got {}", samples.len())));
    }
    let statistic = ks_statistic(samples, cdf)?;
    let n = samples.len();
    let threshold = level.coefficient() / (n as f64).sqrt();
    Ok(KsReport { n, statistic, threshold, pass: statistic < threshold })
}

/// Sorts a copy and runs [`ks_test`].
pub fn ks_test_unsorted(samples: &[f64], cdf: impl Fn(f64) -> f64, level: KsLevel) -> Result<KsReport> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    ks_test(&v, cdf, level)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Standard error of the mean.
    pub stderr: f64,
}

pub fn moments(samples: &[f64]) -> Result<Moments> {
    let n = samples.len();
    if n < 2 {
        return Err(precondition(format!("moments need n >= 2, got {n}")));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
    let variance = ss / (n - 1) as f64;
    Ok(Moments { n, mean, variance, stderr: (variance / n as f64).sqrt() })
}

/// Sample autocorrelation at `lag`,
/// `Σ_{t<n-lag} (x_t - m)(x_{t+lag} - m) / Σ_t (x_t - m)^2`.
pub fn autocorr(samples: &[f64], lag: usize) -> Result<f64> {
    let n = samples.len();
    if n < 2 || lag >= n {
        return Err(precondition(format!("autocorrelation needs n >= 2 and lag < n (n={n}, lag={lag})")));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let den: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
    if den == 0.0 {
        return Err(Error::Degenerate("autocorrelation of a constant sequence".into()));
    }
    let num: f64 = samples.windows(lag + 1).map(|w| (w[0] - mean) * (w[lag] - mean)).sum();
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn slope_fit(points: &[(f64, f64)]) -> Result<SlopeFit> {
    let n = points.len();
    if n < 3 {
        return Err(precondition(format!("slope fit needs >= 3 points, got {n}")));
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if !(sxx > 0.0) {
        return Err(precondition("slope fit needs distinct x values"));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (sse / (nf - 2.0) / sxx).sqrt();
    Ok(SlopeFit { slope, intercept, stderr })
}

/// Standard error of a binomial frequency estimate.
pub fn binomial_stderr(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Standard error of a mean computed from batch means, which stays honest
/// when observations within a batch are correlated.
pub fn batch_means(batches: &[Vec<f64>]) -> Result<Moments> {
    let means: Vec<f64> = batches
        .iter()
        .filter(|b| !b.is_empty())
        .map(|b| b.iter().sum::<f64>() / b.len() as f64)
        .collect();
    moments(&means)
}
