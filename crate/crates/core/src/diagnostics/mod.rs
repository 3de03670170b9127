//! Descriptive statistics and the inferential battery applied to return
//! series before and after filtering: normality, serial correlation,
//! ARCH effects and unit roots.
//!
//! Kurtosis is reported raw (non-excess), so a Gaussian sample is near 3.

mod portmanteau;
mod unit_root;

pub use portmanteau::{arch_lm, ljung_box};
pub use unit_root::{
    adf_critical_values, adf_test, mackinnon_p_value, pp_bandwidth, pp_test, AdfOptions,
    Deterministic, PpOptions, ADF_CONSTANT_CRITICAL_1PCT,
};

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Significance levels reported in every [`TestResult`].
pub const LEVELS: [f64; 3] = [0.01, 0.05, 0.10];

/// 5% critical value of the chi-squared distribution with 20 degrees of
/// freedom, as conventionally tabulated for Q(20) and ARCH-LM(20).
pub const CHI2_20_CRITICAL_5PCT: f64 = 31.41;

/// Outcome of a hypothesis test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Rejection decisions at 1%, 5% and 10% (see [`LEVELS`]).
    pub reject_at: [bool; 3],
    /// Lag count or degrees of freedom, depending on the test.
    pub lags_or_df: usize,
}

impl TestResult {
    pub fn new(statistic: f64, p_value: f64, lags_or_df: usize) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            statistic,
            p_value,
            reject_at: LEVELS.map(|l| p_value < l),
            lags_or_df,
        }
    }

    pub fn rejects(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// Upper-tail probability of a chi-squared variate.
pub fn chi2_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let dist = ChiSquared::new(df as f64).expect("df > 0");
    dist.sf(x)
}

pub fn chi2_quantile(p: f64, df: usize) -> f64 {
    ChiSquared::new(df as f64)
        .expect("df > 0")
        .inverse_cdf(p)
}

/// Table-style descriptive statistics of a series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub max: f64,
    pub min: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std_dev: f64,
    pub skewness: f64,
    /// Raw kurtosis `m4 / m2^2`.
    pub kurtosis: f64,
}

/// Central moments `(m2, m3, m4)` with 1/n normalization.
pub(crate) fn central_moments(x: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (mean, m2 / n, m3 / n, m4 / n)
}

/// Variance indistinguishable from rounding noise at the data's scale.
pub(crate) fn is_degenerate(x: &[f64], m2: f64) -> bool {
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    m2 <= (1e-13 * scale).powi(2) || m2 == 0.0
}

pub(crate) fn check_finite(x: &[f64]) -> Result<()> {
    if let Some(row) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            asset: "series".into(),
            row,
        });
    }
    Ok(())
}

pub fn summary_stats(x: &[f64]) -> Result<SummaryStats> {
    if x.len() < 4 {
        return Err(Error::TooFewObservations {
            needed: 4,
            got: x.len(),
        });
    }
    check_finite(x)?;
    let (mean, m2, m3, m4) = central_moments(x);
    if is_degenerate(x, m2) {
        return Err(Error::ZeroVariance);
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = x.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    Ok(SummaryStats {
        n,
        mean,
        median,
        max: sorted[n - 1],
        min: sorted[0],
        std_dev: (m2 * n as f64 / (n - 1) as f64).sqrt(),
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2),
    })
}

/// Jarque-Bera statistic from sample size, skewness and raw kurtosis.
pub fn jarque_bera_from_moments(n: usize, skewness: f64, kurtosis: f64) -> TestResult {
    let stat = n as f64 / 6.0 * (skewness * skewness + (kurtosis - 3.0).powi(2) / 4.0);
    TestResult::new(stat, chi2_sf(stat, 2), 2)
}

pub fn jarque_bera(x: &[f64]) -> Result<TestResult> {
    if x.len() < 8 {
        return Err(Error::TooFewObservations {
            needed: 8,
            got: x.len(),
        });
    }
    let s = summary_stats(x)?;
    Ok(jarque_bera_from_moments(x.len(), s.skewness, s.kurtosis))
}
