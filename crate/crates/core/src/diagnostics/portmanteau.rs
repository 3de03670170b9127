use nalgebra::{DMatrix, DVector};

use super::{central_moments, check_finite, chi2_sf, is_degenerate, TestResult};
use crate::error::{Error, Result};
use crate::linalg;

/// Ljung-Box Q statistic over the first `lags` autocorrelations.
///
/// With `squared`, the series is centered and squared first (the Q² test for
/// ARCH effects). Autocorrelations use the biased 1/n autocovariance.
pub fn ljung_box(x: &[f64], lags: usize, squared: bool) -> Result<TestResult> {
    let n = x.len();
    if lags == 0 || 2 * lags >= n {
        return Err(Error::TooManyLags { lags, n });
    }
    check_finite(x)?;
    let owned;
    let series: &[f64] = if squared {
        let mean = x.iter().sum::<f64>() / n as f64;
        owned = x.iter().map(|v| (v - mean).powi(2)).collect::<Vec<_>>();
        &owned
    } else {
        x
    };
    let (mean, m2, _, _) = central_moments(series);
    if is_degenerate(series, m2) {
        return Err(Error::ZeroVariance);
    }
    let d: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let gamma0: f64 = d.iter().map(|v| v * v).sum();
    let nf = n as f64;
    let mut q = 0.0;
    for j in 1..=lags {
        let gj: f64 = d[j..].iter().zip(&d[..n - j]).map(|(a, b)| a * b).sum();
        let rho = gj / gamma0;
        q += rho * rho / (nf - j as f64);
    }
    q *= nf * (nf + 2.0);
    Ok(TestResult::new(q, chi2_sf(q, lags), lags))
}

/// Engle's ARCH-LM test: `T * R^2` from regressing `x_t^2` on a constant
/// and `lags` of its own lags.
pub fn arch_lm(x: &[f64], lags: usize) -> Result<TestResult> {
    let n = x.len();
    if lags == 0 || 2 * lags >= n {
        return Err(Error::TooManyLags { lags, n });
    }
    check_finite(x)?;
    let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
    let nobs = n - lags;
    let y = DVector::from_fn(nobs, |t, _| sq[t + lags]);
    let design = DMatrix::from_fn(nobs, lags + 1, |t, c| {
        if c == 0 {
            1.0
        } else {
            sq[t + lags - c]
        }
    });
    let fit = linalg::ols(&y, &design).map_err(|_| Error::SingularRegression)?;
    let ybar = y.mean();
    let sst: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    if !(sst > 0.0) {
        return Err(Error::SingularRegression);
    }
    let r2 = (1.0 - fit.ssr / sst).max(0.0);
    let stat = nobs as f64 * r2;
    Ok(TestResult::new(stat, chi2_sf(stat, lags), lags))
}
