//! Augmented Dickey-Fuller and Phillips-Perron unit-root tests.
//!
//! P-values come from MacKinnon's (1994) response-surface approximation of
//! the asymptotic Dickey-Fuller tau distribution. The tabulated critical
//! values are the familiar two-decimal ones for samples around 500.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{central_moments, check_finite, is_degenerate, TestResult};
use crate::error::{Error, Result};
use crate::linalg::{self, Ols};

/// 1% critical value of the constant-only Dickey-Fuller tau statistic.
pub const ADF_CONSTANT_CRITICAL_1PCT: f64 = -3.44;

/// Deterministic terms in the test regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Deterministic {
    None,
    #[default]
    Constant,
    Trend,
}

impl Deterministic {
    fn ncols(self) -> usize {
        match self {
            Deterministic::None => 0,
            Deterministic::Constant => 1,
            Deterministic::Trend => 2,
        }
    }
}

/// Critical values at (1%, 5%, 10%).
pub fn adf_critical_values(det: Deterministic) -> [(f64, f64); 3] {
    match det {
        Deterministic::None => [(0.01, -2.58), (0.05, -1.95), (0.10, -1.62)],
        Deterministic::Constant => [(0.01, ADF_CONSTANT_CRITICAL_1PCT), (0.05, -2.87), (0.10, -2.57)],
        Deterministic::Trend => [(0.01, -3.98), (0.05, -3.42), (0.10, -3.13)],
    }
}

struct Surface {
    tau_star: f64,
    tau_min: f64,
    tau_max: f64,
    small: [f64; 3],
    large: [f64; 4],
}

fn surface(det: Deterministic) -> Surface {
    match det {
        Deterministic::None => Surface {
            tau_star: -1.04,
            tau_min: -19.04,
            tau_max: f64::INFINITY,
            small: [0.6344, 1.2378, 0.032496],
            large: [0.4797, 0.93557, -0.06999, 0.033066],
        },
        Deterministic::Constant => Surface {
            tau_star: -1.61,
            tau_min: -18.83,
            tau_max: 2.74,
            small: [2.1659, 1.4412, 0.038269],
            large: [1.7339, 0.93202, -0.12745, -0.010368],
        },
        Deterministic::Trend => Surface {
            tau_star: -2.89,
            tau_min: -16.18,
            tau_max: 0.7,
            small: [3.2512, 1.6047, 0.049588],
            large: [2.5261, 0.61654, -0.37956, -0.060285],
        },
    }
}

/// Asymptotic p-value of a Dickey-Fuller tau statistic (single series).
pub fn mackinnon_p_value(tau: f64, det: Deterministic) -> f64 {
    let s = surface(det);
    if tau > s.tau_max {
        return 1.0;
    }
    if tau < s.tau_min {
        return 0.0;
    }
    let z = if tau <= s.tau_star {
        s.small[0] + tau * (s.small[1] + tau * s.small[2])
    } else {
        s.large[0] + tau * (s.large[1] + tau * (s.large[2] + tau * s.large[3]))
    };
    Normal::standard().cdf(z)
}

#[derive(Debug, Clone, Copy)]
pub struct AdfOptions {
    pub max_lag: usize,
    pub deterministic: Deterministic,
}

impl Default for AdfOptions {
    fn default() -> Self {
        Self {
            max_lag: 12,
            deterministic: Deterministic::Constant,
        }
    }
}

fn validate(x: &[f64], needed: usize) -> Result<()> {
    if x.len() <= needed {
        return Err(Error::SampleTooShort {
            needed,
            got: x.len(),
        });
    }
    check_finite(x)?;
    let (_, m2, _, _) = central_moments(x);
    if is_degenerate(x, m2) {
        return Err(Error::ZeroVariance);
    }
    Ok(())
}

/// Regression of `dy_t` on deterministic terms, `y_{t-1}` and `lags` lagged
/// differences over `t = start..n`. Returns the fit and the column index of
/// the lagged level.
fn adf_regression(x: &[f64], lags: usize, start: usize, det: Deterministic) -> Result<(Ols, usize)> {
    let n = x.len();
    let rows = n - start;
    let nd = det.ncols();
    let level_col = nd;
    let k = nd + 1 + lags;
    let y = DVector::from_fn(rows, |r, _| x[start + r] - x[start + r - 1]);
    let design = DMatrix::from_fn(rows, k, |r, c| {
        let t = start + r;
        match c {
            c if c < nd => {
                if c == 0 {
                    1.0
                } else {
                    t as f64
                }
            }
            c if c == level_col => x[t - 1],
            c => {
                let j = c - level_col;
                x[t - j] - x[t - j - 1]
            }
        }
    });
    let fit = linalg::ols(&y, &design).map_err(|_| Error::SingularRegression)?;
    Ok((fit, level_col))
}

fn tau_of(fit: &Ols, col: usize) -> f64 {
    fit.coef[col] / fit.std_errors()[col]
}

/// ADF test with the augmentation lag chosen by AIC over `0..=max_lag` on a
/// common estimation sample, then re-estimated on the longest sample for the
/// chosen lag. `lags_or_df` holds the chosen lag.
pub fn adf_test(x: &[f64], opts: AdfOptions) -> Result<TestResult> {
    let AdfOptions {
        max_lag,
        deterministic: det,
    } = opts;
    validate(x, max_lag + 10)?;
    let common_start = max_lag + 1;
    let mut best = (f64::INFINITY, 0);
    for lag in 0..=max_lag {
        let (fit, _) = adf_regression(x, lag, common_start, det)?;
        let nobs = fit.nobs() as f64;
        let aic = nobs * (fit.ssr / nobs).ln() + 2.0 * fit.coef.len() as f64;
        if aic < best.0 {
            best = (aic, lag);
        }
    }
    let lag = best.1;
    let (fit, col) = adf_regression(x, lag, lag + 1, det)?;
    let tau = tau_of(&fit, col);
    Ok(TestResult::new(tau, mackinnon_p_value(tau, det), lag))
}

/// Default Newey-West bandwidth: integer part of `4 (n/100)^(2/9)`.
pub fn pp_bandwidth(n: usize) -> usize {
    (4.0 * (n as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PpOptions {
    pub deterministic: Deterministic,
    /// Overrides [`pp_bandwidth`].
    pub bandwidth: Option<usize>,
}

/// Phillips-Perron Z-tau test. `lags_or_df` holds the bandwidth used.
pub fn pp_test(x: &[f64], opts: PpOptions) -> Result<TestResult> {
    validate(x, 10)?;
    let det = opts.deterministic;
    let n = x.len();
    let nd = det.ncols();
    let rows = n - 1;
    let y = DVector::from_fn(rows, |r, _| x[r + 1]);
    let design = DMatrix::from_fn(rows, nd + 1, |r, c| match c {
        c if c == nd => x[r],
        0 => 1.0,
        _ => (r + 1) as f64,
    });
    let fit = linalg::ols(&y, &design).map_err(|_| Error::SingularRegression)?;
    let u = &fit.residuals;
    let nobs = rows as f64;
    let bandwidth = opts.bandwidth.unwrap_or_else(|| pp_bandwidth(n));

    let gamma0 = u.norm_squared() / nobs;
    let mut lam2 = gamma0;
    for j in 1..=bandwidth.min(rows - 1) {
        let gj: f64 = (j..rows).map(|t| u[t] * u[t - j]).sum::<f64>() / nobs;
        lam2 += 2.0 * (1.0 - j as f64 / (bandwidth as f64 + 1.0)) * gj;
    }
    if !(lam2 > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let se = fit.std_errors()[nd];
    let s = fit.sigma2().sqrt();
    let t_rho = (fit.coef[nd] - 1.0) / se;
    let lam = lam2.sqrt();
    let z_tau = (gamma0 / lam2).sqrt() * t_rho - 0.5 * (lam2 - gamma0) / lam * (nobs * se / s);
    Ok(TestResult::new(z_tau, mackinnon_p_value(z_tau, det), bandwidth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(rng: &mut ChaCha20Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| StandardNormal.sample(rng)).collect()
    }

    fn cumsum(x: &[f64]) -> Vec<f64> {
        x.iter()
            .scan(0.0, |s, v| {
                *s += v;
                Some(*s)
            })
            .collect()
    }

    #[test]
    fn response_surface_matches_asymptotic_critical_values() {
        // asymptotic constant-case 1% and 5% points are -3.43 and -2.86
        assert!((mackinnon_p_value(-3.43, Deterministic::Constant) - 0.01).abs() < 1e-3);
        assert!((mackinnon_p_value(-2.86, Deterministic::Constant) - 0.05).abs() < 2e-3);
        assert!((mackinnon_p_value(-3.96, Deterministic::Trend) - 0.01).abs() < 1e-3);
        assert!((mackinnon_p_value(-2.57, Deterministic::None) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn tabulated_one_percent_value() {
        assert_eq!(adf_critical_values(Deterministic::Constant)[0], (0.01, -3.44));
    }

    #[test]
    fn p_value_monotone_in_tau() {
        for det in [Deterministic::None, Deterministic::Constant, Deterministic::Trend] {
            let mut prev = 0.0;
            let mut tau = -20.0;
            while tau < 3.0 {
                let p = mackinnon_p_value(tau, det);
                assert!(p >= prev - 1e-12, "{det:?} {tau}");
                prev = p;
                tau += 0.01;
            }
        }
    }

    #[test]
    fn white_noise_and_random_walk() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let e = normals(&mut rng, 2000);
        let adf = adf_test(&e, AdfOptions::default()).unwrap();
        let pp = pp_test(&e, PpOptions::default()).unwrap();
        assert!(adf.reject_at[0] && pp.reject_at[0], "{adf:?} {pp:?}");
        let rw = cumsum(&normals(&mut rng, 2000));
        assert!(!adf_test(&rw, AdfOptions::default()).unwrap().reject_at[1]);
        assert!(!pp_test(&rw, PpOptions::default()).unwrap().reject_at[1]);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            adf_test(&[1.0; 50], AdfOptions::default()),
            Err(Error::ZeroVariance)
        ));
        assert!(matches!(
            pp_test(&[1.0; 50], PpOptions::default()),
            Err(Error::ZeroVariance)
        ));
        assert!(matches!(
            adf_test(&[1.0, 2.0, 0.5], AdfOptions::default()),
            Err(Error::SampleTooShort { .. })
        ));
    }

    #[test]
    fn bandwidth_rule() {
        assert_eq!(pp_bandwidth(100), 4);
        assert_eq!(pp_bandwidth(2371), 8);
    }
}
