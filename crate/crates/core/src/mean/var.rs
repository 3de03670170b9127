use nalgebra::{DMatrix, DVector};

use super::Criterion;
use crate::error::{Error, Result};
use crate::linalg;
use crate::timeseries::ReturnSeries;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Equation-by-equation least-squares VAR(p).
#[derive(Debug, Clone)]
pub struct VarFit {
    pub order: usize,
    /// Constant vector `Φ_0`.
    pub intercept: DVector<f64>,
    /// `Φ_1 .. Φ_p`, each k×k; row i is equation i.
    pub coefs: Vec<DMatrix<f64>>,
    pub intercept_se: DVector<f64>,
    pub coef_se: Vec<DMatrix<f64>>,
    /// T×k residuals, one row per observation.
    pub residuals: DMatrix<f64>,
    /// Residual covariance `E'E / T`.
    pub sigma: DMatrix<f64>,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
}

impl VarFit {
    pub fn dim(&self) -> usize {
        self.intercept.len()
    }
}

/// Design with a constant and `p` lags of every series; pre-sample lags are zero.
fn design(r: &DMatrix<f64>, p: usize) -> DMatrix<f64> {
    let (n, k) = r.shape();
    DMatrix::from_fn(n, 1 + k * p, |t, c| {
        if c == 0 {
            return 1.0;
        }
        let lag = (c - 1) / k + 1;
        let j = (c - 1) % k;
        if t >= lag {
            r[(t - lag, j)]
        } else {
            0.0
        }
    })
}

/// Fits `r_t = Φ_0 + Σ Φ_j r_{t-j} + ε_t` over the full sample, conditioning
/// pre-sample returns on zero so every order uses the same observations.
///
/// Information criteria: `ln|Σ| + c (k² p + k) / T` with `c = 2` (AIC) or `ln T` (BIC).
pub fn fit_var(r: &ReturnSeries, p: usize) -> Result<VarFit> {
    let (n, k) = r.values.shape();
    if n <= k * p + 10 {
        return Err(Error::SampleTooShort {
            needed: k * p + 10,
            got: n,
        });
    }
    let x = design(&r.values, p);
    let mut resid = DMatrix::zeros(n, k);
    let mut coef_rows: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut se_rows: Vec<DVector<f64>> = Vec::with_capacity(k);
    for i in 0..k {
        let y = r.values.column(i).into_owned();
        let fit = linalg::ols(&y, &x)?;
        resid.set_column(i, &fit.residuals);
        se_rows.push(fit.std_errors());
        coef_rows.push(fit.coef);
    }
    let unpack = |rows: &[DVector<f64>]| -> (DVector<f64>, Vec<DMatrix<f64>>) {
        let c = DVector::from_fn(k, |i, _| rows[i][0]);
        let lags = (0..p)
            .map(|l| DMatrix::from_fn(k, k, |i, j| rows[i][1 + l * k + j]))
            .collect();
        (c, lags)
    };
    let (intercept, coefs) = unpack(&coef_rows);
    let (intercept_se, coef_se) = unpack(&se_rows);

    let nf = n as f64;
    let sigma = resid.transpose() * &resid / nf;
    let logdet = sigma
        .clone()
        .cholesky()
        .map(|c| 2.0 * c.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
        .ok_or(Error::SingularDesign)?;
    let npar = (k * k * p + k) as f64;
    Ok(VarFit {
        order: p,
        intercept,
        coefs,
        intercept_se,
        coef_se,
        residuals: resid,
        loglik: -0.5 * nf * (k as f64 * (LN_2PI + 1.0) + logdet),
        aic: logdet + 2.0 * npar / nf,
        bic: logdet + nf.ln() * npar / nf,
        sigma,
    })
}

/// Order in `0..=p_max` minimizing the criterion; ties go to the smaller order.
pub fn select_var_order(r: &ReturnSeries, p_max: usize, criterion: Criterion) -> Result<usize> {
    let mut best = (f64::INFINITY, 0);
    for p in 0..=p_max {
        let fit = fit_var(r, p)?;
        let ic = match criterion {
            Criterion::Aic => fit.aic,
            Criterion::Bic => fit.bic,
        };
        if ic < best.0 {
            best = (ic, p);
        }
    }
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn series(values: DMatrix<f64>) -> ReturnSeries {
        let d0 = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
        ReturnSeries {
            dates: (0..values.nrows()).map(|i| d0 + chrono::Days::new(i as u64)).collect(),
            assets: (0..values.ncols()).map(|i| format!("s{i}")).collect(),
            values,
        }
    }

    fn simulate_var(phis: &[DMatrix<f64>], n: usize, seed: u64) -> ReturnSeries {
        let k = phis[0].nrows();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let burn = 200;
        let mut m = DMatrix::zeros(n + burn, k);
        for t in 0..n + burn {
            for i in 0..k {
                let mut v: f64 = StandardNormal.sample(&mut rng);
                for (l, phi) in phis.iter().enumerate() {
                    if t > l {
                        for j in 0..k {
                            v += phi[(i, j)] * m[(t - l - 1, j)];
                        }
                    }
                }
                m[(t, i)] = v;
            }
        }
        series(m.rows(burn, n).into_owned())
    }

    #[test]
    fn residuals_orthogonal_to_regressors() {
        let phi = DMatrix::from_row_slice(2, 2, &[0.3, 0.1, -0.2, 0.4]);
        let r = simulate_var(&[phi], 800, 3);
        let fit = fit_var(&r, 2).unwrap();
        let x = design(&r.values, 2);
        let cross = x.transpose() * &fit.residuals;
        assert!(cross.abs().max() < 1e-8, "{}", cross.abs().max());
    }

    #[test]
    fn order_zero_demeans() {
        let r = simulate_var(&[DMatrix::from_element(1, 1, 0.2)], 300, 4);
        let fit = fit_var(&r, 0).unwrap();
        let mean = r.values.column(0).mean();
        for t in 0..r.len() {
            assert!((fit.residuals[(t, 0)] - (r.values[(t, 0)] - mean)).abs() < 1e-12);
        }
    }

    #[test]
    fn ar1_coefficient_recovered() {
        let r = simulate_var(&[DMatrix::from_element(1, 1, 0.5)], 5000, 5);
        let fit = fit_var(&r, 1).unwrap();
        let est = fit.coefs[0][(0, 0)];
        assert!((est - 0.5).abs() < 3.0 * fit.coef_se[0][(0, 0)], "{est}");
    }

    #[test]
    fn trivariate_blocks() {
        let phi = DMatrix::from_diagonal(&DVector::from_vec(vec![0.2, 0.1, -0.1]));
        let r = simulate_var(&[phi], 600, 6);
        let fit = fit_var(&r, 2).unwrap();
        assert_eq!(fit.coefs.len(), 2);
        assert!(fit.coefs.iter().all(|c| c.shape() == (3, 3)));
        assert_eq!(fit.intercept.len(), 3);
    }

    #[test]
    fn selection_edge_cases() {
        let r = simulate_var(&[DMatrix::from_element(1, 1, 0.0)], 400, 7);
        assert_eq!(select_var_order(&r, 0, Criterion::Aic).unwrap(), 0);
        let short = series(DMatrix::zeros(12, 2));
        assert!(matches!(fit_var(&short, 1), Err(Error::SampleTooShort { .. })));
    }

    #[test]
    fn loglik_monotone_in_order() {
        let phi = DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.1, 0.2]);
        let r = simulate_var(&[phi], 1000, 8);
        let mut prev = f64::NEG_INFINITY;
        for p in 0..5 {
            let ll = fit_var(&r, p).unwrap().loglik;
            assert!(ll >= prev - 1e-6);
            prev = ll;
        }
    }

    #[test]
    fn large_sample_bias_small() {
        let phi = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, -0.2, 0.3]);
        let r = simulate_var(&[phi.clone()], 10_000, 9);
        let fit = fit_var(&r, 1).unwrap();
        assert!((&fit.coefs[0] - &phi).abs().max() < 0.02);
    }

    pub(crate) fn var2_sample(seed: u64) -> ReturnSeries {
        let phi1 = DMatrix::from_row_slice(2, 2, &[0.4, 0.1, 0.0, 0.3]);
        let phi2 = DMatrix::from_row_slice(2, 2, &[-0.3, 0.0, 0.1, 0.25]);
        simulate_var(&[phi1, phi2], 1000, seed)
    }

    #[test]
    fn bic_selection_frequencies() {
        let mut hits_wn = 0;
        let mut hits_var2 = 0;
        let reps = 50;
        for s in 0..reps {
            let wn = simulate_var(&[DMatrix::zeros(2, 2)], 1000, 1000 + s);
            if select_var_order(&wn, 4, Criterion::Bic).unwrap() == 0 {
                hits_wn += 1;
            }
            if select_var_order(&var2_sample(2000 + s), 6, Criterion::Bic).unwrap() == 2 {
                hits_var2 += 1;
            }
        }
        assert!(hits_wn as f64 / reps as f64 >= 0.9, "{hits_wn}");
        assert!(hits_var2 as f64 / reps as f64 >= 0.8, "{hits_var2}");
    }
}
