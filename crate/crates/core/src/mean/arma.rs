use nalgebra::{DMatrix, DVector};

use super::Criterion;
use crate::error::{Error, Result};
use crate::linalg;
use crate::optim::{self, BfgsOptions};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Largest AR or MA order considered by default during selection.
pub const DEFAULT_MAX_ORDER: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ArmaSpec {
    pub p: usize,
    pub q: usize,
    pub include_constant: bool,
}

impl ArmaSpec {
    pub fn new(p: usize, q: usize, include_constant: bool) -> Self {
        Self {
            p,
            q,
            include_constant,
        }
    }

    /// Mean parameters plus the innovation variance.
    pub fn n_params(&self) -> usize {
        self.p + self.q + usize::from(self.include_constant) + 1
    }
}

/// Conditional-sum-of-squares ARMA estimate.
///
/// Model: `x_t = c + Σ φ_i x_{t-i} + e_t + Σ θ_j e_{t-j}` with pre-sample
/// `x` and `e` set to zero, so residuals cover the whole sample.
#[derive(Debug, Clone)]
pub struct ArmaFit {
    pub spec: ArmaSpec,
    pub constant: f64,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    /// Standard errors in the order constant (if any), AR, MA.
    pub std_errors: Vec<f64>,
    pub sigma2: f64,
    pub residuals: Vec<f64>,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    /// All roots of the fitted AR polynomial lie outside the unit circle.
    pub stationary: bool,
}

/// CSS residuals for given coefficients.
pub fn arma_residuals(x: &[f64], constant: f64, ar: &[f64], ma: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut e = vec![0.0; n];
    for t in 0..n {
        let mut v = x[t] - constant;
        for (i, phi) in ar.iter().enumerate() {
            if t > i {
                v -= phi * x[t - i - 1];
            }
        }
        for (j, theta) in ma.iter().enumerate() {
            if t > j {
                v -= theta * e[t - j - 1];
            }
        }
        e[t] = v;
    }
    e
}

/// Coefficients `φ` of `1 - Σ φ_k z^k` from partial autocorrelations
/// (Durbin-Levinson recursion). Roots lie outside the unit circle whenever
/// every partial autocorrelation is inside (-1, 1).
pub fn coefs_from_pacf(r: &[f64]) -> Vec<f64> {
    let mut phi: Vec<f64> = Vec::with_capacity(r.len());
    for (k, &rk) in r.iter().enumerate() {
        let prev = phi.clone();
        for j in 0..k {
            phi[j] = prev[j] - rk * prev[k - 1 - j];
        }
        phi.push(rk);
    }
    phi
}

/// Inverse of [`coefs_from_pacf`]; `None` if the polynomial has a root on
/// or inside the unit circle.
pub fn pacf_from_coefs(phi: &[f64]) -> Option<Vec<f64>> {
    let mut cur = phi.to_vec();
    let mut r = vec![0.0; phi.len()];
    for k in (0..phi.len()).rev() {
        let rk = cur[k];
        if !(rk.abs() < 1.0) {
            return None;
        }
        r[k] = rk;
        let d = 1.0 - rk * rk;
        cur = (0..k).map(|j| (cur[j] + rk * cur[k - 1 - j]) / d).collect();
    }
    Some(r)
}

/// `1 + Σ θ_j z^j` has all roots outside the unit circle.
pub fn is_invertible(ma: &[f64]) -> bool {
    let neg: Vec<f64> = ma.iter().map(|t| -t).collect();
    pacf_from_coefs(&neg).is_some()
}

/// `1 - Σ φ_i z^i` has all roots outside the unit circle.
pub fn is_stationary(ar: &[f64]) -> bool {
    pacf_from_coefs(ar).is_some()
}

fn ma_from_raw(raw: &[f64]) -> Vec<f64> {
    let r: Vec<f64> = raw.iter().map(|u| u.tanh()).collect();
    coefs_from_pacf(&r).into_iter().map(|c| -c).collect()
}

fn raw_from_ma(ma: &[f64]) -> Option<Vec<f64>> {
    let neg: Vec<f64> = ma.iter().map(|t| -t).collect();
    let r = pacf_from_coefs(&neg)?;
    Some(r.iter().map(|v| v.clamp(-0.99, 0.99).atanh()).collect())
}

/// Least squares on a constant and lags of `x` and `e` (pre-sample zero).
fn lagged_ols(x: &[f64], e: Option<&[f64]>, spec: ArmaSpec) -> Result<linalg::Ols> {
    let n = x.len();
    let nc = usize::from(spec.include_constant);
    let q = if e.is_some() { spec.q } else { 0 };
    let design = DMatrix::from_fn(n, nc + spec.p + q, |t, c| {
        if c < nc {
            1.0
        } else if c < nc + spec.p {
            let lag = c - nc + 1;
            if t >= lag {
                x[t - lag]
            } else {
                0.0
            }
        } else {
            let lag = c - nc - spec.p + 1;
            if t >= lag {
                e.unwrap()[t - lag]
            } else {
                0.0
            }
        }
    });
    linalg::ols(&DVector::from_column_slice(x), &design)
}

/// Hannan-Rissanen two-step start: a long autoregression supplies residual
/// proxies that enter the second regression as MA regressors.
fn hannan_rissanen(x: &[f64], spec: ArmaSpec) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let long = (spec.p.max(spec.q) + 5).min(x.len() / 10).max(1);
    let pre = lagged_ols(x, None, ArmaSpec::new(long, 0, spec.include_constant))?;
    let ehat: Vec<f64> = pre.residuals.iter().copied().collect();
    let fit = lagged_ols(x, Some(&ehat), spec)?;
    let nc = usize::from(spec.include_constant);
    let c = if nc == 1 { fit.coef[0] } else { 0.0 };
    let ar = fit.coef.as_slice()[nc..nc + spec.p].to_vec();
    let mut ma = fit.coef.as_slice()[nc + spec.p..].to_vec();
    while !is_invertible(&ma) || ma.iter().any(|m| !m.is_finite()) {
        ma.iter_mut().for_each(|m| *m *= 0.5);
    }
    Ok((c, ar, ma))
}

struct Layout {
    nc: usize,
    p: usize,
}

impl Layout {
    fn unpack<'a>(&self, v: &'a [f64]) -> (f64, &'a [f64], &'a [f64]) {
        let c = if self.nc == 1 { v[0] } else { 0.0 };
        (c, &v[self.nc..self.nc + self.p], &v[self.nc + self.p..])
    }
}

fn css(x: &[f64], c: f64, ar: &[f64], ma: &[f64]) -> f64 {
    arma_residuals(x, c, ar, ma).iter().map(|e| e * e).sum()
}

/// Gaussian conditional-sum-of-squares fit.
///
/// Invertibility of the MA part is imposed by optimizing over partial
/// autocorrelations mapped through `tanh`. Pure autoregressions are solved
/// exactly by least squares.
pub fn fit_arma(x: &[f64], spec: ArmaSpec) -> Result<ArmaFit> {
    let n = x.len();
    let needed = 10 * (spec.p + spec.q + 1);
    if n <= needed {
        return Err(Error::SampleTooShort { needed, got: n });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            asset: String::new(),
            row: x.iter().position(|v| !v.is_finite()).unwrap_or(0) + 1,
        });
    }
    let lay = Layout {
        nc: usize::from(spec.include_constant),
        p: spec.p,
    };
    let nf = n as f64;

    let theta: Vec<f64> = if spec.q == 0 {
        lagged_ols(x, None, spec)?.coef.iter().copied().collect()
    } else {
        let (c0, ar0, ma0) = hannan_rissanen(x, spec)?;
        let mut start: Vec<f64> = Vec::with_capacity(lay.nc + spec.p + spec.q);
        if lay.nc == 1 {
            start.push(c0);
        }
        start.extend(&ar0);
        start.extend(raw_from_ma(&ma0).ok_or(Error::NonInvertibleMa)?);
        let scale = x.iter().map(|v| v * v).sum::<f64>() / nf;
        if !(scale > 0.0) {
            return Err(Error::ZeroVariance);
        }
        let mut obj = |v: &[f64]| {
            let (c, ar, raw) = lay.unpack(v);
            let ma = ma_from_raw(raw);
            let ssr = css(x, c, ar, &ma);
            if ssr.is_finite() {
                0.5 * (ssr / nf / scale).ln()
            } else {
                f64::NAN
            }
        };
        let opts = BfgsOptions::default();
        let min = optim::bfgs(
            |v| {
                let f = obj(v);
                (f, optim::numerical_gradient(&mut obj, v))
            },
            &start,
            &opts,
        );
        if !min.status.converged() {
            return Err(Error::NonConvergence(format!("ARMA({},{}): {}", spec.p, spec.q, min.status)));
        }
        let (c, ar, raw) = lay.unpack(&min.x);
        let mut natural = Vec::with_capacity(min.x.len());
        if lay.nc == 1 {
            natural.push(c);
        }
        natural.extend(ar);
        let ma = ma_from_raw(raw);
        if !is_invertible(&ma) {
            return Err(Error::NonInvertibleMa);
        }
        natural.extend(ma);
        natural
    };

    let (c, ar, ma) = lay.unpack(&theta);
    let residuals = arma_residuals(x, c, ar, ma);
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let sigma2 = ssr / nf;
    if !(sigma2 > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let std_errors = css_std_errors(x, &lay, &theta, sigma2);
    let loglik = -0.5 * nf * (LN_2PI + sigma2.ln() + 1.0);
    let k = spec.n_params() as f64;
    Ok(ArmaFit {
        spec,
        constant: c,
        ar: ar.to_vec(),
        ma: ma.to_vec(),
        std_errors,
        sigma2,
        loglik,
        aic: -2.0 * loglik + 2.0 * k,
        bic: -2.0 * loglik + nf.ln() * k,
        stationary: is_stationary(ar),
        residuals,
    })
}

/// `σ² (J'J)^{-1}` with `J` the numerical Jacobian of the residuals.
fn css_std_errors(x: &[f64], lay: &Layout, theta: &[f64], sigma2: f64) -> Vec<f64> {
    let m = theta.len();
    if m == 0 {
        return Vec::new();
    }
    let n = x.len();
    let mut jac = DMatrix::zeros(n, m);
    let mut v = theta.to_vec();
    for j in 0..m {
        let h = 1e-6 * theta[j].abs().max(1e-2);
        v[j] = theta[j] + h;
        let (c, ar, ma) = lay.unpack(&v);
        let up = arma_residuals(x, c, ar, ma);
        v[j] = theta[j] - h;
        let (c, ar, ma) = lay.unpack(&v);
        let dn = arma_residuals(x, c, ar, ma);
        v[j] = theta[j];
        for t in 0..n {
            jac[(t, j)] = (up[t] - dn[t]) / (2.0 * h);
        }
    }
    match (jac.transpose() * &jac).cholesky() {
        Some(ch) => {
            let inv = ch.inverse();
            (0..m).map(|j| (sigma2 * inv[(j, j)]).sqrt()).collect()
        }
        None => vec![f64::NAN; m],
    }
}

/// Best-scoring ARMA over `p in 0..=max_p`, `q in 0..=max_q`. Orders whose
/// fit fails are skipped; ties go to the more parsimonious model.
pub fn select_arma_order(
    x: &[f64],
    max_p: usize,
    max_q: usize,
    include_constant: bool,
    criterion: Criterion,
) -> Result<ArmaFit> {
    let mut best: Option<ArmaFit> = None;
    let mut last_err = None;
    let mut orders: Vec<(usize, usize)> = (0..=max_p).flat_map(|p| (0..=max_q).map(move |q| (p, q))).collect();
    orders.sort_by_key(|&(p, q)| (p + q, p));
    for (p, q) in orders {
        match fit_arma(x, ArmaSpec::new(p, q, include_constant)) {
            Ok(fit) => {
                let score = |f: &ArmaFit| match criterion {
                    Criterion::Aic => f.aic,
                    Criterion::Bic => f.bic,
                };
                if best.as_ref().is_none_or(|b| score(&fit) < score(b)) {
                    best = Some(fit);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(Error::NonConvergence("no ARMA order could be fitted".into())))
}
