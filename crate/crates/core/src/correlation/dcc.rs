use nalgebra::DMatrix;

use super::{chol_terms, corr_component_loglik, corr_path_loglik, unconditional_corr, CorrOptions, MatrixPath, StdResidualPanel};
use crate::error::{Error, Result};
use crate::optim::{self, Status};

/// Scalar DCC estimate.
#[derive(Debug, Clone)]
pub struct DccFit {
    /// News coefficients, one per lag of `ξ ξ'`.
    pub alpha: Vec<f64>,
    /// Decay coefficients, one per lag of `Q`.
    pub beta: Vec<f64>,
    pub qbar: DMatrix<f64>,
    pub q_path: MatrixPath,
    pub r_path: MatrixPath,
    /// Gaussian log-likelihood of the standardized residuals.
    pub loglik: f64,
    /// Correlation component maximized by the estimator.
    pub corr_loglik: f64,
    /// Outer-product-of-gradients standard errors, alphas then betas.
    pub std_errors: Option<Vec<f64>>,
    pub status: Status,
    pub iterations: usize,
    /// Boundary solutions and other conditions worth flagging in reports.
    pub warnings: Vec<String>,
}

impl DccFit {
    pub fn alpha1(&self) -> f64 {
        self.alpha[0]
    }

    pub fn beta1(&self) -> f64 {
        self.beta.first().copied().unwrap_or(0.0)
    }

    pub fn persistence(&self) -> f64 {
        self.alpha.iter().sum::<f64>() + self.beta.iter().sum::<f64>()
    }
}

fn validate(alpha: &[f64], beta: &[f64]) -> Result<()> {
    if alpha.is_empty() {
        return Err(Error::InvalidParams("at least one news coefficient is required".into()));
    }
    if alpha.iter().chain(beta).any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidParams("DCC coefficients must be finite and non-negative".into()));
    }
    let s: f64 = alpha.iter().chain(beta).sum();
    if !(s < 1.0) {
        return Err(Error::InvalidParams(format!("alpha + beta = {s} must be below 1")));
    }
    Ok(())
}

fn flat(m: &DMatrix<f64>) -> Vec<f64> {
    let k = m.nrows();
    (0..k * k).map(|n| m[(n / k, n % k)]).collect()
}

/// Rescales each `Q_t` to a correlation matrix. Entries beyond ±1 by more
/// than rounding mean `Q_t` lost positive semi-definiteness.
pub(crate) fn rescale(q: &[f64], k: usize) -> Result<Vec<f64>> {
    let t = q.len() / (k * k);
    let mut r = vec![0.0; q.len()];
    let mut s = vec![0.0; k];
    for n in 0..t {
        let qt = &q[n * k * k..(n + 1) * k * k];
        for i in 0..k {
            let d = qt[i * k + i];
            if !(d > 0.0) {
                return Err(Error::NonPositiveDefiniteR(n));
            }
            s[i] = d.sqrt();
        }
        let rt = &mut r[n * k * k..(n + 1) * k * k];
        for i in 0..k {
            rt[i * k + i] = 1.0;
            for j in 0..i {
                let v = qt[i * k + j] / (s[i] * s[j]);
                if !(v.abs() <= 1.0 + 1e-10) {
                    return Err(Error::NonPositiveDefiniteR(n));
                }
                let v = v.clamp(-1.0, 1.0);
                rt[i * k + j] = v;
                rt[j * k + i] = v;
            }
        }
    }
    Ok(r)
}

/// `Q_t = (1 - Σα - Σβ) Q̄ + Σ α_m ξ_{t-m} ξ'_{t-m} + Σ β_n Q_{t-n}` with
/// `Q_1 = q1` and pre-sample outer products and `Q` equal to `Q̄`.
fn q_recursion(x: &[f64], k: usize, alpha: &[f64], beta: &[f64], qbar: &[f64], q1: &[f64]) -> Vec<f64> {
    let kk = k * k;
    let t = x.len() / k;
    let w = 1.0 - alpha.iter().sum::<f64>() - beta.iter().sum::<f64>();
    let mut q = vec![0.0; t * kk];
    if t == 0 {
        return q;
    }
    q[..kk].copy_from_slice(q1);
    for s in 1..t {
        for i in 0..k {
            for j in 0..=i {
                let e = i * k + j;
                let mut v = w * qbar[e];
                for (m, a) in alpha.iter().enumerate() {
                    v += a * if s > m {
                        x[(s - m - 1) * k + i] * x[(s - m - 1) * k + j]
                    } else {
                        qbar[e]
                    };
                }
                for (l, b) in beta.iter().enumerate() {
                    v += b * if s > l { q[(s - l - 1) * kk + e] } else { qbar[e] };
                }
                q[s * kk + e] = v;
                q[s * kk + j * k + i] = v;
            }
        }
    }
    q
}

/// Pseudo-correlation and correlation paths of the scalar DCC with
/// `Q_1 = Q̄`.
pub fn dcc_filter(
    xi: &StdResidualPanel,
    alpha: &[f64],
    beta: &[f64],
    qbar: &DMatrix<f64>,
) -> Result<(MatrixPath, MatrixPath)> {
    dcc_filter_with_start(xi, alpha, beta, qbar, qbar)
}

pub fn dcc_filter_with_start(
    xi: &StdResidualPanel,
    alpha: &[f64],
    beta: &[f64],
    qbar: &DMatrix<f64>,
    q1: &DMatrix<f64>,
) -> Result<(MatrixPath, MatrixPath)> {
    validate(alpha, beta)?;
    let k = xi.dim();
    if qbar.shape() != (k, k) || q1.shape() != (k, k) {
        return Err(Error::DimensionMismatch("Q̄ or Q_1 does not match the panel".into()));
    }
    let q = q_recursion(&xi.rows(), k, alpha, beta, &flat(qbar), &flat(q1));
    let r = rescale(&q, k)?;
    Ok((MatrixPath::from_raw(k, q), MatrixPath::from_raw(k, r)))
}

/// Per-observation correlation component `-½ (ln|R_t| + ξ' R^{-1} ξ - ξ' ξ)`.
pub(crate) fn corr_contributions(x: &[f64], k: usize, r: &[f64]) -> Option<Vec<f64>> {
    let kk = k * k;
    let t = x.len() / k;
    let mut l = vec![0.0; kk];
    let mut z = vec![0.0; k];
    (0..t)
        .map(|s| {
            let xs = &x[s * k..(s + 1) * k];
            let (ld, quad) = chol_terms(&r[s * kk..(s + 1) * kk], k, xs, &mut l, &mut z)?;
            let ss: f64 = xs.iter().map(|v| v * v).sum();
            Some(-0.5 * (ld + quad - ss))
        })
        .collect()
}

/// Central differences that fall back to one-sided steps where the
/// objective is infeasible on one side.
pub(crate) fn robust_gradient<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64], f0: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 1e-5 * x[i].abs().max(1.0);
            xp[i] = x[i] + h;
            let fp = f(&xp);
            xp[i] = x[i] - h;
            let fm = f(&xp);
            xp[i] = x[i];
            match (fp.is_finite(), fm.is_finite()) {
                (true, true) => (fp - fm) / (2.0 * h),
                (true, false) => (fp - f0) / h,
                (false, true) => (f0 - fm) / h,
                (false, false) => 0.0,
            }
        })
        .collect()
}

/// OPG standard errors: inverse of `Σ_t s_t s_t'` with `s_t` the numerical
/// score of observation t with respect to the natural parameters.
pub(crate) fn opg_std_errors<F>(theta: &[f64], mut contributions: F) -> Option<Vec<f64>>
where
    F: FnMut(&[f64]) -> Option<Vec<f64>>,
{
    let m = theta.len();
    let mut scores: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut v = theta.to_vec();
    for j in 0..m {
        let h = 1e-6 * theta[j].abs().max(1e-3);
        v[j] = theta[j] + h;
        let up = contributions(&v);
        v[j] = theta[j] - h;
        let dn = contributions(&v);
        v[j] = theta[j];
        let col = match (up, dn) {
            (Some(u), Some(d)) => u.iter().zip(&d).map(|(a, b)| (a - b) / (2.0 * h)).collect(),
            (Some(u), None) => {
                let c = contributions(theta)?;
                u.iter().zip(&c).map(|(a, b)| (a - b) / h).collect()
            }
            (None, Some(d)) => {
                let c = contributions(theta)?;
                c.iter().zip(&d).map(|(a, b)| (a - b) / h).collect()
            }
            (None, None) => return None,
        };
        scores.push(col);
    }
    let t = scores[0].len();
    let opg: Vec<Vec<f64>> = (0..m)
        .map(|a| (0..m).map(|b| (0..t).map(|s| scores[a][s] * scores[b][s]).sum()).collect())
        .collect();
    let inv = optim::invert_spd(&opg)?;
    Some((0..m).map(|j| inv[j][j].sqrt()).collect())
}

pub(crate) const MIN_CORR_OBS: usize = 250;
/// Gradient max-norm accepted, with a warning, when the optimizer stops early.
pub(crate) const LOOSE_GRAD_TOL: f64 = 1e-3;

pub(crate) fn boundary_warnings(alpha: f64, beta: f64) -> Vec<String> {
    let mut w = Vec::new();
    if alpha < 1e-4 {
        w.push(format!("news coefficient at lower bound ({alpha:.2e})"));
    }
    if beta < 1e-4 {
        w.push(format!("decay coefficient at lower bound ({beta:.2e})"));
    }
    if alpha + beta > 0.9999 {
        w.push(format!("persistence at upper bound ({:.6})", alpha + beta));
    }
    w
}

pub fn fit_dcc(xi: &StdResidualPanel, p: usize, q: usize) -> Result<DccFit> {
    fit_dcc_with(xi, p, q, &CorrOptions::default())
}

/// Two-stage QMLE of a scalar DCC with `p` news lags and `q` decay lags.
///
/// `Q̄` is fixed at the sample correlation; the coefficients are mapped to
/// the open simplex `{α, β ≥ 0, Σα + Σβ < 1}`.
pub fn fit_dcc_with(xi: &StdResidualPanel, p: usize, q: usize, opts: &CorrOptions) -> Result<DccFit> {
    if p == 0 {
        return Err(Error::InvalidParams("DCC needs at least one news lag".into()));
    }
    let t = xi.len();
    if t < MIN_CORR_OBS {
        return Err(Error::SampleTooShort {
            needed: MIN_CORR_OBS,
            got: t,
        });
    }
    let k = xi.dim();
    let qbar = unconditional_corr(xi)?;
    let q1 = opts.initial_q.clone().unwrap_or_else(|| qbar.clone());
    if q1.shape() != (k, k) || q1.clone().cholesky().is_none() {
        return Err(Error::InvalidParams("initial Q must be k×k positive definite".into()));
    }
    let x = xi.rows();
    let (qb, q1f) = (flat(&qbar), flat(&q1));
    let tf = t as f64;

    let contributions = |theta: &[f64]| -> Option<Vec<f64>> {
        let (a, b) = theta.split_at(p);
        if validate(a, b).is_err() {
            return None;
        }
        let qp = q_recursion(&x, k, a, b, &qb, &q1f);
        let r = rescale(&qp, k).ok()?;
        corr_contributions(&x, k, &r)
    };
    let mut objective = |raw: &[f64]| -> f64 {
        let theta = optim::simplex_from_raw(raw);
        match contributions(&theta) {
            Some(c) => -c.iter().sum::<f64>() / tf,
            None => f64::NAN,
        }
    };

    let split = |a: f64, b: f64| -> Vec<f64> {
        let mut v = vec![a / p as f64; p];
        v.extend(std::iter::repeat_n(b / q.max(1) as f64, q));
        v
    };
    let starts = [(0.02, 0.95), (0.05, 0.90), (0.01, 0.97), (0.10, 0.80), (0.003, 0.99)];
    let mut best: Option<(f64, Vec<f64>)> = None;
    for (a, b) in starts {
        let raw = optim::raw_from_simplex(&split(a, b));
        let f = objective(&raw);
        if f.is_finite() && best.as_ref().is_none_or(|(bf, _)| f < *bf) {
            best = Some((f, raw));
        }
    }
    let (_, start) = best.ok_or_else(|| Error::NonConvergence("DCC objective not finite at any start".into()))?;

    let min = optim::bfgs(
        |raw| {
            let f = objective(raw);
            let g = robust_gradient(&mut objective, raw, f);
            (f, g)
        },
        &start,
        &opts.bfgs,
    );
    let mut warnings = Vec::new();
    if !min.status.converged() {
        if min.grad_max.is_finite() && min.grad_max < LOOSE_GRAD_TOL {
            warnings.push(format!("optimizer stopped early: {}", min.status));
        } else {
            return Err(Error::NonConvergence(format!("DCC: {}", min.status)));
        }
    }
    let mut theta = optim::simplex_from_raw(&min.x);
    // the no-news corner is constant correlation; the softmax map only
    // approaches it, so compare against it directly
    let mut corner = theta.clone();
    corner[..p].iter_mut().for_each(|a| *a = 0.0);
    if let Some(c) = contributions(&corner) {
        if -c.iter().sum::<f64>() / tf < min.f {
            theta = corner;
        }
    }
    let (alpha, beta) = (theta[..p].to_vec(), theta[p..].to_vec());
    let (q_path, r_path) = dcc_filter_with_start(xi, &alpha, &beta, &qbar, &q1)?;
    let loglik = corr_path_loglik(xi, &r_path)?;
    let corr_loglik = corr_component_loglik(xi, &r_path)?;
    let std_errors = if opts.std_errors {
        opg_std_errors(&theta, contributions)
    } else {
        None
    };
    warnings.extend(boundary_warnings(
        alpha.iter().sum(),
        beta.iter().sum(),
    ));
    Ok(DccFit {
        alpha,
        beta,
        qbar,
        q_path,
        r_path,
        loglik,
        corr_loglik,
        std_errors,
        status: min.status,
        iterations: min.iterations,
        warnings,
    })
}
