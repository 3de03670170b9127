use nalgebra::{DMatrix, DVector};

use super::dcc::{
    boundary_warnings, corr_contributions, fit_dcc_with, opg_std_errors, rescale, robust_gradient, LOOSE_GRAD_TOL,
    MIN_CORR_OBS,
};
use super::{corr_component_loglik, corr_path_loglik, unconditional_corr, CorrOptions, MatrixPath, StdResidualPanel};
use crate::error::{Error, Result};
use crate::linalg;
use crate::optim::{self, Status};

/// Dimension above which the generalized models are flagged as unreliable.
pub const LARGE_K_WARNING: usize = 10;

/// Generalized (diagonal) DCC estimate, optionally with the asymmetric
/// negative-shock term.
#[derive(Debug, Clone)]
pub struct AgdccFit {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// All zero for the symmetric model.
    pub g: Vec<f64>,
    pub asymmetric: bool,
    pub qbar: DMatrix<f64>,
    pub nbar: DMatrix<f64>,
    pub q_path: MatrixPath,
    pub r_path: MatrixPath,
    pub loglik: f64,
    pub corr_loglik: f64,
    /// OPG standard errors for `a`, `b` and (if asymmetric) `g`.
    pub std_errors: Option<Vec<f64>>,
    pub status: Status,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

/// `N̄ = T^{-1} Σ n_t n_t'` with `n_t = min(ξ_t, 0)` elementwise.
pub fn negative_moment(xi: &StdResidualPanel) -> DMatrix<f64> {
    let (t, k) = xi.values.shape();
    let n = xi.values.map(|v| v.min(0.0));
    let mut m = n.transpose() * &n / t as f64;
    for i in 0..k {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Largest eigenvalue of `Q̄^{-1/2} N̄ Q̄^{-1/2}`. With `a_i² + b_i² + δ g_i² < 1`
/// the asymmetric term cannot by itself exhaust the stationarity budget.
pub fn asymmetry_bound(qbar: &DMatrix<f64>, nbar: &DMatrix<f64>) -> Result<f64> {
    let inv = qbar.clone().cholesky().ok_or(Error::InterceptNotPsd)?.inverse();
    let s = linalg::sym_sqrt(&inv);
    Ok(linalg::max_eigenvalue(&(&s * nbar * &s)))
}

/// One step of the recursion written as in the model definition:
/// `(Q̄ - A'Q̄A - B'Q̄B - G'N̄G) + A'ξξ'A + B'QB + G'nn'G` with diagonal A, B, G.
pub fn agdcc_step_direct(
    q_prev: &DMatrix<f64>,
    xi_prev: &DVector<f64>,
    a: &[f64],
    b: &[f64],
    g: &[f64],
    qbar: &DMatrix<f64>,
    nbar: &DMatrix<f64>,
) -> DMatrix<f64> {
    let am = DMatrix::from_diagonal(&DVector::from_column_slice(a));
    let bm = DMatrix::from_diagonal(&DVector::from_column_slice(b));
    let gm = DMatrix::from_diagonal(&DVector::from_column_slice(g));
    let n = xi_prev.map(|v| v.min(0.0));
    let intercept = qbar - am.transpose() * qbar * &am - bm.transpose() * qbar * &bm - gm.transpose() * nbar * &gm;
    intercept
        + am.transpose() * xi_prev * xi_prev.transpose() * &am
        + bm.transpose() * q_prev * &bm
        + gm.transpose() * &n * n.transpose() * &gm
}

/// The same step in deviation-from-target form:
/// `q_ij = q̄_ij + a_i a_j (ξ_i ξ_j - q̄_ij) + b_i b_j (q_ij - q̄_ij) + g_i g_j (n_i n_j - n̄_ij)`.
///
/// With diagonal loadings `(A'MA)_ij = a_i a_j m_ij`, so the squared loading
/// matrices act elementwise through the outer products `a a'`, `b b'`, `g g'`.
pub fn agdcc_step_rearranged(
    q_prev: &DMatrix<f64>,
    xi_prev: &DVector<f64>,
    a: &[f64],
    b: &[f64],
    g: &[f64],
    qbar: &DMatrix<f64>,
    nbar: &DMatrix<f64>,
) -> DMatrix<f64> {
    let k = a.len();
    let mut q = DMatrix::zeros(k, k);
    step_flat(
        q.as_mut_slice(),
        q_prev.as_slice(),
        xi_prev.as_slice(),
        a,
        b,
        g,
        qbar.as_slice(),
        nbar.as_slice(),
        k,
    );
    q
}

/// Flat deviation-form step; works for either storage order since every
/// operand is symmetric and indexed identically.
#[allow(clippy::too_many_arguments)]
#[inline]
fn step_flat(out: &mut [f64], q: &[f64], x: &[f64], a: &[f64], b: &[f64], g: &[f64], qbar: &[f64], nbar: &[f64], k: usize) {
    for i in 0..k {
        let ni = x[i].min(0.0);
        for j in 0..=i {
            let e = i * k + j;
            let nj = x[j].min(0.0);
            let v = qbar[e]
                + a[i] * a[j] * (x[i] * x[j] - qbar[e])
                + b[i] * b[j] * (q[e] - qbar[e])
                + g[i] * g[j] * (ni * nj - nbar[e]);
            out[e] = v;
            out[j * k + i] = v;
        }
    }
}

fn intercept_is_pd(a: &[f64], b: &[f64], g: &[f64], qbar: &DMatrix<f64>, nbar: &DMatrix<f64>) -> bool {
    let k = a.len();
    let c = DMatrix::from_fn(k, k, |i, j| {
        qbar[(i, j)] * (1.0 - a[i] * a[j] - b[i] * b[j]) - g[i] * g[j] * nbar[(i, j)]
    });
    c.cholesky().is_some()
}

fn check_params(a: &[f64], b: &[f64], g: &[f64], k: usize) -> Result<()> {
    if a.len() != k || b.len() != k || g.len() != k {
        return Err(Error::DimensionMismatch(format!("loading vectors must have length {k}")));
    }
    for i in 0..k {
        if ![a[i], b[i], g[i]].iter().all(|v| v.is_finite()) || a[i] < 0.0 || b[i] < 0.0 {
            return Err(Error::InvalidParams("loadings must be finite with a, b non-negative".into()));
        }
        if !(a[i] * a[i] + b[i] * b[i] < 1.0) {
            return Err(Error::InvalidParams(format!("a² + b² must be below 1 for series {i}")));
        }
    }
    Ok(())
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let k = m.nrows();
    (0..k * k).map(|n| m[(n / k, n % k)]).collect()
}

fn q_path(x: &[f64], k: usize, a: &[f64], b: &[f64], g: &[f64], qbar: &[f64], nbar: &[f64], q1: &[f64]) -> Vec<f64> {
    let kk = k * k;
    let t = x.len() / k;
    let mut q = vec![0.0; t * kk];
    if t == 0 {
        return q;
    }
    q[..kk].copy_from_slice(q1);
    for s in 1..t {
        let (done, rest) = q.split_at_mut(s * kk);
        step_flat(
            &mut rest[..kk],
            &done[(s - 1) * kk..],
            &x[(s - 1) * k..s * k],
            a,
            b,
            g,
            qbar,
            nbar,
            k,
        );
    }
    q
}

/// Pseudo-correlation and correlation paths of the generalized DCC with
/// `Q_1 = Q̄`. Pass an empty `g` for the symmetric model.
pub fn gdcc_filter(
    xi: &StdResidualPanel,
    a: &[f64],
    b: &[f64],
    g: &[f64],
    qbar: &DMatrix<f64>,
    nbar: &DMatrix<f64>,
) -> Result<(MatrixPath, MatrixPath)> {
    gdcc_filter_with_start(xi, a, b, g, qbar, nbar, qbar)
}

fn gdcc_filter_with_start(
    xi: &StdResidualPanel,
    a: &[f64],
    b: &[f64],
    g: &[f64],
    qbar: &DMatrix<f64>,
    nbar: &DMatrix<f64>,
    q1: &DMatrix<f64>,
) -> Result<(MatrixPath, MatrixPath)> {
    let k = xi.dim();
    let zeros = vec![0.0; k];
    let g = if g.is_empty() { &zeros[..] } else { g };
    check_params(a, b, g, k)?;
    if qbar.shape() != (k, k) || nbar.shape() != (k, k) || q1.shape() != (k, k) {
        return Err(Error::DimensionMismatch("target matrices do not match the panel".into()));
    }
    if !intercept_is_pd(a, b, g, qbar, nbar) {
        return Err(Error::InterceptNotPsd);
    }
    let q = q_path(&xi.rows(), k, a, b, g, &row_major(qbar), &row_major(nbar), &row_major(q1));
    let r = rescale(&q, k)?;
    Ok((MatrixPath::from_raw(k, q), MatrixPath::from_raw(k, r)))
}

/// Maps per-series raw values to loadings. Each series has `(u_a, u_b)`
/// mapped to the simplex `a² + b² + s = 1`; the asymmetric model adds `w`
/// with `g = tanh(w) √(s/δ)` so that `a² + b² + δ g² < 1`.
struct Layout {
    k: usize,
    asymmetric: bool,
    delta: f64,
}

impl Layout {
    fn len(&self) -> usize {
        self.k * if self.asymmetric { 3 } else { 2 }
    }

    fn loadings(&self, raw: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let k = self.k;
        let mut a = vec![0.0; k];
        let mut b = vec![0.0; k];
        let mut g = vec![0.0; k];
        for i in 0..k {
            let c = optim::simplex_from_raw(&[raw[2 * i], raw[2 * i + 1]]);
            a[i] = c[0].sqrt();
            b[i] = c[1].sqrt();
            if self.asymmetric {
                let slack = (1.0 - c[0] - c[1]).max(0.0);
                g[i] = raw[2 * k + i].tanh() * (slack / self.delta).sqrt();
            }
        }
        (a, b, g)
    }

    /// Raw vector for loadings `a`, `b` and asymmetry at `tanh(w) = g_frac`
    /// of its bound.
    fn raw(&self, a: &[f64], b: &[f64], g_frac: f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        for i in 0..self.k {
            v.extend(optim::raw_from_simplex(&[a[i] * a[i], b[i] * b[i]]));
        }
        if self.asymmetric {
            v.extend(std::iter::repeat_n(g_frac.atanh(), self.k));
        }
        v
    }
}

pub fn fit_gdcc(xi: &StdResidualPanel, asymmetric: bool) -> Result<AgdccFit> {
    fit_gdcc_with(xi, asymmetric, &CorrOptions::default())
}

/// Two-stage QMLE of the generalized DCC.
///
/// The symmetric model starts from the scalar DCC optimum (equal loadings).
/// The asymmetric model starts from the symmetric `a`, `b` with nonzero `g`
/// and keeps the symmetric optimum if no start improves on it, so each fit
/// is at least as good as the model it nests. The intercept is checked
/// for positive definiteness on every evaluation; infeasible points are
/// rejected by the line search.
pub fn fit_gdcc_with(xi: &StdResidualPanel, asymmetric: bool, opts: &CorrOptions) -> Result<AgdccFit> {
    let t = xi.len();
    if t < MIN_CORR_OBS {
        return Err(Error::SampleTooShort {
            needed: MIN_CORR_OBS,
            got: t,
        });
    }
    let k = xi.dim();
    let qbar = unconditional_corr(xi)?;
    let nbar = negative_moment(xi);
    let q1 = opts.initial_q.clone().unwrap_or_else(|| qbar.clone());
    let mut warnings = Vec::new();
    if k > LARGE_K_WARNING {
        warnings.push(format!("{k} series: generalized DCC estimates are unreliable at this size"));
    }

    let quiet = CorrOptions {
        std_errors: false,
        ..opts.clone()
    };
    let scalar = fit_dcc_with(xi, 1, 1, &quiet)?;
    let (alpha, beta) = (scalar.alpha1(), scalar.beta1());
    let sym = estimate(
        xi,
        &qbar,
        &nbar,
        &q1,
        Layout {
            k,
            asymmetric: false,
            delta: 1.0,
        },
        &vec![alpha.sqrt(); k],
        &vec![beta.sqrt(); k],
        0.0,
        opts,
    )?;
    let mut fit = if asymmetric {
        let delta = asymmetry_bound(&qbar, &nbar)?;
        let delta = if delta > 1e-12 { delta } else { 1.0 };
        // g = 0 is a stationary point of the likelihood (g enters through
        // products g_i g_j), so the search starts from nonzero loadings and
        // the symmetric optimum is kept as the g = 0 candidate
        let mut best = AgdccFit {
            asymmetric: true,
            std_errors: None,
            ..sym.clone()
        };
        let mut found_asym = false;
        for g_start in [0.2, 0.6] {
            let layout = Layout {
                k,
                asymmetric: true,
                delta,
            };
            let Ok(cand) = estimate(xi, &qbar, &nbar, &q1, layout, &sym.a, &sym.b, g_start, opts) else {
                continue;
            };
            if cand.corr_loglik > best.corr_loglik {
                best = cand;
                found_asym = true;
            }
        }
        if !found_asym && opts.std_errors {
            best.std_errors = sym.std_errors.as_ref().map(|se| {
                let mut v = se.clone();
                v.extend(std::iter::repeat_n(f64::NAN, k));
                v
            });
        }
        best
    } else {
        sym
    };
    warnings.append(&mut fit.warnings);
    fit.warnings = warnings;
    Ok(fit)
}

#[allow(clippy::too_many_arguments)]
fn estimate(
    xi: &StdResidualPanel,
    qbar: &DMatrix<f64>,
    nbar: &DMatrix<f64>,
    q1: &DMatrix<f64>,
    layout: Layout,
    a0: &[f64],
    b0: &[f64],
    g_start: f64,
    opts: &CorrOptions,
) -> Result<AgdccFit> {
    let k = layout.k;
    let x = xi.rows();
    let (qb, nb, q1f) = (row_major(qbar), row_major(nbar), row_major(q1));
    let tf = xi.len() as f64;

    let contributions = |a: &[f64], b: &[f64], g: &[f64]| -> Option<Vec<f64>> {
        if check_params(a, b, g, k).is_err() || !intercept_is_pd(a, b, g, qbar, nbar) {
            return None;
        }
        let qp = q_path(&x, k, a, b, g, &qb, &nb, &q1f);
        let r = rescale(&qp, k).ok()?;
        corr_contributions(&x, k, &r)
    };
    let mut objective = |raw: &[f64]| -> f64 {
        let (a, b, g) = layout.loadings(raw);
        match contributions(&a, &b, &g) {
            Some(c) => -c.iter().sum::<f64>() / tf,
            None => f64::NAN,
        }
    };

    // shrink toward zero dynamics until the intercept is feasible
    let mut start = layout.raw(a0, b0, g_start);
    let mut shrink = 1.0;
    while !objective(&start).is_finite() {
        shrink *= 0.5;
        if shrink < 1e-3 {
            return Err(Error::InterceptNotPsd);
        }
        let a: Vec<f64> = a0.iter().map(|v| v * shrink).collect();
        let b: Vec<f64> = b0.iter().map(|v| v * shrink).collect();
        start = layout.raw(&a, &b, g_start);
    }

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
            return Err(Error::NonConvergence(format!("generalized DCC: {}", min.status)));
        }
    }
    let (a, b, mut g) = layout.loadings(&min.x);
    if layout.asymmetric {
        // only products g_i g_j enter, so a global sign flip is the same model
        if g.iter().all(|v| *v <= 0.0) {
            g.iter_mut().for_each(|v| *v = -*v);
        } else if g.iter().any(|v| *v < 0.0) {
            warnings.push("asymmetry loadings have mixed signs".into());
        }
    }
    for i in 0..k {
        for w in boundary_warnings(a[i] * a[i], b[i] * b[i]) {
            warnings.push(format!("series {i}: {w}"));
        }
    }

    let (q_path, r_path) = gdcc_filter_with_start(xi, &a, &b, &g, qbar, nbar, q1)?;
    let loglik = corr_path_loglik(xi, &r_path)?;
    let corr_loglik = corr_component_loglik(xi, &r_path)?;
    let std_errors = if opts.std_errors {
        let mut theta = [a.clone(), b.clone()].concat();
        if layout.asymmetric {
            theta.extend(&g);
        }
        let zeros = vec![0.0; k];
        opg_std_errors(&theta, |v| {
            let g = if layout.asymmetric { &v[2 * k..] } else { &zeros[..] };
            contributions(&v[..k], &v[k..2 * k], g)
        })
    } else {
        None
    };
    Ok(AgdccFit {
        a,
        b,
        g,
        asymmetric: layout.asymmetric,
        qbar: qbar.clone(),
        nbar: nbar.clone(),
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

#[cfg(test)]
mod tests {
    use super::super::dcc::dcc_filter;
    use super::super::tests::{correlated, panel};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_case(rng: &mut ChaCha20Rng, k: usize) -> (DMatrix<f64>, DVector<f64>, Vec<f64>, Vec<f64>, Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
        let m = DMatrix::from_fn(k, k + 2, |_, _| rng.sample::<f64, _>(StandardNormal));
        let qbar = linalg::to_correlation(&(&m * m.transpose()));
        let n = DMatrix::from_fn(k, k + 2, |_, _| rng.sample::<f64, _>(StandardNormal).min(0.0));
        let nbar = &n * n.transpose() / (k + 2) as f64;
        let qp = DMatrix::from_fn(k, k + 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q_prev = &qp * qp.transpose();
        let x = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let a: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..0.4)).collect();
        let b: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..0.9)).collect();
        let g: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..0.3)).collect();
        (q_prev, x, a, b, g, qbar, nbar)
    }

    #[test]
    fn rearranged_step_equals_direct_step() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for k in [2, 3, 5] {
            for _ in 0..30 {
                let (q, x, a, b, g, qbar, nbar) = random_case(&mut rng, k);
                let d = agdcc_step_direct(&q, &x, &a, &b, &g, &qbar, &nbar);
                let r = agdcc_step_rearranged(&q, &x, &a, &b, &g, &qbar, &nbar);
                assert!((d - r).abs().max() < 1e-12);
            }
        }
    }

    #[test]
    fn equal_loadings_reproduce_scalar_dcc() {
        let xi = correlated(0.3, 400, 7);
        let qbar = unconditional_corr(&xi).unwrap();
        let nbar = negative_moment(&xi);
        let (alpha, beta): (f64, f64) = (0.04, 0.93);
        let (qs, rs) = dcc_filter(&xi, &[alpha], &[beta], &qbar).unwrap();
        let (qg, rg) = gdcc_filter(&xi, &[alpha.sqrt(); 2], &[beta.sqrt(); 2], &[], &qbar, &nbar).unwrap();
        assert!(qs.max_abs_diff(&qg) < 1e-8);
        assert!(rs.max_abs_diff(&rg) < 1e-8);
        let (qa, _) = gdcc_filter(&xi, &[alpha.sqrt(); 2], &[beta.sqrt(); 2], &[0.0; 2], &qbar, &nbar).unwrap();
        assert_eq!(qa, qg);
    }

    #[test]
    fn negative_moment_matches_definition() {
        let xi = panel(DMatrix::from_row_slice(3, 2, &[-1.0, 2.0, 0.5, -0.5, -2.0, -1.0]));
        let n = negative_moment(&xi);
        assert!((n[(0, 0)] - (1.0 + 4.0) / 3.0).abs() < 1e-15);
        assert!((n[(0, 1)] - 2.0 / 3.0).abs() < 1e-15);
        assert!((n[(1, 1)] - (0.25 + 1.0) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn infeasible_intercept_rejected() {
        let xi = correlated(0.9, 300, 8);
        let qbar = unconditional_corr(&xi).unwrap();
        let nbar = negative_moment(&xi);
        // very different loadings with strongly correlated targets
        let r = gdcc_filter(&xi, &[0.95, 0.05], &[0.05, 0.95], &[], &qbar, &nbar);
        assert!(matches!(r, Err(Error::InterceptNotPsd)));
    }

    /// Bivariate AG-DCC draws with skewed shocks so joint negatives matter.
    fn simulate_agdcc(a: f64, b: f64, g: f64, t: usize, seed: u64) -> StdResidualPanel {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let qbar = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 1.0]);
        // N̄ for this DGP from a pilot draw of the shocks at Q̄
        let pilot: Vec<[f64; 2]> = (0..20_000)
            .map(|_| {
                let z1: f64 = StandardNormal.sample(&mut rng);
                let z2: f64 = StandardNormal.sample(&mut rng);
                [z1, 0.4 * z1 + (1.0f64 - 0.16).sqrt() * z2]
            })
            .collect();
        let mut nbar = DMatrix::zeros(2, 2);
        for p in &pilot {
            for i in 0..2 {
                for j in 0..2 {
                    nbar[(i, j)] += p[i].min(0.0) * p[j].min(0.0) / pilot.len() as f64;
                }
            }
        }
        let mut q = qbar.clone();
        let mut x = DVector::zeros(2);
        let mut out = DMatrix::zeros(t, 2);
        let burn = 500;
        for s in 0..t + burn {
            if s > 0 {
                q = agdcc_step_rearranged(&q, &x, &[a, a], &[b, b], &[g, g], &qbar, &nbar);
            }
            let r = linalg::to_correlation(&q)[(0, 1)];
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            x = DVector::from_vec(vec![z1, r * z1 + (1.0 - r * r).sqrt() * z2]);
            if s >= burn {
                out.set_row(s - burn, &x.transpose());
            }
        }
        panel(out)
    }

    #[test]
    fn symmetric_fit_nests_scalar_and_asymmetric_nests_symmetric() {
        let xi = simulate_agdcc(0.2, 0.95, 0.0, 2000, 9);
        let scalar = fit_dcc_with(&xi, 1, 1, &CorrOptions::default()).unwrap();
        let sym = fit_gdcc(&xi, false).unwrap();
        let asym = fit_gdcc(&xi, true).unwrap();
        assert!(sym.corr_loglik >= scalar.corr_loglik - 1e-6);
        assert!(asym.corr_loglik >= sym.corr_loglik - 1e-6);
        assert!(asym.corr_loglik - sym.corr_loglik < 5.0);
        sym.r_path.check_correlation(1e-10).unwrap();
        asym.r_path.check_correlation(1e-10).unwrap();
        for i in 0..2 {
            assert!(sym.a[i].powi(2) + sym.b[i].powi(2) < 1.0);
        }
    }

    #[test]
    fn asymmetry_detected() {
        let xi = simulate_agdcc(0.15, 0.95, 0.25, 6000, 10);
        let fit = fit_gdcc(&xi, true).unwrap();
        assert!(fit.g.iter().all(|g| *g > 0.0), "{:?}", fit.g);
    }
}
