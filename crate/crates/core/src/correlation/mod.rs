//! Conditional-correlation models on standardized residuals: constant (CCC),
//! scalar DCC, and the generalized diagonal DCC with optional asymmetric
//! response to joint negative shocks.
//!
//! All models are estimated in two stages with correlation targeting: the
//! unconditional correlation `Q̄` (and the negative-shock moment `N̄`) are
//! fixed at sample values and only the dynamics are optimized.

mod dcc;
mod gdcc;

pub use dcc::{dcc_filter, dcc_filter_with_start, fit_dcc, fit_dcc_with, DccFit};
pub use gdcc::{
    agdcc_step_direct, agdcc_step_rearranged, asymmetry_bound, fit_gdcc, fit_gdcc_with, gdcc_filter,
    negative_moment, AgdccFit,
};

use chrono::NaiveDate;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::garch::UnivariateFit;
use crate::optim::BfgsOptions;
use crate::timeseries::CrisisWindow;

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Standardized residuals `ξ_t = ε_t / σ_t` for k ≥ 2 series.
#[derive(Debug, Clone)]
pub struct StdResidualPanel {
    pub dates: Vec<NaiveDate>,
    /// Names of the series the residuals came from.
    pub source: Vec<String>,
    /// T×k.
    pub values: DMatrix<f64>,
}

impl StdResidualPanel {
    pub fn new(dates: Vec<NaiveDate>, source: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        let (t, k) = values.shape();
        if k < 2 {
            return Err(Error::DimensionMismatch(format!("need at least 2 series, got {k}")));
        }
        if dates.len() != t || source.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "{} dates and {} names for a {t}x{k} panel",
                dates.len(),
                source.len()
            )));
        }
        if t <= k {
            return Err(Error::TooFewObservations { needed: k + 1, got: t });
        }
        for j in 0..k {
            if let Some(row) = values.column(j).iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    asset: source[j].clone(),
                    row: row + 1,
                });
            }
        }
        Ok(Self { dates, source, values })
    }

    /// Panel from fitted univariate models sharing one date index.
    pub fn from_fits(dates: Vec<NaiveDate>, names: Vec<String>, fits: &[&UnivariateFit]) -> Result<Self> {
        let t = dates.len();
        if fits.iter().any(|f| f.std_residuals.len() != t) {
            return Err(Error::DimensionMismatch("residual lengths differ from the date index".into()));
        }
        let values = DMatrix::from_fn(t, fits.len(), |r, c| fits[c].std_residuals[r]);
        Self::new(dates, names, values)
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    /// Two-series sub-panel.
    pub fn pair(&self, i: usize, j: usize) -> Result<Self> {
        let k = self.dim();
        if i >= k || j >= k || i == j {
            return Err(Error::DimensionMismatch(format!("invalid pair ({i}, {j}) for {k} series")));
        }
        let values = DMatrix::from_fn(self.len(), 2, |r, c| self.values[(r, if c == 0 { i } else { j })]);
        Ok(Self {
            dates: self.dates.clone(),
            source: vec![self.source[i].clone(), self.source[j].clone()],
            values,
        })
    }

    /// Row-major copy, `T·k` long.
    pub(crate) fn rows(&self) -> Vec<f64> {
        let (t, k) = self.values.shape();
        let mut out = Vec::with_capacity(t * k);
        for r in 0..t {
            for c in 0..k {
                out.push(self.values[(r, c)]);
            }
        }
        out
    }
}

/// A sequence of k×k matrices stored contiguously (row-major per matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPath {
    k: usize,
    data: Vec<f64>,
}

impl MatrixPath {
    pub(crate) fn from_raw(k: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len() % (k * k).max(1), 0);
        Self { k, data }
    }

    /// Builds a path from row-major k×k blocks laid end to end.
    pub fn from_flat(k: usize, data: Vec<f64>) -> Result<Self> {
        if k == 0 || data.len() % (k * k) != 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} values do not split into {k}×{k} matrices",
                data.len()
            )));
        }
        Ok(Self { k, data })
    }

    pub fn len(&self) -> usize {
        self.data.len() / (self.k * self.k)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn slice(&self, t: usize) -> &[f64] {
        let kk = self.k * self.k;
        &self.data[t * kk..(t + 1) * kk]
    }

    pub fn matrix(&self, t: usize) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.k, self.k, self.slice(t))
    }

    pub fn get(&self, t: usize, i: usize, j: usize) -> f64 {
        self.data[t * self.k * self.k + i * self.k + j]
    }

    /// Element `(i, j)` over time.
    pub fn series(&self, i: usize, j: usize) -> Vec<f64> {
        (0..self.len()).map(|t| self.get(t, i, j)).collect()
    }

    pub fn max_abs_diff(&self, other: &MatrixPath) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Checks that every matrix is a valid correlation matrix: symmetric,
    /// unit diagonal, entries in [-1, 1], smallest eigenvalue ≥ `-tol`.
    /// Returns the first offending index.
    pub fn check_correlation(&self, tol: f64) -> Result<()> {
        for t in 0..self.len() {
            let m = self.matrix(t);
            let bad_entry = (0..self.k).any(|i| {
                m[(i, i)] != 1.0
                    || (0..self.k).any(|j| m[(i, j)] != m[(j, i)] || !(m[(i, j)].abs() <= 1.0))
            });
            if bad_entry || crate::linalg::min_eigenvalue(&m) < -tol {
                return Err(Error::NonPositiveDefiniteR(t));
            }
        }
        Ok(())
    }
}

/// Correlation path under the DCC family.
pub type CorrPath = MatrixPath;

/// Shared estimation settings for the correlation models.
#[derive(Debug, Clone)]
pub struct CorrOptions {
    /// Starting pseudo-correlation `Q_1`; defaults to `Q̄`.
    pub initial_q: Option<DMatrix<f64>>,
    pub bfgs: BfgsOptions,
    /// Compute outer-product-of-gradients standard errors.
    pub std_errors: bool,
}

impl Default for CorrOptions {
    fn default() -> Self {
        Self {
            initial_q: None,
            bfgs: BfgsOptions::default(),
            std_errors: true,
        }
    }
}

/// Sample correlation of the columns.
pub fn unconditional_corr(xi: &StdResidualPanel) -> Result<DMatrix<f64>> {
    let (t, k) = xi.values.shape();
    if t <= k {
        return Err(Error::TooFewObservations { needed: k + 1, got: t });
    }
    let means: Vec<f64> = (0..k).map(|j| xi.values.column(j).mean()).collect();
    let centered = DMatrix::from_fn(t, k, |r, c| xi.values[(r, c)] - means[c]);
    let cov = centered.transpose() * &centered;
    for j in 0..k {
        let scale = xi.values.column(j).amax().max(f64::MIN_POSITIVE);
        if !(cov[(j, j)] > 1e-24 * scale * scale * t as f64) {
            return Err(Error::ZeroVariance);
        }
    }
    let mut r = crate::linalg::to_correlation(&cov);
    for i in 0..k {
        for j in 0..k {
            r[(i, j)] = r[(i, j)].clamp(-1.0, 1.0);
        }
    }
    Ok(r)
}

/// Cholesky of a small row-major SPD matrix into `l`, returning
/// `(ln|M|, x' M^{-1} x)`; `None` if not positive definite.
pub(crate) fn chol_terms(m: &[f64], k: usize, x: &[f64], l: &mut [f64], z: &mut [f64]) -> Option<(f64, f64)> {
    let mut logdet = 0.0;
    for i in 0..k {
        for j in 0..=i {
            let mut s = m[i * k + j];
            for p in 0..j {
                s -= l[i * k + p] * l[j * k + p];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                let d = s.sqrt();
                l[i * k + i] = d;
                logdet += 2.0 * d.ln();
            } else {
                l[i * k + j] = s / l[j * k + j];
            }
        }
    }
    let mut quad = 0.0;
    for i in 0..k {
        let mut s = x[i];
        for p in 0..i {
            s -= l[i * k + p] * z[p];
        }
        z[i] = s / l[i * k + i];
        quad += z[i] * z[i];
    }
    Some((logdet, quad))
}

/// Per-observation `ln|R_t| + ξ_t' R_t^{-1} ξ_t`.
pub(crate) fn corr_terms(x: &[f64], r: &MatrixPath) -> Result<Vec<f64>> {
    let k = r.dim();
    let mut l = vec![0.0; k * k];
    let mut z = vec![0.0; k];
    (0..r.len())
        .map(|t| {
            chol_terms(r.slice(t), k, &x[t * k..(t + 1) * k], &mut l, &mut z)
                .map(|(ld, q)| ld + q)
                .ok_or(Error::NonPositiveDefiniteR(t))
        })
        .collect()
}

/// `-½ Σ_t (k ln 2π + ln|R_t| + ξ_t' R_t^{-1} ξ_t)`: the Gaussian
/// log-likelihood of the standardized residuals.
pub fn corr_path_loglik(xi: &StdResidualPanel, r: &MatrixPath) -> Result<f64> {
    check_aligned(xi.len(), xi.dim(), r)?;
    let terms = corr_terms(&xi.rows(), r)?;
    let k = xi.dim() as f64;
    Ok(-0.5 * terms.iter().map(|v| k * LN_2PI + v).sum::<f64>())
}

/// Correlation component `-½ Σ_t (ln|R_t| + ξ_t' R_t^{-1} ξ_t - ξ_t' ξ_t)`,
/// the part maximized in the second estimation stage.
pub fn corr_component_loglik(xi: &StdResidualPanel, r: &MatrixPath) -> Result<f64> {
    check_aligned(xi.len(), xi.dim(), r)?;
    let x = xi.rows();
    let terms = corr_terms(&x, r)?;
    let ss: f64 = x.iter().map(|v| v * v).sum();
    Ok(-0.5 * (terms.iter().sum::<f64>() - ss))
}

fn check_aligned(t: usize, k: usize, r: &MatrixPath) -> Result<()> {
    if r.len() != t || r.dim() != k {
        return Err(Error::DimensionMismatch(format!(
            "path {}x{}x{} vs residuals {t}x{k}",
            r.len(),
            r.dim(),
            r.dim()
        )));
    }
    Ok(())
}

/// Full Gaussian log-likelihood
/// `-½ Σ_t (k ln 2π + 2 ln|D_t| + ln|R_t| + ξ_t' R_t^{-1} ξ_t)`.
///
/// `xi` is T×k standardized residuals and `d` is T×k conditional standard
/// deviations. Works for any k ≥ 1.
pub fn dcc_loglik(xi: &DMatrix<f64>, r: &MatrixPath, d: &DMatrix<f64>) -> Result<f64> {
    let (t, k) = xi.shape();
    check_aligned(t, k, r)?;
    if d.shape() != (t, k) {
        return Err(Error::DimensionMismatch("standard-deviation path does not match residuals".into()));
    }
    let mut l = vec![0.0; k * k];
    let mut z = vec![0.0; k];
    let mut x = vec![0.0; k];
    let mut total = 0.0;
    for s in 0..t {
        for i in 0..k {
            x[i] = xi[(s, i)];
        }
        let (ld, q) = chol_terms(r.slice(s), k, &x, &mut l, &mut z).ok_or(Error::NonPositiveDefiniteR(s))?;
        let logd: f64 = (0..k).map(|i| d[(s, i)].ln()).sum();
        total += k as f64 * LN_2PI + 2.0 * logd + ld + q;
    }
    Ok(-0.5 * total)
}

/// Constant-correlation fit.
#[derive(Debug, Clone)]
pub struct CccFit {
    pub r: DMatrix<f64>,
    /// Gaussian log-likelihood of the standardized residuals under `R`.
    pub loglik: f64,
    /// Correlation component only.
    pub corr_loglik: f64,
}

impl CccFit {
    /// The constant correlation repeated over `t` periods.
    pub fn path(&self, t: usize) -> MatrixPath {
        let k = self.r.nrows();
        let one: Vec<f64> = (0..k * k).map(|n| self.r[(n / k, n % k)]).collect();
        MatrixPath::from_raw(k, one.repeat(t))
    }
}

pub fn fit_ccc(xi: &StdResidualPanel) -> Result<CccFit> {
    let r = unconditional_corr(xi)?;
    let fit = CccFit {
        r,
        loglik: 0.0,
        corr_loglik: 0.0,
    };
    let path = fit.path(xi.len());
    Ok(CccFit {
        loglik: corr_path_loglik(xi, &path)?,
        corr_loglik: corr_component_loglik(xi, &path)?,
        ..fit
    })
}

/// `H_t = D_t R_t D_t` from T×k standard deviations and a correlation path.
pub fn assemble_covariance(d: &DMatrix<f64>, r: &MatrixPath) -> Result<MatrixPath> {
    let (t, k) = d.shape();
    check_aligned(t, k, r)?;
    let mut data = Vec::with_capacity(t * k * k);
    for s in 0..t {
        let rs = r.slice(s);
        for i in 0..k {
            for j in 0..k {
                data.push(d[(s, i)] * rs[i * k + j] * d[(s, j)]);
            }
        }
    }
    Ok(MatrixPath::from_raw(k, data))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowStats {
    pub label: String,
    pub n: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Mean/min/max of one correlation pair over the whole sample and each window.
#[derive(Debug, Clone, PartialEq)]
pub struct DccSummary {
    pub pair: (usize, usize),
    /// First entry is the total sample.
    pub windows: Vec<WindowStats>,
}

pub const TOTAL_SAMPLE_LABEL: &str = "total";

pub fn summarize_dcc(
    r: &MatrixPath,
    dates: &[NaiveDate],
    pair: (usize, usize),
    windows: &[CrisisWindow],
) -> Result<DccSummary> {
    if dates.len() != r.len() {
        return Err(Error::DimensionMismatch("dates and correlation path differ in length".into()));
    }
    let (i, j) = pair;
    if i >= r.dim() || j >= r.dim() {
        return Err(Error::DimensionMismatch(format!("pair ({i}, {j}) out of range")));
    }
    let stats = |label: &str, keep: &dyn Fn(NaiveDate) -> bool| -> Result<WindowStats> {
        let vals: Vec<f64> = (0..r.len()).filter(|&t| keep(dates[t])).map(|t| r.get(t, i, j)).collect();
        if vals.is_empty() {
            return Err(Error::EmptyWindow(label.to_string()));
        }
        let n = vals.len();
        Ok(WindowStats {
            label: label.to_string(),
            n,
            // deviations from the first value keep a constant path exact
            mean: vals[0] + vals.iter().map(|v| v - vals[0]).sum::<f64>() / n as f64,
            min: vals.iter().copied().fold(f64::INFINITY, f64::min),
            max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    };
    let mut out = vec![stats(TOTAL_SAMPLE_LABEL, &|_| true)?];
    for w in windows {
        out.push(stats(&w.label, &|d| w.contains(d))?);
    }
    Ok(DccSummary { pair, windows: out })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use rand_distr::{Distribution, StandardNormal};

    pub(crate) fn panel(values: DMatrix<f64>) -> StdResidualPanel {
        let d0 = NaiveDate::from_ymd_opt(2005, 1, 3).unwrap();
        let k = values.ncols();
        StdResidualPanel::new(
            (0..values.nrows()).map(|i| d0 + chrono::Days::new(i as u64)).collect(),
            (0..k).map(|i| format!("x{i}")).collect(),
            values,
        )
        .unwrap()
    }

    pub(crate) fn correlated(rho: f64, t: usize, seed: u64) -> StdResidualPanel {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let s = (1.0 - rho * rho).sqrt();
        let mut m = DMatrix::zeros(t, 2);
        for r in 0..t {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            m[(r, 0)] = a;
            m[(r, 1)] = rho * a + s * b;
        }
        panel(m)
    }

    #[test]
    fn identical_and_opposite_columns() {
        let x = correlated(0.0, 50, 1);
        let same = panel(DMatrix::from_fn(50, 2, |r, _| x.values[(r, 0)]));
        assert!(unconditional_corr(&same).unwrap().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let opp = panel(DMatrix::from_fn(50, 2, |r, c| if c == 0 { x.values[(r, 0)] } else { -x.values[(r, 0)] }));
        assert!((unconditional_corr(&opp).unwrap()[(0, 1)] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn independent_columns_nearly_uncorrelated() {
        let r = unconditional_corr(&correlated(0.0, 10_000, 2)).unwrap();
        assert!(r[(0, 1)].abs() < 0.03);
    }

    #[test]
    fn zero_variance_column() {
        let m = DMatrix::from_fn(30, 2, |r, c| if c == 0 { 1.0 } else { r as f64 });
        assert!(matches!(unconditional_corr(&panel(m)), Err(Error::ZeroVariance)));
    }

    #[test]
    fn ccc_recovers_constant_correlation() {
        let fit = fit_ccc(&correlated(0.5, 5000, 3)).unwrap();
        assert!((fit.r[(0, 1)] - 0.5).abs() < 0.03);
    }

    #[test]
    fn orthogonal_columns_match_identity_model() {
        // columns with exactly zero sample covariance
        let m = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, -1.0, 1.0, 1.0, -1.0, -1.0, -1.0]);
        let xi = panel(m);
        let fit = fit_ccc(&xi).unwrap();
        assert!(fit.r[(0, 1)].abs() < 1e-15);
        let ident = MatrixPath::from_raw(2, [1.0, 0.0, 0.0, 1.0].repeat(4));
        assert!((fit.loglik - corr_path_loglik(&xi, &ident).unwrap()).abs() < 1e-12);
        assert!(fit.corr_loglik.abs() < 1e-12);
    }

    #[test]
    fn identity_reduction_of_full_loglik() {
        let xi = correlated(0.3, 20, 4).values;
        let d = DMatrix::from_fn(20, 2, |r, c| 0.5 + 0.1 * (r + c) as f64);
        let ident = MatrixPath::from_raw(2, [1.0, 0.0, 0.0, 1.0].repeat(20));
        let direct: f64 = (0..20)
            .map(|t| {
                2.0 * LN_2PI
                    + 2.0 * (d[(t, 0)].ln() + d[(t, 1)].ln())
                    + xi[(t, 0)].powi(2)
                    + xi[(t, 1)].powi(2)
            })
            .sum::<f64>()
            * -0.5;
        assert!((dcc_loglik(&xi, &ident, &d).unwrap() - direct).abs() < 1e-10);
    }

    #[test]
    fn one_dimensional_loglik_is_univariate_gaussian() {
        let eps: [f64; 4] = [0.3, -1.2, 0.8, 2.0];
        let sd: [f64; 4] = [1.0, 1.5, 0.7, 2.2];
        let xi = DMatrix::from_fn(4, 1, |r, _| eps[r] / sd[r]);
        let d = DMatrix::from_fn(4, 1, |r, _| sd[r]);
        let one = MatrixPath::from_raw(1, vec![1.0; 4]);
        let uni: f64 = eps
            .iter()
            .zip(&sd)
            .map(|(e, s)| -0.5 * (LN_2PI + (s * s).ln() + e * e / (s * s)))
            .sum();
        assert!((dcc_loglik(&xi, &one, &d).unwrap() - uni).abs() < 1e-12);
    }

    #[test]
    fn small_case_matches_dense_evaluation() {
        let xi = DMatrix::from_row_slice(3, 2, &[0.5, -0.2, 1.1, 0.7, -0.9, -1.3]);
        let d = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.5, 1.5, 1.2, 0.8]);
        let rhos = [0.1, 0.6, -0.4];
        let r = MatrixPath::from_raw(2, rhos.iter().flat_map(|p| [1.0, *p, *p, 1.0]).collect());
        let mut expected = 0.0;
        for t in 0..3 {
            let rt = r.matrix(t);
            let dt = DMatrix::from_diagonal(&d.row(t).transpose());
            let h = &dt * &rt * &dt;
            let eps = &dt * xi.row(t).transpose();
            let q = (eps.transpose() * h.clone().try_inverse().unwrap() * &eps)[(0, 0)];
            expected += -0.5 * (2.0 * LN_2PI + h.determinant().ln() + q);
        }
        assert!((dcc_loglik(&xi, &r, &d).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn singular_correlation_reports_time() {
        let xi = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.1, 0.2]);
        let d = DMatrix::from_element(2, 2, 1.0);
        let r = MatrixPath::from_raw(2, vec![1.0, 0.2, 0.2, 1.0, 1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(dcc_loglik(&xi, &r, &d), Err(Error::NonPositiveDefiniteR(1))));
    }

    #[test]
    fn covariance_assembly() {
        let d = DMatrix::from_row_slice(1, 2, &[2.0, 3.0]);
        let r = MatrixPath::from_raw(2, vec![1.0, 0.5, 0.5, 1.0]);
        let h = assemble_covariance(&d, &r).unwrap();
        assert_eq!(h.get(0, 0, 1), 3.0);
        assert_eq!(h.get(0, 0, 0), 4.0);
        assert_eq!(h.get(0, 1, 1), 9.0);
        let ident = MatrixPath::from_raw(2, vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(assemble_covariance(&d, &ident).unwrap().get(0, 1, 0), 0.0);
    }

    #[test]
    fn summary_of_constant_path() {
        let xi = correlated(0.4, 100, 5);
        let fit = fit_ccc(&xi).unwrap();
        let path = fit.path(100);
        let whole = CrisisWindow::new("all", xi.dates[0], xi.dates[99]).unwrap();
        let s = summarize_dcc(&path, &xi.dates, (0, 1), &[whole]).unwrap();
        let tot = &s.windows[0];
        assert_eq!(tot.mean, tot.min);
        assert_eq!(tot.max, tot.min);
        assert_eq!(s.windows[1], WindowStats {
            label: "all".into(),
            ..tot.clone()
        });
        let late = CrisisWindow::new(
            "late",
            NaiveDate::from_ymd_opt(2030, 1, 1).unwrap(),
            NaiveDate::from_ymd_opt(2030, 2, 1).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            summarize_dcc(&path, &xi.dates, (0, 1), &[late]),
            Err(Error::EmptyWindow(_))
        ));
    }
}
