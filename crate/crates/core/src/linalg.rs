//! Small dense linear-algebra helpers shared by the estimators.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Ordinary least squares output.
#[derive(Debug, Clone)]
pub struct Ols {
    pub coef: DVector<f64>,
    pub residuals: DVector<f64>,
    pub ssr: f64,
    /// `(X'X)^{-1}`
    pub xtx_inv: DMatrix<f64>,
}

impl Ols {
    pub fn nobs(&self) -> usize {
        self.residuals.len()
    }

    /// Residual variance with a degrees-of-freedom correction.
    pub fn sigma2(&self) -> f64 {
        let dof = self.nobs().saturating_sub(self.coef.len()).max(1);
        self.ssr / dof as f64
    }

    pub fn std_errors(&self) -> DVector<f64> {
        let s2 = self.sigma2();
        DVector::from_fn(self.coef.len(), |i, _| (s2 * self.xtx_inv[(i, i)]).sqrt())
    }
}

/// Least squares via column-pivoted QR. Rank deficiency (relative pivot
/// below `1e-10`) is reported as [`Error::SingularDesign`].
pub fn ols(y: &DVector<f64>, x: &DMatrix<f64>) -> Result<Ols> {
    let (n, k) = x.shape();
    if n < k || y.len() != n {
        return Err(Error::SingularDesign);
    }
    if k == 0 {
        return Ok(Ols {
            coef: DVector::zeros(0),
            residuals: y.clone(),
            ssr: y.norm_squared(),
            xtx_inv: DMatrix::zeros(0, 0),
        });
    }
    let scale = (0..k).map(|j| x.column(j).norm()).fold(0.0, f64::max);
    let qr = x.clone().qr();
    let r = qr.r();
    if !(scale > 0.0) || (0..k).any(|i| r[(i, i)].abs() <= 1e-10 * scale) {
        return Err(Error::SingularDesign);
    }
    let qty = qr.q().transpose() * y;
    let coef = r.solve_upper_triangular(&qty).ok_or(Error::SingularDesign)?;
    let residuals = y - x * &coef;
    let xtx = x.transpose() * x;
    let xtx_inv = xtx.cholesky().ok_or(Error::SingularDesign)?.inverse();
    let ssr = residuals.norm_squared();
    Ok(Ols {
        coef,
        residuals,
        ssr,
        xtx_inv,
    })
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Symmetric square root via the eigen-decomposition; negative eigenvalues
/// are clamped to zero.
pub fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
}

/// Rescales a positive-diagonal matrix to unit diagonal.
pub fn to_correlation(q: &DMatrix<f64>) -> DMatrix<f64> {
    let k = q.nrows();
    let s: Vec<f64> = (0..k).map(|i| q[(i, i)].sqrt()).collect();
    DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            1.0
        } else {
            q[(i, j)] / (s[i] * s[j])
        }
    })
}
