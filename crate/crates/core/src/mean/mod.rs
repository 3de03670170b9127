//! Conditional-mean filters: per-series ARMA by conditional sum of squares
//! or a joint VAR(p) by least squares. Both produce residuals over the full
//! sample with pre-sample values set to zero.

mod arma;
mod var;

pub use arma::{
    arma_residuals, coefs_from_pacf, fit_arma, is_invertible, is_stationary, pacf_from_coefs, select_arma_order,
    ArmaFit, ArmaSpec, DEFAULT_MAX_ORDER,
};
pub use var::{fit_var, select_var_order, VarFit};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::timeseries::ReturnSeries;

/// Residuals after mean filtering; same layout as the returns they came from.
pub type ResidualSeries = ReturnSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Criterion {
    #[default]
    Aic,
    Bic,
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "aic" => Ok(Criterion::Aic),
            "bic" => Ok(Criterion::Bic),
            other => Err(Error::Config(format!("unknown information criterion '{other}'"))),
        }
    }
}

/// How the mean is removed before volatility modelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanMode {
    /// Independent ARMA per series, orders chosen up to the given maxima.
    Arma { max_p: usize, max_q: usize },
    /// One VAR across all series, lag chosen up to `max_p`.
    Var { max_p: usize },
}

impl Default for MeanMode {
    fn default() -> Self {
        MeanMode::Arma {
            max_p: DEFAULT_MAX_ORDER,
            max_q: DEFAULT_MAX_ORDER,
        }
    }
}

#[derive(Debug, Clone)]
pub enum MeanFit {
    Arma(ArmaFit),
    Var(VarFit),
}

/// Flat row for the mean-specification report.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanRecord {
    pub series: String,
    pub model: String,
    pub ar: usize,
    pub ma: usize,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    /// Named coefficients, e.g. `const`, `ar1`, `ma1`, `phi1[0,1]`.
    pub coefficients: Vec<(String, f64)>,
}

impl MeanFit {
    pub fn loglik(&self) -> f64 {
        match self {
            MeanFit::Arma(f) => f.loglik,
            MeanFit::Var(f) => f.loglik,
        }
    }

    pub fn aic(&self) -> f64 {
        match self {
            MeanFit::Arma(f) => f.aic,
            MeanFit::Var(f) => f.aic,
        }
    }

    pub fn bic(&self) -> f64 {
        match self {
            MeanFit::Arma(f) => f.bic,
            MeanFit::Var(f) => f.bic,
        }
    }

    pub fn to_record(&self, series: &str) -> MeanRecord {
        match self {
            MeanFit::Arma(f) => {
                let mut coefficients = Vec::new();
                if f.spec.include_constant {
                    coefficients.push(("const".to_string(), f.constant));
                }
                coefficients.extend(f.ar.iter().enumerate().map(|(i, v)| (format!("ar{}", i + 1), *v)));
                coefficients.extend(f.ma.iter().enumerate().map(|(i, v)| (format!("ma{}", i + 1), *v)));
                MeanRecord {
                    series: series.to_string(),
                    model: "ARMA".into(),
                    ar: f.spec.p,
                    ma: f.spec.q,
                    loglik: f.loglik,
                    aic: f.aic,
                    bic: f.bic,
                    coefficients,
                }
            }
            MeanFit::Var(f) => {
                let k = f.dim();
                let mut coefficients: Vec<(String, f64)> =
                    (0..k).map(|i| (format!("const[{i}]"), f.intercept[i])).collect();
                for (l, m) in f.coefs.iter().enumerate() {
                    for i in 0..k {
                        for j in 0..k {
                            coefficients.push((format!("phi{}[{i},{j}]", l + 1), m[(i, j)]));
                        }
                    }
                }
                MeanRecord {
                    series: series.to_string(),
                    model: "VAR".into(),
                    ar: f.order,
                    ma: 0,
                    loglik: f.loglik,
                    aic: f.aic,
                    bic: f.bic,
                    coefficients,
                }
            }
        }
    }
}

/// Applies the mean filter to every series. ARMA fits run in parallel; the
/// result order follows the asset order. A VAR yields a single fit.
pub fn residualize(r: &ReturnSeries, mode: MeanMode, criterion: Criterion) -> Result<(Vec<MeanFit>, ResidualSeries)> {
    match mode {
        MeanMode::Arma { max_p, max_q } => {
            let fits: Vec<ArmaFit> = (0..r.dim())
                .into_par_iter()
                .map(|j| select_arma_order(&r.column(j), max_p, max_q, true, criterion))
                .collect::<Result<_>>()?;
            let mut values = r.values.clone();
            for (j, f) in fits.iter().enumerate() {
                for (t, e) in f.residuals.iter().enumerate() {
                    values[(t, j)] = *e;
                }
            }
            let resid = ReturnSeries {
                dates: r.dates.clone(),
                assets: r.assets.clone(),
                values,
            };
            Ok((fits.into_iter().map(MeanFit::Arma).collect(), resid))
        }
        MeanMode::Var { max_p } => {
            let p = select_var_order(r, max_p, criterion)?;
            let fit = fit_var(r, p)?;
            let resid = ReturnSeries {
                dates: r.dates.clone(),
                assets: r.assets.clone(),
                values: fit.residuals.clone(),
            };
            Ok((vec![MeanFit::Var(fit)], resid))
        }
    }
}
