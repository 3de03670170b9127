//! Synthetic data from known volatility and correlation processes, and
//! Monte Carlo recovery studies of the estimators.
//!
//! Randomness comes from ChaCha20 seeded with the DGP seed. Replication `r`
//! of a study reads ChaCha stream `r + 1` of the same seed, so every
//! replication is reproducible on its own and independent of thread count.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use rayon::prelude::*;

use crate::correlation::{
    agdcc_step_rearranged, fit_ccc, fit_dcc_with, fit_gdcc_with, CorrOptions, MatrixPath, StdResidualPanel,
};
use crate::error::{Error, Result};
use crate::garch::{fit_garch, GarchParams, GarchSpec};
use crate::linalg;
use crate::timeseries::ReturnSeries;

/// Generator name written into output metadata.
pub const RNG_NAME: &str = "ChaCha20 (rand_chacha)";
pub const DEFAULT_BURN_IN: usize = 1000;
pub const MIN_BURN_IN: usize = 500;
const PILOT_DRAWS: usize = 100_000;

/// Innovation distribution, always scaled to zero mean and unit variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shock {
    Gaussian,
    /// Student t with `nu > 2` degrees of freedom.
    StudentT { nu: f64 },
    /// Skew-normal with shape `lambda`; negative values skew left.
    Skewed { lambda: f64 },
}

impl Shock {
    fn validate(&self) -> Result<()> {
        match *self {
            Shock::Gaussian => Ok(()),
            Shock::StudentT { nu } if nu > 2.0 && nu.is_finite() => Ok(()),
            Shock::StudentT { nu } => Err(Error::InvalidDgp(format!("Student t needs nu > 2, got {nu}"))),
            Shock::Skewed { lambda } if lambda.is_finite() => Ok(()),
            Shock::Skewed { lambda } => Err(Error::InvalidDgp(format!("invalid skew shape {lambda}"))),
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Shock::Gaussian => StandardNormal.sample(rng),
            Shock::StudentT { nu } => {
                let t: f64 = StudentT::new(nu).expect("validated").sample(rng);
                t * ((nu - 2.0) / nu).sqrt()
            }
            Shock::Skewed { lambda } => {
                let d = lambda / (1.0 + lambda * lambda).sqrt();
                let u0: f64 = StandardNormal.sample(rng);
                let u1: f64 = StandardNormal.sample(rng);
                let x = d * u0.abs() + (1.0 - d * d).sqrt() * u1;
                let mean = d * (2.0 / std::f64::consts::PI).sqrt();
                let var = 1.0 - 2.0 * d * d / std::f64::consts::PI;
                (x - mean) / var.sqrt()
            }
        }
    }
}

/// Cross-sectional dependence of the standardized shocks.
#[derive(Debug, Clone, PartialEq)]
pub enum CorrelationDgp {
    Constant { r: DMatrix<f64> },
    Dcc { alpha: f64, beta: f64, qbar: DMatrix<f64> },
    /// Generalized DCC with diagonal loadings; `g` all zero gives the
    /// symmetric model. The negative-shock target is computed from a pilot
    /// draw of the shock distribution at `qbar`.
    Agdcc { a: Vec<f64>, b: Vec<f64>, g: Vec<f64>, qbar: DMatrix<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dgp {
    /// One univariate process per asset.
    pub univariate: Vec<(GarchSpec, GarchParams)>,
    pub correlation: CorrelationDgp,
    pub shock: Shock,
    pub seed: u64,
    pub t: usize,
    pub burn_in: usize,
}

impl Dgp {
    /// Single GARCH series with Gaussian shocks.
    pub fn univariate(spec: GarchSpec, params: GarchParams, t: usize, seed: u64) -> Self {
        Self {
            univariate: vec![(spec, params)],
            correlation: CorrelationDgp::Constant {
                r: DMatrix::identity(1, 1),
            },
            shock: Shock::Gaussian,
            seed,
            t,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    /// Two GARCH(1,1) series linked by a scalar DCC with target correlation `rho`.
    pub fn bivariate_dcc(garch: [GarchParams; 2], alpha: f64, beta: f64, rho: f64, t: usize, seed: u64) -> Self {
        let [g0, g1] = garch;
        Self {
            univariate: vec![(GarchSpec::garch11(), g0), (GarchSpec::garch11(), g1)],
            correlation: CorrelationDgp::Dcc {
                alpha,
                beta,
                qbar: DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]),
            },
            shock: Shock::Gaussian,
            seed,
            t,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn dim(&self) -> usize {
        self.univariate.len()
    }

    fn qbar(&self) -> &DMatrix<f64> {
        match &self.correlation {
            CorrelationDgp::Constant { r } => r,
            CorrelationDgp::Dcc { qbar, .. } | CorrelationDgp::Agdcc { qbar, .. } => qbar,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.dim();
        if k == 0 || self.t == 0 {
            return Err(Error::InvalidDgp("need at least one series and one observation".into()));
        }
        if self.burn_in < MIN_BURN_IN {
            return Err(Error::InvalidDgp(format!("burn-in {} is below {MIN_BURN_IN}", self.burn_in)));
        }
        self.shock.validate()?;
        for (i, (spec, p)) in self.univariate.iter().enumerate() {
            if spec.delta != 2 {
                return Err(Error::InvalidDgp("only variance (power 2) processes are simulated".into()));
            }
            p.validate(spec).map_err(|e| Error::InvalidDgp(format!("series {i}: {e}")))?;
            if !(p.persistence() < 1.0) {
                return Err(Error::InvalidDgp(format!("series {i} is not covariance stationary")));
            }
        }
        let qbar = self.qbar();
        if qbar.shape() != (k, k) {
            return Err(Error::InvalidDgp(format!("correlation target must be {k}x{k}")));
        }
        let unit_diag = (0..k).all(|i| (qbar[(i, i)] - 1.0).abs() < 1e-12);
        if !unit_diag || qbar.clone().cholesky().is_none() || (qbar - qbar.transpose()).amax() > 1e-12 {
            return Err(Error::InvalidDgp("correlation target must be a positive definite correlation matrix".into()));
        }
        match &self.correlation {
            CorrelationDgp::Constant { .. } => {}
            CorrelationDgp::Dcc { alpha, beta, .. } => {
                if !(*alpha >= 0.0 && *beta >= 0.0 && alpha + beta < 1.0) {
                    return Err(Error::InvalidDgp(format!("DCC needs alpha, beta >= 0 and alpha + beta < 1")));
                }
            }
            CorrelationDgp::Agdcc { a, b, g, .. } => {
                if a.len() != k || b.len() != k || g.len() != k {
                    return Err(Error::InvalidDgp(format!("loadings must have length {k}")));
                }
                if (0..k).any(|i| !(a[i] >= 0.0 && b[i] >= 0.0 && a[i] * a[i] + b[i] * b[i] < 1.0)) {
                    return Err(Error::InvalidDgp("loadings need a, b >= 0 and a² + b² < 1".into()));
                }
            }
        }
        Ok(())
    }
}

/// Simulated data together with the processes that generated it.
#[derive(Debug, Clone)]
pub struct Simulation {
    /// Returns `ε_t = σ_t ξ_t` (zero conditional mean).
    pub returns: ReturnSeries,
    /// T×k true conditional variances.
    pub sigma2: DMatrix<f64>,
    /// T×k true standardized shocks `ξ_t`.
    pub std_shocks: DMatrix<f64>,
    pub r_path: MatrixPath,
    /// Variance of each series at the first retained observation; with
    /// `VarianceInit::Fixed` it makes a one-lag filter reproduce `sigma2`.
    pub initial_sigma2: Vec<f64>,
    /// Negative-shock target used by an asymmetric DGP.
    pub nbar: Option<DMatrix<f64>>,
}

/// Weekdays starting at 2000-01-03.
pub fn business_days(n: usize) -> Vec<NaiveDate> {
    let mut d = NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date");
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn pilot_nbar(shock: Shock, qbar: &DMatrix<f64>, rng: &mut ChaCha20Rng) -> DMatrix<f64> {
    let k = qbar.nrows();
    let root = linalg::sym_sqrt(qbar);
    let mut acc = DMatrix::zeros(k, k);
    for _ in 0..PILOT_DRAWS {
        let z = DVector::from_fn(k, |_, _| shock.draw(rng));
        let n = (&root * z).map(|v| v.min(0.0));
        acc += &n * n.transpose();
    }
    acc / PILOT_DRAWS as f64
}

pub fn simulate(dgp: &Dgp) -> Result<Simulation> {
    simulate_stream(dgp, 0)
}

/// Simulation on ChaCha stream `stream` of the DGP seed.
pub fn simulate_stream(dgp: &Dgp, stream: u64) -> Result<Simulation> {
    dgp.validate()?;
    let mut rng = rng_for(dgp.seed, stream);
    let k = dgp.dim();
    let total = dgp.t + dgp.burn_in;
    let qbar = dgp.qbar().clone();

    let nbar = match &dgp.correlation {
        CorrelationDgp::Agdcc { a, b, g, .. } => {
            let nbar = pilot_nbar(dgp.shock, &qbar, &mut rng);
            let c = DMatrix::from_fn(k, k, |i, j| {
                qbar[(i, j)] * (1.0 - a[i] * a[j] - b[i] * b[j]) - g[i] * g[j] * nbar[(i, j)]
            });
            if c.cholesky().is_none() {
                return Err(Error::InvalidDgp("correlation intercept is not positive definite".into()));
            }
            Some(nbar)
        }
        _ => None,
    };

    // per-series lag buffers: most recent first
    let mut eps_hist: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut var_hist: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (spec, p) in &dgp.univariate {
        let uncond = p.omega / (1.0 - p.persistence());
        eps_hist.push(vec![uncond.sqrt(); spec.p.max(spec.o)]);
        var_hist.push(vec![uncond; spec.q.max(1)]);
    }
    // pre-sample shocks sit at ±σ so asymmetry terms start at half weight
    for h in eps_hist.iter_mut() {
        for (n, e) in h.iter_mut().enumerate() {
            if n % 2 == 1 {
                *e = -*e;
            }
        }
    }

    let mut q = qbar.clone();
    let mut prev_xi = DVector::zeros(k);
    let mut sigma2 = DMatrix::zeros(dgp.t, k);
    let mut xi_out = DMatrix::zeros(dgp.t, k);
    let mut eps_out = DMatrix::zeros(dgp.t, k);
    let mut r_data = Vec::with_capacity(dgp.t * k * k);
    let mut initial = vec![0.0; k];

    for s in 0..total {
        // correlation for this period
        let r = match &dgp.correlation {
            CorrelationDgp::Constant { r } => r.clone(),
            CorrelationDgp::Dcc { alpha, beta, .. } => {
                if s > 0 {
                    q = (1.0 - alpha - beta) * &qbar + *alpha * (&prev_xi * prev_xi.transpose()) + *beta * &q;
                }
                linalg::to_correlation(&q)
            }
            CorrelationDgp::Agdcc { a, b, g, .. } => {
                if s > 0 {
                    q = agdcc_step_rearranged(&q, &prev_xi, a, b, g, &qbar, nbar.as_ref().expect("set above"));
                }
                linalg::to_correlation(&q)
            }
        };
        let z = DVector::from_fn(k, |_, _| dgp.shock.draw(&mut rng));
        let xi = if k == 1 { z } else { linalg::sym_sqrt(&r) * z };

        let keep = s >= dgp.burn_in;
        let row = s.wrapping_sub(dgp.burn_in);
        for (i, (spec, p)) in dgp.univariate.iter().enumerate() {
            let eh = &eps_hist[i];
            let vh = &var_hist[i];
            let mut v = p.omega;
            for (l, a) in p.alpha.iter().enumerate() {
                v += a * eh[l] * eh[l];
            }
            for (l, gm) in p.gamma.iter().enumerate() {
                if eh[l] < 0.0 {
                    v += gm * eh[l] * eh[l];
                }
            }
            for (l, bt) in p.beta.iter().enumerate() {
                v += bt * vh[l];
            }
            let e = v.sqrt() * xi[i];
            if keep {
                sigma2[(row, i)] = v;
                xi_out[(row, i)] = xi[i];
                eps_out[(row, i)] = e;
                if row == 0 {
                    initial[i] = v;
                }
            }
            if spec.p.max(spec.o) > 0 {
                eps_hist[i].rotate_right(1);
                eps_hist[i][0] = e;
            }
            var_hist[i].rotate_right(1);
            var_hist[i][0] = v;
        }
        if keep {
            for i in 0..k {
                for j in 0..k {
                    r_data.push(r[(i, j)]);
                }
            }
        }
        prev_xi = xi;
    }

    Ok(Simulation {
        returns: ReturnSeries {
            dates: business_days(dgp.t),
            assets: (0..k).map(|i| format!("sim{i}")).collect(),
            values: eps_out,
        },
        sigma2,
        std_shocks: xi_out,
        r_path: MatrixPath::from_raw(k, r_data),
        initial_sigma2: initial,
        nbar,
    })
}

/// Sampling summary of one parameter across replications.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamRecovery {
    pub name: String,
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    pub rmse: f64,
    /// Successful replications.
    pub n: usize,
}

#[derive(Debug, Clone)]
pub struct RecoveryReport {
    pub replications: usize,
    pub failures: usize,
    /// Error text of each failed replication, by index.
    pub failure_messages: Vec<(usize, String)>,
    pub params: Vec<ParamRecovery>,
    /// Per-replication estimates in `params` order; `None` for failures.
    pub estimates: Vec<Option<Vec<f64>>>,
}

impl RecoveryReport {
    pub fn param(&self, name: &str) -> Option<&ParamRecovery> {
        self.params.iter().find(|p| p.name == name)
    }
}

fn garch_names(prefix: &str, spec: &GarchSpec) -> Vec<String> {
    let mut v = vec![format!("{prefix}omega")];
    v.extend((1..=spec.p).map(|i| format!("{prefix}alpha{i}")));
    v.extend((1..=spec.o).map(|i| format!("{prefix}gamma{i}")));
    v.extend((1..=spec.q).map(|i| format!("{prefix}beta{i}")));
    v
}

fn garch_values(p: &GarchParams) -> Vec<f64> {
    std::iter::once(p.omega)
        .chain(p.alpha.iter().copied())
        .chain(p.gamma.iter().copied())
        .chain(p.beta.iter().copied())
        .collect()
}

/// Names and true values of every parameter a study estimates.
fn truths(dgp: &Dgp) -> (Vec<String>, Vec<f64>) {
    let k = dgp.dim();
    let mut names = Vec::new();
    let mut vals = Vec::new();
    for (i, (spec, p)) in dgp.univariate.iter().enumerate() {
        let prefix = if k == 1 { String::new() } else { format!("s{i}.") };
        names.extend(garch_names(&prefix, spec));
        vals.extend(garch_values(p));
    }
    if k > 1 {
        match &dgp.correlation {
            CorrelationDgp::Constant { r } => {
                for i in 0..k {
                    for j in 0..i {
                        names.push(format!("rho[{j},{i}]"));
                        vals.push(r[(i, j)]);
                    }
                }
            }
            CorrelationDgp::Dcc { alpha, beta, .. } => {
                names.extend(["dcc.alpha".to_string(), "dcc.beta".to_string()]);
                vals.extend([*alpha, *beta]);
            }
            CorrelationDgp::Agdcc { a, b, g, .. } => {
                for (label, v) in [("a", a), ("b", b), ("g", g)] {
                    for (i, x) in v.iter().enumerate() {
                        names.push(format!("agdcc.{label}{i}"));
                        vals.push(*x);
                    }
                }
            }
        }
    }
    (names, vals)
}

/// Simulates and re-estimates one replication: univariate fits with the
/// DGP's specifications, then the matching correlation model on the fitted
/// standardized residuals.
fn estimate_once(dgp: &Dgp, stream: u64) -> Result<Vec<f64>> {
    let sim = simulate_stream(dgp, stream)?;
    let k = dgp.dim();
    let mut out = Vec::new();
    let mut fits = Vec::with_capacity(k);
    for (i, (spec, _)) in dgp.univariate.iter().enumerate() {
        let fit = fit_garch(&sim.returns.column(i), *spec)?;
        out.extend(garch_values(&fit.params));
        fits.push(fit);
    }
    if k == 1 {
        return Ok(out);
    }
    let refs: Vec<_> = fits.iter().collect();
    let panel = StdResidualPanel::from_fits(sim.returns.dates.clone(), sim.returns.assets.clone(), &refs)?;
    let opts = CorrOptions {
        std_errors: false,
        ..CorrOptions::default()
    };
    match &dgp.correlation {
        CorrelationDgp::Constant { .. } => {
            let ccc = fit_ccc(&panel)?;
            for i in 0..k {
                for j in 0..i {
                    out.push(ccc.r[(i, j)]);
                }
            }
        }
        CorrelationDgp::Dcc { .. } => {
            let dcc = fit_dcc_with(&panel, 1, 1, &opts)?;
            out.extend([dcc.alpha1(), dcc.beta1()]);
        }
        CorrelationDgp::Agdcc { g, .. } => {
            let asym = g.iter().any(|v| *v != 0.0);
            let f = fit_gdcc_with(&panel, asym, &opts)?;
            out.extend(f.a.iter().chain(&f.b).chain(&f.g));
        }
    }
    Ok(out)
}

/// Repeats simulate-and-estimate `replications` times in parallel and
/// summarizes mean, bias and RMSE per parameter. Failed replications are
/// counted and excluded from the summaries.
pub fn recovery_study(dgp: &Dgp, replications: usize) -> Result<RecoveryReport> {
    if replications < 10 {
        return Err(Error::InvalidDgp(format!("need at least 10 replications, got {replications}")));
    }
    dgp.validate()?;
    let (names, truth) = truths(dgp);
    let results: Vec<Result<Vec<f64>>> = (0..replications)
        .into_par_iter()
        .map(|r| estimate_once(dgp, r as u64 + 1))
        .collect();
    let mut failure_messages = Vec::new();
    let estimates: Vec<Option<Vec<f64>>> = results
        .into_iter()
        .enumerate()
        .map(|(r, res)| match res {
            Ok(v) => Some(v),
            Err(e) => {
                failure_messages.push((r, e.to_string()));
                None
            }
        })
        .collect();
    let ok: Vec<&Vec<f64>> = estimates.iter().flatten().collect();
    let n = ok.len();
    let params = names
        .into_iter()
        .enumerate()
        .map(|(j, name)| {
            let (mean, rmse) = if n == 0 {
                (f64::NAN, f64::NAN)
            } else {
                let mean = ok.iter().map(|v| v[j]).sum::<f64>() / n as f64;
                let mse = ok.iter().map(|v| (v[j] - truth[j]).powi(2)).sum::<f64>() / n as f64;
                (mean, mse.sqrt())
            };
            ParamRecovery {
                name,
                truth: truth[j],
                mean,
                bias: mean - truth[j],
                rmse,
                n,
            }
        })
        .collect();
    Ok(RecoveryReport {
        replications,
        failures: failure_messages.len(),
        failure_messages,
        params,
        estimates,
    })
}
