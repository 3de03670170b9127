//! Univariate conditional-variance models of the power family
//!
//! ```text
//! h_t = ω + Σ α_p |ε_{t-p}|^δ + Σ γ_o |ε_{t-o}|^δ 1[ε_{t-o} < 0] + Σ β_q h_{t-q},   h_t = σ_t^δ
//! ```
//!
//! with δ = 2 (GARCH, GJR-GARCH) or δ = 1 (absolute-value / threshold
//! variants). Only δ = 2 is estimable; δ = 1 is available as a filter.
//!
//! Estimation is Gaussian quasi-maximum likelihood over an unconstrained
//! reparameterization: `ln ω` plus a softmax map onto the persistence
//! simplex. For lags carrying both an ARCH and an asymmetry term the two
//! simplex components are the loadings on positive shocks (`α/2`) and on
//! negative shocks (`(α + γ)/2`), which enforces `α ≥ 0`, `α + γ ≥ 0` and
//! `Σα + ½Σγ + Σβ < 1` while leaving `γ = 0` in the interior.

use crate::error::{Error, Result};
use crate::optim::{self, BfgsOptions, Status};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Model orders and power. `p` ARCH lags, `o` asymmetry lags, `q` GARCH lags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GarchSpec {
    pub p: usize,
    pub o: usize,
    pub q: usize,
    pub delta: u8,
}

impl GarchSpec {
    pub fn new(p: usize, o: usize, q: usize, delta: u8) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidParams("ARCH order p must be at least 1".into()));
        }
        if delta != 1 && delta != 2 {
            return Err(Error::InvalidParams(format!("delta must be 1 or 2, got {delta}")));
        }
        Ok(Self { p, o, q, delta })
    }

    pub const fn garch11() -> Self {
        Self {
            p: 1,
            o: 0,
            q: 1,
            delta: 2,
        }
    }

    pub const fn gjr111() -> Self {
        Self {
            p: 1,
            o: 1,
            q: 1,
            delta: 2,
        }
    }

    pub fn is_asymmetric(&self) -> bool {
        self.o > 0
    }

    /// Same orders without the asymmetry terms.
    pub fn symmetric(&self) -> Self {
        Self { o: 0, ..*self }
    }

    pub fn n_params(&self) -> usize {
        1 + self.p + self.o + self.q
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GarchParams {
    pub omega: f64,
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

impl GarchParams {
    pub fn garch11(omega: f64, alpha: f64, beta: f64) -> Self {
        Self {
            omega,
            alpha: vec![alpha],
            gamma: vec![],
            beta: vec![beta],
        }
    }

    pub fn gjr111(omega: f64, alpha: f64, gamma: f64, beta: f64) -> Self {
        Self {
            omega,
            alpha: vec![alpha],
            gamma: vec![gamma],
            beta: vec![beta],
        }
    }

    /// `Σα + ½Σγ + Σβ`
    pub fn persistence(&self) -> f64 {
        self.alpha.iter().sum::<f64>() + 0.5 * self.gamma.iter().sum::<f64>() + self.beta.iter().sum::<f64>()
    }

    pub fn matches(&self, spec: &GarchSpec) -> bool {
        self.alpha.len() == spec.p && self.gamma.len() == spec.o && self.beta.len() == spec.q
    }

    /// Sign constraints: `ω > 0`, `α ≥ 0`, `α + γ ≥ 0`, `β ≥ 0`.
    pub fn validate(&self, spec: &GarchSpec) -> Result<()> {
        if !self.matches(spec) {
            return Err(Error::InvalidParams(format!(
                "parameter lengths ({}, {}, {}) do not match orders ({}, {}, {})",
                self.alpha.len(),
                self.gamma.len(),
                self.beta.len(),
                spec.p,
                spec.o,
                spec.q
            )));
        }
        let all = std::iter::once(self.omega)
            .chain(self.alpha.iter().copied())
            .chain(self.gamma.iter().copied())
            .chain(self.beta.iter().copied());
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        if self.omega <= 0.0 {
            return Err(Error::InvalidParams("omega must be positive".into()));
        }
        if self.alpha.iter().any(|&a| a < 0.0) || self.beta.iter().any(|&b| b < 0.0) {
            return Err(Error::InvalidParams("alpha and beta must be non-negative".into()));
        }
        for (o, g) in self.gamma.iter().enumerate() {
            let a = self.alpha.get(o).copied().unwrap_or(0.0);
            if a + g < 0.0 {
                return Err(Error::InvalidParams(format!("alpha + gamma negative at lag {}", o + 1)));
            }
        }
        Ok(())
    }

    fn to_vec(&self) -> Vec<f64> {
        std::iter::once(self.omega)
            .chain(self.alpha.iter().copied())
            .chain(self.gamma.iter().copied())
            .chain(self.beta.iter().copied())
            .collect()
    }

    fn from_vec(spec: &GarchSpec, v: &[f64]) -> Self {
        let (p, o) = (spec.p, spec.o);
        Self {
            omega: v[0],
            alpha: v[1..1 + p].to_vec(),
            gamma: v[1 + p..1 + p + o].to_vec(),
            beta: v[1 + p + o..].to_vec(),
        }
    }
}

/// Value used for `σ²` before the first observation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum VarianceInit {
    /// Sample variance of the residuals.
    #[default]
    SampleVariance,
    Fixed(f64),
    /// Exponentially weighted mean of the first squared residuals.
    Backcast { lambda: f64 },
}

impl VarianceInit {
    pub fn value(&self, eps: &[f64]) -> f64 {
        match *self {
            VarianceInit::SampleVariance => sample_variance(eps),
            VarianceInit::Fixed(v) => v,
            VarianceInit::Backcast { lambda } => {
                let m = eps.len().min(75);
                let (mut num, mut den, mut w) = (0.0, 0.0, 1.0);
                for e in &eps[..m] {
                    num += w * e * e;
                    den += w;
                    w *= lambda;
                }
                num / den
            }
        }
    }
}

pub(crate) fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

/// Power-transformed recursion for `h_t = σ_t^δ`; no validation.
fn power_recursion(eps: &[f64], theta: &[f64], spec: &GarchSpec, init: f64) -> Vec<f64> {
    let (p, o, q) = (spec.p, spec.o, spec.q);
    let n = eps.len();
    let power = |e: f64| if spec.delta == 2 { e * e } else { e.abs() };
    let h0 = if spec.delta == 2 { init } else { init.sqrt() };
    let mut h = vec![0.0; n];
    if n == 0 {
        return h;
    }
    h[0] = h0;
    let omega = theta[0];
    for t in 1..n {
        let mut v = omega;
        for i in 1..=p {
            let e = if t >= i { power(eps[t - i]) } else { h0 };
            v += theta[i] * e;
        }
        for i in 1..=o {
            let e = if t >= i {
                let x = eps[t - i];
                if x < 0.0 {
                    power(x)
                } else {
                    0.0
                }
            } else {
                0.5 * h0
            };
            v += theta[p + i] * e;
        }
        for i in 1..=q {
            let s = if t >= i { h[t - i] } else { h0 };
            v += theta[p + o + i] * s;
        }
        h[t] = v;
    }
    h
}

/// Conditional-variance path `σ²_t` for given parameters.
///
/// `σ²_0` is the initial value from `init`; pre-sample squared residuals and
/// variances also take that value, and pre-sample asymmetry terms half of it.
/// The asymmetry indicator is 1 only for strictly negative residuals.
pub fn garch_filter(eps: &[f64], params: &GarchParams, spec: &GarchSpec, init: VarianceInit) -> Result<Vec<f64>> {
    params.validate(spec)?;
    if let Some(row) = eps.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            asset: "residuals".into(),
            row,
        });
    }
    let start = init.value(eps);
    if !(start > 0.0) || !start.is_finite() {
        return Err(Error::InvalidParams(format!("initial variance {start} is not positive")));
    }
    let h = power_recursion(eps, &params.to_vec(), spec, start);
    Ok(if spec.delta == 2 {
        h
    } else {
        h.into_iter().map(|s| s * s).collect()
    })
}

/// Gaussian log-likelihood and its gradient in natural parameters (δ = 2).
/// Returns NaN when the variance path leaves the positive half-line.
fn loglik_grad(eps: &[f64], theta: &[f64], spec: &GarchSpec, init: f64, want_grad: bool) -> (f64, Vec<f64>) {
    let (p, o, q) = (spec.p, spec.o, spec.q);
    let k = theta.len();
    let n = eps.len();
    let h = power_recursion(eps, theta, spec, init);
    let mut ll = 0.0;
    for t in 0..n {
        if !(h[t] > 0.0) {
            return (f64::NAN, vec![f64::NAN; k]);
        }
        ll -= 0.5 * (LN_2PI + h[t].ln() + eps[t] * eps[t] / h[t]);
    }
    if !want_grad {
        return (ll, vec![]);
    }
    // dh_t/dθ = x_t + Σ β_i dh_{t-i}/dθ, with dh = 0 at and before t = 0
    let mut dh = vec![0.0; n * k];
    let mut grad = vec![0.0; k];
    for t in 1..n {
        let (done, rest) = dh.split_at_mut(t * k);
        let row = &mut rest[..k];
        row[0] = 1.0;
        for i in 1..=p {
            row[i] = if t >= i { eps[t - i] * eps[t - i] } else { init };
        }
        for i in 1..=o {
            row[p + i] = if t >= i {
                let x = eps[t - i];
                if x < 0.0 {
                    x * x
                } else {
                    0.0
                }
            } else {
                0.5 * init
            };
        }
        for i in 1..=q {
            row[p + o + i] = if t >= i { h[t - i] } else { init };
        }
        for i in 1..=q {
            if t >= i {
                let b = theta[p + o + i];
                let prev = &done[(t - i) * k..(t - i + 1) * k];
                for j in 0..k {
                    row[j] += b * prev[j];
                }
            }
        }
        let w = -0.5 * (1.0 / h[t] - eps[t] * eps[t] / (h[t] * h[t]));
        for j in 0..k {
            grad[j] += w * row[j];
        }
    }
    (ll, grad)
}

#[derive(Debug, Clone, Copy)]
enum Component {
    Pos(usize),
    Neg(usize),
    Alpha(usize),
    Gamma(usize),
    Beta(usize),
}

/// Map between unconstrained search coordinates and natural parameters.
struct Transform {
    spec: GarchSpec,
    comps: Vec<Component>,
}

impl Transform {
    fn new(spec: GarchSpec) -> Self {
        let mut comps = Vec::new();
        for l in 0..spec.p.max(spec.o) {
            match (l < spec.p, l < spec.o) {
                (true, true) => {
                    comps.push(Component::Pos(l));
                    comps.push(Component::Neg(l));
                }
                (true, false) => comps.push(Component::Alpha(l)),
                _ => comps.push(Component::Gamma(l)),
            }
        }
        comps.extend((0..spec.q).map(Component::Beta));
        Self { spec, comps }
    }

    fn a_idx(&self, l: usize) -> usize {
        1 + l
    }

    fn g_idx(&self, l: usize) -> usize {
        1 + self.spec.p + l
    }

    fn b_idx(&self, l: usize) -> usize {
        1 + self.spec.p + self.spec.o + l
    }

    /// Nonzero entries of `dθ / dc_j` as (natural index, coefficient).
    fn loadings(&self, c: Component) -> Vec<(usize, f64)> {
        match c {
            Component::Pos(l) => vec![(self.a_idx(l), 2.0), (self.g_idx(l), -2.0)],
            Component::Neg(l) => vec![(self.g_idx(l), 2.0)],
            Component::Alpha(l) => vec![(self.a_idx(l), 1.0)],
            Component::Gamma(l) => vec![(self.g_idx(l), 2.0)],
            Component::Beta(l) => vec![(self.b_idx(l), 1.0)],
        }
    }

    fn natural(&self, raw: &[f64]) -> Vec<f64> {
        let mut theta = vec![0.0; self.spec.n_params()];
        theta[0] = raw[0].exp();
        let c = optim::simplex_from_raw(&raw[1..]);
        for (comp, cj) in self.comps.iter().zip(&c) {
            for (i, w) in self.loadings(*comp) {
                theta[i] += w * cj;
            }
        }
        theta
    }

    fn raw(&self, params: &GarchParams) -> Vec<f64> {
        let c: Vec<f64> = self
            .comps
            .iter()
            .map(|comp| match *comp {
                Component::Pos(l) => 0.5 * params.alpha[l],
                Component::Neg(l) => 0.5 * (params.alpha[l] + params.gamma[l]),
                Component::Alpha(l) => params.alpha[l],
                Component::Gamma(l) => 0.5 * params.gamma[l],
                Component::Beta(l) => params.beta[l],
            })
            .collect();
        let mut raw = vec![params.omega.max(1e-300).ln()];
        raw.extend(optim::raw_from_simplex(&c));
        raw
    }

    fn raw_gradient(&self, raw: &[f64], theta: &[f64], grad_theta: &[f64]) -> Vec<f64> {
        let c = optim::simplex_from_raw(&raw[1..]);
        let jac = optim::simplex_jacobian(&c);
        let gc: Vec<f64> = self
            .comps
            .iter()
            .map(|comp| self.loadings(*comp).iter().map(|&(i, w)| w * grad_theta[i]).sum())
            .collect();
        let mut g = vec![theta[0] * grad_theta[0]];
        g.extend((0..c.len()).map(|k| (0..c.len()).map(|j| jac[j][k] * gc[j]).sum::<f64>()));
        g
    }
}

#[derive(Debug, Clone, Default)]
pub struct GarchOptions {
    pub init: VarianceInit,
    pub bfgs: BfgsOptions,
    /// Additional starting point tried alongside the defaults.
    pub start: Option<GarchParams>,
}

/// Estimated univariate model.
#[derive(Debug, Clone)]
pub struct UnivariateFit {
    pub spec: GarchSpec,
    pub params: GarchParams,
    /// Asymptotic standard errors from the inverse observed information.
    pub std_errors: Option<GarchParams>,
    pub residuals: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub std_residuals: Vec<f64>,
    pub loglik: f64,
    pub persistence: f64,
    /// `persistence < 1`
    pub stationary: bool,
    pub status: Status,
    pub iterations: usize,
    pub init: VarianceInit,
}

impl UnivariateFit {
    pub fn omega(&self) -> f64 {
        self.params.omega
    }

    pub fn alpha1(&self) -> f64 {
        self.params.alpha[0]
    }

    pub fn gamma1(&self) -> Option<f64> {
        self.params.gamma.first().copied()
    }

    pub fn beta1(&self) -> Option<f64> {
        self.params.beta.first().copied()
    }
}

/// `ξ_t = ε_t / σ_t` for a fitted model.
pub fn standardized_residuals(fit: &UnivariateFit) -> Vec<f64> {
    fit.std_residuals.clone()
}

/// Gaussian log-likelihood at fixed parameters.
pub fn garch_loglik(eps: &[f64], params: &GarchParams, spec: &GarchSpec, init: VarianceInit) -> Result<f64> {
    let sigma2 = garch_filter(eps, params, spec, init)?;
    Ok(eps
        .iter()
        .zip(&sigma2)
        .map(|(e, s)| -0.5 * (LN_2PI + s.ln() + e * e / s))
        .sum())
}

/// Analytic gradient of the log-likelihood in the order `(ω, α.., γ.., β..)`.
pub fn garch_loglik_gradient(eps: &[f64], params: &GarchParams, spec: &GarchSpec, init: VarianceInit) -> Result<Vec<f64>> {
    params.validate(spec)?;
    if spec.delta != 2 {
        return Err(Error::InvalidParams("gradient available for delta = 2 only".into()));
    }
    Ok(loglik_grad(eps, &params.to_vec(), spec, init.value(eps), true).1)
}

fn default_starts(spec: &GarchSpec, var: f64) -> Vec<GarchParams> {
    [0.90, 0.95, 0.98]
        .iter()
        .map(|&pers| {
            let (a_tot, g_tot) = if spec.o > 0 { (0.03, 0.05) } else { (0.05, 0.0) };
            let b_tot: f64 = pers - a_tot - 0.5 * g_tot;
            let split = |tot: f64, n: usize| vec![tot / n.max(1) as f64; n];
            let beta = if spec.q > 0 { split(b_tot, spec.q) } else { vec![] };
            let used = a_tot + 0.5 * g_tot + if spec.q > 0 { b_tot } else { 0.0 };
            GarchParams {
                omega: var * (1.0 - used),
                alpha: split(a_tot, spec.p),
                gamma: split(g_tot, spec.o),
                beta,
            }
        })
        .collect()
}

/// Quasi-maximum-likelihood fit with default options.
pub fn fit_garch(eps: &[f64], spec: GarchSpec) -> Result<UnivariateFit> {
    fit_garch_with(eps, spec, &GarchOptions::default())
}

/// Quasi-maximum-likelihood fit.
///
/// Starts from three variance-targeted points (persistence 0.90, 0.95,
/// 0.98), from `opts.start` when given, and for asymmetric models from the
/// fitted symmetric model with `γ = 0`, so the asymmetric log-likelihood
/// never falls below the symmetric one.
pub fn fit_garch_with(eps: &[f64], spec: GarchSpec, opts: &GarchOptions) -> Result<UnivariateFit> {
    if spec.delta != 2 {
        return Err(Error::InvalidParams("only delta = 2 models are estimable".into()));
    }
    if eps.len() < 250 {
        return Err(Error::TooFewObservations {
            needed: 250,
            got: eps.len(),
        });
    }
    if let Some(row) = eps.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            asset: "residuals".into(),
            row,
        });
    }
    let var = sample_variance(eps);
    if !(var > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let init = opts.init.value(eps);
    if !(init > 0.0) {
        return Err(Error::InvalidParams("initial variance must be positive".into()));
    }

    let mut starts = default_starts(&spec, var);
    if let Some(s) = &opts.start {
        if s.matches(&spec) {
            starts.push(s.clone());
        }
    }
    if spec.is_asymmetric() {
        let sym_opts = GarchOptions {
            start: None,
            ..opts.clone()
        };
        let sym = match fit_garch_with(eps, spec.symmetric(), &sym_opts) {
            Ok(f) => Some(f),
            Err(Error::GarchNonConvergence { best, .. }) => Some(*best),
            Err(e) => return Err(e),
        };
        if let Some(sym) = sym {
            let mut alpha = sym.params.alpha.clone();
            alpha.resize(spec.p, 0.0);
            starts.push(GarchParams {
                omega: sym.params.omega,
                alpha,
                gamma: vec![0.0; spec.o],
                beta: sym.params.beta.clone(),
            });
        }
    }

    let tr = Transform::new(spec);
    let n = eps.len() as f64;
    let objective = |raw: &[f64]| {
        let theta = tr.natural(raw);
        let (ll, g) = loglik_grad(eps, &theta, &spec, init, true);
        if !ll.is_finite() {
            return (f64::NAN, vec![f64::NAN; raw.len()]);
        }
        let graw = tr.raw_gradient(raw, &theta, &g);
        (-ll / n, graw.into_iter().map(|v| -v / n).collect())
    };

    let mut best: Option<optim::Minimum> = None;
    for s in &starts {
        let m = optim::bfgs(objective, &tr.raw(s), &opts.bfgs);
        if !m.f.is_finite() {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => {
                let tie = (m.f - b.f).abs() <= 1e-12 * b.f.abs().max(1.0);
                if tie {
                    m.status.converged() && !b.status.converged()
                } else {
                    m.f < b.f
                }
            }
        };
        if better {
            best = Some(m);
        }
    }
    let best = best.ok_or_else(|| Error::NonConvergence("no start produced a finite likelihood".into()))?;
    let theta = tr.natural(&best.x);
    let params = GarchParams::from_vec(&spec, &theta);
    let sigma2 = power_recursion(eps, &theta, &spec, init);
    let std_residuals: Vec<f64> = eps.iter().zip(&sigma2).map(|(e, s)| e / s.sqrt()).collect();
    let loglik = -best.f * n;
    let persistence = params.persistence();

    let mut grad_fn = |th: &[f64]| loglik_grad(eps, th, &spec, init, true).1;
    let hess = optim::hessian_from_gradient(&mut grad_fn, &theta, 1e-5);
    let neg: Vec<Vec<f64>> = hess.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
    let std_errors = optim::invert_spd(&neg).and_then(|cov| {
        let se: Vec<f64> = (0..theta.len()).map(|i| cov[i][i].sqrt()).collect();
        se.iter().all(|v| v.is_finite()).then(|| GarchParams::from_vec(&spec, &se))
    });

    let fit = UnivariateFit {
        spec,
        params,
        std_errors,
        residuals: eps.to_vec(),
        sigma2,
        std_residuals,
        loglik,
        persistence,
        stationary: persistence < 1.0,
        status: best.status,
        iterations: best.iterations,
        init: VarianceInit::Fixed(init),
    };
    if !best.status.converged() {
        return Err(Error::GarchNonConvergence {
            status: best.status.to_string(),
            best: Box::new(fit),
        });
    }
    Ok(fit)
}
