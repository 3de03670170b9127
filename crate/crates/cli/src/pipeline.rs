//! End-to-end run: prices → returns → diagnostics → mean filter →
//! univariate volatility → correlation → summaries → regimes.

use nalgebra::DMatrix;
use rayon::prelude::*;
use volspill_core::correlation::{
    dcc_loglik, fit_ccc, fit_dcc, fit_gdcc, summarize_dcc, AgdccFit, CccFit, DccFit, MatrixPath, StdResidualPanel,
};
use volspill_core::diagnostics::{
    adf_test, arch_lm, jarque_bera, ljung_box, pp_test, summary_stats, AdfOptions, PpOptions, TestResult,
};
use volspill_core::energy::{per_kg_to_per_tonne, per_tonne_to_per_kg, regime_for, switch_prices};
use volspill_core::garch::{fit_garch, GarchSpec, UnivariateFit};
use volspill_core::mean::{residualize, MeanFit};
use volspill_core::timeseries::{align_common_days, load_prices, log_returns, PriceFrame, ReturnSeries};

use crate::config::{CarbonUnit, CorrModel, RunConfig, VolModel};
use crate::error::{CliError, CliResult, StageExt};
use crate::output::{NumberFormat, OutputDir, Provenance, Table};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "VOLSPILL_THREADS";

/// Worker count from the config, capped by [`THREADS_ENV`].
pub fn worker_count(configured: Option<usize>) -> CliResult<Option<usize>> {
    let env = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?,
        ),
        Err(_) => None,
    };
    Ok(match (configured, env) {
        (Some(c), Some(e)) => Some(c.min(e)),
        (c, e) => c.or(e),
    })
}

/// Runs `f` on a dedicated pool when a worker count is set.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// What a completed run produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub files: Vec<String>,
    pub warnings: Vec<String>,
}

/// Both univariate models for one series.
pub struct SeriesFits {
    pub garch: UnivariateFit,
    pub gjr: UnivariateFit,
}

impl SeriesFits {
    pub fn selected(&self, model: VolModel) -> &UnivariateFit {
        match model {
            VolModel::Garch => &self.garch,
            VolModel::Gjr => &self.gjr,
        }
    }
}

/// Correlation estimates for one pair (or the joint panel).
pub struct PairEstimate {
    pub assets: Vec<usize>,
    pub ccc: CccFit,
    pub dcc: DccFit,
    pub gdcc: Option<AgdccFit>,
    /// Full log-likelihood including the variance terms.
    pub ccc_loglik: f64,
    pub dcc_loglik: f64,
    pub r_path: MatrixPath,
}

/// Validates, then runs every stage. On failure the error report is written
/// to `error.json` in the output directory (when it exists) and the
/// manifest is marked incomplete.
pub fn run_pipeline(cfg: &RunConfig) -> CliResult<RunReport> {
    let assets = cfg.validate()?;
    let workers = worker_count(cfg.threads)?;
    let prov = Provenance::new(&cfg.config_sha256, cfg.seed);
    let mut out = OutputDir::create(&cfg.out_dir, prov)?;
    let result = with_workers(workers, || run_stages(cfg, &assets, &mut out)).and_then(|r| r);
    match result {
        Ok(warnings) => {
            out.finish()?;
            Ok(RunReport {
                files: out.files(),
                warnings,
            })
        }
        Err(e) => {
            out.fail(e.stage(), &e.to_json())?;
            Err(e)
        }
    }
}

fn run_stages(cfg: &RunConfig, assets: &[String], out: &mut OutputDir) -> CliResult<Vec<String>> {
    let fmt = NumberFormat { raw: cfg.raw };
    let mut warnings = Vec::new();

    let prices = load_panel(cfg)?;
    debug_assert_eq!(prices.assets(), assets);
    let returns = transform_returns(&prices, cfg.return_scale, cfg.demean).stage("returns")?;

    let stats = summary_table(&prices, &returns, cfg.diag_lags, cfg.adf_max_lag, fmt).stage("diagnostics")?;
    out.write(&stats)?;

    let (mean_fits, resid) = match cfg.mean {
        Some(mode) => {
            let (fits, resid) = residualize(&returns, mode, cfg.criterion).stage("mean")?;
            (fits, resid)
        }
        None => (Vec::new(), returns.clone()),
    };

    let fits = fit_univariate(&resid).stage("univariate")?;
    for (name, f) in resid.assets.iter().zip(&fits) {
        for fit in [&f.garch, &f.gjr] {
            if !fit.stationary {
                warnings.push(format!("{name}: {} persistence {} is not below 1", spec_name(&fit.spec), fit.persistence));
            }
        }
    }
    out.write(&garch_table(&resid.assets, &fits, fmt))?;
    out.write(&loglik_table(&resid.assets, &fits, &mean_fits, fmt))?;

    let selected: Vec<&UnivariateFit> = fits.iter().map(|f| f.selected(cfg.volatility)).collect();
    let panel = StdResidualPanel::from_fits(resid.dates.clone(), resid.assets.clone(), &selected).stage("correlation")?;
    let sd = DMatrix::from_fn(panel.len(), panel.dim(), |t, j| selected[j].sigma2[t].sqrt());
    let pairs = cfg.pair_indices(assets);

    let estimates: Vec<PairEstimate> = if cfg.joint {
        let all: Vec<usize> = (0..panel.dim()).collect();
        if panel.dim() > 10 {
            warnings.push("joint correlation estimation with more than 10 series is experimental".into());
        }
        vec![estimate_group(&panel, &sd, &all, cfg.correlation).stage("correlation")?]
    } else {
        pairs
            .par_iter()
            .map(|&(i, j)| estimate_group(&panel, &sd, &[i, j], cfg.correlation))
            .collect::<volspill_core::Result<_>>()
            .stage("correlation")?
    };
    for e in &estimates {
        let label = e.assets.iter().map(|&i| assets[i].as_str()).collect::<Vec<_>>().join(":");
        warnings.extend(e.dcc.warnings.iter().map(|w| format!("{label}: {w}")));
        if let Some(g) = &e.gdcc {
            warnings.extend(g.warnings.iter().map(|w| format!("{label}: {w}")));
        }
    }

    // (estimate index, row/col inside that estimate) for each requested pair
    let located: Vec<((usize, usize), usize, usize, usize)> = pairs
        .iter()
        .enumerate()
        .map(|(n, &(i, j))| {
            if cfg.joint {
                ((i, j), 0, i, j)
            } else {
                ((i, j), n, 0, 1)
            }
        })
        .collect();

    out.write(&pairs_table(assets, &located, &estimates, fmt))?;
    if matches!(cfg.correlation, CorrModel::Gdcc | CorrModel::Agdcc) {
        out.write(&gdcc_table(assets, &estimates, fmt))?;
    }

    let mut summary = Table::new("dcc_summary.csv", &["asset_i", "asset_j", "model", "window", "n", "mean", "min", "max"]);
    for &((i, j), e, a, b) in &located {
        let s = summarize_dcc(&estimates[e].r_path, &panel.dates, (a, b), &cfg.windows).stage("summaries")?;
        for w in s.windows {
            summary.push(vec![
                assets[i].clone(),
                assets[j].clone(),
                cfg.correlation.as_str().into(),
                w.label,
                w.n.to_string(),
                fmt.fmt(w.mean),
                fmt.fmt(w.min),
                fmt.fmt(w.max),
            ]);
        }
    }
    out.write(&summary)?;

    let mut paths = Table::new("rho_paths.csv", &["date", "asset_i", "asset_j", "rho"]);
    for &((i, j), e, a, b) in &located {
        let r = &estimates[e].r_path;
        for (t, d) in panel.dates.iter().enumerate() {
            paths.push(vec![d.to_string(), assets[i].clone(), assets[j].clone(), fmt.fmt(r.get(t, a, b))]);
        }
    }
    out.write(&paths)?;

    if let Some(sw) = &cfg.switch {
        let col = |name: &String| prices.column(name).expect("validated asset");
        let eua = col(&sw.eua_asset);
        let coal = sw.coal_asset.as_ref().map(col);
        let gas = sw.gas_asset.as_ref().map(col);
        let (table, w) = regime_table(
            prices.dates(),
            &eua,
            coal.as_deref(),
            gas.as_deref(),
            &sw.context,
            sw.eua_unit,
            fmt,
        )
        .stage("regimes")?;
        warnings.extend(w);
        out.write(&table)?;
    }
    Ok(warnings)
}

fn load_panel(cfg: &RunConfig) -> CliResult<PriceFrame> {
    let frames = cfg
        .inputs
        .iter()
        .map(|i| load_prices(&i.path, &i.csv))
        .collect::<volspill_core::Result<Vec<_>>>()
        .stage("load")?;
    align_common_days(&frames).stage("load")
}

/// Log returns, optionally scaled and demeaned.
pub fn transform_returns(prices: &PriceFrame, scale: f64, demean: bool) -> volspill_core::Result<ReturnSeries> {
    let mut r = log_returns(prices)?;
    if scale != 1.0 {
        r.values *= scale;
    }
    if demean {
        for mut c in r.values.column_iter_mut() {
            let m = c.mean();
            c.add_scalar_mut(-m);
        }
    }
    Ok(r)
}

fn spec_name(spec: &GarchSpec) -> &'static str {
    if spec.is_asymmetric() {
        "GJR-GARCH(1,1,1)"
    } else {
        "GARCH(1,1)"
    }
}

/// GARCH(1,1) and GJR(1,1,1) for every residual series, in parallel.
pub fn fit_univariate(resid: &ReturnSeries) -> volspill_core::Result<Vec<SeriesFits>> {
    (0..resid.dim())
        .into_par_iter()
        .map(|j| {
            let e = resid.column(j);
            Ok(SeriesFits {
                garch: fit_garch(&e, GarchSpec::garch11())?,
                gjr: fit_garch(&e, GarchSpec::gjr111())?,
            })
        })
        .collect()
}

/// Sub-panel of the given columns.
fn sub_panel(panel: &StdResidualPanel, cols: &[usize]) -> volspill_core::Result<StdResidualPanel> {
    if cols.len() == 2 {
        return panel.pair(cols[0], cols[1]);
    }
    if cols.len() == panel.dim() && cols.iter().enumerate().all(|(n, c)| n == *c) {
        return Ok(panel.clone());
    }
    let values = DMatrix::from_fn(panel.len(), cols.len(), |t, c| panel.values[(t, cols[c])]);
    StdResidualPanel::new(
        panel.dates.clone(),
        cols.iter().map(|&c| panel.source[c].clone()).collect(),
        values,
    )
}

/// CCC and scalar DCC on the chosen series, plus G-DCC/AG-DCC when
/// requested. `r_path` follows the requested model.
pub fn estimate_group(
    panel: &StdResidualPanel,
    sd: &DMatrix<f64>,
    cols: &[usize],
    model: CorrModel,
) -> volspill_core::Result<PairEstimate> {
    let xi = sub_panel(panel, cols)?;
    let d = DMatrix::from_fn(sd.nrows(), cols.len(), |t, c| sd[(t, cols[c])]);
    let ccc = fit_ccc(&xi)?;
    let ccc_path = ccc.path(xi.len());
    let dcc = fit_dcc(&xi, 1, 1)?;
    let gdcc = match model {
        CorrModel::Gdcc => Some(fit_gdcc(&xi, false)?),
        CorrModel::Agdcc => Some(fit_gdcc(&xi, true)?),
        _ => None,
    };
    let ccc_loglik = dcc_loglik(&xi.values, &ccc_path, &d)?;
    let dcc_ll = dcc_loglik(&xi.values, &dcc.r_path, &d)?;
    let r_path = match (model, &gdcc) {
        (CorrModel::Ccc, _) => ccc_path,
        (_, Some(g)) => g.r_path.clone(),
        _ => dcc.r_path.clone(),
    };
    r_path.check_correlation(1e-10)?;
    Ok(PairEstimate {
        assets: cols.to_vec(),
        ccc,
        dcc,
        gdcc,
        ccc_loglik,
        dcc_loglik: dcc_ll,
        r_path,
    })
}

fn push_test(t: &mut Vec<(String, Vec<f64>)>, name: &str, results: &[TestResult]) {
    t.push((name.to_string(), results.iter().map(|r| r.statistic).collect()));
    t.push((format!("{name} p-value"), results.iter().map(|r| r.p_value).collect()));
}

/// Descriptive statistics of price levels and returns, one row per
/// statistic and one column per asset.
pub fn summary_table(
    prices: &PriceFrame,
    returns: &ReturnSeries,
    lags: usize,
    adf_max_lag: usize,
    fmt: NumberFormat,
) -> volspill_core::Result<Table> {
    let mut header = vec!["panel", "statistic"];
    header.extend(prices.assets().iter().map(String::as_str));
    let mut table = Table::new("summary_stats.csv", &header);

    let mut blocks: Vec<(&str, Vec<(String, Vec<f64>)>)> = Vec::new();
    for (panel, cols) in [
        ("prices", prices.assets().iter().map(|a| prices.column(a).expect("own asset")).collect::<Vec<_>>()),
        ("returns", (0..returns.dim()).map(|j| returns.column(j)).collect()),
    ] {
        let stats = cols.iter().map(|c| summary_stats(c)).collect::<volspill_core::Result<Vec<_>>>()?;
        let jb = cols.iter().map(|c| jarque_bera(c)).collect::<volspill_core::Result<Vec<_>>>()?;
        let mut rows: Vec<(String, Vec<f64>)> = vec![
            ("observations".into(), stats.iter().map(|s| s.n as f64).collect()),
            ("mean".into(), stats.iter().map(|s| s.mean).collect()),
            ("median".into(), stats.iter().map(|s| s.median).collect()),
            ("maximum".into(), stats.iter().map(|s| s.max).collect()),
            ("minimum".into(), stats.iter().map(|s| s.min).collect()),
            ("std_dev".into(), stats.iter().map(|s| s.std_dev).collect()),
            ("skewness".into(), stats.iter().map(|s| s.skewness).collect()),
            ("kurtosis".into(), stats.iter().map(|s| s.kurtosis).collect()),
        ];
        push_test(&mut rows, "jarque_bera", &jb);
        if panel == "returns" {
            let run = |f: &dyn Fn(&[f64]) -> volspill_core::Result<TestResult>| {
                cols.iter().map(|c| f(c)).collect::<volspill_core::Result<Vec<_>>>()
            };
            push_test(&mut rows, &format!("Q({lags})"), &run(&|c| ljung_box(c, lags, false))?);
            push_test(&mut rows, &format!("Q2({lags})"), &run(&|c| ljung_box(c, lags, true))?);
            push_test(&mut rows, &format!("ARCH-LM({lags})"), &run(&|c| arch_lm(c, lags))?);
            let adf = AdfOptions {
                max_lag: adf_max_lag,
                ..AdfOptions::default()
            };
            push_test(&mut rows, "ADF", &run(&|c| adf_test(c, adf))?);
            push_test(&mut rows, "PP", &run(&|c| pp_test(c, PpOptions::default()))?);
        }
        blocks.push((panel, rows));
    }
    for (panel, rows) in blocks {
        for (name, vals) in rows {
            let mut row = vec![panel.to_string(), name];
            row.extend(vals.iter().map(|v| fmt.fmt(*v)));
            table.push(row);
        }
    }
    Ok(table)
}

fn garch_table(assets: &[String], fits: &[SeriesFits], fmt: NumberFormat) -> Table {
    let mut t = Table::new(
        "garch_params.csv",
        &[
            "series", "model", "omega", "alpha1", "gamma1", "beta1", "persistence", "loglik", "se_omega", "se_alpha1",
            "se_gamma1", "se_beta1", "status",
        ],
    );
    for (name, f) in assets.iter().zip(fits) {
        for (model, fit) in [("garch", &f.garch), ("gjr", &f.gjr)] {
            let p = &fit.params;
            let se = fit.std_errors.as_ref();
            t.push(vec![
                name.clone(),
                model.into(),
                fmt.fmt(p.omega),
                fmt.fmt(p.alpha[0]),
                fmt.opt(p.gamma.first().copied()),
                fmt.fmt(p.beta[0]),
                fmt.fmt(fit.persistence),
                fmt.fmt(fit.loglik),
                fmt.opt(se.map(|s| s.omega)),
                fmt.opt(se.map(|s| s.alpha[0])),
                fmt.opt(se.and_then(|s| s.gamma.first().copied())),
                fmt.opt(se.map(|s| s.beta[0])),
                format!("{:?}", fit.status),
            ]);
        }
    }
    t
}

fn loglik_table(assets: &[String], fits: &[SeriesFits], mean: &[MeanFit], fmt: NumberFormat) -> Table {
    let mut t = Table::new(
        "loglik.csv",
        &["series", "garch_loglik", "gjr_loglik", "mean_model", "ar", "ma", "mean_aic", "mean_loglik"],
    );
    for (j, (name, f)) in assets.iter().zip(fits).enumerate() {
        let rec = match mean {
            [] => None,
            [MeanFit::Var(_)] => Some(mean[0].to_record(name)),
            m => Some(m[j].to_record(name)),
        };
        t.push(vec![
            name.clone(),
            fmt.fmt(f.garch.loglik),
            fmt.fmt(f.gjr.loglik),
            rec.as_ref().map(|r| r.model.clone()).unwrap_or_else(|| "none".into()),
            rec.as_ref().map(|r| r.ar.to_string()).unwrap_or_default(),
            rec.as_ref().map(|r| r.ma.to_string()).unwrap_or_default(),
            fmt.opt(rec.as_ref().map(|r| r.aic)),
            fmt.opt(rec.as_ref().map(|r| r.loglik)),
        ]);
    }
    t
}

/// Column order of `dcc_pairs.csv`.
pub const PAIR_COLUMNS: [&str; 11] = [
    "asset_i",
    "asset_j",
    "rho_ccc",
    "alpha",
    "beta",
    "alpha_plus_beta",
    "loglik",
    "ccc_loglik",
    "corr_loglik",
    "status",
    "warnings",
];

fn pairs_table(
    assets: &[String],
    located: &[((usize, usize), usize, usize, usize)],
    est: &[PairEstimate],
    fmt: NumberFormat,
) -> Table {
    let mut t = Table::new("dcc_pairs.csv", &PAIR_COLUMNS);
    for &((i, j), e, a, b) in located {
        let p = &est[e];
        t.push(vec![
            assets[i].clone(),
            assets[j].clone(),
            fmt.fmt(p.ccc.r[(a, b)]),
            fmt.fmt(p.dcc.alpha1()),
            fmt.fmt(p.dcc.beta1()),
            fmt.fmt(p.dcc.persistence()),
            fmt.fmt(p.dcc_loglik),
            fmt.fmt(p.ccc_loglik),
            fmt.fmt(p.dcc.corr_loglik),
            format!("{:?}", p.dcc.status),
            p.dcc.warnings.join("; "),
        ]);
    }
    t
}

fn gdcc_table(assets: &[String], est: &[PairEstimate], fmt: NumberFormat) -> Table {
    let mut t = Table::new("gdcc_params.csv", &["group", "asset", "a", "b", "g", "loglik", "corr_loglik", "status"]);
    for e in est {
        let Some(g) = &e.gdcc else { continue };
        let label = e.assets.iter().map(|&i| assets[i].as_str()).collect::<Vec<_>>().join(":");
        for (n, &i) in e.assets.iter().enumerate() {
            t.push(vec![
                label.clone(),
                assets[i].clone(),
                fmt.fmt(g.a[n]),
                fmt.fmt(g.b[n]),
                fmt.opt(g.g.get(n).copied()),
                fmt.fmt(g.loglik),
                fmt.fmt(g.corr_loglik),
                format!("{:?}", g.status),
            ]);
        }
    }
    t
}

/// Daily regime classification of a carbon price series. Fuel-cost series,
/// when given, replace the context's fixed fuel costs day by day. Switch
/// prices are reported in the carbon price's unit.
pub fn regime_table(
    dates: &[chrono::NaiveDate],
    eua: &[f64],
    coal: Option<&[f64]>,
    gas: Option<&[f64]>,
    ctx: &volspill_core::energy::SwitchContext,
    unit: CarbonUnit,
    fmt: NumberFormat,
) -> volspill_core::Result<(Table, Vec<String>)> {
    let mut t = Table::new("regimes.csv", &["date", "eua", "sp_lower", "sp_upper", "regime"]);
    let mut warnings = Vec::new();
    for (n, d) in dates.iter().enumerate() {
        let day = ctx.with_fuel_costs(
            coal.map_or(ctx.fc_coal, |c| c[n]),
            gas.map_or(ctx.fc_gas, |g| g[n]),
        );
        let sp = switch_prices(&day)?;
        if let Some(w) = &sp.warning {
            if warnings.is_empty() {
                warnings.push(format!("{d}: {w}"));
            }
        }
        let per_kg = match unit {
            CarbonUnit::PerTonne => per_tonne_to_per_kg(eua[n]),
            CarbonUnit::PerKg => eua[n],
        };
        let regime = regime_for(per_kg, &sp);
        let show = |v: f64| match unit {
            CarbonUnit::PerTonne => per_kg_to_per_tonne(v),
            CarbonUnit::PerKg => v,
        };
        t.push(vec![
            d.to_string(),
            fmt.fmt(eua[n]),
            fmt.fmt(show(sp.lower)),
            fmt.fmt(show(sp.upper)),
            regime.to_string(),
        ]);
    }
    Ok((t, warnings))
}
