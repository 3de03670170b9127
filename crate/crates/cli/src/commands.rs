//! The `diag`, `sim` and `regime` subcommands.

use std::path::{Path, PathBuf};

use volspill_core::correlation::MatrixPath;
use volspill_core::sim::{recovery_study, simulate, RNG_NAME};
use volspill_core::timeseries::{load_prices, CsvOptions};

use crate::config::{parse_carbon_unit, parse_switch_context, sha256_hex, CarbonUnit, ConfigFile, SimConfig};
use crate::error::{io_err, CliError, CliResult, StageExt};
use crate::output::{NumberFormat, OutputDir, Provenance, Table};
use crate::pipeline::{regime_table, summary_table, transform_returns};

/// Provenance for commands driven by flags rather than a config file: the
/// hash covers the settings string and the input bytes.
fn flag_provenance(settings: &str, inputs: &[&Path]) -> CliResult<Provenance> {
    let mut bytes = settings.as_bytes().to_vec();
    for p in inputs {
        bytes.extend(std::fs::read(p).map_err(io_err(*p))?);
    }
    Ok(Provenance::new(&sha256_hex(&bytes), 0))
}

fn emit(table: &Table, prov: &Provenance, out: Option<&Path>) -> CliResult<()> {
    let bytes = table.render(prov)?;
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(io_err(p)),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(&bytes)
                .map_err(io_err("<stdout>"))
        }
    }
}

pub struct DiagArgs {
    pub csv: PathBuf,
    pub options: CsvOptions,
    pub lags: usize,
    pub adf_max_lag: usize,
    pub out: Option<PathBuf>,
    pub raw: bool,
}

/// Summary statistics and diagnostic tests for every column of a price file.
pub fn diag(args: &DiagArgs) -> CliResult<()> {
    let prices = load_prices(&args.csv, &args.options).stage("load")?;
    let returns = transform_returns(&prices, 1.0, false).stage("returns")?;
    let table = summary_table(&prices, &returns, args.lags, args.adf_max_lag, NumberFormat { raw: args.raw })
        .stage("diagnostics")?;
    let settings = format!(
        "diag date_column={} date_format={:?} lags={} adf_max_lag={}",
        args.options.date_column, args.options.date_format, args.lags, args.adf_max_lag
    );
    emit(&table, &flag_provenance(&settings, &[&args.csv])?, args.out.as_deref())
}

/// Simulates the configured DGP into `out_dir`: `simulated_returns.csv`,
/// `true_sigma2.csv`, `true_rho.csv` (two or more series) and
/// `recovery.csv` when a study is requested.
pub fn sim(cfg: &SimConfig, out_dir: &Path) -> CliResult<Vec<String>> {
    let fmt = NumberFormat { raw: cfg.raw };
    let mut prov = Provenance::new(&cfg.config_sha256, cfg.dgp.seed);
    prov.extra.push(("rng".into(), RNG_NAME.split(' ').next().unwrap_or(RNG_NAME).into()));
    let mut out = OutputDir::create(out_dir, prov)?;
    let res = sim_stages(cfg, fmt, &mut out);
    match res {
        Ok(()) => {
            out.finish()?;
            Ok(out.files())
        }
        Err(e) => {
            out.fail(e.stage(), &e.to_json())?;
            Err(e)
        }
    }
}

fn sim_stages(cfg: &SimConfig, fmt: NumberFormat, out: &mut OutputDir) -> CliResult<()> {
    let sim = simulate(&cfg.dgp).stage("simulate")?;
    let names = &sim.returns.assets;
    let k = names.len();
    let mut header = vec!["date"];
    header.extend(names.iter().map(String::as_str));

    let mut returns = Table::new("simulated_returns.csv", &header);
    let mut sigma2 = Table::new("true_sigma2.csv", &header);
    for (t, d) in sim.returns.dates.iter().enumerate() {
        let mut r = vec![d.to_string()];
        let mut s = vec![d.to_string()];
        for j in 0..k {
            r.push(fmt.fmt(sim.returns.values[(t, j)]));
            s.push(fmt.fmt(sim.sigma2[(t, j)]));
        }
        returns.push(r);
        sigma2.push(s);
    }
    out.write(&returns)?;
    out.write(&sigma2)?;
    if k > 1 {
        out.write(&rho_long(&sim.returns.dates, names, &sim.r_path, "true_rho.csv", fmt))?;
    }

    if let Some(reps) = cfg.replications {
        let rep = recovery_study(&cfg.dgp, reps).stage("recovery")?;
        let mut t = Table::new("recovery.csv", &["parameter", "truth", "mean", "bias", "rmse", "n", "failures"]);
        for p in &rep.params {
            t.push(vec![
                p.name.clone(),
                fmt.fmt(p.truth),
                fmt.fmt(p.mean),
                fmt.fmt(p.bias),
                fmt.fmt(p.rmse),
                p.n.to_string(),
                rep.failures.to_string(),
            ]);
        }
        out.write(&t)?;
    }
    Ok(())
}

fn rho_long(dates: &[chrono::NaiveDate], names: &[String], r: &MatrixPath, file: &str, fmt: NumberFormat) -> Table {
    let mut t = Table::new(file, &["date", "asset_i", "asset_j", "rho"]);
    let k = names.len();
    for (n, d) in dates.iter().enumerate() {
        for i in 0..k {
            for j in i + 1..k {
                t.push(vec![d.to_string(), names[i].clone(), names[j].clone(), fmt.fmt(r.get(n, i, j))]);
            }
        }
    }
    t
}

pub struct RegimeArgs {
    pub context: PathBuf,
    pub prices: PathBuf,
    pub options: CsvOptions,
    /// Overrides for the context file's `[prices]` section.
    pub eua_column: Option<String>,
    pub eua_unit: Option<String>,
    pub coal_column: Option<String>,
    pub gas_column: Option<String>,
    pub out: Option<PathBuf>,
    pub raw: bool,
}

/// Regime-annotated carbon price series.
pub fn regime(args: &RegimeArgs) -> CliResult<()> {
    let file = ConfigFile::load(&args.context)?;
    let ctx = parse_switch_context(&file)?;
    let section = file.section("prices");
    if let Some(s) = &section {
        s.only(&["eua_column", "eua_unit", "coal_column", "gas_column"])?;
    }
    let pick = |flag: &Option<String>, key: &str| -> Option<String> {
        flag.clone()
            .or_else(|| section.as_ref().and_then(|s| s.get(key)).map(str::to_string))
    };
    let eua_col = pick(&args.eua_column, "eua_column").unwrap_or_else(|| "eua".into());
    let unit: CarbonUnit = parse_carbon_unit(pick(&args.eua_unit, "eua_unit").as_deref())?;
    let coal_col = pick(&args.coal_column, "coal_column");
    let gas_col = pick(&args.gas_column, "gas_column");

    let prices = load_prices(&args.prices, &args.options).stage("load")?;
    let col = |name: &str| {
        prices
            .column(name)
            .ok_or_else(|| CliError::Validation(format!("price file has no column `{name}`")))
    };
    let eua = col(&eua_col)?;
    let coal = coal_col.as_deref().map(col).transpose()?;
    let gas = gas_col.as_deref().map(col).transpose()?;
    let (table, warnings) = regime_table(
        prices.dates(),
        &eua,
        coal.as_deref(),
        gas.as_deref(),
        &ctx,
        unit,
        NumberFormat { raw: args.raw },
    )
    .stage("regimes")?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    let settings = format!("regime eua={eua_col} unit={unit:?} coal={coal_col:?} gas={gas_col:?}");
    emit(
        &table,
        &flag_provenance(&settings, &[&args.context, &args.prices])?,
        args.out.as_deref(),
    )
}
