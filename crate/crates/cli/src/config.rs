//! INI-style configuration files: `[section]` headers and `key = value`
//! lines, with `#` or `;` comments. Relative paths resolve against the
//! directory holding the config file.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use ini::{Ini, Properties};
use nalgebra::DMatrix;
use sha2::{Digest, Sha256};
use volspill_core::energy::{Fuel, PlantParams, SwitchContext};
use volspill_core::garch::{GarchParams, GarchSpec};
use volspill_core::mean::{Criterion, MeanMode, DEFAULT_MAX_ORDER};
use volspill_core::sim::{CorrelationDgp, Dgp, Shock, DEFAULT_BURN_IN};
use volspill_core::timeseries::{CrisisWindow, CsvOptions, DateFormat};

use crate::error::{io_err, CliError, CliResult};

/// Parsed file with its SHA-256, used in output provenance headers.
pub struct ConfigFile {
    pub ini: Ini,
    pub sha256: String,
    pub base_dir: PathBuf,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(io_err(path))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_bytes(&bytes, base_dir)
    }

    pub fn from_bytes(bytes: &[u8], base_dir: PathBuf) -> CliResult<Self> {
        let text = std::str::from_utf8(bytes).map_err(|_| CliError::Config("config is not valid UTF-8".into()))?;
        let ini = Ini::load_from_str_noescape(text).map_err(|e| CliError::Config(e.to_string()))?;
        for (name, props) in ini.iter() {
            if name.is_none() && !props.is_empty() {
                return Err(CliError::Config("keys before the first [section]".into()));
            }
        }
        Ok(Self {
            ini,
            sha256: sha256_hex(bytes),
            base_dir,
        })
    }

    pub fn section(&self, name: &str) -> Option<Section<'_>> {
        self.ini.section(Some(name)).map(|props| Section { name: name.to_string(), props })
    }

    /// Sections named `prefix` or `prefix.<label>`, in file order.
    pub fn sections_with_prefix(&self, prefix: &str) -> Vec<(String, Section<'_>)> {
        self.ini
            .iter()
            .filter_map(|(name, props)| {
                let name = name?;
                let label = if name == prefix {
                    Some(String::new())
                } else {
                    name.strip_prefix(prefix).and_then(|r| r.strip_prefix('.')).map(str::to_string)
                }?;
                Some((label, Section { name: name.to_string(), props }))
            })
            .collect()
    }

    pub fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn check_sections(&self, allowed: &[&str], prefixed: &[&str]) -> CliResult<()> {
        for name in self.ini.sections().flatten() {
            let ok = allowed.contains(&name)
                || prefixed.iter().any(|p| name == *p || name.starts_with(&format!("{p}.")));
            if !ok {
                return Err(CliError::Config(format!("unknown section [{name}]")));
            }
        }
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub struct Section<'a> {
    name: String,
    props: &'a Properties,
}

impl Section<'_> {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.props.get(key).map(str::trim).filter(|v| !v.is_empty())
    }

    pub fn require(&self, key: &str) -> CliResult<&str> {
        self.get(key)
            .ok_or_else(|| CliError::Config(format!("[{}] is missing `{key}`", self.name)))
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::Config(format!("[{}] `{key}`: cannot parse `{v}`", self.name)))
            })
            .transpose()
    }

    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    pub fn parse_req<T: FromStr>(&self, key: &str) -> CliResult<T> {
        self.parse(key)?
            .ok_or_else(|| CliError::Config(format!("[{}] is missing `{key}`", self.name)))
    }

    pub fn bool_or(&self, key: &str, default: bool) -> CliResult<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true" | "yes" | "1" | "on") => Ok(true),
            Some("false" | "no" | "0" | "off") => Ok(false),
            Some(v) => Err(CliError::Config(format!("[{}] `{key}`: expected a boolean, got `{v}`", self.name))),
        }
    }

    /// Comma-separated list.
    pub fn list(&self, key: &str) -> Vec<String> {
        self.get(key)
            .map(|v| v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect())
            .unwrap_or_default()
    }

    pub fn float_list(&self, key: &str) -> CliResult<Vec<f64>> {
        self.list(key)
            .iter()
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::Config(format!("[{}] `{key}`: cannot parse `{v}`", self.name)))
            })
            .collect()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.props.iter().map(|(k, _)| k)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.props.iter().map(|(k, v)| (k, v.trim()))
    }

    pub fn only(&self, allowed: &[&str]) -> CliResult<()> {
        for k in self.keys() {
            if !allowed.contains(&k) {
                return Err(CliError::Config(format!("[{}] has unknown key `{k}`", self.name)));
            }
        }
        Ok(())
    }
}

fn parse_date_format(v: &str) -> CliResult<DateFormat> {
    match v {
        "iso" | "YYYY-MM-DD" => Ok(DateFormat::Iso),
        "dmy" | "DD/MM/YYYY" => Ok(DateFormat::DayMonthYear),
        _ => Err(CliError::Config(format!("unknown date_format `{v}` (iso or dmy)"))),
    }
}

fn parse_delimiter(v: Option<&str>) -> CliResult<u8> {
    match v {
        None | Some(",") => Ok(b','),
        Some("tab" | "\\t") => Ok(b'\t'),
        Some(s) if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        Some(s) => Err(CliError::Config(format!("delimiter must be one ASCII character, got `{s}`"))),
    }
}

fn parse_date(v: &str) -> CliResult<NaiveDate> {
    NaiveDate::parse_from_str(v.trim(), "%Y-%m-%d").map_err(|_| CliError::Config(format!("bad date `{v}`")))
}

/// One price file and the columns to read from it.
#[derive(Debug, Clone)]
pub struct InputSpec {
    pub label: String,
    pub path: PathBuf,
    pub csv: CsvOptions,
}

impl InputSpec {
    fn from_section(label: String, s: &Section<'_>, cfg: &ConfigFile) -> CliResult<Self> {
        s.only(&["path", "date_column", "assets", "date_format", "delimiter"])?;
        let assets = s.list("assets");
        Ok(Self {
            label,
            path: cfg.resolve(s.require("path")?),
            csv: CsvOptions {
                date_column: s.get("date_column").unwrap_or("date").to_string(),
                asset_columns: (!assets.is_empty()).then_some(assets),
                date_format: s.get("date_format").map(parse_date_format).transpose()?.unwrap_or_default(),
                delimiter: parse_delimiter(s.get("delimiter"))?,
            },
        })
    }

    /// Asset names this input contributes, read from the header when no
    /// explicit list is given.
    pub fn asset_names(&self) -> CliResult<Vec<String>> {
        if let Some(a) = &self.csv.asset_columns {
            return Ok(a.clone());
        }
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(self.csv.delimiter)
            .from_path(&self.path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", self.path.display())))?;
        let headers = rdr.headers().map_err(|e| CliError::Validation(e.to_string()))?;
        Ok(headers
            .iter()
            .map(str::trim)
            .filter(|h| *h != self.csv.date_column)
            .map(str::to_string)
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolModel {
    Garch,
    Gjr,
}

impl VolModel {
    pub fn spec(self) -> GarchSpec {
        match self {
            VolModel::Garch => GarchSpec::garch11(),
            VolModel::Gjr => GarchSpec::gjr111(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VolModel::Garch => "garch",
            VolModel::Gjr => "gjr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrModel {
    Ccc,
    Dcc,
    Gdcc,
    Agdcc,
}

impl CorrModel {
    pub fn as_str(self) -> &'static str {
        match self {
            CorrModel::Ccc => "ccc",
            CorrModel::Dcc => "dcc",
            CorrModel::Gdcc => "gdcc",
            CorrModel::Agdcc => "agdcc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CarbonUnit {
    PerTonne,
    PerKg,
}

#[derive(Debug, Clone)]
pub struct SwitchConfig {
    pub context: SwitchContext,
    /// Asset column holding the carbon price.
    pub eua_asset: String,
    pub eua_unit: CarbonUnit,
    /// Optional asset columns with daily fuel costs in €/GJ.
    pub coal_asset: Option<String>,
    pub gas_asset: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub inputs: Vec<InputSpec>,
    /// Multiplier applied to log returns, e.g. 100 for percent.
    pub return_scale: f64,
    pub demean: bool,
    /// `None` skips mean filtering.
    pub mean: Option<MeanMode>,
    pub criterion: Criterion,
    pub diag_lags: usize,
    pub adf_max_lag: usize,
    pub volatility: VolModel,
    pub correlation: CorrModel,
    /// Empty means every pair.
    pub pairs: Vec<(String, String)>,
    pub joint: bool,
    pub windows: Vec<CrisisWindow>,
    pub switch: Option<SwitchConfig>,
    pub out_dir: PathBuf,
    pub raw: bool,
    pub threads: Option<usize>,
    pub seed: u64,
    pub config_sha256: String,
}

pub fn parse_run_config(cfg: &ConfigFile) -> CliResult<RunConfig> {
    cfg.check_sections(
        &["returns", "mean", "diagnostics", "volatility", "correlation", "windows", "switch", "output"],
        &["input"],
    )?;
    let inputs = cfg
        .sections_with_prefix("input")
        .into_iter()
        .map(|(label, s)| InputSpec::from_section(label, &s, cfg))
        .collect::<CliResult<Vec<_>>>()?;
    if inputs.is_empty() {
        return Err(CliError::Config("no [input] section".into()));
    }

    let empty = Properties::new();
    let sect = |name: &str| {
        cfg.section(name).unwrap_or(Section {
            name: name.to_string(),
            props: &empty,
        })
    };

    let returns = sect("returns");
    returns.only(&["scale", "demean"])?;
    let return_scale = returns.parse_or("scale", 1.0)?;
    if !(return_scale > 0.0 && f64::is_finite(return_scale)) {
        return Err(CliError::Config("[returns] scale must be positive".into()));
    }

    let mean = sect("mean");
    mean.only(&["mode", "max_p", "max_q", "criterion"])?;
    let max_p = mean.parse_or("max_p", DEFAULT_MAX_ORDER)?;
    let max_q = mean.parse_or("max_q", DEFAULT_MAX_ORDER)?;
    let mean_mode = match mean.get("mode").unwrap_or("arma") {
        "arma" => Some(MeanMode::Arma { max_p, max_q }),
        "var" => Some(MeanMode::Var { max_p: max_p.max(1) }),
        "none" => None,
        v => return Err(CliError::Config(format!("[mean] mode must be arma, var or none, got `{v}`"))),
    };
    let criterion = match mean.get("criterion") {
        None => Criterion::default(),
        Some(v) => v.parse().map_err(|_| CliError::Config(format!("[mean] unknown criterion `{v}`")))?,
    };

    let diag = sect("diagnostics");
    diag.only(&["lags", "adf_max_lag"])?;

    let vol = sect("volatility");
    vol.only(&["model"])?;
    let volatility = match vol.get("model").unwrap_or("garch") {
        "garch" => VolModel::Garch,
        "gjr" => VolModel::Gjr,
        v => return Err(CliError::Config(format!("[volatility] model must be garch or gjr, got `{v}`"))),
    };

    let corr = sect("correlation");
    corr.only(&["model", "pairs", "joint"])?;
    let correlation = match corr.get("model").unwrap_or("dcc") {
        "ccc" => CorrModel::Ccc,
        "dcc" => CorrModel::Dcc,
        "gdcc" => CorrModel::Gdcc,
        "agdcc" => CorrModel::Agdcc,
        v => return Err(CliError::Config(format!("[correlation] unknown model `{v}`"))),
    };
    let pairs = corr
        .list("pairs")
        .iter()
        .map(|p| {
            let (a, b) = p
                .split_once(':')
                .ok_or_else(|| CliError::Config(format!("pair `{p}` must be written a:b")))?;
            Ok((a.trim().to_string(), b.trim().to_string()))
        })
        .collect::<CliResult<Vec<_>>>()?;

    let windows = match cfg.section("windows") {
        None => Vec::new(),
        Some(w) => w
            .entries()
            .map(|(label, range)| {
                let (a, b) = range
                    .split_once("..")
                    .ok_or_else(|| CliError::Config(format!("window `{label}` must be start..end")))?;
                CrisisWindow::new(label, parse_date(a)?, parse_date(b)?)
                    .map_err(|e| CliError::Config(e.to_string()))
            })
            .collect::<CliResult<Vec<_>>>()?,
    };

    let switch = cfg.section("switch").map(|s| parse_switch_section(&s, cfg)).transpose()?;

    let out = sect("output");
    out.only(&["dir", "raw", "threads", "seed"])?;
    let threads: Option<usize> = out.parse("threads")?;
    if threads == Some(0) {
        return Err(CliError::Config("[output] threads must be at least 1".into()));
    }

    Ok(RunConfig {
        inputs,
        return_scale,
        demean: returns.bool_or("demean", false)?,
        mean: mean_mode,
        criterion,
        diag_lags: diag.parse_or("lags", 20)?,
        adf_max_lag: diag.parse_or("adf_max_lag", 12)?,
        volatility,
        correlation,
        pairs,
        joint: corr.bool_or("joint", false)?,
        windows,
        switch,
        out_dir: cfg.resolve(out.get("dir").unwrap_or("output")),
        raw: out.bool_or("raw", false)?,
        threads,
        seed: out.parse_or("seed", 0)?,
        config_sha256: cfg.sha256.clone(),
    })
}

impl RunConfig {
    /// Checks file existence and asset references without loading any data.
    /// Returns the asset names in panel order.
    pub fn validate(&self) -> CliResult<Vec<String>> {
        let mut assets = Vec::new();
        for input in &self.inputs {
            if !input.path.is_file() {
                return Err(CliError::Validation(format!("input file {} does not exist", input.path.display())));
            }
            assets.extend(input.asset_names()?);
        }
        let mut seen = HashSet::new();
        for a in &assets {
            if !seen.insert(a) {
                return Err(CliError::Validation(format!("asset `{a}` appears in more than one input")));
            }
        }
        if assets.len() < 2 {
            return Err(CliError::Validation("correlation models need at least two assets".into()));
        }
        let known = |a: &str| seen.contains(&a.to_string());
        for (a, b) in &self.pairs {
            for name in [a, b] {
                if !known(name) {
                    return Err(CliError::Validation(format!("pair {a}:{b} references unknown asset `{name}`")));
                }
            }
            if a == b {
                return Err(CliError::Validation(format!("pair {a}:{b} pairs an asset with itself")));
            }
        }
        if let Some(sw) = &self.switch {
            for name in std::iter::once(&sw.eua_asset).chain(&sw.coal_asset).chain(&sw.gas_asset) {
                if !known(name) {
                    return Err(CliError::Validation(format!("[switch] references unknown asset `{name}`")));
                }
            }
        }
        Ok(assets)
    }

    /// Pairs to estimate as asset index pairs.
    pub fn pair_indices(&self, assets: &[String]) -> Vec<(usize, usize)> {
        if self.pairs.is_empty() {
            let k = assets.len();
            return (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
        }
        let idx = |n: &str| assets.iter().position(|a| a == n).expect("validated");
        self.pairs.iter().map(|(a, b)| (idx(a), idx(b))).collect()
    }
}

fn parse_switch_section(s: &Section<'_>, cfg: &ConfigFile) -> CliResult<SwitchConfig> {
    s.only(&["context", "eua_asset", "eua_unit", "coal_asset", "gas_asset"])?;
    let path = cfg.resolve(s.require("context")?);
    let ctx_file = ConfigFile::load(&path)?;
    Ok(SwitchConfig {
        context: parse_switch_context(&ctx_file)?,
        eua_asset: s.require("eua_asset")?.to_string(),
        eua_unit: parse_carbon_unit(s.get("eua_unit"))?,
        coal_asset: s.get("coal_asset").map(str::to_string),
        gas_asset: s.get("gas_asset").map(str::to_string),
    })
}

pub fn parse_carbon_unit(v: Option<&str>) -> CliResult<CarbonUnit> {
    match v.unwrap_or("per_tonne") {
        "per_tonne" | "eur_per_t" => Ok(CarbonUnit::PerTonne),
        "per_kg" | "eur_per_kg" => Ok(CarbonUnit::PerKg),
        v => Err(CliError::Config(format!("carbon price unit must be per_tonne or per_kg, got `{v}`"))),
    }
}

/// Plant portfolio and fuel prices. Sections `[coal_efficient]`,
/// `[coal_inefficient]`, `[gas_efficient]`, `[gas_inefficient]` carry
/// `efficiency` and `emission_factor` (kg CO₂/GJ); `[costs]` carries fuel
/// costs in €/GJ and the optional risk inputs.
pub fn parse_switch_context(cfg: &ConfigFile) -> CliResult<SwitchContext> {
    cfg.check_sections(
        &["coal_efficient", "coal_inefficient", "gas_efficient", "gas_inefficient", "costs", "prices"],
        &[],
    )?;
    let plant = |name: &str, fuel: Fuel| -> CliResult<PlantParams> {
        let s = cfg
            .section(name)
            .ok_or_else(|| CliError::Config(format!("switch context is missing [{name}]")))?;
        s.only(&["efficiency", "emission_factor"])?;
        PlantParams::new(fuel, s.parse_req("efficiency")?, s.parse_req("emission_factor")?)
            .map_err(|e| CliError::Config(format!("[{name}] {e}")))
    };
    let costs = cfg
        .section("costs")
        .ok_or_else(|| CliError::Config("switch context is missing [costs]".into()))?;
    costs.only(&["fc_coal", "fc_gas", "sigma_fc_coal", "sigma_fc_gas", "sigma_ec", "rho_coal_ec", "rho_gas_ec"])?;
    let ctx = SwitchContext {
        coal_efficient: plant("coal_efficient", Fuel::Coal)?,
        coal_inefficient: plant("coal_inefficient", Fuel::Coal)?,
        gas_efficient: plant("gas_efficient", Fuel::Gas)?,
        gas_inefficient: plant("gas_inefficient", Fuel::Gas)?,
        fc_coal: costs.parse_req("fc_coal")?,
        fc_gas: costs.parse_req("fc_gas")?,
        sigma_fc_coal: costs.parse_or("sigma_fc_coal", 0.0)?,
        sigma_fc_gas: costs.parse_or("sigma_fc_gas", 0.0)?,
        sigma_ec: costs.parse_or("sigma_ec", 0.0)?,
        rho_coal_ec: costs.parse_or("rho_coal_ec", 0.0)?,
        rho_gas_ec: costs.parse_or("rho_gas_ec", 0.0)?,
    };
    ctx.validate().map_err(|e| CliError::Config(format!("switch context: {e}")))?;
    Ok(ctx)
}

/// Simulation config: the DGP plus an optional recovery study.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub dgp: Dgp,
    pub replications: Option<usize>,
    pub raw: bool,
    pub config_sha256: String,
}

/// `[dgp]` holds `t`, `seed`, `burn_in`, `shock` (gaussian, student_t with
/// `nu`, skewed with `lambda`) and `correlation` (independent, ccc, dcc,
/// agdcc). Each `[series.<name>]` gives `model` plus `omega`, `alpha`,
/// `gamma`, `beta`. `[correlation]` holds `target` (row-major, or a single
/// `rho` for two series), `alpha`/`beta` for DCC and `a`/`b`/`g` lists for
/// AG-DCC. `[study] replications` requests a recovery study.
pub fn parse_sim_config(cfg: &ConfigFile) -> CliResult<SimConfig> {
    cfg.check_sections(&["dgp", "correlation", "study", "output"], &["series"])?;
    let d = cfg.section("dgp").ok_or_else(|| CliError::Config("missing [dgp]".into()))?;
    d.only(&["t", "seed", "burn_in", "shock", "nu", "lambda", "correlation"])?;
    let shock = match d.get("shock").unwrap_or("gaussian") {
        "gaussian" | "normal" => Shock::Gaussian,
        "student_t" => Shock::StudentT { nu: d.parse_req("nu")? },
        "skewed" => Shock::Skewed {
            lambda: d.parse_req("lambda")?,
        },
        v => return Err(CliError::Config(format!("unknown shock `{v}`"))),
    };

    let mut univariate = Vec::new();
    for (label, s) in cfg.sections_with_prefix("series") {
        s.only(&["model", "omega", "alpha", "gamma", "beta"])?;
        let (spec, params) = match s.get("model").unwrap_or("garch") {
            "garch" => (
                GarchSpec::garch11(),
                GarchParams::garch11(s.parse_req("omega")?, s.parse_req("alpha")?, s.parse_req("beta")?),
            ),
            "gjr" => (
                GarchSpec::gjr111(),
                GarchParams::gjr111(
                    s.parse_req("omega")?,
                    s.parse_req("alpha")?,
                    s.parse_req("gamma")?,
                    s.parse_req("beta")?,
                ),
            ),
            v => return Err(CliError::Config(format!("[series.{label}] unknown model `{v}`"))),
        };
        univariate.push((spec, params));
    }
    if univariate.is_empty() {
        return Err(CliError::Config("no [series] section".into()));
    }
    let k = univariate.len();

    let empty = Properties::new();
    let c = cfg.section("correlation").unwrap_or(Section {
        name: "correlation".into(),
        props: &empty,
    });
    c.only(&["target", "rho", "alpha", "beta", "a", "b", "g"])?;
    let target = || -> CliResult<DMatrix<f64>> {
        if let Some(rho) = c.parse::<f64>("rho")? {
            if k != 2 {
                return Err(CliError::Config("`rho` is only valid with two series; use `target`".into()));
            }
            return Ok(DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]));
        }
        let v = c.float_list("target")?;
        if v.len() != k * k {
            return Err(CliError::Config(format!("[correlation] target needs {} entries", k * k)));
        }
        Ok(DMatrix::from_row_slice(k, k, &v))
    };
    let correlation = match d.get("correlation").unwrap_or(if k == 1 { "independent" } else { "dcc" }) {
        "independent" => CorrelationDgp::Constant {
            r: DMatrix::identity(k, k),
        },
        "ccc" => CorrelationDgp::Constant { r: target()? },
        "dcc" => CorrelationDgp::Dcc {
            alpha: c.parse_req("alpha")?,
            beta: c.parse_req("beta")?,
            qbar: target()?,
        },
        "agdcc" => CorrelationDgp::Agdcc {
            a: c.float_list("a")?,
            b: c.float_list("b")?,
            g: c.float_list("g")?,
            qbar: target()?,
        },
        v => return Err(CliError::Config(format!("unknown correlation model `{v}`"))),
    };

    let study = cfg.section("study");
    if let Some(s) = &study {
        s.only(&["replications"])?;
    }
    let replications = study.map(|s| s.parse_req::<usize>("replications")).transpose()?;
    let raw = match cfg.section("output") {
        Some(o) => {
            o.only(&["raw"])?;
            o.bool_or("raw", false)?
        }
        None => false,
    };

    Ok(SimConfig {
        dgp: Dgp {
            univariate,
            correlation,
            shock,
            seed: d.parse_or("seed", 0)?,
            t: d.parse_req("t")?,
            burn_in: d.parse_or("burn_in", DEFAULT_BURN_IN)?,
        },
        replications,
        raw,
        config_sha256: cfg.sha256.clone(),
    })
}
