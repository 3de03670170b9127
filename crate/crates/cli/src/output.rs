//! CSV emission with provenance headers, number formatting and the run
//! manifest.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::sha256_hex;
use crate::error::{io_err, CliResult};

pub const TOOL_NAME: &str = "volspill";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_NAME: &str = "MANIFEST";

/// Metadata written as the first line of every output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
    /// Extra `key=value` pairs, e.g. the random generator.
    pub extra: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(config_sha256: &str, seed: u64) -> Self {
        Self {
            version: VERSION.to_string(),
            config_sha256: config_sha256.to_string(),
            seed,
            extra: Vec::new(),
        }
    }

    pub fn header(&self) -> String {
        let mut s = format!(
            "# {TOOL_NAME} {} config_sha256={} seed={}",
            self.version, self.config_sha256, self.seed
        );
        for (k, v) in &self.extra {
            s.push_str(&format!(" {k}={v}"));
        }
        s
    }
}

/// Numeric rendering: six significant digits by default, shortest
/// round-trip representation with `raw`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NumberFormat {
    pub raw: bool,
}

impl NumberFormat {
    pub fn fmt(&self, x: f64) -> String {
        if self.raw {
            format_raw(x)
        } else {
            format_sig(x, 6)
        }
    }

    pub fn opt(&self, x: Option<f64>) -> String {
        x.map(|v| self.fmt(v)).unwrap_or_default()
    }
}

pub fn format_raw(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        // `{:?}` keeps a decimal point or exponent and round-trips exactly
        format!("{x:?}")
    }
}

/// `%g`-style formatting with `sig` significant digits and trailing zeros
/// removed.
pub fn format_sig(x: f64, sig: usize) -> String {
    if !x.is_finite() {
        return format_raw(x);
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Buffered CSV table; written in one go so partial files never appear.
pub struct Table {
    pub name: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "{}", self.name);
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self, prov: &Provenance) -> CliResult<Vec<u8>> {
        let mut buf = prov.header().into_bytes();
        buf.push(b'\n');
        let mut w = csv::WriterBuilder::new().from_writer(buf);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| csv::Error::from(e.into_error()).into())
    }
}

#[derive(Debug, Clone)]
struct ManifestEntry {
    file: String,
    rows: usize,
    sha256: String,
}

/// Tracks written files; rewritten after each file so an aborted run still
/// leaves an accurate record.
pub struct OutputDir {
    pub dir: PathBuf,
    prov: Provenance,
    entries: Vec<ManifestEntry>,
}

impl OutputDir {
    pub fn create(dir: &Path, prov: Provenance) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let out = Self {
            dir: dir.to_path_buf(),
            prov,
            entries: Vec::new(),
        };
        // drop stale results from an earlier run
        let err = dir.join("error.json");
        if err.exists() {
            fs::remove_file(&err).map_err(io_err(&err))?;
        }
        out.write_manifest("running", None)?;
        Ok(out)
    }

    pub fn provenance(&self) -> &Provenance {
        &self.prov
    }

    pub fn write(&mut self, table: &Table) -> CliResult<()> {
        let bytes = table.render(&self.prov)?;
        let path = self.dir.join(&table.name);
        fs::write(&path, &bytes).map_err(io_err(&path))?;
        self.entries.push(ManifestEntry {
            file: table.name.clone(),
            rows: table.len(),
            sha256: sha256_hex(&bytes),
        });
        self.write_manifest("partial", None)
    }

    pub fn files(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.file.clone()).collect()
    }

    pub fn finish(&self) -> CliResult<()> {
        self.write_manifest("complete", None)
    }

    pub fn fail(&self, stage: &str, report: &str) -> CliResult<()> {
        let path = self.dir.join("error.json");
        fs::write(&path, format!("{report}\n")).map_err(io_err(&path))?;
        self.write_manifest("incomplete", Some(stage))
    }

    fn write_manifest(&self, status: &str, failed_stage: Option<&str>) -> CliResult<()> {
        let mut s = format!("{}\nstatus={status}\n", self.prov.header());
        if let Some(stage) = failed_stage {
            s.push_str(&format!("failed_stage={stage}\n"));
        }
        for e in &self.entries {
            s.push_str(&format!("file={} rows={} sha256={}\n", e.file, e.rows, e.sha256));
        }
        let path = self.dir.join(MANIFEST_NAME);
        fs::write(&path, s).map_err(io_err(&path))
    }
}
