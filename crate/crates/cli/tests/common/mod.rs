//! Synthetic price files for CLI tests.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use volspill_core::garch::{GarchParams, GarchSpec};
use volspill_core::sim::{simulate, CorrelationDgp, Dgp, Shock, DEFAULT_BURN_IN};

/// Equicorrelated DCC panel of `names.len()` GARCH(1,1) series in percent
/// returns, written as prices `100·exp(cumsum(r/100))`.
pub fn write_prices(path: &Path, names: &[&str], t: usize, seed: u64) {
    let k = names.len();
    let qbar = DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 } else { 0.3 });
    let dgp = Dgp {
        univariate: (0..k)
            .map(|i| (GarchSpec::garch11(), GarchParams::garch11(0.05, 0.05 + 0.003 * i as f64, 0.9)))
            .collect(),
        correlation: CorrelationDgp::Dcc {
            alpha: 0.03,
            beta: 0.94,
            qbar,
        },
        shock: Shock::Gaussian,
        seed,
        t,
        burn_in: DEFAULT_BURN_IN,
    };
    let sim = simulate(&dgp).unwrap();
    let mut s = String::from("date");
    for n in names {
        write!(s, ",{n}").unwrap();
    }
    s.push('\n');
    let mut logp = vec![100f64.ln(); k];
    let mut dates = volspill_core::sim::business_days(t + 1);
    for (row, d) in dates.drain(..).enumerate() {
        write!(s, "{d}").unwrap();
        for j in 0..k {
            if row > 0 {
                logp[j] += sim.returns.values[(row - 1, j)] / 100.0;
            }
            write!(s, ",{}", logp[j].exp()).unwrap();
        }
        s.push('\n');
    }
    std::fs::write(path, s).unwrap();
}

pub fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("run.ini");
    std::fs::write(&p, body).unwrap();
    p
}

/// Data rows of an output CSV, skipping the provenance line and header.
pub fn read_rows(path: &Path) -> Vec<csv::StringRecord> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .unwrap();
    rdr.records().map(|r| r.unwrap()).collect()
}
