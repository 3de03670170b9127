//! Daily price panels, calendar alignment and log returns.
//!
//! A [`PriceFrame`] is always aligned: every date row carries a value for
//! every asset. Missing days are handled by intersecting calendars with
//! [`align_common_days`]; nothing is ever interpolated.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Accepted date layouts for the date column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DateFormat {
    /// `YYYY-MM-DD`
    #[default]
    Iso,
    /// `DD/MM/YYYY`
    DayMonthYear,
}

impl DateFormat {
    pub fn parse(self, s: &str) -> Option<NaiveDate> {
        let fmt = match self {
            DateFormat::Iso => "%Y-%m-%d",
            DateFormat::DayMonthYear => "%d/%m/%Y",
        };
        NaiveDate::parse_from_str(s.trim(), fmt).ok()
    }
}

/// Options for [`load_prices`].
#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub date_column: String,
    /// Asset columns to read; `None` reads every non-date column.
    pub asset_columns: Option<Vec<String>>,
    pub date_format: DateFormat,
    pub delimiter: u8,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            date_column: "date".to_string(),
            asset_columns: None,
            date_format: DateFormat::Iso,
            delimiter: b',',
        }
    }
}

/// Date-aligned panel of daily price levels (T rows, k asset columns).
#[derive(Debug, Clone, PartialEq)]
pub struct PriceFrame {
    dates: Vec<NaiveDate>,
    assets: Vec<String>,
    values: DMatrix<f64>,
}

impl PriceFrame {
    /// Builds a frame, checking that dates are strictly increasing and values finite.
    pub fn new(dates: Vec<NaiveDate>, assets: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != dates.len() || values.ncols() != assets.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} dates x {} assets vs {}x{} values",
                dates.len(),
                assets.len(),
                values.nrows(),
                values.ncols()
            )));
        }
        for w in dates.windows(2) {
            if w[1] == w[0] {
                return Err(Error::DuplicateDate(w[1]));
            }
            if w[1] < w[0] {
                return Err(Error::UnsortedDates(w[1]));
            }
        }
        for (j, asset) in assets.iter().enumerate() {
            if let Some(row) = values.column(j).iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    asset: asset.clone(),
                    row,
                });
            }
        }
        Ok(Self {
            dates,
            assets,
            values,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn asset_index(&self, name: &str) -> Option<usize> {
        self.assets.iter().position(|a| a == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        self.asset_index(name)
            .map(|j| self.values.column(j).iter().copied().collect())
    }

    /// Restricts the frame to a subset of assets, in the given order.
    pub fn select(&self, names: &[String]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|n| self.asset_index(n).ok_or_else(|| Error::MissingColumn(n.clone())))
            .collect::<Result<Vec<_>>>()?;
        let values = DMatrix::from_fn(self.len(), idx.len(), |t, j| self.values[(t, idx[j])]);
        Ok(Self {
            dates: self.dates.clone(),
            assets: names.to_vec(),
            values,
        })
    }
}

/// Daily log returns; one row fewer than the source prices.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub dates: Vec<NaiveDate>,
    pub assets: Vec<String>,
    pub values: DMatrix<f64>,
}

impl ReturnSeries {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }
}

/// Labelled calendar window such as a crisis sub-period.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrisisWindow {
    pub label: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl CrisisWindow {
    pub fn new(label: impl Into<String>, start: NaiveDate, end: NaiveDate) -> Result<Self> {
        let label = label.into();
        if start > end {
            return Err(Error::InvalidWindow(label));
        }
        Ok(Self { label, start, end })
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start <= d && d <= self.end
    }

    /// True when the window overlaps the closed range spanned by `dates`.
    pub fn intersects(&self, dates: &[NaiveDate]) -> bool {
        match (dates.first(), dates.last()) {
            (Some(&first), Some(&last)) => self.start <= last && first <= self.end,
            _ => false,
        }
    }
}

/// Reads a price CSV from disk. See [`parse_prices`].
pub fn load_prices(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<PriceFrame> {
    let file = std::fs::File::open(path)?;
    parse_prices(file, opts)
}

/// Parses a header-first CSV of daily prices.
///
/// Rows are sorted by date after parsing; a repeated date is an error. Row
/// numbers in errors are 1-based data rows (the header is row 0).
pub fn parse_prices<R: Read>(reader: R, opts: &CsvOptions) -> Result<PriceFrame> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let date_idx = headers
        .iter()
        .position(|h| *h == opts.date_column)
        .ok_or_else(|| Error::MissingColumn(opts.date_column.clone()))?;
    let assets: Vec<String> = match &opts.asset_columns {
        Some(cols) => cols.clone(),
        None => headers
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != date_idx)
            .map(|(_, h)| h.clone())
            .collect(),
    };
    let asset_idx = assets
        .iter()
        .map(|a| {
            headers
                .iter()
                .position(|h| h == a)
                .ok_or_else(|| Error::MissingColumn(a.clone()))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<(NaiveDate, Vec<f64>)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let raw_date = rec.get(date_idx).unwrap_or("");
        let date = opts
            .date_format
            .parse(raw_date)
            .ok_or_else(|| Error::UnparseableDate {
                row,
                value: raw_date.to_string(),
            })?;
        let mut vals = Vec::with_capacity(asset_idx.len());
        for (&c, name) in asset_idx.iter().zip(&assets) {
            let cell = rec.get(c).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
                row,
                column: name.clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonNumericCell {
                    row,
                    column: name.clone(),
                    value: cell.to_string(),
                });
            }
            vals.push(v);
        }
        rows.push((date, vals));
    }
    rows.sort_by_key(|(d, _)| *d);
    for w in rows.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::DuplicateDate(w[0].0));
        }
    }
    let k = assets.len();
    let values = DMatrix::from_fn(rows.len(), k, |t, j| rows[t].1[j]);
    let dates = rows.into_iter().map(|(d, _)| d).collect();
    PriceFrame::new(dates, assets, values)
}

/// Keeps only the dates present in every frame and concatenates the assets.
pub fn align_common_days(frames: &[PriceFrame]) -> Result<PriceFrame> {
    let first = frames.first().ok_or(Error::EmptyIntersection)?;
    let mut seen = BTreeSet::new();
    for f in frames {
        for a in f.assets() {
            if !seen.insert(a.clone()) {
                return Err(Error::DuplicateAsset(a.clone()));
            }
        }
    }
    let mut common: BTreeSet<NaiveDate> = first.dates().iter().copied().collect();
    for f in &frames[1..] {
        let other: BTreeSet<NaiveDate> = f.dates().iter().copied().collect();
        common = common.intersection(&other).copied().collect();
    }
    if common.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let dates: Vec<NaiveDate> = common.into_iter().collect();
    let assets: Vec<String> = frames.iter().flat_map(|f| f.assets().to_vec()).collect();
    let mut values = DMatrix::zeros(dates.len(), assets.len());
    let mut col = 0;
    for f in frames {
        // frame dates are sorted, so a merge walk finds each common date
        let mut src = 0;
        for (t, d) in dates.iter().enumerate() {
            while f.dates()[src] < *d {
                src += 1;
            }
            for j in 0..f.assets().len() {
                values[(t, col + j)] = f.values()[(src, j)];
            }
        }
        col += f.assets().len();
    }
    PriceFrame::new(dates, assets, values)
}

/// `r[t][i] = ln P[t+1][i] - ln P[t][i]`, dated at the later day.
pub fn log_returns(frame: &PriceFrame) -> Result<ReturnSeries> {
    let (t_len, k) = frame.values().shape();
    for j in 0..k {
        for t in 0..t_len {
            let v = frame.values()[(t, j)];
            if v <= 0.0 {
                return Err(Error::NonPositivePrice {
                    asset: frame.assets()[j].clone(),
                    date: frame.dates()[t],
                    value: v,
                });
            }
        }
    }
    let n = t_len.saturating_sub(1);
    let logs = frame.values().map(f64::ln);
    let values = DMatrix::from_fn(n, k, |t, j| logs[(t + 1, j)] - logs[(t, j)]);
    Ok(ReturnSeries {
        dates: frame.dates().iter().skip(1).copied().collect(),
        assets: frame.assets().to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn frame(dates: &[&str], assets: &[&str], cols: &[&[f64]]) -> PriceFrame {
        let t = dates.len();
        let values = DMatrix::from_fn(t, cols.len(), |i, j| cols[j][i]);
        PriceFrame::new(
            dates.iter().map(|s| d(s)).collect(),
            assets.iter().map(|s| s.to_string()).collect(),
            values,
        )
        .unwrap()
    }

    #[test]
    fn parses_three_rows() {
        let csv = "date,a,b\n2008-01-02,1,2\n2008-01-03,3,4\n2008-01-04,5,6\n";
        let f = parse_prices(csv.as_bytes(), &CsvOptions::default()).unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(f.assets().len(), 2);
        assert_eq!(f.values()[(2, 1)], 6.0);
    }

    #[test]
    fn sorts_rows_and_parses_dmy() {
        let csv = "day;x\n03/01/2008;2\n02/01/2008;1\n";
        let opts = CsvOptions {
            date_column: "day".into(),
            date_format: DateFormat::DayMonthYear,
            delimiter: b';',
            ..Default::default()
        };
        let f = parse_prices(csv.as_bytes(), &opts).unwrap();
        assert_eq!(f.dates()[0], d("2008-01-02"));
        assert_eq!(f.values()[(0, 0)], 1.0);
    }

    #[test]
    fn repeated_date_is_rejected() {
        let csv = "date,a\n2008-01-02,1\n2008-01-02,2\n";
        match parse_prices(csv.as_bytes(), &CsvOptions::default()) {
            Err(Error::DuplicateDate(x)) => assert_eq!(x, d("2008-01-02")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn blank_cell_reports_row() {
        let csv = "date,a,b\n2008-01-02,1,2\n2008-01-03,,4\n";
        match parse_prices(csv.as_bytes(), &CsvOptions::default()) {
            Err(Error::NonNumericCell { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "a");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_column_and_bad_date() {
        let opts = CsvOptions {
            asset_columns: Some(vec!["zz".into()]),
            ..Default::default()
        };
        assert!(matches!(
            parse_prices("date,a\n2008-01-02,1\n".as_bytes(), &opts),
            Err(Error::MissingColumn(c)) if c == "zz"
        ));
        assert!(matches!(
            parse_prices("date,a\nnope,1\n".as_bytes(), &CsvOptions::default()),
            Err(Error::UnparseableDate { row: 1, .. })
        ));
    }

    #[test]
    fn alignment_intersects_dates() {
        let a = frame(&["2008-01-02", "2008-01-03", "2008-01-04"], &["a"], &[&[1.0, 2.0, 3.0]]);
        let b = frame(&["2008-01-01", "2008-01-02", "2008-01-03"], &["b"], &[&[9.0, 8.0, 7.0]]);
        let f = align_common_days(&[a.clone(), b]).unwrap();
        assert_eq!(f.dates(), &[d("2008-01-02"), d("2008-01-03")]);
        assert_eq!(f.values()[(0, 1)], 8.0);
        assert_eq!(f.values()[(1, 0)], 2.0);
        assert_eq!(align_common_days(&[a.clone()]).unwrap(), a);
    }

    #[test]
    fn disjoint_dates_give_empty_intersection() {
        let a = frame(&["2008-01-02"], &["a"], &[&[1.0]]);
        let b = frame(&["2008-01-03"], &["b"], &[&[1.0]]);
        assert!(matches!(align_common_days(&[a, b]), Err(Error::EmptyIntersection)));
    }

    #[test]
    fn shared_asset_names_rejected() {
        let a = frame(&["2008-01-02"], &["a"], &[&[1.0]]);
        assert!(matches!(
            align_common_days(&[a.clone(), a]),
            Err(Error::DuplicateAsset(_))
        ));
    }

    #[test]
    fn returns_of_simple_series() {
        let f = frame(&["2008-01-02", "2008-01-03", "2008-01-04"], &["a"], &[&[100.0, 100.0, 100.0]]);
        let r = log_returns(&f).unwrap();
        assert_eq!(r.column(0), vec![0.0, 0.0]);
        assert_eq!(r.dates[0], d("2008-01-03"));

        let f = frame(&["2008-01-02", "2008-01-03"], &["a"], &[&[100.0, 100.0 * 0.01f64.exp()]]);
        let r = log_returns(&f).unwrap();
        assert!((r.values[(0, 0)] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn zero_price_rejected() {
        let f = frame(&["2008-01-02", "2008-01-03"], &["a"], &[&[100.0, 0.0]]);
        assert!(matches!(
            log_returns(&f),
            Err(Error::NonPositivePrice { asset, .. }) if asset == "a"
        ));
    }

    #[test]
    fn window_validation() {
        assert!(CrisisWindow::new("x", d("2009-01-01"), d("2008-01-01")).is_err());
        let w = CrisisWindow::new("x", d("2008-01-01"), d("2009-01-01")).unwrap();
        assert!(w.intersects(&[d("2008-06-01"), d("2010-01-01")]));
        assert!(!w.intersects(&[d("2010-06-01"), d("2011-01-01")]));
    }
}
