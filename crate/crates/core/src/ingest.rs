//! Wide-format price tables and log returns.
//!
//! Input is a UTF-8 CSV whose first header cell names the date column and
//! whose remaining header cells are series symbols:
//!
//! ```text
//! DATE,DEU,FRA,ITA
//! 1985-01,102.5,88.1,
//! 1985-02,101.9,87.4,40.2
//! ```
//!
//! Dates are `YYYY-MM` labels that must be strictly increasing. Empty cells
//! and non-positive prices are recorded as missing, since their logarithm is
//! undefined.

use std::collections::{BTreeMap, HashSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    dates: Vec<String>,
    symbols: Vec<String>,
    /// Row-major `dates.len() x symbols.len()`; `None` marks a missing cell.
    values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IngestWarning {
    /// A cell was present but `<= 0`; it is treated as missing.
    NonPositive { date: String, symbol: String },
}

impl std::fmt::Display for IngestWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IngestWarning::NonPositive { date, symbol } => {
                write!(f, "non-positive price for {symbol} at {date} treated as missing")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub tau: usize,
    /// Restrict to these symbols, in this order. `None` keeps every column.
    pub symbols: Option<Vec<String>>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            tau: 1,
            symbols: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingPolicy {
    /// Listwise deletion: drop every month with at least one missing value.
    #[default]
    DropRows,
    /// Any missing value is an error.
    Reject,
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub table: PriceTable,
    pub warnings: Vec<IngestWarning>,
}

fn is_month_label(s: &str) -> bool {
    let b = s.as_bytes();
    if b.len() != 7 || b[4] != b'-' {
        return false;
    }
    if !b[..4].iter().chain(&b[5..]).all(u8::is_ascii_digit) {
        return false;
    }
    let month = (b[5] - b'0') * 10 + (b[6] - b'0');
    (1..=12).contains(&month)
}

impl PriceTable {
    /// Builds a table from raw parts, checking every invariant.
    pub fn new(dates: Vec<String>, symbols: Vec<String>, values: Vec<Option<f64>>) -> Result<Self> {
        if symbols.len() < 2 {
            return Err(Error::TooFewSymbols(symbols.len()));
        }
        let mut seen = HashSet::new();
        for (col, s) in symbols.iter().enumerate() {
            if s.is_empty() {
                return Err(Error::EmptySymbol(col + 1));
            }
            if !seen.insert(s.as_str()) {
                return Err(Error::DuplicateSymbol(s.clone()));
            }
        }
        for (line, d) in dates.iter().enumerate() {
            if !is_month_label(d) {
                return Err(Error::BadDate {
                    value: d.clone(),
                    line: line + 2,
                });
            }
        }
        for w in dates.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::NonMonotoneDates {
                    previous: w[0].clone(),
                    next: w[1].clone(),
                });
            }
        }
        if values.len() != dates.len() * symbols.len() {
            return Err(Error::Shape(format!(
                "{} values for {} dates x {} symbols",
                values.len(),
                dates.len(),
                symbols.len()
            )));
        }
        let n = symbols.len();
        for (k, v) in values.iter().enumerate() {
            if let Some(x) = v {
                if !(x.is_finite() && *x > 0.0) {
                    return Err(Error::BadValue {
                        value: x.to_string(),
                        symbol: symbols[k % n].clone(),
                        date: dates[k / n].clone(),
                    });
                }
            }
        }
        Ok(PriceTable {
            dates,
            symbols,
            values,
        })
    }

    pub fn dates(&self) -> &[String] {
        &self.dates
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn n_rows(&self) -> usize {
        self.dates.len()
    }

    pub fn n_symbols(&self) -> usize {
        self.symbols.len()
    }

    pub fn value(&self, t: usize, i: usize) -> Option<f64> {
        self.values[t * self.symbols.len() + i]
    }

    pub fn is_missing(&self, t: usize, i: usize) -> bool {
        self.value(t, i).is_none()
    }

    pub fn row(&self, t: usize) -> &[Option<f64>] {
        let n = self.symbols.len();
        &self.values[t * n..(t + 1) * n]
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// Keeps the named columns, in the given order.
    pub fn select(&self, symbols: &[String]) -> Result<PriceTable> {
        let idx = symbols
            .iter()
            .map(|s| {
                self.symbols
                    .iter()
                    .position(|x| x == s)
                    .ok_or_else(|| Error::UnknownSymbol(s.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        let values = (0..self.n_rows())
            .flat_map(|t| idx.iter().map(move |&i| (t, i)))
            .map(|(t, i)| self.value(t, i))
            .collect();
        PriceTable::new(self.dates.clone(), symbols.to_vec(), values)
    }

    /// Keeps only the rows whose index satisfies `keep`.
    pub fn filter_rows(&self, mut keep: impl FnMut(usize) -> bool) -> PriceTable {
        let mut dates = Vec::new();
        let mut values = Vec::new();
        for t in 0..self.n_rows() {
            if keep(t) {
                dates.push(self.dates[t].clone());
                values.extend_from_slice(self.row(t));
            }
        }
        PriceTable {
            dates,
            symbols: self.symbols.clone(),
            values,
        }
    }

    /// Applies the missing-data policy. Returns the retained table and the
    /// dates of dropped months.
    pub fn apply_missing_policy(&self, policy: MissingPolicy) -> Result<(PriceTable, Vec<String>)> {
        let incomplete: Vec<usize> = (0..self.n_rows())
            .filter(|&t| self.row(t).iter().any(Option::is_none))
            .collect();
        match policy {
            MissingPolicy::Reject => {
                if let Some(&t) = incomplete.first() {
                    let i = self.row(t).iter().position(Option::is_none).unwrap();
                    return Err(Error::MissingValue {
                        symbol: self.symbols[i].clone(),
                        date: self.dates[t].clone(),
                    });
                }
                Ok((self.clone(), Vec::new()))
            }
            MissingPolicy::DropRows => {
                let dropped = incomplete.iter().map(|&t| self.dates[t].clone()).collect();
                let drop: HashSet<usize> = incomplete.into_iter().collect();
                Ok((self.filter_rows(|t| !drop.contains(&t)), dropped))
            }
        }
    }
}

/// Parses a price CSV from any reader.
pub fn read_csv<R: Read>(reader: R, options: &IngestOptions) -> Result<Loaded> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let symbols: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if symbols.len() < 2 {
        return Err(Error::TooFewSymbols(symbols.len()));
    }
    let mut seen = HashSet::new();
    for (col, s) in symbols.iter().enumerate() {
        if s.is_empty() {
            return Err(Error::EmptySymbol(col + 1));
        }
        if !seen.insert(s.as_str()) {
            return Err(Error::DuplicateSymbol(s.clone()));
        }
    }

    let mut dates = Vec::new();
    let mut values = Vec::new();
    let mut warnings = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let record = record?;
        let date = record.get(0).unwrap_or("").to_string();
        if !is_month_label(&date) {
            return Err(Error::BadDate {
                value: date,
                line: k + 2,
            });
        }
        if record.len() != symbols.len() + 1 {
            return Err(Error::RaggedRow {
                date,
                found: record.len(),
                expected: symbols.len() + 1,
            });
        }
        for (cell, symbol) in record.iter().skip(1).zip(&symbols) {
            if cell.is_empty() {
                values.push(None);
                continue;
            }
            let x: f64 = cell.parse().map_err(|_| Error::BadValue {
                value: cell.to_string(),
                symbol: symbol.clone(),
                date: date.clone(),
            })?;
            if !x.is_finite() {
                return Err(Error::BadValue {
                    value: cell.to_string(),
                    symbol: symbol.clone(),
                    date: date.clone(),
                });
            }
            if x <= 0.0 {
                let w = IngestWarning::NonPositive {
                    date: date.clone(),
                    symbol: symbol.clone(),
                };
                log::warn!("{w}");
                warnings.push(w);
                values.push(None);
            } else {
                values.push(Some(x));
            }
        }
        dates.push(date);
    }

    let needed = options.tau + 2;
    if dates.len() < needed {
        return Err(Error::TooFewRows {
            needed,
            found: dates.len(),
        });
    }
    let mut table = PriceTable::new(dates, symbols, values)?;
    if let Some(selection) = &options.symbols {
        table = table.select(selection)?;
    }
    Ok(Loaded { table, warnings })
}

/// Loads and validates a price CSV from disk.
pub fn load_csv(path: impl AsRef<Path>, options: &IngestOptions) -> Result<Loaded> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(std::io::BufReader::new(file), options)
}

/// A `(T - tau) x N` matrix of log returns.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsMatrix {
    symbols: Vec<String>,
    /// Row-major.
    data: Vec<f64>,
    n_rows: usize,
    tau: usize,
}

impl ReturnsMatrix {
    pub fn new(symbols: Vec<String>, rows: Vec<Vec<f64>>, tau: usize) -> Result<Self> {
        let n = symbols.len();
        let n_rows = rows.len();
        let mut data = Vec::with_capacity(n_rows * n);
        for (t, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::Shape(format!(
                    "row {t} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        Self::from_flat(symbols, data, tau)
    }

    pub fn from_flat(symbols: Vec<String>, data: Vec<f64>, tau: usize) -> Result<Self> {
        if tau == 0 {
            return Err(Error::ZeroLag);
        }
        let n = symbols.len();
        if n == 0 {
            return Err(Error::Empty("returns matrix has no columns"));
        }
        if !data.len().is_multiple_of(n) {
            return Err(Error::Shape(format!("{} values for {n} columns", data.len())));
        }
        if let Some(k) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                row: k / n,
                col: k % n,
            });
        }
        Ok(ReturnsMatrix {
            n_rows: data.len() / n,
            symbols,
            data,
            tau,
        })
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.symbols.len()
    }

    pub fn get(&self, t: usize, i: usize) -> f64 {
        self.data[t * self.symbols.len() + i]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let n = self.symbols.len();
        &self.data[t * n..(t + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.symbols.len())
    }

    pub fn column(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().skip(i).step_by(self.symbols.len()).copied()
    }

    /// Builds a matrix from the given row indices (repeats allowed).
    pub fn take_rows(&self, indices: &[usize]) -> ReturnsMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.n_cols());
        for &t in indices {
            data.extend_from_slice(self.row(t));
        }
        ReturnsMatrix {
            symbols: self.symbols.clone(),
            n_rows: indices.len(),
            data,
            tau: self.tau,
        }
    }

    /// Columns whose entries are all identical, hence have zero variance.
    pub fn constant_columns(&self) -> Vec<usize> {
        (0..self.n_cols())
            .filter(|&i| {
                let mut col = self.column(i);
                match col.next() {
                    Some(first) => col.all(|x| x == first),
                    None => true,
                }
            })
            .collect()
    }

    /// Removes the listed columns.
    pub fn drop_columns(&self, drop: &[usize]) -> ReturnsMatrix {
        let keep: Vec<usize> = (0..self.n_cols()).filter(|i| !drop.contains(i)).collect();
        let symbols = keep.iter().map(|&i| self.symbols[i].clone()).collect();
        let data = self
            .rows()
            .flat_map(|row| keep.iter().map(move |&i| row[i]))
            .collect();
        ReturnsMatrix {
            symbols,
            data,
            n_rows: self.n_rows,
            tau: self.tau,
        }
    }
}

/// `R_i(t) = ln P_i(t + tau) - ln P_i(t)` for every retained row.
///
/// The table must already be complete (see [`PriceTable::apply_missing_policy`]).
/// Constant columns are not rejected here; check
/// [`ReturnsMatrix::constant_columns`] before correlating.
pub fn compute_log_returns(prices: &PriceTable, tau: usize) -> Result<ReturnsMatrix> {
    if tau == 0 {
        return Err(Error::ZeroLag);
    }
    let t_len = prices.n_rows();
    if t_len <= tau {
        return Err(Error::TooFewRows {
            needed: tau + 1,
            found: t_len,
        });
    }
    let n = prices.n_symbols();
    let mut logs = Vec::with_capacity(t_len * n);
    for t in 0..t_len {
        for i in 0..n {
            let p = prices.value(t, i).ok_or_else(|| Error::MissingValue {
                symbol: prices.symbols()[i].clone(),
                date: prices.dates()[t].clone(),
            })?;
            logs.push(p.ln());
        }
    }
    let data = (0..(t_len - tau) * n)
        .map(|k| logs[k + tau * n] - logs[k])
        .collect();
    ReturnsMatrix::from_flat(prices.symbols().to_vec(), data, tau)
}

/// Sidecar row for one symbol: `symbol,continent,name`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolInfo {
    pub continent: String,
    pub name: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metadata(pub BTreeMap<String, SymbolInfo>);

impl Metadata {
    pub fn get(&self, symbol: &str) -> Option<&SymbolInfo> {
        self.0.get(symbol)
    }
}

#[derive(Deserialize)]
struct MetadataRow {
    symbol: String,
    continent: String,
    name: String,
}

pub fn read_metadata<R: Read>(reader: R) -> Result<Metadata> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut map = BTreeMap::new();
    for row in rdr.deserialize() {
        let row: MetadataRow = row?;
        if map.contains_key(&row.symbol) {
            return Err(Error::DuplicateSymbol(row.symbol));
        }
        map.insert(
            row.symbol,
            SymbolInfo {
                continent: row.continent,
                name: row.name,
            },
        );
    }
    Ok(Metadata(map))
}

pub fn load_metadata(path: impl AsRef<Path>) -> Result<Metadata> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_metadata(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(s: &str) -> Result<Loaded> {
        read_csv(s.as_bytes(), &IngestOptions::default())
    }

    #[test]
    fn parses_small_table() {
        let loaded = read("DATE,DEU,FRA\n2000-01,1,2\n2000-02,3,4\n2000-03,5,6\n").unwrap();
        let t = loaded.table;
        assert_eq!(t.n_rows(), 3);
        assert_eq!(t.n_symbols(), 2);
        assert_eq!(t.missing_count(), 0);
        assert_eq!(t.value(1, 1), Some(4.0));
        assert!(loaded.warnings.is_empty());
    }

    #[test]
    fn zero_cell_is_missing_with_warning() {
        let loaded = read("DATE,DEU,FRA\n2000-01,1,2\n2000-02,0,4\n2000-03,5,\n").unwrap();
        assert!(loaded.table.is_missing(1, 0));
        assert!(loaded.table.is_missing(2, 1));
        assert_eq!(loaded.table.missing_count(), 2);
        assert_eq!(
            loaded.warnings,
            vec![IngestWarning::NonPositive {
                date: "2000-02".into(),
                symbol: "DEU".into()
            }]
        );
    }

    #[test]
    fn shuffled_dates_rejected() {
        let err = read("DATE,DEU,FRA\n2000-02,1,2\n2000-01,3,4\n2000-03,5,6\n").unwrap_err();
        assert!(matches!(err, Error::NonMonotoneDates { .. }), "{err}");
        assert!(err.to_string().contains("non-monotone dates"));
    }

    #[test]
    fn duplicate_dates_rejected() {
        let err = read("DATE,A,B\n2000-01,1,2\n2000-01,3,4\n2000-03,5,6\n").unwrap_err();
        assert!(matches!(err, Error::NonMonotoneDates { .. }));
    }

    #[test]
    fn header_errors() {
        assert!(matches!(
            read("DATE,A,A\n2000-01,1,2\n2000-02,3,4\n2000-03,5,6\n").unwrap_err(),
            Error::DuplicateSymbol(s) if s == "A"
        ));
        assert!(matches!(
            read("DATE,A\n2000-01,1\n2000-02,3\n2000-03,5\n").unwrap_err(),
            Error::TooFewSymbols(1)
        ));
    }

    #[test]
    fn bad_dates_and_values() {
        assert!(matches!(
            read("DATE,A,B\n2000-13,1,2\n2000-14,3,4\n2001-01,5,6\n").unwrap_err(),
            Error::BadDate { line: 2, .. }
        ));
        assert!(matches!(
            read("DATE,A,B\n2000/01,1,2\n2000-02,3,4\n2000-03,5,6\n").unwrap_err(),
            Error::BadDate { .. }
        ));
        assert!(matches!(
            read("DATE,A,B\n2000-01,x,2\n2000-02,3,4\n2000-03,5,6\n").unwrap_err(),
            Error::BadValue { .. }
        ));
    }

    #[test]
    fn too_few_rows_for_lag() {
        let opts = IngestOptions {
            tau: 2,
            symbols: None,
        };
        let err = read_csv("DATE,A,B\n2000-01,1,2\n2000-02,3,4\n2000-03,5,6\n".as_bytes(), &opts)
            .unwrap_err();
        assert!(matches!(err, Error::TooFewRows { needed: 4, found: 3 }));
    }

    #[test]
    fn symbol_selection() {
        let opts = IngestOptions {
            tau: 1,
            symbols: Some(vec!["C".into(), "A".into()]),
        };
        let t = read_csv("DATE,A,B,C\n2000-01,1,2,3\n2000-02,4,5,6\n2000-03,7,8,9\n".as_bytes(), &opts)
            .unwrap()
            .table;
        assert_eq!(t.symbols(), ["C", "A"]);
        assert_eq!(t.value(1, 0), Some(6.0));
        let opts = IngestOptions {
            tau: 1,
            symbols: Some(vec!["Z".into()]),
        };
        assert!(matches!(
            read_csv("DATE,A,B\n2000-01,1,2\n2000-02,4,5\n2000-03,7,8\n".as_bytes(), &opts),
            Err(Error::UnknownSymbol(_))
        ));
    }

    #[test]
    fn listwise_deletion() {
        let t = read("DATE,A,B\n2000-01,1,2\n2000-02,,4\n2000-03,5,6\n2000-04,7,8\n")
            .unwrap()
            .table;
        let (kept, dropped) = t.apply_missing_policy(MissingPolicy::DropRows).unwrap();
        assert_eq!(dropped, vec!["2000-02".to_string()]);
        assert_eq!(kept.dates(), ["2000-01", "2000-03", "2000-04"]);
        assert!(matches!(
            t.apply_missing_policy(MissingPolicy::Reject),
            Err(Error::MissingValue { .. })
        ));
    }

    #[test]
    fn returns_of_exponential_column() {
        let e = std::f64::consts::E;
        let t = PriceTable::new(
            vec!["2000-01".into(), "2000-02".into(), "2000-03".into()],
            vec!["A".into(), "B".into()],
            vec![Some(1.0), Some(2.0), Some(e), Some(3.0), Some(e * e), Some(5.0)],
        )
        .unwrap();
        let r = compute_log_returns(&t, 1).unwrap();
        assert_eq!(r.n_rows(), 2);
        let a: Vec<f64> = r.column(0).collect();
        assert!((a[0] - 1.0).abs() < 1e-15 && (a[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_prices_flagged() {
        let t = PriceTable::new(
            vec!["2000-01".into(), "2000-02".into(), "2000-03".into()],
            vec!["A".into(), "B".into()],
            vec![Some(100.0), Some(1.0), Some(100.0), Some(2.0), Some(100.0), Some(3.0)],
        )
        .unwrap();
        let r = compute_log_returns(&t, 1).unwrap();
        assert_eq!(r.column(0).collect::<Vec<_>>(), vec![0.0, 0.0]);
        assert_eq!(r.constant_columns(), vec![0]);
        assert_eq!(r.drop_columns(&[0]).symbols(), ["B"]);
    }

    #[test]
    fn returns_errors() {
        let t = PriceTable::new(
            vec!["2000-01".into(), "2000-02".into()],
            vec!["A".into(), "B".into()],
            vec![Some(1.0), None, Some(2.0), Some(3.0)],
        )
        .unwrap();
        assert!(matches!(compute_log_returns(&t, 0), Err(Error::ZeroLag)));
        assert!(matches!(compute_log_returns(&t, 2), Err(Error::TooFewRows { .. })));
        assert!(matches!(compute_log_returns(&t, 1), Err(Error::MissingValue { .. })));
    }

    #[test]
    fn metadata_sidecar() {
        let m = read_metadata("symbol,continent,name\nDEU,Europe,Germany\nCHN,Asia,China\n".as_bytes())
            .unwrap();
        assert_eq!(m.get("DEU").unwrap().continent, "Europe");
        assert!(m.get("USA").is_none());
    }
}
