//! File formats: scan CSV, atom-cloud CSV and generic result tables.
//!
//! Numbers are written in shortest round-trip form with '.' as decimal
//! separator, so identical inputs give identical bytes.

use bragg_core::{AngleScan, AtomCloudSample, ScanRecord};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::Format;
use crate::error::CliError;

const NM: f64 = 1e-9;

/// Meters to nanometers, rounded to 1e-9 nm so grid values such as 810.3
/// print without binary noise.
pub fn to_nm(x: f64) -> f64 {
    (x / NM * 1e9).round() / 1e9
}

/// Shortest round-trip decimal; empty for non-finite values.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        serde_json::to_string(&x).expect("finite floats serialize")
    } else {
        String::new()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_num(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => Value::from(*x),
            Cell::Int(i) => Value::from(*i),
            Cell::Text(s) => Value::from(s.as_str()),
            _ => Value::Null,
        }
    }
}

/// Column-named rows. CSV keeps the column order; JSON emits an array of
/// objects with keys in the same order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    pub fn to_json_rows(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| ((*c).to_owned(), v.json()))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => to_json(&self.to_json_rows()),
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

/// Read `lambda_dip_nm,beta_s_deg[,sigma_deg]` records. Errors carry the
/// 1-based line of the offending record.
pub fn read_scan(text: &str, beta_i: f64, lambda_brg: f64) -> Result<AngleScan, CliError> {
    let parse_err = |line: u64, detail: String| CliError::Parse {
        what: "scan".into(),
        line,
        detail,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let cols: Vec<&str> = header.iter().collect();
    let has_sigma = match cols.as_slice() {
        ["lambda_dip_nm", "beta_s_deg"] => false,
        ["lambda_dip_nm", "beta_s_deg", "sigma_deg"] => true,
        _ => {
            return Err(parse_err(
                1,
                format!(
                    "expected header lambda_dip_nm,beta_s_deg[,sigma_deg], got {}",
                    cols.join(",")
                ),
            ))
        }
    };
    let mut records: Vec<ScanRecord> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != cols.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, got {}", cols.len(), rec.len()),
            ));
        }
        let num = |i: usize, name: &str| -> Result<f64, CliError> {
            let v: f64 = rec[i]
                .parse()
                .map_err(|_| parse_err(line, format!("{name}: not a number: {:?}", &rec[i])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err(line, format!("{name}: not finite")))
            }
        };
        let lambda = num(0, "lambda_dip_nm")?;
        let beta = num(1, "beta_s_deg")?;
        let sigma = if has_sigma && !rec[2].is_empty() {
            Some(num(2, "sigma_deg")?)
        } else {
            None
        };
        if lambda <= 0.0 {
            return Err(parse_err(line, "lambda_dip_nm must be positive".into()));
        }
        if !(beta > 0.0 && beta < 90.0) {
            return Err(parse_err(line, "beta_s_deg must lie in (0, 90)".into()));
        }
        if sigma.is_some_and(|s| s <= 0.0) {
            return Err(parse_err(line, "sigma_deg must be positive".into()));
        }
        let lambda_dip = lambda * NM;
        if records.iter().any(|r| r.lambda_dip == lambda_dip) {
            return Err(parse_err(line, format!("duplicate lambda_dip_nm {lambda}")));
        }
        records.push(ScanRecord {
            lambda_dip,
            beta_s: beta.to_radians(),
            sigma: sigma.map(f64::to_radians),
        });
    }
    Ok(AngleScan::new(records, beta_i, lambda_brg)?)
}

pub fn scan_table(scan: &AngleScan) -> Table {
    let with_sigma = scan.records().iter().any(|r| r.sigma.is_some());
    let mut cols = vec!["lambda_dip_nm", "beta_s_deg"];
    if with_sigma {
        cols.push("sigma_deg");
    }
    let mut t = Table::new(cols);
    for r in scan.records() {
        let mut row = vec![
            Cell::Num(to_nm(r.lambda_dip)),
            Cell::Num(r.beta_s.to_degrees()),
        ];
        if with_sigma {
            row.push(r.sigma.map(f64::to_degrees).into());
        }
        t.push(row);
    }
    t
}

pub fn cloud_table(sample: &AtomCloudSample) -> Table {
    let mut t = Table::new(vec!["x_m", "y_m", "z_m"]);
    for p in sample.positions() {
        t.push(p.iter().map(|&v| Cell::Num(v)).collect());
    }
    t
}
