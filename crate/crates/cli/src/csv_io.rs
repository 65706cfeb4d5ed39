//! CSV output and the matching readers.
//!
//! Files start with `#` comment lines (units and a `key = value` parameter
//! echo), then a column header, then data. Floats are written with 17
//! significant digits, which round-trips every `f64` exactly.

use std::io::{self, Write};

use mixdyn::integrator::{Column, SeriesRow};
use thiserror::Error;

pub const UNITS_LINE: &str =
    "units: rates and frequencies in gamma1, times in 1/gamma1, phases in rad";

pub const DISTRIBUTION_COLUMNS: [&str; 3] = ["t_probe", "i", "P_i"];
pub const SWEEP_COLUMNS: [&str; 3] = ["eta", "t_probe", "Ne1"];

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("unexpected columns {found:?}, expected {expected:?}")]
    Columns {
        found: Vec<String>,
        expected: Vec<String>,
    },
    #[error("record {record}: bad number `{text}`")]
    Number { record: usize, text: String },
}

/// Formats with 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Comment lines (without the leading `# `) and data records of a file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table<R> {
    pub comments: Vec<String>,
    pub rows: Vec<R>,
}

impl<R> Table<R> {
    /// Value of a `key = value` comment line.
    pub fn comment_value(&self, key: &str) -> Option<&str> {
        self.comments.iter().find_map(|c| {
            let (k, v) = c.split_once('=')?;
            (k.trim() == key).then(|| v.trim())
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionRow {
    pub t_probe: f64,
    pub i: usize,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub eta: f64,
    pub t_probe: f64,
    pub ne1: f64,
}

fn write_table<W: Write>(
    out: &mut W,
    comments: &[String],
    columns: &[&str],
    records: impl Iterator<Item = Vec<String>>,
) -> io::Result<()> {
    for c in comments {
        debug_assert!(!c.contains('\n'));
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(columns)?;
    for r in records {
        w.write_record(&r)?;
    }
    w.flush()
}

fn read_table<R>(
    text: &str,
    columns: &[&str],
    mut parse: impl FnMut(usize, &csv::StringRecord) -> Result<R, CsvError>,
) -> Result<Table<R>, CsvError> {
    let comments = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .map(|l| l.trim_start_matches('#').trim_start().to_string())
        .collect();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().ne(columns.iter().copied()) {
        return Err(CsvError::Columns {
            found: header.iter().map(String::from).collect(),
            expected: columns.iter().map(|c| c.to_string()).collect(),
        });
    }
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        rows.push(parse(k + 1, &record?)?);
    }
    Ok(Table { comments, rows })
}

fn field<T: std::str::FromStr>(
    record: usize,
    r: &csv::StringRecord,
    i: usize,
) -> Result<T, CsvError> {
    let text = r.get(i).unwrap_or("");
    text.parse().map_err(|_| CsvError::Number {
        record,
        text: text.to_string(),
    })
}

pub fn series_columns() -> Vec<&'static str> {
    Column::ALL.iter().map(|c| c.name()).collect()
}

pub fn write_series<W: Write>(
    out: &mut W,
    comments: &[String],
    rows: &[SeriesRow],
) -> io::Result<()> {
    let records = rows.iter().map(|r| {
        Column::ALL
            .iter()
            .map(|&c| format_float(r.get(c)))
            .collect()
    });
    write_table(out, comments, &series_columns(), records)
}

pub fn read_series(text: &str) -> Result<Table<SeriesRow>, CsvError> {
    read_table(text, &series_columns(), |k, r| {
        let v = |i| field::<f64>(k, r, i);
        Ok(SeriesRow {
            t: v(0)?,
            ne1: v(1)?,
            ne2: v(2)?,
            intensity: v(3)?,
            trace_error: v(4)?,
            hermiticity_error: v(5)?,
            min_diagonal: v(6)?,
            top1: v(7)?,
            top2: v(8)?,
            phi: v(9)?,
        })
    })
}

pub fn write_distribution<W: Write>(
    out: &mut W,
    comments: &[String],
    rows: &[DistributionRow],
) -> io::Result<()> {
    let records = rows
        .iter()
        .map(|r| vec![format_float(r.t_probe), r.i.to_string(), format_float(r.p)]);
    write_table(out, comments, &DISTRIBUTION_COLUMNS, records)
}

pub fn read_distribution(text: &str) -> Result<Table<DistributionRow>, CsvError> {
    read_table(text, &DISTRIBUTION_COLUMNS, |k, r| {
        Ok(DistributionRow {
            t_probe: field(k, r, 0)?,
            i: field(k, r, 1)?,
            p: field(k, r, 2)?,
        })
    })
}

pub fn write_sweep<W: Write>(
    out: &mut W,
    comments: &[String],
    rows: &[SweepRow],
) -> io::Result<()> {
    let records = rows.iter().map(|r| {
        vec![
            format_float(r.eta),
            format_float(r.t_probe),
            format_float(r.ne1),
        ]
    });
    write_table(out, comments, &SWEEP_COLUMNS, records)
}

/// Writes a plain numeric table.
pub fn write_matrix<W: Write, const K: usize>(
    out: &mut W,
    comments: &[String],
    columns: &[&str; K],
    rows: &[[f64; K]],
) -> io::Result<()> {
    let records = rows
        .iter()
        .map(|r| r.iter().map(|&x| format_float(x)).collect());
    write_table(out, comments, columns, records)
}

pub fn read_sweep(text: &str) -> Result<Table<SweepRow>, CsvError> {
    read_table(text, &SWEEP_COLUMNS, |k, r| {
        Ok(SweepRow {
            eta: field(k, r, 0)?,
            t_probe: field(k, r, 1)?,
            ne1: field(k, r, 2)?,
        })
    })
}
