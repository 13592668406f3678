//! Numeric CSV tables with `#` comment headers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::{Error, Result};

pub const TRAJECTORY_HEADER: &[&str] = &[
    "t_us", "tau_eff", "mean_x", "mean_y", "var_x", "var_y", "fidelity", "purity", "p_excited",
];
pub const POPULATIONS_HEADER: &[&str] = &["t_us", "n", "probability"];
pub const MOMENTS_HEADER: &[&str] = &["tau", "mean_x", "mean_y", "var_x", "var_y"];
pub const WIGNER_HEADER: &[&str] = &["x", "y", "w"];
pub const SWEEP_RABI_HEADER: &[&str] = &["eta", "rabi_hz", "t_cat_ms", "t_pred_ms", "fidelity"];
pub const SWEEP_ETA_HEADER: &[&str] = &["eta", "rabi_hz", "rabi_over_trap", "fidelity", "regime_flag"];

/// Twelve significant digits, shortest of fixed or exponent form.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    let s = if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.11e}")
    };
    trim_zeros(&s)
}

fn trim_zeros(s: &str) -> String {
    let (mantissa, exp) = match s.find('e') {
        Some(i) => (&s[..i], &s[i..]),
        None => (s, ""),
    };
    let mantissa = if mantissa.contains('.') {
        mantissa.trim_end_matches('0').trim_end_matches('.')
    } else {
        mantissa
    };
    format!("{mantissa}{exp}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_sig(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

/// Writes `comment` lines prefixed with `# `, the header and the rows.
pub fn write_table(
    path: &Path,
    comment: &str,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<Cell>>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for line in comment.lines() {
        writeln!(out, "# {line}").map_err(|e| Error::io(path, e))?;
    }
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Config(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::DimensionMismatch {
                left: row.len(),
                right: header.len(),
            });
        }
        w.write_record(row.iter().map(Cell::render)).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// A table read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("missing column {name:?}")))
    }

    /// Column parsed as numbers.
    pub fn numbers(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.column(name)?;
        self.rows
            .iter()
            .map(|r| {
                r[c].parse::<f64>()
                    .map_err(|_| Error::Config(format!("{name}: not a number: {:?}", r[c])))
            })
            .collect()
    }

    pub fn texts(&self, name: &str) -> Result<Vec<String>> {
        let c = self.column(name)?;
        Ok(self.rows.iter().map(|r| r[c].clone()).collect())
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let csv_err = |e: csv::Error| Error::Config(format!("{}: {e}", path.display()));
    let header = r.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_owned).collect()))
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_err)?;
    Ok(Table { header, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(0.1), "0.1");
        assert_eq!(format_sig(4.0), "4");
        assert_eq!(format_sig(-1.0 / 3.0), "-0.333333333333");
        assert_eq!(format_sig(12500.000000001), "12500");
        assert_eq!(format_sig(1.23456789012345e-9), "1.23456789012e-9");
        assert_eq!(format_sig(std::f64::consts::PI * 1e15), "3.14159265359e15");
        assert_eq!(format_sig(f64::NAN), "nan");
        for &x in &[1e-300, 0.000123456789012345, 98765.4321, -7.5e20] {
            let back: f64 = format_sig(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 1e-11, "{x}");
        }
        assert!("nan".parse::<f64>().unwrap().is_nan());
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let rows = vec![
            vec![Cell::from(0.1), Cell::from(3usize), Cell::from("ok")],
            vec![Cell::from(f64::NAN), Cell::from(4usize), Cell::from("invalid_regime")],
        ];
        write_table(&path, "a = 1\nb = 2", &["x", "n", "flag"], rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# a = 1\n# b = 2\nx,n,flag\n"));
        let t = read_table(&path).unwrap();
        assert_eq!(t.header, vec!["x", "n", "flag"]);
        assert_eq!(t.numbers("n").unwrap(), vec![3.0, 4.0]);
        assert!(t.numbers("x").unwrap()[1].is_nan());
        assert_eq!(t.texts("flag").unwrap()[1], "invalid_regime");
        assert!(t.column("missing").is_err());
    }

    #[test]
    fn row_width_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let err = write_table(&path, "", &["a", "b"], vec![vec![Cell::from(1.0)]]);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }
}
