//! Command output: one table rendered both for humans and as CSV.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::CliResult;

/// Formats a float like C's `%.<precision>g`.
pub fn format_g(x: f64, precision: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let p = precision.max(1);
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Num(f64),
    Flag(bool),
    Empty,
}

impl Cell {
    fn render(&self, precision: usize) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Num(x) => format_g(*x, precision),
            Cell::Flag(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Flag(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Digits shown in CSV output.
pub const CSV_PRECISION: usize = 12;
/// Digits shown in the human table.
pub const TABLE_PRECISION: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub notes: Vec<String>,
    /// `false` when a built-in check of the command did not hold.
    pub ok: bool,
}

impl Report {
    pub fn new<S: Into<String>>(title: impl Into<String>, header: impl IntoIterator<Item = S>) -> Self {
        Self {
            title: title.into(),
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
            ok: true,
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.header.len(), "row width must match the header");
        self.rows.push(cells);
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    pub fn check(&mut self, passed: bool, line: impl Into<String>) {
        let line = line.into();
        self.notes.push(format!("{}: {line}", if passed { "PASS" } else { "FAIL" }));
        self.ok &= passed;
    }

    pub fn to_table(&self) -> String {
        let rendered: Vec<Vec<String>> =
            self.rows.iter().map(|r| r.iter().map(|c| c.render(TABLE_PRECISION)).collect()).collect();
        let widths: Vec<usize> = (0..self.header.len())
            .map(|j| rendered.iter().map(|r| r[j].len()).chain([self.header[j].len()]).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        writeln!(out, "{}", self.title).unwrap();
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        writeln!(out, "{}", line(&self.header)).unwrap();
        writeln!(out, "{}", widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  ")).unwrap();
        for r in &rendered {
            writeln!(out, "{}", line(r)).unwrap();
        }
        for n in &self.notes {
            writeln!(out, "{n}").unwrap();
        }
        out
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> CliResult<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(sink);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|c| c.render(CSV_PRECISION)))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_g_matches_c_printf() {
        let cases = [
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333333"),
            (2.0 / 3.0, "0.666666666667"),
            (123456.0, "123456"),
            (1e12, "1e+12"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (1e-5, "1e-05"),
            (0.0001, "0.0001"),
            (-2.5e-7, "-2.5e-07"),
            (f64::INFINITY, "inf"),
            (0.0, "0"),
            (9.9999999999996, "10"),
        ];
        for (x, want) in cases {
            assert_eq!(format_g(x, 12), want, "formatting {x}");
        }
        assert_eq!(format_g(std::f64::consts::PI, 6), "3.14159");
        assert_eq!(format_g(1e100, 12), "1e+100");
    }

    #[test]
    fn csv_quotes_and_formats() {
        let mut r = Report::new("t", ["object", "value"]);
        r.row(vec!["a,b".into(), 0.5.into()]);
        r.row(vec!["plain".into(), Cell::Empty]);
        assert_eq!(r.to_csv().unwrap(), "object,value\r\n\"a,b\",0.5\r\nplain,\r\n");
    }

    #[test]
    fn table_aligns_columns() {
        let mut r = Report::new("title", ["x", "longer"]);
        r.row(vec!["abc".into(), 1.0.into()]);
        let t = r.to_table();
        assert!(t.contains("x    longer"));
        assert!(t.contains("abc  1"));
    }

    #[test]
    fn failed_check_clears_ok() {
        let mut r = Report::new("t", ["a"]);
        r.check(true, "fine");
        assert!(r.ok);
        r.check(false, "broken");
        assert!(!r.ok);
        assert_eq!(r.notes, vec!["PASS: fine", "FAIL: broken"]);
    }
}
