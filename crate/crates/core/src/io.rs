//! Plain-text data files.
//!
//! RSS files hold `r` lines of `k` reals separated by whitespace or commas;
//! column `j` is rank `j`. SRS files hold one value per line. Blank lines
//! and lines starting with `#` are ignored in both.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sampling::{RankedSetSample, SimpleSample};

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_field(line: usize, field: &str) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("`{field}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse { line, msg: format!("`{field}` is not finite") });
    }
    Ok(v)
}

pub fn parse_rss_matrix(text: &str, expected_k: Option<usize>) -> Result<RankedSetSample> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut k = expected_k;
    for (line, content) in data_lines(text) {
        let row = content
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .map(|f| parse_field(line, f))
            .collect::<Result<Vec<_>>>()?;
        match k {
            Some(k) if row.len() != k => {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {k} values, found {}", row.len()),
                })
            }
            None => k = Some(row.len()),
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse { line: 0, msg: "no data rows".into() });
    }
    RankedSetSample::from_rows(rows)
}

pub fn parse_srs(text: &str) -> Result<SimpleSample> {
    let mut values = Vec::new();
    for (line, content) in data_lines(text) {
        let mut fields = content.split(',').flat_map(str::split_whitespace);
        let first = fields.next().expect("non-empty line");
        if fields.next().is_some() {
            return Err(Error::Parse { line, msg: "expected one value per line".into() });
        }
        values.push(parse_field(line, first)?);
    }
    if values.is_empty() {
        return Err(Error::Parse { line: 0, msg: "no data values".into() });
    }
    SimpleSample::new(values)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn read_rss_matrix(path: impl AsRef<Path>, expected_k: Option<usize>) -> Result<RankedSetSample> {
    parse_rss_matrix(&read(path.as_ref())?, expected_k)
}

pub fn read_srs(path: impl AsRef<Path>) -> Result<SimpleSample> {
    parse_srs(&read(path.as_ref())?)
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_rss_matrix(rss: &RankedSetSample) -> String {
    let mut out = String::new();
    for cycle in rss.cycles() {
        let line: Vec<String> = cycle.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", line.join(" ")).unwrap();
    }
    out
}

pub fn write_rss_matrix(path: impl AsRef<Path>, rss: &RankedSetSample) -> Result<()> {
    fs::write(path, format_rss_matrix(rss)).map_err(Error::from)
}

pub fn write_srs(path: impl AsRef<Path>, sample: &SimpleSample) -> Result<()> {
    let text: String = sample.values().iter().map(|v| format!("{v:?}\n")).collect();
    fs::write(path, text).map_err(Error::from)
}
