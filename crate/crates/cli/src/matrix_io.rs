//! Plain CSV matrices: one row per line, comma separated, no header.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ortho_gconv::DenseMatrix;

pub fn parse_csv_matrix(text: &str, origin: &Path) -> Result<DenseMatrix> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() {
            continue;
        }
        let before = data.len();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .with_context(|| format!("{}:{lineno}: bad number {field:?}", origin.display()))?;
            data.push(v);
        }
        let width = data.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => bail!("{}:{lineno}: {width} values, expected {c}", origin.display()),
            _ => {}
        }
        rows += 1;
    }
    Ok(DenseMatrix::new(rows, cols.unwrap_or(0), data)?)
}

pub fn read_csv_matrix(path: &Path) -> Result<DenseMatrix> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_csv_matrix(&text, path)
}

pub fn format_csv_matrix(m: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        for (j, v) in m.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            // Display for f64 prints the shortest string that round-trips.
            write!(out, "{v}").expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

pub fn write_csv_matrix(path: &Path, m: &DenseMatrix) -> Result<()> {
    std::fs::write(path, format_csv_matrix(m)).with_context(|| format!("writing {}", path.display()))
}
