//! Plain-text sample input and CSV/JSON output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::error::{BoundError, Result};
use crate::estimator::ConfidenceBand;

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_field(line_no: usize, field: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| BoundError::Parse(format!("line {line_no}: not a number: {:?}", field.trim())))
}

/// Parses a sample: one number per line, or, with `column`, the named
/// column of a CSV file with a header row (a 1-based column number is
/// accepted when no header matches). Blank lines and `#` comments are skipped.
pub fn parse_sample(text: &str, column: Option<&str>) -> Result<Vec<f64>> {
    let mut lines = data_lines(text);
    let values = match column {
        None => lines.map(|(i, l)| parse_field(i, l)).collect::<Result<Vec<_>>>()?,
        Some(name) => {
            let (_, header) = lines.next().ok_or(BoundError::EmptySample)?;
            let names: Vec<&str> = header.split(',').map(str::trim).collect();
            let idx = names
                .iter()
                .position(|h| *h == name)
                .or_else(|| name.parse::<usize>().ok().filter(|k| (1..=names.len()).contains(k)).map(|k| k - 1))
                .ok_or_else(|| BoundError::Parse(format!("no column {name:?} in header {header:?}")))?;
            lines
                .map(|(i, l)| {
                    let field = l
                        .split(',')
                        .nth(idx)
                        .ok_or_else(|| BoundError::Parse(format!("line {i}: missing column {}", idx + 1)))?;
                    parse_field(i, field)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    if values.is_empty() {
        return Err(BoundError::EmptySample);
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(BoundError::Parse(format!("non-finite value {v}")));
    }
    Ok(values)
}

pub fn read_sample(path: &Path, column: Option<&str>) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| BoundError::Io(format!("{}: {e}", path.display())))?;
    parse_sample(&text, column)
}

/// A numeric table written as CSV with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Numbers use the shortest representation that round-trips.
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn band_table(band: &ConfidenceBand) -> Table {
    let mut t = Table::new(["x", "lower", "upper"]);
    for ((x, l), u) in band.xs.iter().zip(&band.lower).zip(&band.upper) {
        t.push(vec![*x, *l, *u]);
    }
    t
}

pub fn band_sidecar(band: &ConfidenceBand) -> serde_json::Value {
    json!({ "alpha": band.alpha, "eta": band.eta, "n": band.n, "epsilon_n": band.epsilon_n })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| BoundError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| BoundError::Io(format!("{}: {e}", path.display())))
}

/// Writes the band CSV and its JSON sidecar (same stem, `.json`); returns the sidecar path.
pub fn write_band(band: &ConfidenceBand, csv_path: &Path) -> Result<PathBuf> {
    write_text(csv_path, &band_table(band).to_csv())?;
    let sidecar = csv_path.with_extension("json");
    let text = serde_json::to_string_pretty(&band_sidecar(band)).expect("plain JSON values");
    write_text(&sidecar, &(text + "\n"))?;
    Ok(sidecar)
}
