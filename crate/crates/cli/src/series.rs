//! Series files: one observation per line, `#` starts a comment line.

use std::fs;
use std::path::Path;

use ael_core::TimeSeries;

use crate::error::{CliError, CliResult};

pub fn read_series(path: &Path) -> CliResult<TimeSeries> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    parse_series(&text).map_err(|msg| CliError::Input(format!("{}: {msg}", path.display())))
}

pub fn parse_series(text: &str) -> Result<TimeSeries, String> {
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| format!("line {}: `{line}` is not a number", idx + 1))?;
        if !v.is_finite() {
            return Err(format!("line {}: `{line}` is not finite", idx + 1));
        }
        values.push(v);
    }
    if values.len() < TimeSeries::MIN_LEN {
        return Err(format!(
            "need at least {} observations, found {}",
            TimeSeries::MIN_LEN,
            values.len()
        ));
    }
    TimeSeries::new(values).map_err(|e| e.to_string())
}

pub fn format_series(series: &TimeSeries, header: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in header {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    for v in series.values() {
        out.push_str(&format!("{v:?}\n"));
    }
    out
}
