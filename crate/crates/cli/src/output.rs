//! Table writers. CSV floats carry 17 significant digits; JSON uses the
//! shortest representation that round-trips.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Format;
use crate::CliError;

pub trait Row: Serialize {
    const HEADER: &'static [&'static str];
    fn record(&self) -> Vec<String>;
}

pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("cannot write {}: {e}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Writes `rows` to `dir/stem.{csv,json}` and returns the path.
pub fn write_table<R: Row>(dir: &Path, stem: &str, format: Format, rows: &[R]) -> Result<PathBuf, CliError> {
    ensure_dir(dir)?;
    let path = dir.join(format!("{stem}.{}", format.extension()));
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
            w.write_record(R::HEADER).map_err(|e| io_err(&path, e))?;
            for r in rows {
                w.write_record(r.record()).map_err(|e| io_err(&path, e))?;
            }
            w.flush().map_err(|e| io_err(&path, e))?;
        }
        Format::Json => write_json(&path, &rows)?,
    }
    Ok(path)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}
