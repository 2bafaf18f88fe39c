//! Deterministic serialization: JSON with floats printed at full precision
//! in a fixed notation, and RFC-4180 CSV (CRLF line endings). Two runs on
//! the same input must produce identical bytes, so nothing here depends on
//! hash ordering or locale.

use crate::chain::AlmostBDChain;
use crate::error::{Error, Result};
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// Fixed float notation: scientific with 16 fractional digits (17
/// significant digits), enough to round-trip any f64.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// JSON formatter that only overrides how finite floats are written.
struct Fmt17;

impl serde_json::ser::Formatter for Fmt17 {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serialize any value to compact JSON with fixed float notation.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Fmt17);
    value.serialize(&mut ser)?;
    String::from_utf8(out).map_err(|e| Error::Config(format!("non-UTF-8 JSON output: {e}")))
}

/// One CSV cell; floats go through the fixed notation.
#[derive(Debug, Clone)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Str(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

/// Render a header plus rows as RFC-4180 CSV (CRLF separators).
pub fn to_csv_string(headers: &[&str], rows: &[Vec<Cell>]) -> Result<String> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    wtr.write_record(headers)?;
    for row in rows {
        if row.len() != headers.len() {
            return Err(Error::Config(format!(
                "csv row width {} does not match header width {}",
                row.len(),
                headers.len()
            )));
        }
        wtr.write_record(row.iter().map(|c| c.render()))?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| Error::Config(format!("csv flush failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(format!("non-UTF-8 CSV output: {e}")))
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(std::io::Error::other(e))
    }
}

/// Load a chain description from a JSON file.
pub fn load_chain(path: &Path) -> Result<AlmostBDChain> {
    let text = std::fs::read_to_string(path)?;
    parse_chain(&text)
}

/// Parse a chain description from JSON text.
pub fn parse_chain(text: &str) -> Result<AlmostBDChain> {
    let chain: AlmostBDChain = serde_json::from_str(text)?;
    chain.validate()?;
    Ok(chain)
}

/// Write content to a file, or to stdout when no path is given.
pub fn emit(content: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => {
            std::fs::write(path, content)?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
            if !content.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}
