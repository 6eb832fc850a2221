//! Result persistence: unit-annotated CSV tables and the JSON run manifest.
//!
//! CSV: first line is the header with `name[unit]` column names, comma
//! separators, LF line endings, UTF-8, every value with 17 significant
//! digits. Manifest: a single JSON object whose keys serialize in sorted
//! order (maps are B-tree backed) with floats again at 17 significant
//! digits, so a rerun of the same configuration reproduces both byte for
//! byte. Nothing time- or host-dependent is ever written.

use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::Value;

use crate::config::fmt_sci;
use crate::error::CliError;

/// Write one CSV table; `columns` are `name[unit]` headers, one row per
/// entry of `rows`.
pub fn write_csv(path: &Path, columns: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut text = String::with_capacity(rows.len() * columns.len() * 24 + 256);
    text.push_str(&columns.join(","));
    text.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        let cells: Vec<String> = row.iter().map(|&v| fmt_sci(v)).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    std::fs::write(path, text)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// JSON formatter that renders every float with 17 significant digits; all
/// other behavior is the compact default.
struct SciFormatter;

impl Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serialize the manifest: sorted keys, 17-digit floats, trailing newline.
pub fn manifest_string(manifest: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    manifest
        .serialize(&mut ser)
        .expect("manifest serialization cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("manifest is UTF-8")
}

pub fn write_manifest(path: &Path, manifest: &Value) -> Result<(), CliError> {
    std::fs::write(path, manifest_string(manifest))
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}
