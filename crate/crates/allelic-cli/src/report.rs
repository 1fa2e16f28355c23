//! Output plumbing: every artifact carries the same versioned header with
//! the effective config, whether it goes to a file or to standard output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Version stamp for every emitted schema.
pub const SCHEMA_VERSION: u32 = 1;

/// Builds the `config` echo object from resolved key/value pairs.
pub fn echo_object(pairs: Vec<(&'static str, serde_json::Value)>) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for (k, v) in pairs {
        map.insert(k.to_string(), v);
    }
    serde_json::Value::Object(map)
}

/// Serializes a report to one stdout line.
pub fn print_json<T: Serialize>(report: &T) -> Result<()> {
    println!("{}", serde_json::to_string(report)?);
    Ok(())
}

/// Writes a report as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, report: &T) -> Result<()> {
    let file = File::create(path)
        .with_context(|| format!("cannot create report file {}", path.display()))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, report)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// Writes rows as CSV under `#`-prefixed header comment lines.
pub fn write_csv_rows<T: Serialize>(
    path: &Path,
    header_lines: &[String],
    rows: &[T],
) -> Result<()> {
    let file = File::create(path)
        .with_context(|| format!("cannot create report file {}", path.display()))?;
    let mut out = BufWriter::new(file);
    for line in header_lines {
        writeln!(out, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Creates the output directory when requested and returns it.
pub fn ensure_out_dir(out: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(out)
        .with_context(|| format!("cannot create output directory {}", out.display()))?;
    Ok(out.to_path_buf())
}
