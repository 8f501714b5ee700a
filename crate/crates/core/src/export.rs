//! CSV and JSON artifact writers.
//!
//! CSV files carry a header row and LF line endings; floats are written in
//! shortest round-trip form.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("writing {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("encoding {path}: {message}")]
    Encode { path: String, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExportError + '_ {
    move |source| ExportError::Io { path: path.display().to_string(), source }
}

/// Write `rows` as CSV; the header comes from the row type's field names.
pub fn write_csv<R: Serialize>(path: impl AsRef<Path>, rows: impl IntoIterator<Item = R>) -> Result<(), ExportError> {
    let path = path.as_ref();
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(File::create(path).map_err(io_err(path))?));
    for row in rows {
        out.serialize(row)
            .map_err(|e| ExportError::Encode { path: path.display().to_string(), message: e.to_string() })?;
    }
    out.flush().map_err(io_err(path))
}

/// Write `value` as pretty JSON followed by a newline.
pub fn write_json<V: Serialize + ?Sized>(path: impl AsRef<Path>, value: &V) -> Result<(), ExportError> {
    let path = path.as_ref();
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    serde_json::to_writer_pretty(&mut out, value)
        .map_err(|e| ExportError::Encode { path: path.display().to_string(), message: e.to_string() })?;
    out.write_all(b"\n").map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        x: i64,
        p: f64,
    }

    #[test]
    fn csv_header_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        write_csv(&path, [Row { x: -1, p: 0.1 + 0.2 }, Row { x: 2, p: 1e-300 }]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "x,p\n-1,0.30000000000000004\n2,1e-300\n");
    }
}
