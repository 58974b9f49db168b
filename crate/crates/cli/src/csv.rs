//! Streamed CSV output with a `#` manifest header.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rws_core::Manifest;

/// Shortest decimal that parses back to the same `f64`.
///
/// Plain notation for moderate magnitudes, scientific otherwise.
pub fn format_real(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub struct CsvWriter<W: Write> {
    out: W,
    rows: u64,
}

impl CsvWriter<BufWriter<File>> {
    pub fn create(path: &Path, manifest: &Manifest) -> io::Result<Self> {
        Self::new(BufWriter::new(File::create(path)?), manifest)
    }
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut out: W, manifest: &Manifest) -> io::Result<Self> {
        write!(out, "{manifest}")?;
        Ok(CsvWriter { out, rows: 0 })
    }

    pub fn row(&mut self, values: &[f64]) -> io::Result<()> {
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                self.out.write_all(b",")?;
            }
            self.out.write_all(format_real(*v).as_bytes())?;
        }
        self.out.write_all(b"\n")?;
        self.rows += 1;
        Ok(())
    }

    pub fn rows(&self) -> u64 {
        self.rows
    }

    /// Flushes; a table without rows is an error.
    pub fn finish(mut self) -> io::Result<W> {
        if self.rows == 0 {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                "no rows to write",
            ));
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Writes `manifest` and `rows` to `path`.
pub fn emit_csv<R: AsRef<[f64]>>(
    path: &Path,
    manifest: &Manifest,
    rows: impl IntoIterator<Item = R>,
) -> io::Result<u64> {
    let mut w = CsvWriter::create(path, manifest)?;
    for r in rows {
        w.row(r.as_ref())?;
    }
    let n = w.rows();
    w.finish()?;
    Ok(n)
}
