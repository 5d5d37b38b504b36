//! CSV artifacts with fixed formatting so outputs are byte-stable.

use std::fs::File;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Coordinates joined by `;`.
pub fn point(x: &[i64]) -> String {
    x.iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

pub struct CsvArtifact {
    path: PathBuf,
    writer: csv::Writer<File>,
    rows: usize,
}

impl CsvArtifact {
    pub fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(name);
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)?;
        writer.write_record(header)?;
        Ok(Self {
            path,
            writer,
            rows: 0,
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        self.rows += 1;
        Ok(())
    }

    /// Flushes and returns the path and the number of data rows.
    pub fn finish(mut self) -> Result<(PathBuf, usize), CliError> {
        self.writer.flush()?;
        Ok((self.path, self.rows))
    }
}
