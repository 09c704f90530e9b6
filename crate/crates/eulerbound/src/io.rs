//! Output files: CSV with a `# config-hash:` line, pretty JSON, raw `f64`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{AppError, Result};

/// Line-buffered CSV writer. The first line is `# config-hash: <hash>`,
/// the second the header.
pub struct CsvWriter {
    path: PathBuf,
    out: BufWriter<File>,
    columns: usize,
}

impl CsvWriter {
    pub fn create(path: &Path, config_hash: &str, header: &[String]) -> Result<Self> {
        ensure_parent(path)?;
        let file = File::create(path).map_err(|e| AppError::io(path, e))?;
        let mut w = Self { path: path.to_path_buf(), out: BufWriter::new(file), columns: header.len() };
        w.line(&format!("# config-hash: {config_hash}"))?;
        w.line(&header.join(","))?;
        Ok(w)
    }

    pub fn row(&mut self, values: &[f64]) -> Result<()> {
        assert_eq!(values.len(), self.columns, "row width does not match the header");
        let text: Vec<String> = values.iter().map(|v| format_value(*v)).collect();
        self.line(&text.join(","))
    }

    /// A row whose first column is text.
    pub fn labeled_row(&mut self, label: &str, values: &[f64]) -> Result<()> {
        assert_eq!(values.len() + 1, self.columns, "row width does not match the header");
        assert!(!label.contains([',', '\n']), "label must not contain separators");
        let mut text = vec![label.to_string()];
        text.extend(values.iter().map(|v| format_value(*v)));
        self.line(&text.join(","))
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.out, "{s}").map_err(|e| AppError::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| AppError::io(&self.path, e))
    }
}

/// Shortest round-trip decimal; `nan`, `inf`, `-inf` for non-finite values.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| AppError::io(path, e))
}

/// Values as consecutive little-endian `f64`.
pub fn write_f64_le(path: &Path, values: &[f64]) -> Result<()> {
    ensure_parent(path)?;
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(path, bytes).map_err(|e| AppError::io(path, e))
}

pub fn read_f64_le(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
    if bytes.len() % 8 != 0 {
        return Err(AppError::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, "length is not a multiple of 8")));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e)),
        _ => Ok(()),
    }
}
