use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// In-memory CSV whose first line is `# shotnoise <kind> csv v<N> config_hash=<hex>`.
pub struct CsvTable {
    text: String,
}

impl CsvTable {
    pub fn new(kind: &str, config_hash: &str, columns: &[&str]) -> Self {
        let mut text = format!("# shotnoise {kind} csv v{CSV_SCHEMA_VERSION} config_hash={config_hash}\n");
        text.push_str(&columns.join(","));
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn numeric_row(&mut self, values: &[f64]) {
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            let _ = write!(self.text, "{v:e}");
        }
        self.text.push('\n');
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf, OutputError> {
        write_text(dir, name, &self.text)
    }
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, OutputError> {
    fs::create_dir_all(dir).map_err(|source| OutputError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|source| OutputError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, OutputError> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).map_err(|source| OutputError::Json {
        path: path.clone(),
        source,
    })?;
    text.push('\n');
    write_text(dir, name, &text)
}

pub fn read_json(path: &Path) -> Result<serde_json::Value, OutputError> {
    let text = fs::read_to_string(path).map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| OutputError::Json {
        path: path.to_path_buf(),
        source,
    })
}
