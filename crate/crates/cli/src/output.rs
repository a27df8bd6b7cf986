use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde::de::DeserializeOwned;
use sha2::{Digest, Sha256};

use crate::config::{Format, RunConfig};
use crate::error::{CliError, CliResult};

/// Where machine-readable output goes: `--output` or stdout.
pub struct Sink {
    path: Option<PathBuf>,
}

impl Sink {
    pub fn new(cfg: &RunConfig) -> Self {
        Self {
            path: cfg.output.clone(),
        }
    }

    pub fn is_file(&self) -> bool {
        self.path.is_some()
    }

    fn write_bytes(&self, bytes: &[u8]) -> CliResult<()> {
        match &self.path {
            Some(p) => {
                if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(parent)?;
                }
                std::fs::write(p, bytes)?;
            }
            None => std::io::stdout().write_all(bytes)?,
        }
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&self, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Inconsistency(format!("serialization: {e}")))?;
        text.push('\n');
        self.write_bytes(text.as_bytes())
    }

    /// CSV with a `# generated <timestamp>` first line; everything after it
    /// depends only on the rows.
    pub fn csv<T: Serialize>(&self, rows: &[T]) -> CliResult<()> {
        let mut buf = format!("# generated {}\n", chrono::Utc::now().to_rfc3339()).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        self.write_bytes(&buf)
    }

    pub fn emit<T: Serialize>(&self, format: Format, rows: &[T]) -> CliResult<()> {
        match format {
            Format::Csv => self.csv(rows),
            Format::Json => self.json(rows),
        }
    }
}

/// Content-addressed cache of computed rows, keyed by the SHA-256 of the
/// JSON encoding of `key`.
pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    pub fn new(dir: Option<&Path>) -> Self {
        Self {
            dir: dir.map(Path::to_path_buf),
        }
    }

    fn path_for<K: Serialize>(&self, tag: &str, key: &K) -> CliResult<Option<PathBuf>> {
        let Some(dir) = &self.dir else { return Ok(None) };
        let bytes = serde_json::to_vec(key).map_err(|e| CliError::Inconsistency(e.to_string()))?;
        let hash = Sha256::digest(&bytes);
        let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
        Ok(Some(dir.join(format!("{tag}-{hex}.json"))))
    }

    pub fn get<K: Serialize, V: DeserializeOwned>(&self, tag: &str, key: &K) -> CliResult<Option<V>> {
        let Some(path) = self.path_for(tag, key)? else { return Ok(None) };
        match std::fs::read(&path) {
            Ok(bytes) => Ok(serde_json::from_slice(&bytes).ok()),
            Err(_) => Ok(None),
        }
    }

    pub fn put<K: Serialize, V: Serialize>(&self, tag: &str, key: &K, value: &V) -> CliResult<()> {
        let Some(path) = self.path_for(tag, key)? else { return Ok(()) };
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let bytes = serde_json::to_vec(value).map_err(|e| CliError::Inconsistency(e.to_string()))?;
        std::fs::write(path, bytes)?;
        Ok(())
    }
}
