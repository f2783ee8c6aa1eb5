//! Append-only NDJSON event log on disk.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use dcage_protocol::EventLogEntry;

pub const LOG_DIR_ENV: &str = "CCC_LOG_DIR";

pub struct EventLogWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl EventLogWriter {
    /// Creates (or truncates) the file and any missing parent directories.
    pub fn create(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let f = OpenOptions::new().create(true).write(true).truncate(true).open(&path)?;
        Ok(Self { path, out: BufWriter::new(f) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, entry: &EventLogEntry) -> io::Result<()> {
        self.out.write_all(entry.to_line().as_bytes())
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

/// `explicit`, else `$CCC_LOG_DIR`, else `./logs`.
pub fn resolve_log_dir(explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(LOG_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("logs"))
}
