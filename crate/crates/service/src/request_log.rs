use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

pub const REQUEST_LOG_FILE: &str = "requests.jsonl";

#[derive(Debug, Clone, Serialize)]
pub struct RequestRecord {
    pub ts_ms: u128,
    pub method: String,
    pub path: String,
    pub status: u16,
    pub latency_ms: u128,
}

impl RequestRecord {
    pub fn now(method: impl Into<String>, path: impl Into<String>, status: u16, latency_ms: u128) -> Self {
        let ts_ms = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0);
        RequestRecord {
            ts_ms,
            method: method.into(),
            path: path.into(),
            status,
            latency_ms,
        }
    }
}

/// Append-only JSONL log; one line per served request.
#[derive(Debug)]
pub struct RequestLog {
    path: PathBuf,
    file: Mutex<File>,
}

impl RequestLog {
    pub fn open(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        let path = dir.join(REQUEST_LOG_FILE);
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(RequestLog {
            path,
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, record: &RequestRecord) -> io::Result<()> {
        let mut line = serde_json::to_vec(record)?;
        line.push(b'\n');
        let mut file = self.file.lock().unwrap_or_else(|p| p.into_inner());
        file.write_all(&line)?;
        file.flush()
    }
}
