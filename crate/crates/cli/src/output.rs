//! Report envelopes and all-or-nothing output.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat};
use serde::Serialize;
use tempfile::TempDir;

use crate::config::Config;
use crate::failure::{io, Failure};

pub const TOOL: &str = "hybrid-audit";

#[derive(Debug, Serialize)]
pub struct ReportEnvelope<'a, P: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    /// From `SOURCE_DATE_EPOCH`, null when unset so reruns are identical.
    pub timestamp: Option<String>,
    pub config: &'a Config,
    pub payload: P,
    pub warnings: Vec<String>,
}

impl<'a, P: Serialize> ReportEnvelope<'a, P> {
    pub fn new(
        command: &'static str,
        config: &'a Config,
        payload: P,
        warnings: Vec<String>,
    ) -> Result<Self, Failure> {
        Ok(ReportEnvelope {
            tool: TOOL,
            version: env!("CARGO_PKG_VERSION"),
            command,
            timestamp: timestamp()?,
            config,
            payload,
            warnings,
        })
    }
}

fn timestamp() -> Result<Option<String>, Failure> {
    let Ok(raw) = std::env::var("SOURCE_DATE_EPOCH") else {
        return Ok(None);
    };
    let secs: i64 = raw
        .trim()
        .parse()
        .map_err(|_| Failure::Config(format!("SOURCE_DATE_EPOCH={raw:?} is not an integer")))?;
    let t = DateTime::from_timestamp(secs, 0)
        .ok_or_else(|| Failure::Config(format!("SOURCE_DATE_EPOCH={secs} is out of range")))?;
    Ok(Some(t.to_rfc3339_opts(SecondsFormat::Secs, true)))
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, Failure> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| Failure::Data(format!("serializing report: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Files collected in a scratch directory and moved into the output
/// directory only by [`Staging::commit`]. Dropping it uncommitted removes
/// everything.
pub struct Staging {
    scratch: TempDir,
    out: PathBuf,
    files: Vec<String>,
}

fn nearest_existing(dir: &Path) -> PathBuf {
    let mut cur = dir;
    loop {
        if cur.is_dir() {
            return cur.to_path_buf();
        }
        match cur.parent() {
            Some(p) if !p.as_os_str().is_empty() => cur = p,
            _ => return PathBuf::from("."),
        }
    }
}

impl Staging {
    pub fn new(out: &Path) -> Result<Self, Failure> {
        let scratch = tempfile::Builder::new()
            .prefix(".hybrid-audit-")
            .tempdir_in(nearest_existing(out))
            .map_err(|e| io("creating scratch directory", e))?;
        Ok(Staging {
            scratch,
            out: out.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        fs::write(self.scratch.path().join(name), bytes).map_err(|e| io(name, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Moves every staged file into place and returns their final paths.
    pub fn commit(self) -> Result<Vec<PathBuf>, Failure> {
        fs::create_dir_all(&self.out).map_err(|e| io(&self.out.display().to_string(), e))?;
        let mut placed = Vec::with_capacity(self.files.len());
        for name in &self.files {
            let target = self.out.join(name);
            fs::rename(self.scratch.path().join(name), &target).map_err(|e| io(name, e))?;
            placed.push(target);
        }
        Ok(placed)
    }
}
