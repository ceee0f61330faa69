//! Project directory layout and persistence of the two logs.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use capta_core::provenance::{Ledger, LedgerError, ProvenanceRecord, RecordBody};
use capta_core::resolution::{Decision, DecisionLog, DecisionLogError, ResolutionError};

use crate::config::{ConfigError, ProjectConfig};

pub const ALIASES_LOG: &str = "aliases.log";
pub const PROVENANCE_LOG: &str = "provenance.log";
pub const EXPORTS_DIR: &str = "exports";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Ledger { path: PathBuf, source: LedgerError },
    #[error("{path}: {source}")]
    Decisions { path: PathBuf, source: DecisionLogError },
    #[error(transparent)]
    Rejected(#[from] ResolutionError),
}

impl StoreError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Project {
    pub root: PathBuf,
    pub config: ProjectConfig,
}

impl Project {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, ConfigError> {
        let root = root.into();
        // Glob results drop a leading `./`, so relative roots would not prefix them.
        let root = std::fs::canonicalize(&root).unwrap_or(root);
        let config = ProjectConfig::load(&root)?;
        Ok(Self { root, config })
    }

    pub fn aliases_path(&self) -> PathBuf {
        self.root.join(ALIASES_LOG)
    }

    pub fn provenance_path(&self) -> PathBuf {
        self.root.join(PROVENANCE_LOG)
    }

    pub fn exports_dir(&self) -> PathBuf {
        self.root.join(EXPORTS_DIR)
    }

    pub fn load_decisions(&self) -> Result<DecisionLog, StoreError> {
        load_decisions(&self.aliases_path())
    }

    pub fn load_ledger(&self) -> Result<Ledger, StoreError> {
        load_ledger(&self.provenance_path())
    }
}

fn read_optional(path: &Path) -> Result<Option<String>, StoreError> {
    match fs::read_to_string(path) {
        Ok(t) => Ok(Some(t)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(StoreError::io(path, e)),
    }
}

/// A missing file is an empty log.
pub fn load_decisions(path: &Path) -> Result<DecisionLog, StoreError> {
    match read_optional(path)? {
        None => Ok(DecisionLog::new()),
        Some(text) => DecisionLog::parse(&text).map_err(|source| StoreError::Decisions {
            path: path.to_path_buf(),
            source,
        }),
    }
}

/// A missing file is an empty ledger.
pub fn load_ledger(path: &Path) -> Result<Ledger, StoreError> {
    match read_optional(path)? {
        None => Ok(Ledger::new()),
        Some(text) => Ledger::parse(&text).map_err(|source| StoreError::Ledger {
            path: path.to_path_buf(),
            source,
        }),
    }
}

/// Append `line` (without terminator), writing `header` first if the file is new or empty.
fn append_line(path: &Path, header: &str, line: &str) -> Result<(), StoreError> {
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| StoreError::io(path, e))?;
    let len = f.metadata().map_err(|e| StoreError::io(path, e))?.len();
    let mut buf = String::new();
    if len == 0 {
        buf.push_str(header);
        buf.push('\n');
    }
    buf.push_str(line);
    buf.push('\n');
    f.write_all(buf.as_bytes()).map_err(|e| StoreError::io(path, e))?;
    f.sync_data().map_err(|e| StoreError::io(path, e))
}

/// Seal `body` onto `ledger` and persist the new record.
pub fn append_record(path: &Path, ledger: &mut Ledger, body: RecordBody) -> Result<ProvenanceRecord, StoreError> {
    let record = ledger.seal(body);
    ledger.record(record.clone()).map_err(|source| StoreError::Ledger {
        path: path.to_path_buf(),
        source,
    })?;
    append_line(path, &Ledger::header_line(), &record.to_line())?;
    Ok(record)
}

/// Apply `decision`, then persist it to the decision log and the ledger.
/// A rejected decision touches neither file.
pub fn submit_decision(
    project: &Project,
    log: &mut DecisionLog,
    ledger: &mut Ledger,
    mut decision: Decision,
) -> Result<ProvenanceRecord, StoreError> {
    if decision.timestamp.is_empty() {
        decision.timestamp = now_timestamp();
    }
    let mut staged = log.clone();
    let (_, body) = staged.submit(decision)?;
    let line = staged.last_line().expect("record just added");
    append_line(&project.aliases_path(), &DecisionLog::header_line(), &line)?;
    *log = staged;
    append_record(&project.provenance_path(), ledger, body)
}

/// Seed decisions written without ledger records, used when creating a project.
pub fn write_decision_log(path: &Path, log: &DecisionLog) -> Result<(), StoreError> {
    write_atomic(path, log.to_text().as_bytes())
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| StoreError::io(dir, e))?;
    }
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes).map_err(|e| StoreError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| StoreError::io(path, e))
}

pub fn now_timestamp() -> String {
    time::OffsetDateTime::now_utc()
        .format(&time::format_description::well_known::Rfc3339)
        .expect("RFC 3339 formatting")
}
