//! On-disk results ledger: one JSON trial record per line, appended and
//! flushed as cells complete, so an interrupted run can resume by skipping
//! every (question, strategy, budget, seed) cell already present.
//!
//! A crash can leave a partial final line; opening the ledger drops it and
//! truncates the file back to the last complete record. A malformed line
//! anywhere else is treated as corruption and refused.

use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use ttc_core::results::{ResultTable, TrialRecord};

#[derive(Debug, thiserror::Error)]
pub enum LedgerError {
    #[error("ledger {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("ledger {path} line {line} is corrupt: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

pub struct ResultsLedger {
    path: PathBuf,
    file: File,
    completed: BTreeSet<(String, String, u64, u64)>,
    records: Vec<TrialRecord>,
}

impl ResultsLedger {
    /// Open or create the ledger at `path`, loading every complete record and
    /// trimming a partial trailing line if the previous run was interrupted.
    pub fn open(path: &Path) -> Result<Self, LedgerError> {
        let io_err = |source| LedgerError::Io {
            path: path.to_path_buf(),
            source,
        };
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(io_err)?;
            }
        }
        let bytes = match std::fs::read(path) {
            Ok(bytes) => bytes,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(io_err(e)),
        };
        // Only the '\n'-terminated prefix is trustworthy after a crash.
        let valid_len = bytes
            .iter()
            .rposition(|&b| b == b'\n')
            .map_or(0, |i| i + 1);
        let mut records = Vec::new();
        let mut completed = BTreeSet::new();
        for (index, line) in bytes[..valid_len].split(|&b| b == b'\n').enumerate() {
            if line.is_empty() {
                continue;
            }
            let record: TrialRecord =
                serde_json::from_slice(line).map_err(|e| LedgerError::Corrupt {
                    path: path.to_path_buf(),
                    line: index + 1,
                    message: e.to_string(),
                })?;
            completed.insert(owned_key(&record));
            records.push(record);
        }
        if valid_len < bytes.len() {
            let file = OpenOptions::new().write(true).open(path).map_err(io_err)?;
            file.set_len(valid_len as u64).map_err(io_err)?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io_err)?;
        Ok(ResultsLedger {
            path: path.to_path_buf(),
            file,
            completed,
            records,
        })
    }

    pub fn contains(&self, record_key: &(String, String, u64, u64)) -> bool {
        self.completed.contains(record_key)
    }

    /// Append one record durably (newline-delimited JSON, flushed).
    pub fn append(&mut self, record: TrialRecord) -> Result<(), LedgerError> {
        let io_err = |source| LedgerError::Io {
            path: self.path.clone(),
            source,
        };
        let mut line = serde_json::to_string(&record).expect("record serializes");
        line.push('\n');
        self.file.write_all(line.as_bytes()).map_err(io_err)?;
        self.file.flush().map_err(io_err)?;
        self.completed.insert(owned_key(&record));
        self.records.push(record);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[TrialRecord] {
        &self.records
    }

    /// All records as a table, in ledger order; callers sort canonically
    /// before emitting artifacts.
    pub fn table(&self) -> ResultTable {
        ResultTable::from_records(self.records.clone())
    }
}

pub fn owned_key(record: &TrialRecord) -> (String, String, u64, u64) {
    (
        record.question_id.clone(),
        record.strategy.clone(),
        record.budget,
        record.seed,
    )
}
