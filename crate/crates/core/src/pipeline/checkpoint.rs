//! Durable run state.
//!
//! * `checkpoint.jsonl`: append-only log, one [`CheckpointEntry`] per
//!   completed job.
//! * `checkpoint.json`: the terminal record, replaced atomically on every
//!   flush. It names how many log lines are valid and carries a hash chain
//!   over them, so a torn tail left by a crash is detected and discarded.
//! * `results/<id[..2]>/<id>.<hash>.json`: content-addressed job results.
//!   A valid file is never overwritten; a re-executed job whose result
//!   differs gets a new file beside the old one.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{io_err, PipelineError};
use crate::hashing::sha256_hex;

pub const LOG_FILE: &str = "checkpoint.jsonl";
pub const RECORD_FILE: &str = "checkpoint.json";
pub const RESULTS_DIR: &str = "results";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryStatus {
    Done,
    Flagged,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointEntry {
    pub job_id: String,
    pub status: EntryStatus,
    pub result_hash: String,
    pub at: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub run_id: String,
    pub config_hash: String,
    /// Incremented on every flush.
    pub sequence: u64,
    /// Number of valid lines in the entry log.
    pub entries: u64,
    pub chain: String,
    pub flagged: Vec<String>,
}

fn chain_next(prev: &str, line: &str) -> String {
    sha256_hex(format!("{prev}{line}").as_bytes())
}

pub fn read_record(run_dir: &Path) -> Result<Option<CheckpointRecord>, PipelineError> {
    let path = run_dir.join(RECORD_FILE);
    match fs::read(&path) {
        Ok(bytes) => serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|e| PipelineError::CorruptCheckpoint(format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(io_err(&path)(e)),
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let tmp = path.with_extension("json.tmp");
    let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).and_then(|_| f.sync_data()).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn result_path(run_dir: &Path, job_id: &str, hash: &str) -> PathBuf {
    run_dir
        .join(RESULTS_DIR)
        .join(&job_id[..2.min(job_id.len())])
        .join(format!("{job_id}.{}.json", &hash[..16.min(hash.len())]))
}

/// Writes a result file unless a valid one already exists; returns the
/// content hash. Files are written in place: a torn file fails its hash
/// check, is never referenced by the log, and is replaced here on the next
/// attempt.
pub fn store_result(run_dir: &Path, job_id: &str, bytes: &[u8]) -> Result<String, PipelineError> {
    let hash = sha256_hex(bytes);
    let path = result_path(run_dir, job_id, &hash);
    let create = || OpenOptions::new().write(true).create_new(true).open(&path);
    let opened = match create() {
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            let dir = path.parent().expect("result path has a parent");
            fs::create_dir_all(dir).map_err(io_err(dir))?;
            create()
        }
        other => other,
    };
    match opened {
        Ok(mut f) => f.write_all(bytes).map_err(io_err(&path))?,
        Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
            if fs::read(&path).map(|b| b != bytes).unwrap_or(true) {
                fs::write(&path, bytes).map_err(io_err(&path))?;
            }
        }
        Err(e) => return Err(io_err(&path)(e)),
    }
    Ok(hash)
}

pub fn load_result(run_dir: &Path, job_id: &str, hash: &str) -> Result<Vec<u8>, PipelineError> {
    let path = result_path(run_dir, job_id, hash);
    let bytes = fs::read(&path)
        .map_err(|e| PipelineError::CorruptCheckpoint(format!("result {} unreadable: {e}", path.display())))?;
    if sha256_hex(&bytes) != hash {
        return Err(PipelineError::CorruptCheckpoint(format!("result {} does not match its hash", path.display())));
    }
    Ok(bytes)
}

/// Single-writer handle on a run's checkpoint.
pub struct CheckpointStore {
    run_dir: PathBuf,
    log: BufWriter<File>,
    record: CheckpointRecord,
    unflushed: usize,
}

impl CheckpointStore {
    /// Starts an empty checkpoint. Fails if one already exists.
    pub fn create(run_dir: &Path, run_id: &str, config_hash: &str) -> Result<Self, PipelineError> {
        fs::create_dir_all(run_dir).map_err(io_err(run_dir))?;
        if read_record(run_dir)?.is_some() {
            return Err(PipelineError::RunExists(run_dir.to_path_buf()));
        }
        let log_path = run_dir.join(LOG_FILE);
        let log = File::create(&log_path).map_err(io_err(&log_path))?;
        let mut store = CheckpointStore {
            run_dir: run_dir.to_path_buf(),
            log: BufWriter::new(log),
            record: CheckpointRecord {
                run_id: run_id.to_string(),
                config_hash: config_hash.to_string(),
                sequence: 0,
                entries: 0,
                chain: String::new(),
                flagged: Vec::new(),
            },
            unflushed: 0,
        };
        store.flush()?;
        Ok(store)
    }

    /// Reopens an existing checkpoint, validating the hash chain and every
    /// referenced result file. Log lines past the recorded count are cut off.
    pub fn open(run_dir: &Path, config_hash: &str) -> Result<(Self, Vec<CheckpointEntry>), PipelineError> {
        let record = read_record(run_dir)?.ok_or_else(|| PipelineError::NoCheckpoint(run_dir.to_path_buf()))?;
        if record.config_hash != config_hash {
            return Err(PipelineError::ConfigMismatch { expected: record.config_hash, found: config_hash.to_string() });
        }
        let log_path = run_dir.join(LOG_FILE);
        let raw = fs::read(&log_path).map_err(io_err(&log_path))?;
        let text =
            std::str::from_utf8(&raw).map_err(|_| PipelineError::CorruptCheckpoint("entry log is not UTF-8".into()))?;

        let mut entries = Vec::with_capacity(record.entries as usize);
        let mut chain = String::new();
        let mut valid_len = 0usize;
        for line in text.split_inclusive('\n').take(record.entries as usize) {
            let body = line
                .strip_suffix('\n')
                .ok_or_else(|| PipelineError::CorruptCheckpoint("entry log shorter than recorded".into()))?;
            let entry: CheckpointEntry = serde_json::from_str(body)
                .map_err(|e| PipelineError::CorruptCheckpoint(format!("entry {}: {e}", entries.len())))?;
            chain = chain_next(&chain, body);
            valid_len += line.len();
            entries.push(entry);
        }
        if entries.len() as u64 != record.entries {
            return Err(PipelineError::CorruptCheckpoint(format!(
                "entry log has {} entries, checkpoint records {}",
                entries.len(),
                record.entries
            )));
        }
        if chain != record.chain {
            return Err(PipelineError::CorruptCheckpoint("entry log hash chain mismatch".into()));
        }
        for e in &entries {
            load_result(run_dir, &e.job_id, &e.result_hash)?;
        }

        if valid_len < raw.len() {
            log::warn!("discarding {} bytes of unconfirmed checkpoint log", raw.len() - valid_len);
        }
        let file = OpenOptions::new().write(true).open(&log_path).map_err(io_err(&log_path))?;
        file.set_len(valid_len as u64).map_err(io_err(&log_path))?;
        let file = OpenOptions::new().append(true).open(&log_path).map_err(io_err(&log_path))?;
        let store = CheckpointStore { run_dir: run_dir.to_path_buf(), log: BufWriter::new(file), record, unflushed: 0 };
        Ok((store, entries))
    }

    pub fn record(&self) -> &CheckpointRecord {
        &self.record
    }

    pub fn append(&mut self, entry: &CheckpointEntry) -> Result<(), PipelineError> {
        let line = serde_json::to_string(entry).expect("entry serializes");
        let path = self.run_dir.join(LOG_FILE);
        writeln!(self.log, "{line}").map_err(io_err(&path))?;
        self.record.chain = chain_next(&self.record.chain, &line);
        self.record.entries += 1;
        if entry.status == EntryStatus::Flagged {
            self.record.flagged.push(entry.job_id.clone());
        }
        self.unflushed += 1;
        Ok(())
    }

    pub fn unflushed(&self) -> usize {
        self.unflushed
    }

    /// Makes every appended entry durable, then publishes a new terminal
    /// record.
    pub fn flush(&mut self) -> Result<(), PipelineError> {
        let path = self.run_dir.join(LOG_FILE);
        self.log.flush().map_err(io_err(&path))?;
        self.log.get_ref().sync_data().map_err(io_err(&path))?;
        self.record.sequence += 1;
        let bytes = serde_json::to_vec_pretty(&self.record).expect("record serializes");
        write_atomic(&self.run_dir.join(RECORD_FILE), &bytes)?;
        self.unflushed = 0;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str, run_dir: &Path) -> CheckpointEntry {
        let hash = store_result(run_dir, id, format!("result {id}").as_bytes()).unwrap();
        CheckpointEntry { job_id: id.into(), status: EntryStatus::Done, result_hash: hash, at: "t".into() }
    }

    #[test]
    fn replay_reconstructs_completed_set() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = CheckpointStore::create(dir.path(), "r", "cfg").unwrap();
        let ids = ["aa01", "bb02", "cc03"];
        for id in ids {
            store.append(&entry(id, dir.path())).unwrap();
        }
        store.flush().unwrap();
        drop(store);
        let (store, entries) = CheckpointStore::open(dir.path(), "cfg").unwrap();
        assert_eq!(entries.iter().map(|e| e.job_id.as_str()).collect::<Vec<_>>(), ids);
        assert_eq!(store.record().sequence, 2);
    }

    #[test]
    fn torn_tail_is_discarded() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = CheckpointStore::create(dir.path(), "r", "cfg").unwrap();
        store.append(&entry("aa01", dir.path())).unwrap();
        store.flush().unwrap();
        store.append(&entry("bb02", dir.path())).unwrap();
        drop(store);
        let mut f = OpenOptions::new().append(true).open(dir.path().join(LOG_FILE)).unwrap();
        f.write_all(b"{\"job_id\": \"cc0").unwrap();
        drop(f);

        let (mut store, entries) = CheckpointStore::open(dir.path(), "cfg").unwrap();
        assert_eq!(entries.len(), 1);
        store.append(&entry("dd04", dir.path())).unwrap();
        store.flush().unwrap();
        drop(store);
        let (_, entries) = CheckpointStore::open(dir.path(), "cfg").unwrap();
        assert_eq!(entries.iter().map(|e| e.job_id.as_str()).collect::<Vec<_>>(), ["aa01", "dd04"]);
    }

    #[test]
    fn tampering_detected() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = CheckpointStore::create(dir.path(), "r", "cfg").unwrap();
        store.append(&entry("aa01", dir.path())).unwrap();
        store.flush().unwrap();
        drop(store);
        let log = dir.path().join(LOG_FILE);
        let text = fs::read_to_string(&log).unwrap().replace("aa01", "aa02");
        fs::write(&log, text).unwrap();
        assert!(matches!(CheckpointStore::open(dir.path(), "cfg"), Err(PipelineError::CorruptCheckpoint(_))));
    }

    #[test]
    fn config_hash_checked_and_create_refuses_existing() {
        let dir = tempfile::tempdir().unwrap();
        CheckpointStore::create(dir.path(), "r", "cfg").unwrap();
        assert!(matches!(CheckpointStore::open(dir.path(), "other"), Err(PipelineError::ConfigMismatch { .. })));
        assert!(matches!(CheckpointStore::create(dir.path(), "r", "cfg"), Err(PipelineError::RunExists(_))));
    }

    #[test]
    fn torn_result_file_replaced() {
        let dir = tempfile::tempdir().unwrap();
        let h = store_result(dir.path(), "abcd", b"full result").unwrap();
        fs::write(result_path(dir.path(), "abcd", &h), b"full r").unwrap();
        assert!(load_result(dir.path(), "abcd", &h).is_err());
        store_result(dir.path(), "abcd", b"full result").unwrap();
        assert_eq!(load_result(dir.path(), "abcd", &h).unwrap(), b"full result");
    }

    #[test]
    fn results_are_content_addressed() {
        let dir = tempfile::tempdir().unwrap();
        let h1 = store_result(dir.path(), "abcd", b"one").unwrap();
        let h2 = store_result(dir.path(), "abcd", b"two").unwrap();
        assert_ne!(result_path(dir.path(), "abcd", &h1), result_path(dir.path(), "abcd", &h2));
        assert_eq!(load_result(dir.path(), "abcd", &h1).unwrap(), b"one");
        assert_eq!(load_result(dir.path(), "abcd", &h2).unwrap(), b"two");
    }
}
