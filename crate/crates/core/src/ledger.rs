//! Append-only run ledger, one JSON object per line.
//!
//! Candidate records carry the verdict and per-combination status of one
//! sampled kernel; reference records carry oracle benchmark rows. Opening
//! an existing ledger drops a torn final line so a killed run can resume.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bench::BenchSample;
use crate::llm::SampleKey;
use crate::promptkit::PromptMode;
use crate::routine::Routine;
use crate::verifier::{ArgCheck, ComboStatus, VerdictKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub routine: Routine,
    pub mode: PromptMode,
    pub model: String,
    pub sample_index: usize,
    pub verdict: VerdictKind,
    pub failing_case: Option<String>,
    pub max_rel_err: Option<f64>,
    pub detail: String,
    pub arg_check: ArgCheck,
    pub combos: Vec<ComboStatus>,
    pub cases_run: usize,
    /// SHA-256 of the sampled text as stored (before any salvage).
    pub source_sha256: String,
    pub tokens_in: u64,
    pub tokens_out: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning_tokens: Option<u64>,
    pub cost_usd: f64,
    /// Markdown fences were stripped before compiling.
    #[serde(default)]
    pub salvaged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling_failure: Option<String>,
    #[serde(default)]
    pub bench: Vec<BenchSample>,
}

impl CandidateRecord {
    pub fn key(&self) -> SampleKey {
        SampleKey { routine: self.routine, mode: self.mode, model_id: self.model.clone(), index: self.sample_index }
    }

    pub fn passed(&self) -> bool {
        self.verdict == VerdictKind::Pass
    }

    pub fn combo_passed(&self, combo: &str) -> bool {
        self.combos.iter().any(|c| c.combo == combo && c.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Entry {
    Candidate(CandidateRecord),
    Reference(BenchSample),
}

#[derive(Debug, thiserror::Error)]
pub enum LedgerError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
}

/// Parses ledger text. A final line without its newline is a torn write
/// and is skipped when it does not parse.
pub fn parse(text: &str, path: &Path) -> Result<(Vec<Entry>, usize), LedgerError> {
    let mut entries = Vec::new();
    let mut good_len = 0;
    let mut offset = 0;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        offset += line.len();
        let complete = line.ends_with('\n');
        let body = line.trim_end_matches('\n').trim_end_matches('\r');
        if body.trim().is_empty() {
            if complete {
                good_len = offset;
            }
            continue;
        }
        match (serde_json::from_str::<Entry>(body), complete) {
            (Ok(e), true) => {
                entries.push(e);
                good_len = offset;
            }
            (_, false) => break,
            (Err(e), true) => {
                return Err(LedgerError::Parse { path: path.to_path_buf(), line: i + 1, message: e.to_string() });
            }
        }
    }
    Ok((entries, good_len))
}

/// Reads every entry of a ledger file.
pub fn read(path: &Path) -> Result<Vec<Entry>, LedgerError> {
    let text = std::fs::read_to_string(path).map_err(|source| LedgerError::Io { path: path.to_path_buf(), source })?;
    Ok(parse(&text, path)?.0)
}

/// Hex SHA-256 of a candidate text.
pub fn source_digest(text: &str) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn to_line(e: &Entry) -> String {
    let mut s = serde_json::to_string(e).expect("ledger entries serialize");
    s.push('\n');
    s
}

pub struct Ledger {
    path: PathBuf,
    entries: Vec<Entry>,
    done: HashSet<SampleKey>,
    refs: HashSet<(Routine, String)>,
    out: BufWriter<File>,
}

impl Ledger {
    /// Opens or creates the ledger at `path`, loading existing entries.
    pub fn open(path: &Path) -> Result<Self, LedgerError> {
        let io_err = |source| LedgerError::Io { path: path.to_path_buf(), source };
        let (entries, good_len) = match std::fs::read_to_string(path) {
            Ok(text) => {
                let (entries, good) = parse(&text, path)?;
                if good < text.len() {
                    log::warn!("{}: dropping {} bytes of a torn final record", path.display(), text.len() - good);
                }
                (entries, good as u64)
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => (Vec::new(), 0),
            Err(e) => return Err(io_err(e)),
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io_err)?;
        }
        let file = OpenOptions::new().create(true).truncate(false).write(true).open(path).map_err(io_err)?;
        file.set_len(good_len).map_err(io_err)?;
        let mut out = BufWriter::new(file);
        io::Seek::seek(&mut out, io::SeekFrom::Start(good_len)).map_err(io_err)?;
        let mut ledger = Ledger { path: path.to_path_buf(), entries: Vec::new(), done: HashSet::new(), refs: HashSet::new(), out };
        for e in entries {
            ledger.index(&e);
            ledger.entries.push(e);
        }
        Ok(ledger)
    }

    fn index(&mut self, e: &Entry) {
        match e {
            Entry::Candidate(c) => {
                self.done.insert(c.key());
            }
            Entry::Reference(s) => {
                self.refs.insert((s.routine, s.combo.clone()));
            }
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn has_candidate(&self, key: &SampleKey) -> bool {
        self.done.contains(key)
    }

    pub fn has_reference(&self, routine: Routine, combo: &str) -> bool {
        self.refs.contains(&(routine, combo.to_string()))
    }

    /// Writes one line and flushes it before returning.
    pub fn append(&mut self, e: Entry) -> Result<(), LedgerError> {
        let io_err = |source| LedgerError::Io { path: self.path.clone(), source };
        self.out.write_all(to_line(&e).as_bytes()).map_err(io_err)?;
        self.out.flush().map_err(io_err)?;
        self.index(&e);
        self.entries.push(e);
        Ok(())
    }
}

pub fn candidates(entries: &[Entry]) -> impl Iterator<Item = &CandidateRecord> {
    entries.iter().filter_map(|e| match e {
        Entry::Candidate(c) => Some(c),
        Entry::Reference(_) => None,
    })
}

pub fn references(entries: &[Entry]) -> impl Iterator<Item = &BenchSample> {
    entries.iter().filter_map(|e| match e {
        Entry::Reference(s) => Some(s),
        Entry::Candidate(_) => None,
    })
}
