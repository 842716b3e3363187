use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Backend, KernelCandidate, RawSample, SampleError, SampleKey, SampleRequest};

/// Sidecar stored next to each candidate source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayMeta {
    pub tokens_in: u64,
    pub tokens_out: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning_tokens: Option<u64>,
    pub cost_usd: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Directory of stored candidates:
/// `<root>/<model>/<mode>/<routine>/<index>.c` plus `<index>.json`.
#[derive(Debug, Clone)]
pub struct ReplayStore {
    root: PathBuf,
}

fn path_safe(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || "-._".contains(c) { c } else { '_' }).collect()
}

impl ReplayStore {
    /// Opens (or designates) a store; nothing is read until sampling.
    pub fn new(root: impl Into<PathBuf>) -> Self {
        ReplayStore { root: root.into() }
    }

    /// Opens an existing store directory.
    pub fn load(root: &Path) -> io::Result<Self> {
        if !root.is_dir() {
            return Err(io::Error::new(io::ErrorKind::NotFound, format!("replay store {} not found", root.display())));
        }
        Ok(ReplayStore::new(root))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn dir(&self, key: &SampleKey) -> PathBuf {
        self.root.join(path_safe(&key.model_id)).join(key.mode.name()).join(key.routine.name())
    }

    pub fn source_path(&self, key: &SampleKey) -> PathBuf {
        self.dir(key).join(format!("{}.c", key.index))
    }

    pub fn meta_path(&self, key: &SampleKey) -> PathBuf {
        self.dir(key).join(format!("{}.json", key.index))
    }

    pub fn contains(&self, key: &SampleKey) -> bool {
        self.source_path(key).is_file() && self.meta_path(key).is_file()
    }

    pub fn save(&self, c: &KernelCandidate) -> io::Result<()> {
        let key = c.key();
        std::fs::create_dir_all(self.dir(&key))?;
        let meta = ReplayMeta {
            tokens_in: c.tokens_in,
            tokens_out: c.tokens_out,
            reasoning_tokens: c.reasoning_tokens,
            cost_usd: c.cost_usd,
            failure: c.failure.clone(),
        };
        std::fs::write(self.source_path(&key), &c.source)?;
        let mut json = serde_json::to_string_pretty(&meta).map_err(io::Error::other)?;
        json.push('\n');
        std::fs::write(self.meta_path(&key), json)
    }

    pub fn get(&self, key: &SampleKey) -> Result<(String, ReplayMeta), SampleError> {
        let text = std::fs::read_to_string(self.source_path(key));
        let meta = std::fs::read_to_string(self.meta_path(key));
        match (text, meta) {
            (Ok(text), Ok(meta)) => {
                let meta: ReplayMeta = serde_json::from_str(&meta)
                    .map_err(|e| SampleError::Terminal(format!("corrupt replay metadata for {key}: {e}")))?;
                Ok((text, meta))
            }
            _ => Err(SampleError::ReplayMiss(key.clone())),
        }
    }
}

impl Backend for ReplayStore {
    fn name(&self) -> String {
        format!("replay:{}", self.root.display())
    }

    fn sample(&self, req: &SampleRequest<'_>) -> Result<RawSample, SampleError> {
        let (text, meta) = self.get(&req.key())?;
        Ok(RawSample {
            text,
            tokens_in: meta.tokens_in,
            tokens_out: meta.tokens_out,
            reasoning_tokens: meta.reasoning_tokens,
            cost_usd: Some(meta.cost_usd),
            failure: meta.failure,
        })
    }
}
