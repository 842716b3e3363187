use std::collections::BTreeMap;
use std::path::Path;

use super::{estimate_tokens, Backend, RawSample, SampleError, SampleRequest};
use crate::routine::Routine;

/// Serves a fixed corpus: sample `i` of a routine is entry `i mod len`,
/// whatever the prompt mode or model.
#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    per_routine: BTreeMap<Routine, Vec<String>>,
    shared: Vec<String>,
}

impl MockBackend {
    /// Same entries for every routine.
    pub fn uniform(entries: Vec<String>) -> Self {
        MockBackend { per_routine: BTreeMap::new(), shared: entries }
    }

    pub fn from_map(per_routine: BTreeMap<Routine, Vec<String>>) -> Self {
        MockBackend { per_routine, shared: Vec::new() }
    }

    /// `dir/<routine>/*.c`, each routine's files in name order. Loose `*.c`
    /// files directly in `dir` serve routines without a subdirectory.
    pub fn load(dir: &Path) -> std::io::Result<Self> {
        let mut per_routine = BTreeMap::new();
        for r in Routine::ALL {
            let sub = dir.join(r.name());
            if sub.is_dir() {
                per_routine.insert(r, read_sources(&sub)?);
            }
        }
        let shared = read_sources(dir)?;
        if per_routine.is_empty() && shared.is_empty() {
            return Err(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("mock corpus {} has no .c files", dir.display()),
            ));
        }
        Ok(MockBackend { per_routine, shared })
    }

    pub fn entries(&self, routine: Routine) -> &[String] {
        self.per_routine.get(&routine).map(Vec::as_slice).unwrap_or(&self.shared)
    }
}

fn read_sources(dir: &Path) -> std::io::Result<Vec<String>> {
    let mut files: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "c"))
        .collect();
    files.sort();
    files.iter().map(std::fs::read_to_string).collect()
}

impl Backend for MockBackend {
    fn name(&self) -> String {
        "mock".into()
    }

    fn sample(&self, req: &SampleRequest<'_>) -> Result<RawSample, SampleError> {
        let entries = self.entries(req.bundle.routine);
        if entries.is_empty() {
            return Err(SampleError::Terminal(format!("mock corpus has no entries for {}", req.bundle.routine)));
        }
        let text = entries[req.index % entries.len()].clone();
        Ok(RawSample {
            tokens_in: estimate_tokens(&req.bundle.text),
            tokens_out: estimate_tokens(&text),
            text,
            ..RawSample::default()
        })
    }
}
