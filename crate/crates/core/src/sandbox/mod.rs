//! Compilation of candidate sources and crash-isolated execution.
//!
//! A candidate is compiled into a shared library together with a small
//! support unit (a weak recording `xerbla`) and a generated prelude (the
//! `MIN`/`MAX` macros, when the source uses but does not define them). A
//! separate worker process loads the library and runs cases exchanged as
//! [`casefile`] records, so a crashing or spinning kernel cannot harm the
//! harness.

pub mod abi;
pub mod casefile;
pub mod exec;
pub mod worker;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};

pub use abi::IntWidth;
pub use exec::{ExecLimits, LibSpec, WorkerCommand};

use crate::problem::Problem;
use crate::routine::Routine;
use crate::verifier::{CaseOutcome, Kernel, Verdict, VerdictKind};

/// Compiler invocation for candidates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildRecipe {
    pub compiler: String,
    pub arch_flag: String,
    /// Empty by default: candidates are built without optimisation flags.
    pub opt_flags: Vec<String>,
    pub extra_libs: Vec<String>,
    pub int_width: IntWidth,
    /// Build a standalone executable around this C driver instead of a
    /// shared library for the worker.
    pub shim_source: Option<PathBuf>,
}

impl Default for BuildRecipe {
    fn default() -> Self {
        BuildRecipe {
            compiler: "cc".into(),
            arch_flag: "-march=native".into(),
            opt_flags: Vec::new(),
            extra_libs: vec!["-fopenmp".into(), "-lm".into()],
            int_width: IntWidth::I32,
            shim_source: None,
        }
    }
}

/// Recording `xerbla`; weak so that a candidate may bring its own.
pub const SUPPORT_C: &str = r#"#include <stdio.h>

__attribute__((weak)) void xerbla(const char *srname, const int info)
{
    fprintf(stderr, "XERBLA:%s:%d\n", srname, info);
}
"#;

/// Prelude force-included ahead of the candidate.
pub fn prelude_for(source: &str) -> String {
    let mut out = String::from("/* generated */\n");
    for (name, op) in [("MIN", "<"), ("MAX", ">")] {
        let uses = source.contains(&format!("{name}("));
        let defines = source.lines().any(|l| {
            let t = l.trim_start();
            t.starts_with('#') && t[1..].trim_start().starts_with("define") && {
                let rest = t[1..].trim_start()["define".len()..].trim_start();
                rest.starts_with(name) && !rest[name.len()..].starts_with(|c: char| c.is_alphanumeric() || c == '_')
            }
        });
        if uses && !defines {
            out.push_str(&format!("#define {name}(a, b) (((a) {op} (b)) ? (a) : (b))\n"));
        }
    }
    out
}

/// Per-candidate working directory: deleted on success, kept on failure.
#[derive(Debug)]
pub struct Scratch {
    dir: Option<tempfile::TempDir>,
    path: PathBuf,
}

impl Scratch {
    pub fn new(root: &Path, label: &str) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        let dir = tempfile::Builder::new().prefix(&format!("kgau-{label}-")).tempdir_in(root)?;
        let path = dir.path().to_path_buf();
        Ok(Scratch { dir: Some(dir), path })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Removes the directory, or keeps it (returning its path) when `keep`.
    pub fn finish(mut self, keep: bool) -> Option<PathBuf> {
        let dir = self.dir.take()?;
        if keep {
            Some(dir.keep())
        } else {
            let _ = dir.close();
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HandleKind {
    /// Shared library loaded by the worker.
    Library,
    /// Standalone driver executable.
    Shim,
}

/// A compiled candidate ready to run.
#[derive(Debug)]
pub struct KernelHandle {
    pub routine: Routine,
    pub library_path: PathBuf,
    pub entry_symbol: String,
    pub kind: HandleKind,
    pub int_width: IntWidth,
    pub scratch: Scratch,
}

impl KernelHandle {
    pub fn lib_spec(&self) -> LibSpec {
        LibSpec::Path(self.library_path.clone())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("compile error: {detail}")]
    Compile { detail: String, scratch: Option<PathBuf> },
    #[error("link error: {detail}")]
    Link { detail: String, scratch: Option<PathBuf> },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl BuildError {
    pub fn verdict(&self) -> Verdict {
        match self {
            BuildError::Compile { detail, .. } => Verdict::failed(VerdictKind::CompileError, detail.clone()),
            BuildError::Link { detail, .. } => Verdict::failed(VerdictKind::LinkError, detail.clone()),
            BuildError::Io(e) => Verdict::failed(VerdictKind::CompileError, format!("build i/o error: {e}")),
        }
    }

    /// Scratch directory kept for inspection, if any.
    pub fn scratch(&self) -> Option<&Path> {
        match self {
            BuildError::Compile { scratch, .. } | BuildError::Link { scratch, .. } => scratch.as_deref(),
            BuildError::Io(_) => None,
        }
    }
}

fn run_compiler(cmd: &mut Command) -> io::Result<(bool, String)> {
    let out = cmd.output()?;
    let mut text = String::from_utf8_lossy(&out.stderr).into_owned();
    text.push_str(&String::from_utf8_lossy(&out.stdout));
    Ok((out.status.success(), text))
}

/// Compiles `source` in a fresh scratch directory under `scratch_root`.
///
/// The library route verifies in a child process that the entry symbol
/// resolves; the shim route relies on the linker.
pub fn compile_candidate(
    source: &str,
    routine: Routine,
    recipe: &BuildRecipe,
    scratch_root: &Path,
    worker: &WorkerCommand,
) -> Result<KernelHandle, BuildError> {
    let scratch = Scratch::new(scratch_root, routine.name())?;
    let dir = scratch.path().to_path_buf();
    if source.trim().is_empty() {
        let scratch = scratch.finish(true);
        return Err(BuildError::Compile { detail: "empty source".into(), scratch });
    }
    fs::write(dir.join("candidate.c"), source)?;
    fs::write(dir.join("prelude.h"), prelude_for(source))?;
    fs::write(dir.join("support.c"), SUPPORT_C)?;

    let mut cmd = Command::new(&recipe.compiler);
    cmd.current_dir(&dir);
    if !recipe.arch_flag.is_empty() {
        cmd.arg(&recipe.arch_flag);
    }
    cmd.args(&recipe.opt_flags);
    let (kind, output) = match &recipe.shim_source {
        Some(shim) => {
            fs::copy(shim, dir.join("shim.c"))?;
            let int_def = match recipe.int_width {
                IntWidth::I32 => "-DKGAU_INT=int",
                IntWidth::I64 => "-DKGAU_INT=long long",
            };
            cmd.args(["-include", "prelude.h", int_def])
                .arg(format!("-DKGAU_ENTRY={}", routine.entry_symbol()))
                .arg(format!("-DKGAU_ROUTINE_ID={}", routine.id()))
                .args(["candidate.c", "support.c", "shim.c", "-o", "kernel"]);
            (HandleKind::Shim, dir.join("kernel"))
        }
        None => {
            cmd.args(["-fPIC", "-shared", "-include", "prelude.h", "candidate.c", "support.c", "-o", "libkernel.so"]);
            (HandleKind::Library, dir.join("libkernel.so"))
        }
    };
    cmd.args(&recipe.extra_libs);
    let (ok, diag) = run_compiler(&mut cmd)?;
    fs::write(dir.join("compile.log"), &diag)?;
    if !ok {
        let link = diag.contains("undefined reference") && kind == HandleKind::Shim;
        let scratch = scratch.finish(true);
        return Err(if link {
            BuildError::Link { detail: diag, scratch }
        } else {
            BuildError::Compile { detail: diag, scratch }
        });
    }
    if kind == HandleKind::Library {
        let probe_dir = dir.join("probe");
        fs::create_dir_all(&probe_dir)?;
        let limits = ExecLimits::default();
        match exec::probe(worker, &LibSpec::Path(output.clone()), routine, &probe_dir, &limits)? {
            exec::ProbeResult::Ok => {}
            exec::ProbeResult::LinkError(detail) | exec::ProbeResult::Crashed(detail) => {
                let scratch = scratch.finish(true);
                return Err(BuildError::Link { detail, scratch });
            }
        }
    }
    Ok(KernelHandle {
        routine,
        library_path: output,
        entry_symbol: routine.entry_symbol(),
        kind,
        int_width: recipe.int_width,
        scratch,
    })
}

/// [`Kernel`] backed by child processes.
pub struct SandboxKernel<'a> {
    pub worker: WorkerCommand,
    pub lib: LibSpec,
    pub kind: HandleKind,
    pub routine: Routine,
    pub int_width: IntWidth,
    pub limits: ExecLimits,
    pub workdir: &'a Path,
    batches: AtomicUsize,
}

impl<'a> SandboxKernel<'a> {
    pub fn new(handle: &'a KernelHandle, worker: WorkerCommand, limits: ExecLimits) -> Self {
        SandboxKernel {
            worker,
            lib: handle.lib_spec(),
            kind: handle.kind.clone(),
            routine: handle.routine,
            int_width: handle.int_width,
            limits,
            workdir: handle.scratch.path(),
            batches: AtomicUsize::new(0),
        }
    }

    /// The oracle, run through the worker and the pointer ABI.
    pub fn oracle(routine: Routine, worker: WorkerCommand, limits: ExecLimits, workdir: &'a Path) -> Self {
        SandboxKernel {
            worker,
            lib: LibSpec::Oracle,
            kind: HandleKind::Library,
            routine,
            int_width: IntWidth::I32,
            limits,
            workdir,
            batches: AtomicUsize::new(0),
        }
    }

    fn batch_dir(&self) -> io::Result<PathBuf> {
        let i = self.batches.fetch_add(1, Ordering::Relaxed);
        let d = self.workdir.join(format!("batch-{i:04}"));
        fs::create_dir_all(&d)?;
        Ok(d)
    }

    fn try_batch(&self, problems: &[Problem]) -> io::Result<Vec<CaseOutcome>> {
        let dir = self.batch_dir()?;
        let out = match (&self.kind, &self.lib) {
            (HandleKind::Shim, LibSpec::Path(exe)) => {
                let mut out = Vec::new();
                for p in problems {
                    let o = exec::run_shim_case(exe, p, &dir, &self.limits)?;
                    let stop = o.is_abnormal();
                    out.push(o);
                    if stop {
                        break;
                    }
                }
                out
            }
            _ => exec::run_batch(&self.worker, &self.lib, self.routine, self.int_width, problems, &dir, &self.limits)?,
        };
        // completed batches leave nothing worth keeping
        if out.iter().all(|o| !o.is_abnormal()) {
            let _ = fs::remove_dir_all(&dir);
        }
        Ok(out)
    }
}

impl Kernel for SandboxKernel<'_> {
    fn invoke_batch(&mut self, problems: &[Problem]) -> Vec<CaseOutcome> {
        if problems.is_empty() {
            return Vec::new();
        }
        self.try_batch(problems)
            .unwrap_or_else(|e| vec![CaseOutcome::Failed { detail: format!("sandbox i/o error: {e}") }])
    }
}

/// [`bench::Timer`](crate::bench::Timer) that times a library (or the
/// oracle) in a child process.
pub struct WorkerTimer {
    pub worker: WorkerCommand,
    pub lib: LibSpec,
    pub int_width: IntWidth,
    pub workdir: PathBuf,
    /// `case_budget` bounds the whole timing run.
    pub limits: ExecLimits,
}

impl crate::bench::Timer for WorkerTimer {
    fn time(&mut self, req: &crate::bench::TimingRequest<'_>) -> Result<Vec<f64>, String> {
        let dir = tempfile::Builder::new()
            .prefix(&format!("bench-{}-", req.routine))
            .tempdir_in(&self.workdir)
            .map_err(|e| e.to_string())?;
        let breq = exec::BenchRequest {
            routine: req.routine,
            combo: req.combo,
            dims: (req.dims.m, req.dims.n, req.dims.k),
            seed: req.seed,
            reps: req.reps,
            warmups: req.warmups,
        };
        match exec::run_bench(&self.worker, &self.lib, self.int_width, &breq, dir.path(), &self.limits) {
            Ok(Ok(times)) => Ok(times),
            Ok(Err(CaseOutcome::Crashed { detail } | CaseOutcome::TimedOut { detail } | CaseOutcome::Failed { detail })) => {
                Err(detail)
            }
            Ok(Err(CaseOutcome::Completed { .. })) => Err("unexpected outcome".into()),
            Err(e) => Err(format!("sandbox i/o error: {e}")),
        }
    }
}
