//! Parent side: spawning the worker, watching progress, classifying exits.

use std::fs::{self, File};
use std::io;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, ExitStatus, Stdio};
use std::time::{Duration, Instant};

use super::abi::{IntWidth, MARKER};
use super::casefile::{decode_output, encode_input};
use super::worker::{case_in, case_out, sentinel, EXIT_DLOPEN, EXIT_MALFORMED, EXIT_SYMBOL, EXIT_UNKNOWN_ROUTINE};
use crate::problem::Problem;
use crate::routine::Routine;
use crate::verifier::{CaseOutcome, XerblaCall};

/// How to start a worker process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkerCommand {
    pub program: PathBuf,
    /// Arguments placed before the worker mode (e.g. a hidden subcommand).
    pub prefix: Vec<String>,
}

impl WorkerCommand {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        WorkerCommand { program: program.into(), prefix: Vec::new() }
    }

    /// `$KGAU_WORKER` if set, else a `kgau-worker` binary next to (or one
    /// directory above) the current executable.
    pub fn locate() -> io::Result<Self> {
        if let Some(p) = std::env::var_os("KGAU_WORKER") {
            return Ok(WorkerCommand::new(p));
        }
        let exe = std::env::current_exe()?;
        let name = format!("kgau-worker{}", std::env::consts::EXE_SUFFIX);
        let mut dir = exe.parent();
        for _ in 0..2 {
            if let Some(d) = dir {
                let cand = d.join(&name);
                if cand.is_file() {
                    return Ok(WorkerCommand::new(cand));
                }
                dir = d.parent();
            }
        }
        Err(io::Error::new(io::ErrorKind::NotFound, "kgau-worker binary not found; set KGAU_WORKER"))
    }

    fn command(&self) -> Command {
        let mut c = Command::new(&self.program);
        c.args(&self.prefix);
        c
    }
}

/// What the worker should load.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LibSpec {
    Oracle,
    Path(PathBuf),
}

impl LibSpec {
    fn arg(&self) -> String {
        match self {
            LibSpec::Oracle => super::worker::ORACLE_LIB.to_string(),
            LibSpec::Path(p) => p.display().to_string(),
        }
    }
}

/// Resource limits of child processes.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecLimits {
    /// Wall-clock budget per case: the child is killed when no case
    /// completes within it.
    pub case_budget: Duration,
    /// Maximum size of captured stdout.
    pub stdout_cap: u64,
    /// Exported as `OMP_NUM_THREADS` when set.
    pub threads: Option<usize>,
}

impl Default for ExecLimits {
    fn default() -> Self {
        ExecLimits { case_budget: Duration::from_secs(10), stdout_cap: 16 << 20, threads: None }
    }
}

/// How a child run ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Exit {
    Normal(ExitStatus),
    TimedOut,
    OutputCap,
}

fn spawn(cmd: &mut Command, dir: &Path, limits: &ExecLimits) -> io::Result<Child> {
    cmd.stdin(Stdio::null())
        .stdout(File::create(dir.join("stdout.txt"))?)
        .stderr(File::create(dir.join("stderr.txt"))?);
    if let Some(t) = limits.threads {
        cmd.env("OMP_NUM_THREADS", t.to_string());
    }
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        cmd.process_group(0);
    }
    cmd.spawn()
}

fn kill(child: &mut Child) {
    #[cfg(unix)]
    unsafe {
        // the whole group, in case the kernel forked
        libc::kill(-(child.id() as i32), libc::SIGKILL);
    }
    let _ = child.kill();
    let _ = child.wait();
}

/// Waits for `child`, killing it when `progress` stalls for longer than
/// the budget or stdout grows past the cap.
fn supervise(child: &mut Child, dir: &Path, limits: &ExecLimits, mut progress: impl FnMut() -> bool) -> io::Result<Exit> {
    let mut last = Instant::now();
    let mut sleep = Duration::from_micros(200);
    loop {
        if let Some(status) = child.try_wait()? {
            return Ok(Exit::Normal(status));
        }
        if progress() {
            last = Instant::now();
        }
        if fs::metadata(dir.join("stdout.txt")).map(|m| m.len()).unwrap_or(0) > limits.stdout_cap {
            kill(child);
            return Ok(Exit::OutputCap);
        }
        if last.elapsed() > limits.case_budget {
            kill(child);
            return Ok(Exit::TimedOut);
        }
        std::thread::sleep(sleep);
        sleep = (sleep * 2).min(Duration::from_millis(5));
    }
}

/// Splits captured output into per-case segments at the sentinels.
pub fn split_segments(text: &str, count: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = text;
    for i in 0..count {
        let s = sentinel(i);
        match rest.find(&s) {
            Some(pos) => {
                out.push(rest[..pos].to_string());
                rest = &rest[pos + s.len()..];
            }
            None => {
                out.push(rest.to_string());
                rest = "";
            }
        }
    }
    out
}

pub fn xerbla_records(text: &str) -> Vec<XerblaCall> {
    text.lines().filter_map(XerblaCall::parse).collect()
}

fn read_lossy(path: &Path) -> String {
    fs::read(path).map(|b| String::from_utf8_lossy(&b).into_owned()).unwrap_or_default()
}

fn tail(text: &str) -> String {
    let t = text.trim();
    let start = t.char_indices().rev().nth(400).map(|(i, _)| i).unwrap_or(0);
    t[start..].to_string()
}

/// Describes an abnormal exit of a case that did not complete.
fn abnormal(exit: &Exit, stderr: &str, budget: Duration) -> CaseOutcome {
    match exit {
        Exit::TimedOut => CaseOutcome::TimedOut { detail: format!("no progress within {budget:?}") },
        Exit::OutputCap => CaseOutcome::Crashed { detail: "stdout exceeded the output cap".into() },
        Exit::Normal(status) => {
            #[cfg(unix)]
            {
                use std::os::unix::process::ExitStatusExt;
                if let Some(sig) = status.signal() {
                    return CaseOutcome::Crashed { detail: format!("killed by signal {sig}") };
                }
            }
            match status.code() {
                Some(c @ (EXIT_MALFORMED | EXIT_UNKNOWN_ROUTINE | EXIT_DLOPEN | EXIT_SYMBOL)) => {
                    CaseOutcome::Failed { detail: format!("worker exit {c}: {}", tail(stderr)) }
                }
                Some(c) => CaseOutcome::Crashed { detail: format!("exited with status {c} before completing the case") },
                None => CaseOutcome::Crashed { detail: "terminated abnormally".into() },
            }
        }
    }
}

/// Runs `problems` through one worker process in `dir` (which must exist
/// and be empty). Returns one outcome per completed case, plus one
/// abnormal outcome for the case that was running when the child stopped.
pub fn run_batch(
    worker: &WorkerCommand,
    lib: &LibSpec,
    routine: Routine,
    width: IntWidth,
    problems: &[Problem],
    dir: &Path,
    limits: &ExecLimits,
) -> io::Result<Vec<CaseOutcome>> {
    for (i, p) in problems.iter().enumerate() {
        fs::write(case_in(dir, i), encode_input(p))?;
    }
    let mut cmd = worker.command();
    cmd.arg("run").args(["--lib", &lib.arg(), "--routine", routine.name()]);
    if width == IntWidth::I64 {
        cmd.arg("--int64");
    }
    cmd.arg("--dir").arg(dir).args(["--count", &problems.len().to_string()]);
    let mut child = spawn(&mut cmd, dir, limits)?;
    let mut done = 0;
    let exit = supervise(&mut child, dir, limits, || {
        let before = done;
        while done < problems.len() && case_out(dir, done).exists() {
            done += 1;
        }
        done > before
    })?;
    while done < problems.len() && case_out(dir, done).exists() {
        done += 1;
    }
    let stdout = split_segments(&read_lossy(&dir.join("stdout.txt")), problems.len());
    let stderr_text = read_lossy(&dir.join("stderr.txt"));
    let stderr = split_segments(&stderr_text, problems.len());
    let mut outcomes = Vec::with_capacity(done + 1);
    for i in 0..done {
        let outcome = match fs::read(case_out(dir, i)).map_err(|e| e.to_string()).and_then(|b| {
            decode_output(&b, &problems[i]).map_err(|e| e.to_string())
        }) {
            Ok(outputs) => CaseOutcome::Completed {
                outputs,
                marker: stdout[i].contains(MARKER),
                xerbla: xerbla_records(&stderr[i]),
            },
            Err(e) => CaseOutcome::Failed { detail: format!("unreadable output: {e}") },
        };
        outcomes.push(outcome);
    }
    if done < problems.len() {
        outcomes.push(abnormal(&exit, &stderr_text, limits.case_budget));
    }
    Ok(outcomes)
}

/// Result of loading a library and resolving the entry point in a child.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProbeResult {
    Ok,
    LinkError(String),
    Crashed(String),
}

pub fn probe(worker: &WorkerCommand, lib: &LibSpec, routine: Routine, dir: &Path, limits: &ExecLimits) -> io::Result<ProbeResult> {
    let mut cmd = worker.command();
    cmd.arg("probe").args(["--lib", &lib.arg(), "--routine", routine.name()]);
    let mut child = spawn(&mut cmd, dir, limits)?;
    let exit = supervise(&mut child, dir, limits, || false)?;
    let stderr = read_lossy(&dir.join("stderr.txt"));
    Ok(match exit {
        Exit::Normal(s) if s.success() => ProbeResult::Ok,
        Exit::Normal(s) if matches!(s.code(), Some(EXIT_DLOPEN | EXIT_SYMBOL)) => ProbeResult::LinkError(tail(&stderr)),
        e => ProbeResult::Crashed(match abnormal(&e, &stderr, limits.case_budget) {
            CaseOutcome::Crashed { detail } | CaseOutcome::TimedOut { detail } | CaseOutcome::Failed { detail } => detail,
            CaseOutcome::Completed { .. } => String::new(),
        }),
    })
}

/// Timed repetitions of one benchmark configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRequest<'a> {
    pub routine: Routine,
    pub combo: &'a str,
    pub dims: (i64, i64, i64),
    pub seed: u64,
    pub reps: usize,
    pub warmups: usize,
}

/// Runs a benchmark in a child; returns per-repetition seconds, or the
/// abnormal outcome that stopped it.
pub fn run_bench(
    worker: &WorkerCommand,
    lib: &LibSpec,
    width: IntWidth,
    req: &BenchRequest<'_>,
    dir: &Path,
    limits: &ExecLimits,
) -> io::Result<Result<Vec<f64>, CaseOutcome>> {
    let out = dir.join("timings.txt");
    let mut cmd = worker.command();
    cmd.arg("bench").args(["--lib", &lib.arg(), "--routine", req.routine.name()]);
    if width == IntWidth::I64 {
        cmd.arg("--int64");
    }
    let (m, n, k) = req.dims;
    cmd.args(["--combo", req.combo, "--dims", &format!("{m},{n},{k}")])
        .args(["--seed", &req.seed.to_string(), "--reps", &req.reps.to_string()])
        .args(["--warmups", &req.warmups.to_string()])
        .arg("--out")
        .arg(&out);
    let mut child = spawn(&mut cmd, dir, limits)?;
    let exit = supervise(&mut child, dir, limits, || false)?;
    let stderr = read_lossy(&dir.join("stderr.txt"));
    if let Exit::Normal(s) = &exit {
        if s.success() {
            let text = fs::read_to_string(&out)?;
            let times: Result<Vec<f64>, _> = text.lines().map(str::parse).collect();
            return Ok(times.map_err(|e| CaseOutcome::Failed { detail: format!("bad timings: {e}") }));
        }
    }
    Ok(Err(abnormal(&exit, &stderr, limits.case_budget)))
}

/// Runs one case through a standalone shim executable
/// (`<exe> <case.in> <case.out>`).
pub fn run_shim_case(exe: &Path, problem: &Problem, dir: &Path, limits: &ExecLimits) -> io::Result<CaseOutcome> {
    let (cin, cout) = (case_in(dir, 0), case_out(dir, 0));
    fs::write(&cin, encode_input(problem))?;
    let _ = fs::remove_file(&cout);
    let mut cmd = Command::new(exe);
    cmd.arg(&cin).arg(&cout);
    let mut child = spawn(&mut cmd, dir, limits)?;
    let exit = supervise(&mut child, dir, limits, || false)?;
    let stdout = read_lossy(&dir.join("stdout.txt"));
    let stderr = read_lossy(&dir.join("stderr.txt"));
    Ok(match &exit {
        Exit::Normal(s) if s.success() => match fs::read(&cout).map_err(|e| e.to_string()).and_then(|b| {
            decode_output(&b, problem).map_err(|e| e.to_string())
        }) {
            Ok(outputs) => CaseOutcome::Completed {
                outputs,
                marker: stdout.contains(MARKER),
                xerbla: xerbla_records(&stderr),
            },
            Err(e) => CaseOutcome::Failed { detail: format!("unreadable output: {e}") },
        },
        e => abnormal(e, &stderr, limits.case_budget),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments_split_at_sentinels() {
        let text = format!("[gptblas]{}{}junk[gptblas]", sentinel(0), sentinel(1));
        let s = split_segments(&text, 3);
        assert_eq!(s, vec!["[gptblas]".to_string(), String::new(), "junk[gptblas]".to_string()]);
    }

    #[test]
    fn xerbla_lines_are_collected() {
        let r = xerbla_records("noise\nXERBLA:DGEMV:2\n");
        assert_eq!(r, vec![XerblaCall { name: "DGEMV".into(), info: 2 }]);
    }
}
