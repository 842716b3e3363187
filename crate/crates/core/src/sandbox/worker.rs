//! Child-process side of the sandbox.
//!
//! ```text
//! worker run   --lib <path|@oracle> --routine <name> [--int64] --dir <dir> --count <n>
//! worker probe --lib <path|@oracle> --routine <name>
//! worker bench --lib <path|@oracle> --routine <name> [--int64] --combo <key>
//!              --dims <m,n,k> --seed <u64> --reps <r> --warmups <w> --out <file>
//! ```
//!
//! `run` processes `case_<i>.in` into `case_<i>.out` for `i < n`, writing
//! each output through a temporary file and a rename, and after every case
//! flushes all stdio streams and writes [`sentinel`] to stdout and stderr.

use std::collections::HashMap;
use std::ffi::c_void;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::abi::{invoke, oracle_symbol, IntWidth};
use super::casefile::{decode_input, encode_output, CaseFileError};
use crate::routine::Routine;
use crate::testgen::{init_with, parse_combo, Dims};

pub const EXIT_MALFORMED: i32 = 2;
pub const EXIT_UNKNOWN_ROUTINE: i32 = 3;
pub const EXIT_DLOPEN: i32 = 4;
pub const EXIT_SYMBOL: i32 = 5;

/// `--lib` value selecting the built-in oracle.
pub const ORACLE_LIB: &str = "@oracle";

/// Separator written to stdout and stderr after case `i`.
pub fn sentinel(i: usize) -> String {
    format!("\n--kgau-case-end {i}--\n")
}

pub fn case_in(dir: &Path, i: usize) -> PathBuf {
    dir.join(format!("case_{i}.in"))
}

pub fn case_out(dir: &Path, i: usize) -> PathBuf {
    dir.join(format!("case_{i}.out"))
}

struct Entry {
    f: *const c_void,
    _lib: Option<libloading::Library>,
}

fn load(lib: &str, routine: Routine) -> Result<Entry, (i32, String)> {
    if lib == ORACLE_LIB {
        return Ok(Entry { f: oracle_symbol(routine), _lib: None });
    }
    #[cfg(unix)]
    let lib = unsafe {
        libloading::os::unix::Library::open(Some(lib), libc::RTLD_NOW | libc::RTLD_LOCAL)
            .map(libloading::Library::from)
    }
    .map_err(|e| (EXIT_DLOPEN, format!("cannot load {lib}: {e}")))?;
    #[cfg(not(unix))]
    let lib = unsafe { libloading::Library::new(lib) }.map_err(|e| (EXIT_DLOPEN, format!("cannot load {lib}: {e}")))?;
    let name = routine.entry_symbol();
    let f = unsafe {
        lib.get::<*const c_void>(format!("{name}\0").as_bytes())
            .map(|s| *s)
            .map_err(|e| (EXIT_SYMBOL, format!("symbol {name} not found: {e}")))?
    };
    Ok(Entry { f, _lib: Some(lib) })
}

fn write_fd(fd: i32, s: &str) {
    let b = s.as_bytes();
    let mut off = 0;
    while off < b.len() {
        let n = unsafe { libc::write(fd, b[off..].as_ptr().cast(), b.len() - off) };
        if n <= 0 {
            break;
        }
        off += n as usize;
    }
}

fn end_case(i: usize) {
    unsafe { libc::fflush(std::ptr::null_mut()) };
    let _ = std::io::stdout().flush();
    let _ = std::io::stderr().flush();
    let s = sentinel(i);
    write_fd(1, &s);
    write_fd(2, &s);
}

fn parse_flags(args: &[String]) -> Result<HashMap<String, String>, String> {
    let mut flags = HashMap::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let key = a.strip_prefix("--").ok_or_else(|| format!("unexpected argument {a}"))?;
        if key == "int64" {
            flags.insert(key.to_string(), String::new());
            continue;
        }
        let v = it.next().ok_or_else(|| format!("missing value for --{key}"))?;
        flags.insert(key.to_string(), v.clone());
    }
    Ok(flags)
}

fn need<'a>(flags: &'a HashMap<String, String>, k: &str) -> Result<&'a str, (i32, String)> {
    flags.get(k).map(String::as_str).ok_or_else(|| (EXIT_MALFORMED, format!("missing --{k}")))
}

fn num<T: std::str::FromStr>(flags: &HashMap<String, String>, k: &str) -> Result<T, (i32, String)> {
    need(flags, k)?.parse().map_err(|_| (EXIT_MALFORMED, format!("bad --{k}")))
}

/// Entry point of the worker; returns the process exit code.
pub fn worker_main(args: &[String]) -> i32 {
    match dispatch(args) {
        Ok(()) => 0,
        Err((code, msg)) => {
            let _ = std::io::stdout().flush();
            eprintln!("kgau-worker: {msg}");
            code
        }
    }
}

fn dispatch(args: &[String]) -> Result<(), (i32, String)> {
    let (mode, rest) = args.split_first().ok_or((EXIT_MALFORMED, "missing mode".to_string()))?;
    let flags = parse_flags(rest).map_err(|e| (EXIT_MALFORMED, e))?;
    let routine: Routine = need(&flags, "routine")?.parse().map_err(|e| (EXIT_UNKNOWN_ROUTINE, format!("{e}")))?;
    let width = if flags.contains_key("int64") { IntWidth::I64 } else { IntWidth::I32 };
    let entry = load(need(&flags, "lib")?, routine)?;
    match mode.as_str() {
        "probe" => Ok(()),
        "run" => run_cases(&entry, routine, width, Path::new(need(&flags, "dir")?), num(&flags, "count")?),
        "bench" => bench(&entry, routine, width, &flags),
        m => Err((EXIT_MALFORMED, format!("unknown mode {m}"))),
    }
}

fn run_cases(entry: &Entry, routine: Routine, width: IntWidth, dir: &Path, count: usize) -> Result<(), (i32, String)> {
    for i in 0..count {
        let path = case_in(dir, i);
        let bytes = fs::read(&path).map_err(|e| (EXIT_MALFORMED, format!("{}: {e}", path.display())))?;
        let mut p = decode_input(&bytes).map_err(|e| match e {
            CaseFileError::UnknownRoutine(_) => (EXIT_UNKNOWN_ROUTINE, e.to_string()),
            _ => (EXIT_MALFORMED, format!("{}: {e}", path.display())),
        })?;
        if p.routine != routine {
            return Err((EXIT_MALFORMED, format!("case {i} is for {}, not {routine}", p.routine)));
        }
        let ret = unsafe { invoke(entry.f, &mut p, width) };
        let out = case_out(dir, i);
        let tmp = out.with_extension("tmp");
        fs::write(&tmp, encode_output(&p, ret))
            .and_then(|_| fs::rename(&tmp, &out))
            .map_err(|e| (EXIT_MALFORMED, format!("{}: {e}", out.display())))?;
        end_case(i);
    }
    Ok(())
}

fn bench(entry: &Entry, routine: Routine, width: IntWidth, flags: &HashMap<String, String>) -> Result<(), (i32, String)> {
    let params = parse_combo(routine, need(flags, "combo")?).map_err(|e| (EXIT_MALFORMED, e))?;
    let dims: Vec<i64> = need(flags, "dims")?
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| (EXIT_MALFORMED, "bad --dims".to_string()))?;
    let [m, n, k] = dims[..] else {
        return Err((EXIT_MALFORMED, "--dims needs m,n,k".into()));
    };
    let seed: u64 = num(flags, "seed")?;
    let reps: usize = num(flags, "reps")?;
    let warmups: usize = num(flags, "warmups")?;
    let out = PathBuf::from(need(flags, "out")?);

    let opts = crate::testgen::options_of(&params);
    let mut p = init_with(routine, opts, Dims { m, n, k }, 1, 1, seed, 0);
    let pristine: Vec<_> = routine.outputs().map(|s| (s, p.array(s).clone())).collect();
    let mut times = Vec::with_capacity(reps);
    for rep in 0..warmups + reps {
        for (s, v) in &pristine {
            p.array_mut(*s).copy_from_slice(v);
        }
        let t = Instant::now();
        unsafe { invoke(entry.f, &mut p, width) };
        let dt = t.elapsed().as_secs_f64();
        if rep >= warmups {
            times.push(dt);
        }
        unsafe { libc::fflush(std::ptr::null_mut()) };
    }
    let text: String = times.iter().map(|t| format!("{t}\n")).collect();
    let tmp = out.with_extension("tmp");
    fs::write(&tmp, text).and_then(|_| fs::rename(&tmp, &out)).map_err(|e| (EXIT_MALFORMED, e.to_string()))
}
