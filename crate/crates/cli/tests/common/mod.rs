#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn kgau() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_kgau"));
    c.env_remove("KGAU_WORKER").env("RUST_LOG", "warn");
    c
}

pub fn run(args: &[&str]) -> Output {
    kgau().args(args).output().expect("kgau runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

pub fn corpus() -> PathBuf {
    repo_root().join("corpus/mock")
}

/// Writes `<dir>/run.toml` with the given backend and extra TOML.
pub fn write_config(dir: &Path, out: &str, backend: &str, body: &str) -> PathBuf {
    let p = dir.join(format!("{out}.toml"));
    let text = format!("output_dir = \"{}\"\nbackend = \"{backend}\"\n{body}", dir.join(out).display());
    std::fs::write(&p, text).unwrap();
    p
}

/// The configuration of the mock end-to-end run.
pub const MOCK_RUN: &str = r#"routines = ["daxpy", "dsymv", "dtrsm"]
modes = ["NameToCcode"]
models = ["gpt-4.1"]

[sampling]
n_samples = 10

[verify]
case_budget_ms = 2000
jobs = 6
"#;

pub fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}
