//! The `kgau` command line: prompt preview, sampling, verification,
//! benchmarking, oracle self-test and reports.
//!
//! Exit codes: 0 success, 1 pipeline failure, 2 configuration error.
//!
//! Output layout of `run` and `gen`:
//!
//! ```text
//! <output_dir>/candidates/<model>/<mode>/<routine>/<index>.c   sampled text
//! <output_dir>/candidates/<model>/<mode>/<routine>/<index>.json  tokens, cost
//! <output_dir>/ledger.jsonl                                    one record per candidate
//! <output_dir>/reports/pass.{txt,md,csv}
//! <output_dir>/reports/perf.{txt,md,csv}                       when benchmarks ran
//! <output_dir>/scratch/                                        build directories
//! ```

pub mod config;
pub mod pipeline;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use kgau_core::bench::{bench_combos, run_bench, BenchConfig};
use kgau_core::ledger::{self, Entry};
use kgau_core::promptkit::{build_prompt, load_attachment, PromptMode};
use kgau_core::report::{build_pass_table, build_perf_table, render_pass, render_perf, Format, Selection};
use kgau_core::routine::Routine;
use kgau_core::sandbox::{compile_candidate, BuildRecipe, ExecLimits, LibSpec, SandboxKernel, WorkerCommand, WorkerTimer};
use kgau_core::selftest::{self, Fault, SelftestOptions};
use kgau_core::testgen::{enumerate_cases, RoutineSpec};
use kgau_core::verifier::{verify_candidate, ErrorModel, VerifyOptions};

use config::{parse_int_type, parse_sizes, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Pipeline(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Pipeline(_) => 1,
            CliError::Config(_) => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "kgau", version, about = "Generate, verify and benchmark BLAS kernel candidates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the reference oracle against the dense evaluator and run the poison tests.
    OracleSelftest(SelftestArgs),
    /// Print the prompt for a routine and mode.
    Prompt(PromptArgs),
    /// Sample candidates into <output_dir>/candidates without verifying.
    Gen(ConfigArg),
    /// Compile and verify one C source (or the oracle) against the test matrix.
    Verify(VerifyArgs),
    /// Benchmark one C source (or the oracle) at the configured sizes.
    Bench(BenchArgs),
    /// Render pass and performance tables from a ledger.
    Report(ReportArgs),
    /// Sample, verify, optionally benchmark, and write reports.
    Run(ConfigArg),
    /// Child-process entry point used by the sandbox.
    #[command(hide = true)]
    Worker {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        args: Vec<String>,
    },
}

#[derive(Args, Debug)]
pub struct ConfigArg {
    /// Run configuration (TOML).
    #[arg(short, long)]
    pub config: PathBuf,
}

#[derive(Args, Debug)]
pub struct SelftestArgs {
    /// Size grid: default or small.
    #[arg(long, default_value = "default")]
    pub sizes: String,
    /// Restrict to these routines.
    #[arg(long = "routine")]
    pub routines: Vec<String>,
    /// Write a binary conformance record of every oracle call.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Corrupt the oracle's results for one routine (testing the test).
    #[arg(long, hide = true)]
    pub inject_fault: Option<String>,
}

#[derive(Args, Debug)]
pub struct PromptArgs {
    #[arg(long)]
    pub routine: String,
    /// NameToCcode, NameToOptCcode, FrtcodeToOptCcode (or 1, 2, 3).
    #[arg(long)]
    pub mode: String,
    /// Directory holding <routine>.f, for FrtcodeToOptCcode.
    #[arg(long)]
    pub fortran_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[arg(long, default_value = "cc")]
    pub compiler: String,
    #[arg(long, default_value = "-march=native")]
    pub arch_flag: String,
    /// `int` or `long long`.
    #[arg(long, default_value = "int")]
    pub int_type: String,
    /// Build a standalone executable around this C driver.
    #[arg(long)]
    pub shim: Option<PathBuf>,
}

impl BuildArgs {
    fn recipe(&self) -> Result<BuildRecipe, CliError> {
        Ok(BuildRecipe {
            compiler: self.compiler.clone(),
            arch_flag: self.arch_flag.clone(),
            int_width: parse_int_type(&self.int_type).map_err(CliError::Config)?,
            shim_source: self.shim.clone(),
            ..BuildRecipe::default()
        })
    }
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub routine: String,
    /// Candidate C source.
    #[arg(long, conflicts_with = "oracle", required_unless_present = "oracle")]
    pub source: Option<PathBuf>,
    /// Verify the built-in oracle through the sandbox instead.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, default_value = "default")]
    pub sizes: String,
    #[arg(long, default_value_t = 10_000)]
    pub case_budget_ms: u64,
    #[arg(long, default_value_t = ErrorModel::default().tol_multiplier)]
    pub tol: f64,
    /// Treat argument-check mismatches as failures.
    #[arg(long)]
    pub strict: bool,
    #[command(flatten)]
    pub build: BuildArgs,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    pub routine: String,
    #[arg(long, conflicts_with = "oracle", required_unless_present = "oracle")]
    pub source: Option<PathBuf>,
    #[arg(long)]
    pub oracle: bool,
    /// Benchmark only this row (default: every row of the routine).
    #[arg(long)]
    pub combo: Option<String>,
    #[arg(long)]
    pub level1_n: Option<i64>,
    #[arg(long)]
    pub level2_mn: Option<i64>,
    #[arg(long)]
    pub level3_mnk: Option<i64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub build: BuildArgs,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[arg(long)]
    pub ledger: PathBuf,
    /// Write pass.* / perf.* here instead of printing.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated: text, markdown, csv.
    #[arg(long, default_value = "text,markdown,csv", value_delimiter = ',')]
    pub format: Vec<String>,
    /// best or median.
    #[arg(long, default_value = "best")]
    pub selection: String,
}

fn routine_arg(s: &str) -> Result<Routine, CliError> {
    s.parse().map_err(|_| CliError::Config(format!("unknown routine `{s}`")))
}

/// The sandbox child: `$KGAU_WORKER` if set, else this executable's hidden
/// `worker` subcommand.
pub fn self_worker() -> Result<WorkerCommand, CliError> {
    if let Some(p) = std::env::var_os("KGAU_WORKER") {
        return Ok(WorkerCommand::new(p));
    }
    let exe = std::env::current_exe().map_err(|e| CliError::Pipeline(format!("cannot locate own executable: {e}")))?;
    Ok(WorkerCommand { program: exe, prefix: vec!["worker".into()] })
}

pub fn cmd_oracle_selftest(a: &SelftestArgs, out: &mut dyn Write) -> Result<bool, CliError> {
    let profile = parse_sizes(&a.sizes).map_err(CliError::Config)?;
    let routines = if a.routines.is_empty() {
        None
    } else {
        Some(a.routines.iter().map(|r| routine_arg(r)).collect::<Result<Vec<_>, _>>()?)
    };
    let fault = a.inject_fault.as_deref().map(routine_arg).transpose()?.map(|routine| Fault { routine });
    let opts = SelftestOptions { profile: Some(profile.clone()), routines: routines.clone(), fault, ..Default::default() };
    let report = selftest::run(&opts);
    let w = |e: std::io::Error| CliError::Pipeline(e.to_string());
    report.write_text(out).map_err(w)?;
    if let Some(path) = &a.dump {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(w)?);
        for r in routines.unwrap_or_else(|| Routine::ALL.to_vec()) {
            selftest::conformance_dump(&enumerate_cases(&RoutineSpec::of(r), &profile), &mut f).map_err(w)?;
        }
        f.flush().map_err(w)?;
    }
    match report.first_failure() {
        None => {
            writeln!(out, "oracle self-test passed").map_err(w)?;
            Ok(true)
        }
        Some(id) => {
            writeln!(out, "oracle self-test FAILED at {id}").map_err(w)?;
            Ok(false)
        }
    }
}

pub fn cmd_prompt(a: &PromptArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let routine = routine_arg(&a.routine)?;
    let mode: PromptMode = a.mode.parse().map_err(|e: kgau_core::promptkit::PromptError| CliError::Config(e.to_string()))?;
    let attachment = match (&a.fortran_dir, mode.needs_attachment()) {
        (Some(dir), true) => Some(load_attachment(dir, routine).map_err(|e| CliError::Config(e.to_string()))?),
        _ => None,
    };
    let b = build_prompt(routine, mode, attachment.as_deref()).map_err(|e| CliError::Config(e.to_string()))?;
    out.write_all(b.text.as_bytes()).map_err(|e| CliError::Pipeline(e.to_string()))?;
    Ok(())
}

fn read_source(p: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
}

pub fn cmd_verify(a: &VerifyArgs, worker: &WorkerCommand, out: &mut dyn Write) -> Result<bool, CliError> {
    let routine = routine_arg(&a.routine)?;
    let cases = enumerate_cases(&RoutineSpec::of(routine), &parse_sizes(&a.sizes).map_err(CliError::Config)?);
    let opts = VerifyOptions {
        error_model: ErrorModel { tol_multiplier: a.tol },
        strict_arg_check: a.strict,
        ..VerifyOptions::default()
    };
    let limits = ExecLimits { case_budget: Duration::from_millis(a.case_budget_ms), ..ExecLimits::default() };
    let scratch = tempfile::tempdir().map_err(|e| CliError::Pipeline(e.to_string()))?;
    let report = if a.oracle {
        let mut k = SandboxKernel::oracle(routine, worker.clone(), limits, scratch.path());
        verify_candidate(&mut k, &cases, &opts)
    } else {
        let src = read_source(a.source.as_deref().expect("clap enforces --source or --oracle"))?;
        match compile_candidate(&src, routine, &a.build.recipe()?, scratch.path(), worker) {
            Ok(h) => {
                let mut k = SandboxKernel::new(&h, worker.clone(), limits);
                verify_candidate(&mut k, &cases, &opts)
            }
            Err(e) => {
                let v = e.verdict();
                let w = |e: std::io::Error| CliError::Pipeline(e.to_string());
                writeln!(out, "{routine}: {}\n{}", v.kind, v.detail.trim_end()).map_err(w)?;
                return Ok(false);
            }
        }
    };
    let w = |e: std::io::Error| CliError::Pipeline(e.to_string());
    let v = &report.verdict;
    writeln!(out, "{routine}: {} ({} cases run)", v.kind, report.cases_run).map_err(w)?;
    if let Some(id) = &v.failing_case {
        writeln!(out, "first failing case: {id}").map_err(w)?;
    }
    if !v.detail.is_empty() {
        writeln!(out, "{}", v.detail.trim_end()).map_err(w)?;
    }
    if let Some(e) = v.max_rel_err {
        writeln!(out, "max normalized error: {e:.3}").map_err(w)?;
    }
    writeln!(out, "argument check: {:?}", report.arg_check).map_err(w)?;
    for c in &report.combos {
        writeln!(out, "  {:<40} {}", c.combo, if c.passed { "pass" } else { "FAIL" }).map_err(w)?;
    }
    Ok(v.is_pass())
}

pub fn cmd_bench(a: &BenchArgs, worker: &WorkerCommand, out: &mut dyn Write) -> Result<bool, CliError> {
    let routine = routine_arg(&a.routine)?;
    let d = BenchConfig::default();
    let cfg = BenchConfig {
        level1_n: a.level1_n.unwrap_or(d.level1_n),
        level2_mn: a.level2_mn.unwrap_or(d.level2_mn),
        level3_mnk: a.level3_mnk.unwrap_or(d.level3_mnk),
        reps: a.reps.unwrap_or(d.reps),
        threads: a.threads.unwrap_or(d.threads),
        ..d
    };
    cfg.validate().map_err(CliError::Config)?;
    let combos = match &a.combo {
        Some(c) => vec![c.clone()],
        None => bench_combos(routine),
    };
    let scratch = tempfile::tempdir().map_err(|e| CliError::Pipeline(e.to_string()))?;
    let recipe = a.build.recipe()?;
    let (lib, _handle) = if a.oracle {
        (LibSpec::Oracle, None)
    } else {
        if recipe.shim_source.is_some() {
            return Err(CliError::Config("shim builds cannot be benchmarked".into()));
        }
        let src = read_source(a.source.as_deref().expect("clap enforces --source or --oracle"))?;
        let h = compile_candidate(&src, routine, &recipe, scratch.path(), worker)
            .map_err(|e| CliError::Pipeline(format!("build failed: {}", e.verdict().detail)))?;
        (h.lib_spec(), Some(h))
    };
    let mut timer = WorkerTimer {
        worker: worker.clone(),
        lib,
        int_width: recipe.int_width,
        workdir: scratch.path().to_path_buf(),
        limits: ExecLimits { case_budget: Duration::from_secs(600), threads: Some(cfg.threads), ..ExecLimits::default() },
    };
    let impl_id = if a.oracle { "Ref" } else { "candidate" };
    let mut ok = true;
    for combo in combos {
        let s = run_bench(&mut timer, routine, &combo, impl_id, &cfg);
        ok &= s.is_ok();
        writeln!(out, "{s}").map_err(|e| CliError::Pipeline(e.to_string()))?;
    }
    Ok(ok)
}

/// Renders pass (and, when reference rows exist, perf) tables; returns
/// (file name, contents) pairs in a fixed order.
pub fn render_reports(entries: &[Entry], formats: &[Format], selection: Selection) -> Result<Vec<(String, String)>, CliError> {
    if ledger::candidates(entries).next().is_none() {
        return Err(CliError::Pipeline("ledger has no candidate records".into()));
    }
    let pass = build_pass_table(entries);
    let refs: Vec<_> = ledger::references(entries).cloned().collect();
    let perf = if refs.is_empty() {
        None
    } else {
        Some(build_perf_table(entries, &refs, selection).map_err(|e| CliError::Pipeline(e.to_string()))?)
    };
    let mut files = Vec::new();
    for &f in formats {
        files.push((format!("pass.{}", f.extension()), render_pass(&pass, f)));
    }
    if let Some(perf) = &perf {
        for &f in formats {
            files.push((format!("perf.{}", f.extension()), render_perf(perf, f)));
        }
    }
    Ok(files)
}

pub fn write_reports(files: &[(String, String)], dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Pipeline(format!("{}: {e}", dir.display())))?;
    for (name, text) in files {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| CliError::Pipeline(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

pub fn cmd_report(a: &ReportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let formats = a.format.iter().map(|f| f.parse::<Format>()).collect::<Result<Vec<_>, _>>().map_err(CliError::Config)?;
    let selection: Selection = a.selection.parse().map_err(CliError::Config)?;
    let entries = ledger::read(&a.ledger).map_err(|e| CliError::Pipeline(e.to_string()))?;
    let files = render_reports(&entries, &formats, selection)?;
    match &a.out {
        Some(dir) => write_reports(&files, dir),
        None => {
            for (name, text) in &files {
                writeln!(out, "== {name}\n{text}").map_err(|e| CliError::Pipeline(e.to_string()))?;
            }
            Ok(())
        }
    }
}

pub fn cmd_run(cfg: &RunConfig, worker: &WorkerCommand, out: &mut dyn Write) -> Result<pipeline::RunSummary, CliError> {
    let summary = pipeline::run(cfg, worker)?;
    let entries = ledger::read(&cfg.ledger_path()).map_err(|e| CliError::Pipeline(e.to_string()))?;
    let files = render_reports(&entries, &Format::ALL, Selection::Best)?;
    write_reports(&files, &cfg.reports_dir())?;
    writeln!(
        out,
        "verified {} candidate(s), {} passed, {} already in the ledger; reports in {}",
        summary.verified,
        summary.passed,
        summary.skipped,
        cfg.reports_dir().display()
    )
    .map_err(|e| CliError::Pipeline(e.to_string()))?;
    Ok(summary)
}

fn load_config(p: &Path) -> Result<RunConfig, CliError> {
    RunConfig::load(p).map_err(CliError::Config)
}

/// Runs a parsed command; returns the process exit code.
pub fn dispatch(cli: Cli, out: &mut dyn Write) -> i32 {
    let result: Result<bool, CliError> = match &cli.command {
        Command::Worker { args } => return kgau_core::sandbox::worker::worker_main(args),
        Command::OracleSelftest(a) => cmd_oracle_selftest(a, out),
        Command::Prompt(a) => cmd_prompt(a, out).map(|_| true),
        Command::Gen(a) => load_config(&a.config).and_then(|c| pipeline::generate(&c)).map(|s| {
            let _ = writeln!(out, "sampled {} candidate(s)", s.sampled);
            true
        }),
        Command::Verify(a) => self_worker().and_then(|w| cmd_verify(a, &w, out)),
        Command::Bench(a) => self_worker().and_then(|w| cmd_bench(a, &w, out)),
        Command::Report(a) => cmd_report(a, out).map(|_| true),
        Command::Run(a) => load_config(&a.config).and_then(|c| self_worker().and_then(|w| cmd_run(&c, &w, out))).map(|_| true),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("kgau: {e}");
            e.exit_code()
        }
    }
}
