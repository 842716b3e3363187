use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use kgau_core::problem::Problem;
use kgau_core::routine::Routine;
use kgau_core::sandbox::casefile::{decode_output, encode_input};
use kgau_core::sandbox::exec::{self, BenchRequest, ProbeResult};
use kgau_core::sandbox::{
    compile_candidate, BuildError, BuildRecipe, ExecLimits, HandleKind, IntWidth, LibSpec, SandboxKernel, WorkerCommand,
};
use kgau_core::testgen::{enumerate_cases, init_problem, init_with, options_of, RoutineSpec, SizeProfile};
use kgau_core::verifier::{arg_check_probe, verify_candidate, ArgCheck, CaseOutcome, Kernel, VerdictKind, VerifyOptions};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn worker() -> WorkerCommand {
    WorkerCommand::new(env!("CARGO_BIN_EXE_kgau-worker"))
}

fn fixture(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn shim_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../shim/driver_shim.c")
}

fn limits(budget: Duration) -> ExecLimits {
    ExecLimits { case_budget: budget, ..ExecLimits::default() }
}

fn cases(r: Routine) -> Vec<kgau_core::testgen::TestCase> {
    enumerate_cases(&RoutineSpec::of(r), &SizeProfile::default())
}

#[test]
fn correct_candidate_builds_and_passes() {
    let root = tempfile::tempdir().unwrap();
    let h = compile_candidate(&fixture("daxpy_ok.c"), Routine::Daxpy, &BuildRecipe::default(), root.path(), &worker()).unwrap();
    assert_eq!(h.entry_symbol, "GPTBLAS_daxpy");
    assert_eq!(h.kind, HandleKind::Library);
    let report = {
        let mut k = SandboxKernel::new(&h, worker(), limits(Duration::from_secs(10)));
        verify_candidate(&mut k, &cases(Routine::Daxpy), &VerifyOptions::default())
    };
    assert!(report.verdict.is_pass(), "{:?}", report.verdict);
    assert_eq!(report.cases_run, 32);
    let dir = h.scratch.path().to_path_buf();
    assert!(dir.exists());
    assert_eq!(h.scratch.finish(false), None);
    assert!(!dir.exists(), "scratch removed on success");
}

#[test]
fn marker_is_captured_per_case() {
    let root = tempfile::tempdir().unwrap();
    let h = compile_candidate(&fixture("daxpy_ok.c"), Routine::Daxpy, &BuildRecipe::default(), root.path(), &worker()).unwrap();
    let problems: Vec<Problem> = cases(Routine::Daxpy).iter().take(5).map(init_problem).collect();
    let mut k = SandboxKernel::new(&h, worker(), ExecLimits::default());
    let out = k.invoke_batch(&problems);
    assert_eq!(out.len(), 5);
    for o in &out {
        assert!(matches!(o, CaseOutcome::Completed { marker: true, .. }), "{o:?}");
    }
}

#[test]
fn syntax_error_is_compile_error_with_diagnostics() {
    let root = tempfile::tempdir().unwrap();
    let err = compile_candidate(&fixture("daxpy_syntax.c"), Routine::Daxpy, &BuildRecipe::default(), root.path(), &worker())
        .unwrap_err();
    let BuildError::Compile { detail, scratch } = &err else { panic!("{err:?}") };
    assert!(detail.contains("error"), "{detail}");
    assert_eq!(err.verdict().kind, VerdictKind::CompileError);
    let kept = scratch.as_ref().unwrap();
    assert!(kept.join("candidate.c").exists(), "scratch kept on failure");
}

#[test]
fn empty_source_is_compile_error() {
    let root = tempfile::tempdir().unwrap();
    let err = compile_candidate("  \n", Routine::Daxpy, &BuildRecipe::default(), root.path(), &worker()).unwrap_err();
    assert_eq!(err.verdict().kind, VerdictKind::CompileError);
}

#[test]
fn missing_entry_symbol_is_link_error() {
    let root = tempfile::tempdir().unwrap();
    let err = compile_candidate(&fixture("daxpy_misnamed.c"), Routine::Daxpy, &BuildRecipe::default(), root.path(), &worker())
        .unwrap_err();
    assert_eq!(err.verdict().kind, VerdictKind::LinkError, "{err}");
    assert!(err.to_string().contains("GPTBLAS_daxpy"), "{err}");
}

#[test]
fn crasher_is_crash_and_parent_survives() {
    let root = tempfile::tempdir().unwrap();
    let h = compile_candidate(&fixture("daxpy_crash.c"), Routine::Daxpy, &BuildRecipe::default(), root.path(), &worker()).unwrap();
    let mut k = SandboxKernel::new(&h, worker(), ExecLimits::default());
    let report = verify_candidate(&mut k, &cases(Routine::Daxpy), &VerifyOptions::default());
    assert_eq!(report.verdict.kind, VerdictKind::Crash);
    assert!(report.verdict.detail.contains("signal"), "{}", report.verdict.detail);
    // n = 3 is the first size with n > 2
    assert_eq!(report.verdict.failing_case.as_deref(), Some("daxpy#2"));
}

#[test]
fn spinner_times_out_at_the_budget() {
    let root = tempfile::tempdir().unwrap();
    let h = compile_candidate(&fixture("daxpy_spin.c"), Routine::Daxpy, &BuildRecipe::default(), root.path(), &worker()).unwrap();
    let mut k = SandboxKernel::new(&h, worker(), limits(Duration::from_millis(500)));
    let t = Instant::now();
    let report = verify_candidate(&mut k, &cases(Routine::Daxpy), &VerifyOptions::default());
    assert_eq!(report.verdict.kind, VerdictKind::Timeout);
    assert_eq!(report.verdict.failing_case.as_deref(), Some("daxpy#2"));
    assert!(t.elapsed() < Duration::from_secs(10));
    assert!(report.combos.iter().all(|c| !c.passed));
}

#[test]
fn silent_candidate_is_marker_missing() {
    let root = tempfile::tempdir().unwrap();
    let h = compile_candidate(&fixture("daxpy_silent.c"), Routine::Daxpy, &BuildRecipe::default(), root.path(), &worker()).unwrap();
    let mut k = SandboxKernel::new(&h, worker(), ExecLimits::default());
    let report = verify_candidate(&mut k, &cases(Routine::Daxpy), &VerifyOptions::default());
    assert_eq!(report.verdict.kind, VerdictKind::MarkerMissing);
    assert_eq!(report.verdict.failing_case.as_deref(), Some("daxpy#0"));
}

#[test]
fn xerbla_caller_links_and_reports_through_the_recorder() {
    let root = tempfile::tempdir().unwrap();
    let h = compile_candidate(&fixture("dgemv_xerbla.c"), Routine::Dgemv, &BuildRecipe::default(), root.path(), &worker()).unwrap();
    assert!(h.scratch.path().join("prelude.h").exists());
    assert!(fs::read_to_string(h.scratch.path().join("prelude.h")).unwrap().contains("#define MAX"));
    let mut k = SandboxKernel::new(&h, worker(), ExecLimits::default());
    let report = verify_candidate(&mut k, &cases(Routine::Dgemv), &VerifyOptions::default());
    assert!(report.verdict.is_pass(), "{:?}", report.verdict);
    assert_eq!(report.arg_check, ArgCheck::Ok);

    let (bad, pos) = arg_check_probe(&cases(Routine::Dgemv)[20]).unwrap();
    assert_eq!(pos, 2);
    let out = k.invoke_batch(std::slice::from_ref(&bad));
    let CaseOutcome::Completed { xerbla, .. } = &out[0] else { panic!("{out:?}") };
    assert_eq!(xerbla.len(), 1);
    assert_eq!(xerbla[0].info, 2);
    assert_eq!(xerbla[0].name.trim(), "DGEMV");
}

#[test]
fn oracle_through_worker_is_bit_exact_on_randomized_cases() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for r in Routine::ALL {
        let all = cases(r);
        let problems: Vec<Problem> = (0..50)
            .map(|_| {
                let c = all.choose(&mut rng).unwrap();
                init_with(r, options_of(&c.params), c.dims, c.incx, c.incy, rng.gen(), c.grid_index)
            })
            .collect();
        let mut k = SandboxKernel::oracle(r, worker(), ExecLimits::default(), dir.path());
        let mut got = Vec::new();
        for chunk in problems.chunks(16) {
            got.extend(k.invoke_batch(chunk));
        }
        assert_eq!(got.len(), 50, "{r}");
        for (p, o) in problems.iter().zip(&got) {
            let want = p.run_oracle().unwrap();
            let CaseOutcome::Completed { outputs, marker, xerbla } = o else { panic!("{r}: {o:?}") };
            assert!(outputs.bit_eq(&want), "{r}");
            assert!(*marker);
            assert!(xerbla.is_empty());
        }
    }
}

#[test]
fn oracle_argument_errors_surface_as_xerbla_records() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = init_problem(&cases(Routine::Dtrsm)[40]);
    p = Problem::zeroed(p.routine, p.opts, p.m, -1, p.k, p.incx, p.incy);
    let mut k = SandboxKernel::oracle(Routine::Dtrsm, worker(), ExecLimits::default(), dir.path());
    let out = k.invoke_batch(std::slice::from_ref(&p));
    let CaseOutcome::Completed { xerbla, .. } = &out[0] else { panic!("{out:?}") };
    assert_eq!(xerbla[0].name, "DTRSM");
    assert_eq!(xerbla[0].info, 6);
}

#[test]
fn probe_distinguishes_missing_library_and_symbol() {
    let dir = tempfile::tempdir().unwrap();
    let l = ExecLimits::default();
    assert_eq!(exec::probe(&worker(), &LibSpec::Oracle, Routine::Dgemm, dir.path(), &l).unwrap(), ProbeResult::Ok);
    let missing = LibSpec::Path(dir.path().join("nope.so"));
    assert!(matches!(exec::probe(&worker(), &missing, Routine::Dgemm, dir.path(), &l).unwrap(), ProbeResult::LinkError(_)));
}

#[test]
fn worker_exit_codes_follow_the_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_kgau-worker");
    let run = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(run(&["run", "--lib", "@oracle", "--routine", "dzzz", "--dir", "x", "--count", "1"]), Some(3));
    assert_eq!(run(&["run", "--lib", "@oracle", "--routine", "daxpy"]), Some(2));

    let p = init_problem(&cases(Routine::Daxpy)[3]);
    let mut bytes = encode_input(&p);
    bytes.truncate(bytes.len() - 3);
    fs::write(dir.path().join("case_0.in"), &bytes).unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(run(&["run", "--lib", "@oracle", "--routine", "daxpy", "--dir", d, "--count", "1"]), Some(2));

    let mut bytes = encode_input(&p);
    bytes[8..12].copy_from_slice(&99u32.to_le_bytes());
    fs::write(dir.path().join("case_0.in"), &bytes).unwrap();
    assert_eq!(run(&["run", "--lib", "@oracle", "--routine", "daxpy", "--dir", d, "--count", "1"]), Some(3));
}

#[test]
fn bench_through_worker_returns_requested_reps() {
    let dir = tempfile::tempdir().unwrap();
    let req = BenchRequest { routine: Routine::Dgemm, combo: "transa=N,transb=T", dims: (64, 64, 64), seed: 7, reps: 3, warmups: 1 };
    let times = exec::run_bench(&worker(), &LibSpec::Oracle, IntWidth::I32, &req, dir.path(), &ExecLimits::default())
        .unwrap()
        .unwrap();
    assert_eq!(times.len(), 3);
    assert!(times.iter().all(|t| *t > 0.0 && t.is_finite()));
}

#[test]
fn bench_of_a_crasher_reports_the_crash() {
    let root = tempfile::tempdir().unwrap();
    let h = compile_candidate(&fixture("daxpy_crash.c"), Routine::Daxpy, &BuildRecipe::default(), root.path(), &worker()).unwrap();
    let req = BenchRequest { routine: Routine::Daxpy, combo: "-", dims: (0, 1000, 0), seed: 1, reps: 3, warmups: 0 };
    let dir = tempfile::tempdir().unwrap();
    let r = exec::run_bench(&worker(), &h.lib_spec(), IntWidth::I32, &req, dir.path(), &ExecLimits::default()).unwrap();
    assert!(matches!(r, Err(CaseOutcome::Crashed { .. })), "{r:?}");
}

mod shim {
    use super::*;

    fn recipe() -> BuildRecipe {
        BuildRecipe { shim_source: Some(shim_path()), ..BuildRecipe::default() }
    }

    fn run(exe: &Path, input: &[u8], dir: &Path) -> (Option<i32>, String, Option<Vec<u8>>) {
        let (i, o) = (dir.join("in.bin"), dir.join("out.bin"));
        let _ = fs::remove_file(&o);
        fs::write(&i, input).unwrap();
        let out = Command::new(exe).arg(&i).arg(&o).output().unwrap();
        (out.status.code(), String::from_utf8_lossy(&out.stderr).into_owned(), fs::read(&o).ok())
    }

    #[test]
    fn shim_route_agrees_with_worker_route_bit_for_bit() {
        let root = tempfile::tempdir().unwrap();
        let src = fixture("dgemv_xerbla.c");
        let lib = compile_candidate(&src, Routine::Dgemv, &BuildRecipe::default(), root.path(), &worker()).unwrap();
        let exe = compile_candidate(&src, Routine::Dgemv, &recipe(), root.path(), &worker()).unwrap();
        assert_eq!(exe.kind, HandleKind::Shim);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let all = cases(Routine::Dgemv);
        let problems: Vec<Problem> = (0..50)
            .map(|_| {
                let c = all.choose(&mut rng).unwrap();
                init_with(Routine::Dgemv, options_of(&c.params), c.dims, c.incx, c.incy, rng.gen(), c.grid_index)
            })
            .collect();
        let a = SandboxKernel::new(&lib, worker(), ExecLimits::default()).invoke_batch(&problems);
        let b = SandboxKernel::new(&exe, worker(), ExecLimits::default()).invoke_batch(&problems);
        assert_eq!((a.len(), b.len()), (50, 50));
        for (x, y) in a.iter().zip(&b) {
            let (CaseOutcome::Completed { outputs: ox, marker: mx, .. }, CaseOutcome::Completed { outputs: oy, marker: my, .. }) = (x, y)
            else {
                panic!("{x:?} {y:?}")
            };
            assert!(ox.bit_eq(oy));
            assert!(*mx && *my);
        }
    }

    #[test]
    fn shim_candidate_passes_verification() {
        let root = tempfile::tempdir().unwrap();
        let h = compile_candidate(&fixture("daxpy_ok.c"), Routine::Daxpy, &recipe(), root.path(), &worker()).unwrap();
        let mut k = SandboxKernel::new(&h, worker(), ExecLimits::default());
        let report = verify_candidate(&mut k, &cases(Routine::Daxpy), &VerifyOptions::default());
        assert!(report.verdict.is_pass(), "{:?}", report.verdict);
    }

    #[test]
    fn shim_exit_codes_and_xerbla_records() {
        let root = tempfile::tempdir().unwrap();
        let h = compile_candidate(&fixture("dgemv_xerbla.c"), Routine::Dgemv, &recipe(), root.path(), &worker()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = init_problem(&cases(Routine::Dgemv)[21]);
        let good = encode_input(&p);

        let (code, _, out) = run(&h.library_path, &good, dir.path());
        assert_eq!(code, Some(0));
        let outputs = decode_output(&out.unwrap(), &p).unwrap();
        let want = p.run_oracle().unwrap();
        assert_eq!(outputs.ret, None);
        assert_eq!(outputs.arrays.len(), want.arrays.len());

        let (code, _, _) = run(&h.library_path, &good[..good.len() - 8], dir.path());
        assert_eq!(code, Some(2), "truncated");
        let mut trailing = good.clone();
        trailing.extend_from_slice(&[0; 8]);
        assert_eq!(run(&h.library_path, &trailing, dir.path()).0, Some(2), "trailing bytes");
        let mut magic = good.clone();
        magic[0] = b'X';
        assert_eq!(run(&h.library_path, &magic, dir.path()).0, Some(2), "bad magic");
        let mut unknown = good.clone();
        unknown[8..12].copy_from_slice(&42u32.to_le_bytes());
        assert_eq!(run(&h.library_path, &unknown, dir.path()).0, Some(3), "unknown routine");

        let (bad, _) = arg_check_probe(&cases(Routine::Dgemv)[21]).unwrap();
        let (code, stderr, _) = run(&h.library_path, &encode_input(&bad), dir.path());
        assert_eq!(code, Some(0));
        assert!(stderr.contains("XERBLA:DGEMV :2"), "{stderr}");
    }

    #[test]
    fn shim_link_failure_is_link_error() {
        let root = tempfile::tempdir().unwrap();
        let err = compile_candidate(&fixture("daxpy_misnamed.c"), Routine::Daxpy, &recipe(), root.path(), &worker()).unwrap_err();
        assert_eq!(err.verdict().kind, VerdictKind::LinkError, "{err}");
    }

    #[test]
    fn shim_crasher_is_crash() {
        let root = tempfile::tempdir().unwrap();
        let h = compile_candidate(&fixture("daxpy_crash.c"), Routine::Daxpy, &recipe(), root.path(), &worker()).unwrap();
        let mut k = SandboxKernel::new(&h, worker(), ExecLimits::default());
        let report = verify_candidate(&mut k, &cases(Routine::Daxpy), &VerifyOptions::default());
        assert_eq!(report.verdict.kind, VerdictKind::Crash);
    }
}
