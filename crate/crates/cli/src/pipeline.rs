//! The generation/verification/benchmark pipeline behind `gen` and `run`.
//!
//! Sampled texts go to `<output>/candidates` (a replay store) before they
//! are compiled, and verdicts go to `<output>/ledger.jsonl`. A rerun skips
//! every sample already in the ledger and reuses stored texts, so an
//! interrupted run resumes without duplicate records.

use std::path::Path;

use kgau_core::bench::{bench_combos, run_bench, verification_combo, BenchSample};
use kgau_core::ledger::{source_digest, CandidateRecord, Entry, Ledger};
use kgau_core::llm::{
    sample_indices, strip_fences, Backend, KernelCandidate, LiveBackend, MockBackend, ModelProfile, ReplayStore, SampleError,
};
use kgau_core::promptkit::{build_prompt, load_attachment, PromptBundle};
use kgau_core::routine::Routine;
use kgau_core::sandbox::{compile_candidate, HandleKind, KernelHandle, LibSpec, SandboxKernel, WorkerCommand, WorkerTimer};
use kgau_core::testgen::{enumerate_cases, RoutineSpec, TestCase};
use kgau_core::verifier::{verify_candidate, ArgCheck, ComboStatus};

use crate::config::{Backend as BackendChoice, RunConfig};
use crate::CliError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub sampled: usize,
    pub verified: usize,
    pub passed: usize,
    /// Samples already present in the ledger.
    pub skipped: usize,
    pub reference_rows: usize,
}

pub fn open_backend(cfg: &RunConfig) -> Result<Box<dyn Backend>, CliError> {
    Ok(match &cfg.backend {
        BackendChoice::Live => Box::new(LiveBackend::from_env(cfg.live.clone()).map_err(|e| CliError::Pipeline(e.to_string()))?),
        BackendChoice::Mock(dir) => Box::new(MockBackend::load(dir).map_err(|e| CliError::Config(e.to_string()))?),
        BackendChoice::Replay(dir) => Box::new(ReplayStore::load(dir).map_err(|e| CliError::Config(e.to_string()))?),
    })
}

fn sample_err(e: SampleError) -> CliError {
    CliError::Pipeline(e.to_string())
}

fn io_err(what: &str) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Pipeline(format!("{what}: {e}"))
}

fn bundle_for(cfg: &RunConfig, routine: Routine, mode: kgau_core::promptkit::PromptMode) -> Result<PromptBundle, CliError> {
    let attachment = if mode.needs_attachment() {
        let dir = cfg.fortran_src_dir.as_deref().ok_or_else(|| CliError::Config("fortran_src_dir is not set".into()))?;
        Some(load_attachment(dir, routine).map_err(|e| CliError::Config(e.to_string()))?)
    } else {
        None
    };
    build_prompt(routine, mode, attachment.as_deref()).map_err(|e| CliError::Config(e.to_string()))
}

/// Samples every index missing from the store; returns how many were drawn.
fn fill_store(
    backend: &dyn Backend,
    store: &ReplayStore,
    bundle: &PromptBundle,
    model: &ModelProfile,
    cfg: &RunConfig,
    wanted: &[usize],
) -> Result<usize, CliError> {
    let missing: Vec<usize> = wanted
        .iter()
        .copied()
        .filter(|&i| {
            !store.contains(&kgau_core::llm::SampleKey {
                routine: bundle.routine,
                mode: bundle.mode,
                model_id: model.model_id.clone(),
                index: i,
            })
        })
        .collect();
    if missing.is_empty() {
        return Ok(0);
    }
    log::info!("sampling {} {} {}: {} candidate(s)", bundle.routine, bundle.mode, model.model_id, missing.len());
    let fresh = sample_indices(backend, bundle, model, &cfg.sampling, &missing).map_err(sample_err)?;
    for c in &fresh {
        if let Some(f) = &c.failure {
            log::warn!("{}: sampling failed: {f}", c.key());
        }
        store.save(c).map_err(io_err("writing candidate store"))?;
    }
    Ok(fresh.len())
}

/// Sampling only: fills `<output>/candidates`.
pub fn generate(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let backend = open_backend(cfg)?;
    let store = ReplayStore::new(cfg.candidates_dir());
    let mut summary = RunSummary::default();
    let all: Vec<usize> = (0..cfg.sampling.n_samples).collect();
    for &routine in &cfg.routines {
        for &mode in &cfg.modes {
            let bundle = bundle_for(cfg, routine, mode)?;
            for model in &cfg.models {
                summary.sampled += fill_store(backend.as_ref(), &store, &bundle, model, cfg, &all)?;
            }
        }
    }
    Ok(summary)
}

/// Full pipeline.
pub fn run(cfg: &RunConfig, worker: &WorkerCommand) -> Result<RunSummary, CliError> {
    std::fs::create_dir_all(cfg.scratch_dir()).map_err(io_err("creating output directory"))?;
    let backend = open_backend(cfg)?;
    let store = ReplayStore::new(cfg.candidates_dir());
    let mut ledger = Ledger::open(&cfg.ledger_path()).map_err(|e| CliError::Pipeline(e.to_string()))?;
    let profile = cfg.size_profile().map_err(CliError::Config)?;
    let mut summary = RunSummary::default();

    if cfg.bench.enabled {
        summary.reference_rows = bench_references(cfg, worker, &mut ledger)?;
    }

    for &routine in &cfg.routines {
        let cases = enumerate_cases(&RoutineSpec::of(routine), &profile);
        for &mode in &cfg.modes {
            let bundle = bundle_for(cfg, routine, mode)?;
            for model in &cfg.models {
                let todo: Vec<usize> = (0..cfg.sampling.n_samples)
                    .filter(|&i| {
                        !ledger.has_candidate(&kgau_core::llm::SampleKey {
                            routine,
                            mode,
                            model_id: model.model_id.clone(),
                            index: i,
                        })
                    })
                    .collect();
                summary.skipped += cfg.sampling.n_samples - todo.len();
                if todo.is_empty() {
                    continue;
                }
                summary.sampled += fill_store(backend.as_ref(), &store, &bundle, model, cfg, &todo)?;
                let candidates = sample_indices(&store, &bundle, model, &cfg.sampling, &todo).map_err(sample_err)?;
                for chunk in candidates.chunks(cfg.verify.jobs) {
                    let evaluated: Vec<(CandidateRecord, Option<KernelHandle>)> = std::thread::scope(|s| {
                        let hs: Vec<_> = chunk.iter().map(|c| s.spawn(|| evaluate(c, &cases, cfg, worker))).collect();
                        hs.into_iter().map(|h| h.join().expect("verification thread panicked")).collect()
                    });
                    for (mut rec, handle) in evaluated {
                        if let Some(h) = handle {
                            if cfg.bench.enabled {
                                rec.bench = bench_candidate(cfg, worker, &rec, &h);
                            }
                            let keep = cfg.verify.keep_failed_builds && !rec.passed();
                            if let Some(p) = h.scratch.finish(keep) {
                                log::info!("{}: build kept at {}", rec.key(), p.display());
                            }
                        }
                        log::info!("{}: {}", rec.key(), rec.verdict);
                        summary.verified += 1;
                        summary.passed += rec.passed() as usize;
                        ledger.append(Entry::Candidate(rec)).map_err(|e| CliError::Pipeline(e.to_string()))?;
                    }
                }
            }
        }
    }
    Ok(summary)
}

fn combo_keys(cases: &[TestCase]) -> Vec<String> {
    let mut keys: Vec<String> = Vec::new();
    for c in cases {
        let k = c.combo();
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys
}

fn scrub(detail: &str, dir: Option<&Path>) -> String {
    match dir {
        Some(d) => detail.replace(&d.display().to_string(), "<scratch>"),
        None => detail.to_string(),
    }
}

/// Compiles and verifies one candidate. The handle is returned for
/// benchmarking when the build succeeded.
pub fn evaluate(c: &KernelCandidate, cases: &[TestCase], cfg: &RunConfig, worker: &WorkerCommand) -> (CandidateRecord, Option<KernelHandle>) {
    let (text, salvaged) = match cfg.salvage_fences.then(|| strip_fences(&c.source)).flatten() {
        Some(t) => (t, true),
        None => (c.source.clone(), false),
    };
    let mut rec = CandidateRecord {
        routine: c.routine,
        mode: c.mode,
        model: c.model_id.clone(),
        sample_index: c.sample_index,
        verdict: kgau_core::verifier::VerdictKind::CompileError,
        failing_case: None,
        max_rel_err: None,
        detail: String::new(),
        arg_check: ArgCheck::NotRun,
        combos: Vec::new(),
        cases_run: 0,
        source_sha256: source_digest(&c.source),
        tokens_in: c.tokens_in,
        tokens_out: c.tokens_out,
        reasoning_tokens: c.reasoning_tokens,
        cost_usd: c.cost_usd,
        salvaged,
        sampling_failure: c.failure.clone(),
        bench: Vec::new(),
    };
    match compile_candidate(&text, c.routine, &cfg.recipe(), &cfg.scratch_dir(), worker) {
        Err(e) => {
            let v = e.verdict();
            rec.verdict = v.kind;
            rec.detail = scrub(&v.detail, e.scratch());
            rec.combos = combo_keys(cases).into_iter().map(|combo| ComboStatus { combo, passed: false }).collect();
            if let Some(dir) = e.scratch() {
                if cfg.verify.keep_failed_builds {
                    log::info!("{}: failed build kept at {}", c.key(), dir.display());
                } else {
                    let _ = std::fs::remove_dir_all(dir);
                }
            }
            (rec, None)
        }
        Ok(handle) => {
            let report = {
                let mut k = SandboxKernel::new(&handle, worker.clone(), cfg.case_limits());
                verify_candidate(&mut k, cases, &cfg.verify_options())
            };
            rec.verdict = report.verdict.kind;
            rec.failing_case = report.verdict.failing_case;
            rec.max_rel_err = report.verdict.max_rel_err;
            rec.detail = scrub(&report.verdict.detail, Some(handle.scratch.path()));
            rec.arg_check = report.arg_check;
            rec.combos = report.combos;
            rec.cases_run = report.cases_run;
            (rec, Some(handle))
        }
    }
}

/// Benchmarks a built candidate on every row whose verification
/// combination it passed.
fn bench_candidate(cfg: &RunConfig, worker: &WorkerCommand, rec: &CandidateRecord, h: &KernelHandle) -> Vec<BenchSample> {
    if h.kind == HandleKind::Shim {
        log::warn!("{}: shim builds are not benchmarked", rec.key());
        return Vec::new();
    }
    let mut timer = WorkerTimer {
        worker: worker.clone(),
        lib: h.lib_spec(),
        int_width: h.int_width,
        workdir: h.scratch.path().to_path_buf(),
        limits: cfg.bench_limits(),
    };
    let impl_id = rec.key().to_string();
    bench_combos(rec.routine)
        .into_iter()
        .filter(|b| verification_combo(rec.routine, b).is_ok_and(|vc| rec.combo_passed(&vc)))
        .map(|b| {
            let s = run_bench(&mut timer, rec.routine, &b, &impl_id, &cfg.bench.cfg);
            log::info!("{s}");
            s
        })
        .collect()
}

/// Oracle rows for every configured routine not yet in the ledger.
fn bench_references(cfg: &RunConfig, worker: &WorkerCommand, ledger: &mut Ledger) -> Result<usize, CliError> {
    let mut timer = WorkerTimer {
        worker: worker.clone(),
        lib: LibSpec::Oracle,
        int_width: cfg.recipe().int_width,
        workdir: cfg.scratch_dir(),
        limits: cfg.bench_limits(),
    };
    let mut n = 0;
    for &routine in &cfg.routines {
        for combo in bench_combos(routine) {
            if ledger.has_reference(routine, &combo) {
                continue;
            }
            let s = run_bench(&mut timer, routine, &combo, "Ref", &cfg.bench.cfg);
            log::info!("{s}");
            if let Some(f) = &s.failure {
                return Err(CliError::Pipeline(format!("reference benchmark {routine} {combo} failed: {f}")));
            }
            ledger.append(Entry::Reference(s)).map_err(|e| CliError::Pipeline(e.to_string()))?;
            n += 1;
        }
    }
    Ok(n)
}
