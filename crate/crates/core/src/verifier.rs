//! Epsilon-scaled comparison against the oracle and verdict classification.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::oracle::{RotmParams, Side, Transpose};
use crate::problem::{Outputs, Problem};
use crate::routine::{Arg, IntSlot, Level, Routine};
use crate::testgen::{init_problem, TestCase};

/// Tolerance in units of `g · ε · scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorModel {
    pub tol_multiplier: f64,
}

impl Default for ErrorModel {
    fn default() -> Self {
        ErrorModel { tol_multiplier: 3.0 }
    }
}

/// Extra growth allowance for triangular solves.
pub const SOLVE_ALLOWANCE: f64 = 4.0;

/// Forward-error growth factor of a bound problem; never below 1.
pub fn growth_factor(p: &Problem) -> f64 {
    use Routine::*;
    let (m, n, k) = (p.m.max(0) as f64, p.n.max(0) as f64, p.k.max(0) as f64);
    let g = match p.routine {
        Dasum | Ddot | Dnrm2 | Idamax => n,
        Daxpy => 1.0,
        Drot | Drotm => 2.0,
        Dgemv => match p.opts.trans {
            Transpose::NoTrans => n,
            Transpose::Trans => m,
        },
        Dger | Dsymv | Dsyr | Dsyr2 | Dtrmv => n,
        Dgemm | Dsyrk | Dsyr2k => k,
        Dsymm | Dtrmm => match p.opts.side {
            Side::Left => m,
            Side::Right => n,
        },
        Dtrsv => n * SOLVE_ALLOWANCE,
        Dtrsm => {
            let order = match p.opts.side {
                Side::Left => m,
                Side::Right => n,
            };
            order * SOLVE_ALLOWANCE
        }
    };
    g.max(1.0)
}

fn max_abs<'a>(vals: impl Iterator<Item = &'a f64>) -> f64 {
    vals.fold(0.0, |acc, v| acc.max(v.abs()))
}

fn all_values(o: &Outputs) -> impl Iterator<Item = &f64> {
    o.ret.iter().chain(o.arrays.iter().flat_map(|(_, v)| v.iter()))
}

/// Magnitude of the exact result the error is measured against.
pub fn result_scale(p: &Problem, reference: &Outputs) -> f64 {
    use Routine::*;
    let vectors = || max_abs(p.x.iter().chain(&p.y));
    match p.routine {
        Dtrsv | Dtrsm => max_abs(all_values(reference)),
        Drot => (p.rot_c.abs() + p.rot_s.abs()) * vectors(),
        Drotm => {
            let mut h = [0.0; 5];
            for (d, s) in h.iter_mut().zip(&p.param) {
                *d = *s;
            }
            let h = RotmParams::from_array(&h).matrix();
            let row = |r: [f64; 2]| r[0].abs() + r[1].abs();
            row(h[0]).max(row(h[1])) * vectors()
        }
        _ => match p.magnitudes().run_oracle() {
            Ok(abs) => max_abs(all_values(&abs)),
            Err(_) => max_abs(all_values(reference)),
        },
    }
}

/// `‖result − reference‖∞ / (g · ε · scale)`.
///
/// Non-finite results, shape mismatches and any `idamax` index mismatch
/// give `+∞`; identical outputs give `0`.
pub fn relative_error(result: &Outputs, reference: &Outputs, p: &Problem) -> f64 {
    let shapes_match = result.ret.is_some() == reference.ret.is_some()
        && result.arrays.len() == reference.arrays.len()
        && result
            .arrays
            .iter()
            .zip(&reference.arrays)
            .all(|((s1, a), (s2, b))| s1 == s2 && a.len() == b.len());
    if !shapes_match || all_values(result).any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    if p.routine == Routine::Idamax {
        return if result.ret == reference.ret { 0.0 } else { f64::INFINITY };
    }
    let diff = all_values(result)
        .zip(all_values(reference))
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
    if diff == 0.0 {
        return 0.0;
    }
    let scale = result_scale(p, reference).max(f64::MIN_POSITIVE);
    diff / (growth_factor(p) * f64::EPSILON * scale)
}

/// One `xerbla` invocation observed during a call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct XerblaCall {
    pub name: String,
    pub info: i32,
}

impl XerblaCall {
    /// Parses a `XERBLA:<name>:<info>` record.
    pub fn parse(line: &str) -> Option<XerblaCall> {
        let rest = line.trim().strip_prefix("XERBLA:")?;
        let (name, info) = rest.rsplit_once(':')?;
        Some(XerblaCall { name: name.trim().to_string(), info: info.trim().parse().ok()? })
    }

    pub fn record(&self) -> String {
        format!("XERBLA:{}:{}", self.name, self.info)
    }
}

/// What happened when a kernel ran one case.
#[derive(Debug, Clone, PartialEq)]
pub enum CaseOutcome {
    Completed { outputs: Outputs, marker: bool, xerbla: Vec<XerblaCall> },
    Crashed { detail: String },
    TimedOut { detail: String },
    /// The harness could not run the case (protocol error, missing output).
    Failed { detail: String },
}

impl CaseOutcome {
    pub fn is_abnormal(&self) -> bool {
        !matches!(self, CaseOutcome::Completed { .. })
    }
}

/// A callable implementation under test.
pub trait Kernel {
    /// Runs `problems` in order. May return fewer outcomes than inputs
    /// when execution stopped early, in which case the last outcome is
    /// abnormal and the remaining problems were not run.
    fn invoke_batch(&mut self, problems: &[Problem]) -> Vec<CaseOutcome>;
}

/// The oracle itself, in-process. Argument errors are reported the way
/// a recording `xerbla` would see them, with outputs left untouched.
#[derive(Debug, Default, Clone, Copy)]
pub struct OracleKernel;

impl Kernel for OracleKernel {
    fn invoke_batch(&mut self, problems: &[Problem]) -> Vec<CaseOutcome> {
        problems.iter().map(oracle_outcome).collect()
    }
}

pub fn oracle_outcome(p: &Problem) -> CaseOutcome {
    match p.run_oracle() {
        Ok(outputs) => CaseOutcome::Completed { outputs, marker: true, xerbla: Vec::new() },
        Err(e) => CaseOutcome::Completed {
            outputs: p.outputs(None),
            marker: true,
            xerbla: vec![XerblaCall { name: e.routine().to_string(), info: e.position() as i32 }],
        },
    }
}

/// Adapts a closure into a [`Kernel`].
pub struct FnKernel<F>(pub F);

impl<F: FnMut(&Problem) -> CaseOutcome> Kernel for FnKernel<F> {
    fn invoke_batch(&mut self, problems: &[Problem]) -> Vec<CaseOutcome> {
        let mut out = Vec::with_capacity(problems.len());
        for p in problems {
            let o = (self.0)(p);
            let stop = o.is_abnormal() && !matches!(o, CaseOutcome::Failed { .. });
            out.push(o);
            if stop {
                break;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VerdictKind {
    Pass,
    CompileError,
    LinkError,
    Crash,
    Timeout,
    MarkerMissing,
    NumericalError,
    ArgCheckMismatch,
}

impl VerdictKind {
    pub fn name(self) -> &'static str {
        match self {
            VerdictKind::Pass => "Pass",
            VerdictKind::CompileError => "CompileError",
            VerdictKind::LinkError => "LinkError",
            VerdictKind::Crash => "Crash",
            VerdictKind::Timeout => "Timeout",
            VerdictKind::MarkerMissing => "MarkerMissing",
            VerdictKind::NumericalError => "NumericalError",
            VerdictKind::ArgCheckMismatch => "ArgCheckMismatch",
        }
    }
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Classification of a candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    /// Id of the first failing case in manifest order.
    pub failing_case: Option<String>,
    pub detail: String,
    pub max_rel_err: Option<f64>,
}

impl Verdict {
    pub fn pass(max_rel_err: Option<f64>) -> Self {
        Verdict { kind: VerdictKind::Pass, failing_case: None, detail: String::new(), max_rel_err }
    }

    pub fn failed(kind: VerdictKind, detail: impl Into<String>) -> Self {
        Verdict { kind, failing_case: None, detail: detail.into(), max_rel_err: None }
    }

    pub fn is_pass(&self) -> bool {
        self.kind == VerdictKind::Pass
    }
}

/// Outcome of the invalid-argument probe.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "detail")]
pub enum ArgCheck {
    NotRun,
    Ok,
    Mismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub error_model: ErrorModel,
    /// Probe invalid-argument handling (levels 2 and 3).
    pub arg_check: bool,
    /// Turn argument-check mismatches into a failing verdict.
    pub strict_arg_check: bool,
    pub batch_size: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            error_model: ErrorModel::default(),
            arg_check: true,
            strict_arg_check: false,
            batch_size: 64,
        }
    }
}

/// Per-combination pass status.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComboStatus {
    pub combo: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub verdict: Verdict,
    pub combos: Vec<ComboStatus>,
    pub arg_check: ArgCheck,
    pub cases_run: usize,
}

impl VerifyReport {
    /// Whether every case of the combination passed.
    pub fn combo_passed(&self, combo: &str) -> bool {
        self.combos.iter().any(|c| c.combo == combo && c.passed)
    }
}

struct Failure {
    index: usize,
    kind: VerdictKind,
    detail: String,
    err: Option<f64>,
}

/// Verdict for one candidate over `cases` (a manifest in enumeration order).
///
/// Cases run in manifest order. The first failing case of a combination
/// marks it failed and skips the rest of it; a timeout stops the run. The
/// verdict comes from the first failure in manifest order.
pub fn verify_candidate(kernel: &mut dyn Kernel, cases: &[TestCase], opts: &VerifyOptions) -> VerifyReport {
    let mut combo_names: Vec<String> = Vec::new();
    let combo_of: Vec<usize> = cases
        .iter()
        .map(|c| {
            let key = c.combo();
            match combo_names.iter().position(|k| *k == key) {
                Some(i) => i,
                None => {
                    combo_names.push(key);
                    combo_names.len() - 1
                }
            }
        })
        .collect();
    let mut combo_ok = vec![true; combo_names.len()];
    let mut failures: Vec<Failure> = Vec::new();
    let mut arg_mismatch: Option<String> = None;
    let mut max_err = 0.0f64;
    let mut cases_run = 0;
    let mut next = 0;
    let mut aborted = false;
    let tol = opts.error_model.tol_multiplier;

    while next < cases.len() && !aborted {
        let mut batch = Vec::new();
        while next < cases.len() && batch.len() < opts.batch_size.max(1) {
            if combo_ok[combo_of[next]] {
                batch.push(next);
            }
            next += 1;
        }
        if batch.is_empty() {
            break;
        }
        let problems: Vec<Problem> = batch.iter().map(|&i| init_problem(&cases[i])).collect();
        let outcomes = kernel.invoke_batch(&problems);
        let mut consumed = 0;
        for (pos, outcome) in outcomes.iter().enumerate() {
            consumed = pos + 1;
            let i = batch[pos];
            let combo = combo_of[i];
            if !combo_ok[combo] {
                continue;
            }
            cases_run += 1;
            let fail = |kind, detail: String, err| Failure { index: i, kind, detail, err };
            let failure = match outcome {
                CaseOutcome::TimedOut { detail } => {
                    aborted = true;
                    Some(fail(VerdictKind::Timeout, detail.clone(), None))
                }
                CaseOutcome::Crashed { detail } | CaseOutcome::Failed { detail } => {
                    Some(fail(VerdictKind::Crash, detail.clone(), None))
                }
                CaseOutcome::Completed { marker: false, .. } => {
                    Some(fail(VerdictKind::MarkerMissing, "no [gptblas] marker on stdout".into(), None))
                }
                CaseOutcome::Completed { outputs, xerbla, .. } => {
                    let mut f = None;
                    if let Some(call) = xerbla.first() {
                        let detail = format!("xerbla called on valid input: {}", call.record());
                        if arg_mismatch.is_none() {
                            arg_mismatch = Some(format!("{}: {detail}", cases[i].id()));
                        }
                        if opts.strict_arg_check {
                            f = Some(fail(VerdictKind::ArgCheckMismatch, detail, None));
                        }
                    }
                    if f.is_none() {
                        let reference = problems[pos].run_oracle().expect("generated cases are valid");
                        let err = relative_error(outputs, &reference, &problems[pos]);
                        if err > tol || err.is_nan() {
                            f = Some(fail(
                                VerdictKind::NumericalError,
                                format!("relative error {err:.3e} exceeds {tol}"),
                                Some(err),
                            ));
                        } else {
                            max_err = max_err.max(err);
                        }
                    }
                    f
                }
            };
            if let Some(f) = failure {
                combo_ok[combo] = false;
                failures.push(f);
                if aborted {
                    break;
                }
            }
        }
        if consumed < batch.len() && !aborted {
            // execution stopped early: resume right after the last outcome
            next = batch.get(consumed).copied().unwrap_or(next);
            if outcomes.is_empty() {
                let i = batch[0];
                combo_ok[combo_of[i]] = false;
                failures.push(Failure {
                    index: i,
                    kind: VerdictKind::Crash,
                    detail: "kernel returned no outcome".into(),
                    err: None,
                });
                next = i + 1;
            }
        }
    }
    if aborted {
        for ok in combo_ok.iter_mut() {
            *ok = false;
        }
        // cases never reached keep their combos failed but add no verdict
    }

    let arg_check = if opts.arg_check && routine_level(cases) != Some(Level::One) && !aborted {
        match cases.first() {
            Some(c) => probe_arg_check(kernel, c),
            None => ArgCheck::NotRun,
        }
    } else {
        ArgCheck::NotRun
    };
    let arg_check = match (arg_check, arg_mismatch) {
        (ArgCheck::Mismatch(d), _) => ArgCheck::Mismatch(d),
        (_, Some(d)) => ArgCheck::Mismatch(d),
        (a, None) => a,
    };

    let combos = combo_names
        .into_iter()
        .zip(combo_ok)
        .map(|(combo, passed)| ComboStatus { combo, passed })
        .collect();
    failures.sort_by_key(|f| f.index);
    let verdict = match failures.into_iter().next() {
        Some(f) => Verdict {
            kind: f.kind,
            failing_case: Some(cases[f.index].id()),
            detail: f.detail,
            max_rel_err: f.err,
        },
        None => match (&arg_check, opts.strict_arg_check) {
            (ArgCheck::Mismatch(d), true) => Verdict {
                kind: VerdictKind::ArgCheckMismatch,
                failing_case: None,
                detail: d.clone(),
                max_rel_err: None,
            },
            _ => Verdict::pass(Some(max_err)),
        },
    };
    VerifyReport { verdict, combos, arg_check, cases_run }
}

fn routine_level(cases: &[TestCase]) -> Option<Level> {
    cases.first().map(|c| c.routine.level())
}

/// Problem with the first dimension argument set to −1, and the argument
/// position the oracle reports for it. Arrays are sized for the invalid
/// dimensions (minimal storage) and zero-filled; scalars keep the case's values.
pub fn arg_check_probe(case: &TestCase) -> Option<(Problem, i32)> {
    let src = init_problem(case);
    let first = src.routine.signature().iter().find_map(|a| match a {
        Arg::Int(s @ (IntSlot::M | IntSlot::N | IntSlot::K)) => Some(*s),
        _ => None,
    })?;
    let (mut m, mut n, mut k) = (src.m, src.n, src.k);
    match first {
        IntSlot::M => m = -1,
        IntSlot::N => n = -1,
        _ => k = -1,
    }
    let p = Problem {
        alpha: src.alpha,
        beta: src.beta,
        rot_c: src.rot_c,
        rot_s: src.rot_s,
        ..Problem::zeroed(src.routine, src.opts, m, n, k, src.incx, src.incy)
    };
    let info = p.run_oracle().err()?.position() as i32;
    Some((p, info))
}

fn probe_arg_check(kernel: &mut dyn Kernel, case: &TestCase) -> ArgCheck {
    let Some((p, info)) = arg_check_probe(case) else {
        return ArgCheck::NotRun;
    };
    let outcome = kernel.invoke_batch(std::slice::from_ref(&p));
    match outcome.first() {
        Some(CaseOutcome::Completed { xerbla, .. }) if xerbla.iter().any(|x| x.info == info) => ArgCheck::Ok,
        Some(CaseOutcome::Completed { xerbla, .. }) => ArgCheck::Mismatch(match xerbla.first() {
            Some(x) => format!("expected xerbla info {info}, got {}", x.info),
            None => format!("invalid dimension accepted silently (expected xerbla info {info})"),
        }),
        Some(CaseOutcome::Crashed { detail } | CaseOutcome::TimedOut { detail } | CaseOutcome::Failed { detail }) => {
            ArgCheck::Mismatch(format!("probe did not complete: {detail}"))
        }
        None => ArgCheck::Mismatch("probe produced no outcome".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::routine::ArraySlot;
    use crate::testgen::{enumerate_cases, RoutineSpec, SizeProfile};

    fn cases(r: Routine) -> Vec<TestCase> {
        enumerate_cases(&RoutineSpec::of(r), &SizeProfile::default())
    }

    #[test]
    fn growth_examples() {
        let mut p = Problem::zeroed(Routine::Ddot, Default::default(), 0, 100, 0, 1, 1);
        assert_eq!(growth_factor(&p), 100.0);
        p = Problem::zeroed(Routine::Dgemm, Default::default(), 1, 1, 2048, 1, 1);
        assert_eq!(growth_factor(&p), 2048.0);
        p = Problem::zeroed(Routine::Dgemm, Default::default(), 1, 1, 0, 1, 1);
        assert_eq!(growth_factor(&p), 1.0);
    }

    #[test]
    fn identical_outputs_have_zero_error() {
        let p = init_problem(&cases(Routine::Dgemm)[60]);
        let r = p.run_oracle().unwrap();
        assert_eq!(relative_error(&r, &r, &p), 0.0);
    }

    #[test]
    fn non_finite_result_is_infinite_error() {
        let p = init_problem(&cases(Routine::Daxpy)[3]);
        let r = p.run_oracle().unwrap();
        let mut bad = r.clone();
        bad.arrays[0].1[0] = f64::NAN;
        assert_eq!(relative_error(&bad, &r, &p), f64::INFINITY);
    }

    #[test]
    fn oracle_passes_dgemm() {
        let rep = verify_candidate(&mut OracleKernel, &cases(Routine::Dgemm), &VerifyOptions::default());
        assert!(rep.verdict.is_pass(), "{:?}", rep.verdict);
        assert_eq!(rep.arg_check, ArgCheck::Ok);
        assert!(rep.combos.iter().all(|c| c.passed));
    }

    #[test]
    fn perturbation_is_numerical_error() {
        let mut k = FnKernel(|p: &Problem| {
            let Ok(mut o) = p.run_oracle() else { return oracle_outcome(p) };
            for v in o.arrays[0].1.iter_mut() {
                *v *= 1.0 + 1e-3;
            }
            CaseOutcome::Completed { outputs: o, marker: true, xerbla: vec![] }
        });
        let rep = verify_candidate(&mut k, &cases(Routine::Dgemm), &VerifyOptions::default());
        assert_eq!(rep.verdict.kind, VerdictKind::NumericalError);
        assert_eq!(rep.verdict.failing_case.as_deref(), Some("dgemm#0"));
        assert!(rep.verdict.max_rel_err.unwrap() > 3.0);
    }

    #[test]
    fn first_failure_in_manifest_order_wins() {
        // crash on one case of the second combo, wrong answer on a later case of the first
        let mut k = FnKernel(|p: &Problem| {
            if p.incx == 1 && p.incy == 2 && p.n == 7 {
                return CaseOutcome::Crashed { detail: "signal 11".into() };
            }
            let mut o = p.run_oracle().unwrap();
            if p.incx == 1 && p.incy == 1 && p.n == 33 {
                o.arrays[0].1[0] += 1.0;
            }
            CaseOutcome::Completed { outputs: o, marker: true, xerbla: vec![] }
        });
        let c = cases(Routine::Daxpy);
        let rep = verify_candidate(&mut k, &c, &VerifyOptions::default());
        assert_eq!(rep.verdict.kind, VerdictKind::NumericalError);
        assert_eq!(rep.combos.iter().filter(|c| c.passed).count(), 2);
    }

    #[test]
    fn timeout_aborts_and_fails_all_combos() {
        let mut calls = 0;
        let mut k = FnKernel(|p: &Problem| {
            calls += 1;
            if calls == 3 {
                return CaseOutcome::TimedOut { detail: "budget".into() };
            }
            oracle_outcome(p)
        });
        let rep = verify_candidate(&mut k, &cases(Routine::Dsymv), &VerifyOptions::default());
        assert_eq!(rep.verdict.kind, VerdictKind::Timeout);
        assert!(rep.combos.iter().all(|c| !c.passed));
        assert_eq!(rep.arg_check, ArgCheck::NotRun);
        assert_eq!(rep.cases_run, 3);
    }

    #[test]
    fn missing_marker_is_reported() {
        let mut k = FnKernel(|p: &Problem| match oracle_outcome(p) {
            CaseOutcome::Completed { outputs, xerbla, .. } => CaseOutcome::Completed { outputs, marker: false, xerbla },
            o => o,
        });
        let rep = verify_candidate(&mut k, &cases(Routine::Dasum), &VerifyOptions::default());
        assert_eq!(rep.verdict.kind, VerdictKind::MarkerMissing);
    }

    #[test]
    fn silent_arg_acceptance_is_recorded_not_failed() {
        let mut k = FnKernel(|p: &Problem| {
            let outputs = p.run_oracle().unwrap_or_else(|_| p.outputs(None));
            CaseOutcome::Completed { outputs, marker: true, xerbla: vec![] }
        });
        let c = cases(Routine::Dger);
        let rep = verify_candidate(&mut k, &c, &VerifyOptions::default());
        assert!(rep.verdict.is_pass());
        assert!(matches!(rep.arg_check, ArgCheck::Mismatch(_)));
        let strict = VerifyOptions { strict_arg_check: true, ..Default::default() };
        let rep = verify_candidate(&mut k, &c, &strict);
        assert_eq!(rep.verdict.kind, VerdictKind::ArgCheckMismatch);
    }

    #[test]
    fn probe_uses_first_dimension() {
        let (p, info) = arg_check_probe(&cases(Routine::Dgemv)[0]).unwrap();
        assert_eq!((p.m, info), (-1, 2));
        let (p, info) = arg_check_probe(&cases(Routine::Dsyrk)[0]).unwrap();
        assert_eq!((p.n, info), (-1, 3));
        assert!(p.array(ArraySlot::C).len() >= 1);
    }

    #[test]
    fn xerbla_record_round_trip() {
        let x = XerblaCall::parse("XERBLA:DGEMV :2\n").unwrap();
        assert_eq!(x, XerblaCall { name: "DGEMV".into(), info: 2 });
        assert_eq!(x.record(), "XERBLA:DGEMV:2");
        assert!(XerblaCall::parse("noise").is_none());
    }
}
