//! Oracle self-test: agreement with the dense evaluator on the full
//! default matrix, and poison tests for every triangle/diagonal routine.

use std::io::{self, Write};

use crate::dense;
use crate::oracle::{DiagKind, Triangle};
use crate::problem::{Outputs, Problem};
use crate::routine::{ArraySlot, Axis, Routine};
use crate::testgen::{enumerate_cases, init_problem, RoutineSpec, SizeProfile, TestCase};
use crate::verifier::{relative_error, ErrorModel};

/// Value written into storage a routine must not reference.
pub const POISON: f64 = 1e30;

/// Test-only corruption of the oracle's results for one routine, used to
/// prove the self-test can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fault {
    pub routine: Routine,
}

impl Fault {
    fn apply(&self, p: &Problem, out: &mut Outputs) {
        if p.routine != self.routine {
            return;
        }
        if let Some(r) = out.ret.as_mut() {
            *r = *r * (1.0 + 1e-3) + 1.0;
        }
        for (_, v) in out.arrays.iter_mut() {
            for x in v.iter_mut() {
                *x = *x * (1.0 + 1e-3) + 1e-3;
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SelftestOptions {
    pub profile: Option<SizeProfile>,
    pub routines: Option<Vec<Routine>>,
    pub fault: Option<Fault>,
    pub error_model: ErrorModel,
}

/// Per-routine summary.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutineResult {
    pub routine: Routine,
    pub cases: usize,
    pub max_rel_err: f64,
    pub poison_cases: usize,
    /// Ids of failing cases, in manifest order.
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestReport {
    pub routines: Vec<RoutineResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.routines.iter().all(|r| r.failures.is_empty())
    }

    pub fn first_failure(&self) -> Option<&str> {
        self.routines.iter().flat_map(|r| r.failures.first()).next().map(String::as_str)
    }

    pub fn write_text(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(w, "{:<8} {:>6} {:>12} {:>7}  status", "routine", "cases", "max_rel_err", "poison")?;
        for r in &self.routines {
            let status = match r.failures.first() {
                None => "ok".to_string(),
                Some(f) => format!("FAIL {f} ({} failing)", r.failures.len()),
            };
            writeln!(
                w,
                "{:<8} {:>6} {:>12.3e} {:>7}  {status}",
                r.routine.name(),
                r.cases,
                r.max_rel_err,
                r.poison_cases
            )?;
        }
        Ok(())
    }
}

/// Oracle outputs for `p`, with the fault (if any) applied.
fn oracle_outputs(p: &Problem, fault: Option<Fault>) -> Outputs {
    let mut out = p.run_oracle().expect("generated cases are valid");
    if let Some(f) = fault {
        f.apply(p, &mut out);
    }
    out
}

/// Oracle vs dense evaluator on one case.
pub fn equivalence_error(case: &TestCase, fault: Option<Fault>) -> f64 {
    let p = init_problem(case);
    let o = oracle_outputs(&p, fault);
    relative_error(&o, &dense::evaluate(&p), &p)
}

/// Storage positions of an operand the routine must not read (and, for
/// outputs, must not write) under the case's uplo/diag.
pub fn unreferenced(p: &Problem) -> Vec<(ArraySlot, usize)> {
    use Routine::*;
    let slot = match p.routine {
        Dsymv | Dsyr | Dsyr2 | Dtrmv | Dtrsv | Dsymm | Dtrmm | Dtrsm => ArraySlot::A,
        Dsyrk | Dsyr2k => ArraySlot::C,
        _ => return Vec::new(),
    };
    let (rows, cols) = p.matrix_dims(slot);
    let ld = p.ld(slot);
    let unit = p.routine.axes().contains(&Axis::Diag) && p.opts.diag == DiagKind::Unit;
    let mut out = Vec::new();
    for j in 0..cols {
        for i in 0..rows {
            let outside = match p.opts.uplo {
                Triangle::Upper => i > j,
                Triangle::Lower => i < j,
            };
            if outside || (unit && i == j) {
                out.push((slot, i + j * ld));
            }
        }
    }
    out
}

/// Runs the oracle on clean and poisoned copies of the case. Returns a
/// description of the first discrepancy.
pub fn poison_check(case: &TestCase) -> Result<usize, String> {
    let clean = init_problem(case);
    let spots = unreferenced(&clean);
    if spots.is_empty() {
        return Ok(0);
    }
    let mut poisoned = clean.clone();
    for &(slot, i) in &spots {
        poisoned.array_mut(slot)[i] = POISON;
    }
    let a = clean.run_oracle().map_err(|e| e.to_string())?;
    let b = poisoned.run_oracle().map_err(|e| e.to_string())?;
    if a.ret.map(f64::to_bits) != b.ret.map(f64::to_bits) {
        return Err(format!("{}: return value changed under poison", case.id()));
    }
    for ((slot, va), (_, vb)) in a.arrays.iter().zip(&b.arrays) {
        for (i, (x, y)) in va.iter().zip(vb).enumerate() {
            let is_poisoned = spots.contains(&(*slot, i));
            let ok = if is_poisoned {
                // untouched in both runs
                y.to_bits() == POISON.to_bits() && x.to_bits() == clean.array(*slot)[i].to_bits()
            } else {
                x.to_bits() == y.to_bits()
            };
            if !ok {
                return Err(format!("{}: {}[{i}] differs under poison", case.id(), slot.name()));
            }
        }
    }
    // inputs that are not outputs must also be left alone
    Ok(1)
}

/// Runs the self-test over the selected routines.
pub fn run(opts: &SelftestOptions) -> SelftestReport {
    let profile = opts.profile.clone().unwrap_or_default();
    let routines = opts.routines.clone().unwrap_or_else(|| Routine::ALL.to_vec());
    let tol = opts.error_model.tol_multiplier;
    let results = routines
        .into_iter()
        .map(|routine| {
            let cases = enumerate_cases(&RoutineSpec::of(routine), &profile);
            let mut max_rel_err = 0.0f64;
            let mut failures = Vec::new();
            let mut poison_cases = 0;
            for case in &cases {
                let err = equivalence_error(case, opts.fault);
                if err > tol || err.is_nan() {
                    failures.push(format!("{} (rel err {err:.3e})", case.id()));
                } else {
                    max_rel_err = max_rel_err.max(err);
                }
                match poison_check(case) {
                    Ok(n) => poison_cases += n,
                    Err(e) => failures.push(e),
                }
            }
            RoutineResult { routine, cases: cases.len(), max_rel_err, poison_cases, failures }
        })
        .collect();
    SelftestReport { routines: results }
}

/// Deterministic binary record of oracle calls for diffing against other
/// implementations: per case, a length-prefixed (u64 LE) input case file
/// followed by a length-prefixed output case file.
pub fn conformance_dump(cases: &[TestCase], w: &mut dyn Write) -> io::Result<()> {
    for case in cases {
        let mut p = init_problem(case);
        let input = crate::sandbox::casefile::encode_input(&p);
        let ret = p.apply_oracle().map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e.to_string()))?;
        let output = crate::sandbox::casefile::encode_output(&p, ret);
        for rec in [input, output] {
            w.write_all(&(rec.len() as u64).to_le_bytes())?;
            w.write_all(&rec)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_diagonal_is_poisoned() {
        let cases = enumerate_cases(&RoutineSpec::of(Routine::Dtrmv), &SizeProfile::default());
        let c = cases.iter().find(|c| c.options().diag == DiagKind::Unit && c.dims.n == 3).unwrap();
        // 3 strictly opposite + 3 diagonal
        assert_eq!(unreferenced(&init_problem(c)).len(), 6);
    }

    #[test]
    fn fault_is_detected() {
        let opts = SelftestOptions {
            profile: Some(SizeProfile::small()),
            routines: Some(vec![Routine::Ddot, Routine::Dsyrk]),
            fault: Some(Fault { routine: Routine::Dsyrk }),
            ..Default::default()
        };
        let r = run(&opts);
        assert!(!r.passed());
        assert!(r.routines[0].failures.is_empty());
        assert!(r.first_failure().unwrap().starts_with("dsyrk#"));
    }

    #[test]
    fn conformance_dump_is_stable_and_decodable() {
        let cases = enumerate_cases(&RoutineSpec::of(Routine::Dgemv), &SizeProfile::small());
        let (mut a, mut b) = (Vec::new(), Vec::new());
        conformance_dump(&cases[..4], &mut a).unwrap();
        conformance_dump(&cases[..4], &mut b).unwrap();
        assert_eq!(a, b);
        let len = u64::from_le_bytes(a[..8].try_into().unwrap()) as usize;
        let p = crate::sandbox::casefile::decode_input(&a[8..8 + len]).unwrap();
        assert_eq!(p.routine, Routine::Dgemv);
        let rest = &a[8 + len..];
        let olen = u64::from_le_bytes(rest[..8].try_into().unwrap()) as usize;
        let out = crate::sandbox::casefile::decode_output(&rest[8..8 + olen], &p).unwrap();
        assert!(out.bit_eq(&p.run_oracle().unwrap()));
    }
}
