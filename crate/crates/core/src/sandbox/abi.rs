//! Pointer-argument calling convention of the generated kernels.
//!
//! Every argument is passed by address: option characters as a pointer to
//! a NUL-terminated one-character string, integers as 32-bit (or, when
//! configured, 64-bit) signed integers, scalars and arrays as doubles.
//! The oracle is exported through the same convention so that it can be
//! driven by exactly the same marshaling code as a candidate.

use std::ffi::c_void;
use std::io::Write;

use crate::problem::Problem;
use crate::routine::{Arg, IntSlot, ReturnKind, Routine};

type P = *mut c_void;

/// Integer width used for integer arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IntWidth {
    #[default]
    I32,
    I64,
}

/// Backing storage for one marshaled call. The pointers handed out by
/// [`Marshaled::args`] stay valid while this value and the problem live.
pub struct Marshaled {
    chars: Vec<[u8; 2]>,
    ints32: Vec<i32>,
    ints64: Vec<i64>,
    scalars: Vec<f64>,
    order: Vec<Slot>,
}

enum Slot {
    Char(usize),
    Int(usize),
    Scalar(usize),
    Array(crate::routine::ArraySlot),
}

impl Marshaled {
    pub fn new(p: &Problem) -> Self {
        let mut m = Marshaled { chars: Vec::new(), ints32: Vec::new(), ints64: Vec::new(), scalars: Vec::new(), order: Vec::new() };
        for arg in p.routine.signature() {
            let slot = match arg {
                Arg::Char(c) => {
                    m.chars.push([p.opts.get(*c) as u8, 0]);
                    Slot::Char(m.chars.len() - 1)
                }
                Arg::Int(i) => {
                    let v = p.int(*i);
                    m.ints32.push(v as i32);
                    m.ints64.push(v);
                    Slot::Int(m.ints32.len() - 1)
                }
                Arg::Scalar(s) => {
                    m.scalars.push(p.scalar(*s));
                    Slot::Scalar(m.scalars.len() - 1)
                }
                Arg::Array(a, _) => Slot::Array(*a),
            };
            m.order.push(slot);
        }
        m
    }

    /// Argument pointers in signature order.
    pub fn args(&mut self, p: &mut Problem, width: IntWidth) -> Vec<P> {
        let mut out = Vec::with_capacity(self.order.len());
        for slot in &self.order {
            let ptr: P = match slot {
                Slot::Char(i) => self.chars[*i].as_mut_ptr().cast(),
                Slot::Int(i) => match width {
                    IntWidth::I32 => (&mut self.ints32[*i] as *mut i32).cast(),
                    IntWidth::I64 => (&mut self.ints64[*i] as *mut i64).cast(),
                },
                Slot::Scalar(i) => (&mut self.scalars[*i] as *mut f64).cast(),
                Slot::Array(a) => p.array_mut(*a).as_mut_ptr().cast(),
            };
            out.push(ptr);
        }
        out
    }
}

/// Calls `f` with `args` as its pointer arguments.
///
/// # Safety
/// `f` must point to a C function taking exactly `args.len()` pointer
/// arguments and returning `R`, and every pointer must be valid for it.
pub unsafe fn call_pointer_fn<R>(f: *const c_void, args: &[P]) -> R {
    macro_rules! go {
        ($($i:literal)*) => {{
            let g: unsafe extern "C" fn($(go!(@p $i)),*) -> R = std::mem::transmute(f);
            g($(args[$i]),*)
        }};
        (@p $i:literal) => { P };
    }
    match args.len() {
        3 => go!(0 1 2),
        4 => go!(0 1 2 3),
        5 => go!(0 1 2 3 4),
        6 => go!(0 1 2 3 4 5),
        7 => go!(0 1 2 3 4 5 6),
        8 => go!(0 1 2 3 4 5 6 7),
        9 => go!(0 1 2 3 4 5 6 7 8),
        10 => go!(0 1 2 3 4 5 6 7 8 9),
        11 => go!(0 1 2 3 4 5 6 7 8 9 10),
        12 => go!(0 1 2 3 4 5 6 7 8 9 10 11),
        13 => go!(0 1 2 3 4 5 6 7 8 9 10 11 12),
        n => panic!("unsupported arity {n}"),
    }
}

/// Invokes `f` on `p` (in place) and returns the scalar result, if any.
///
/// # Safety
/// `f` must implement the routine's pointer-argument signature.
pub unsafe fn invoke(f: *const c_void, p: &mut Problem, width: IntWidth) -> Option<f64> {
    let mut m = Marshaled::new(p);
    let args = m.args(p, width);
    match p.routine.return_kind() {
        ReturnKind::Void => {
            call_pointer_fn::<()>(f, &args);
            None
        }
        ReturnKind::Double => Some(call_pointer_fn::<f64>(f, &args)),
        ReturnKind::Int => Some(match width {
            IntWidth::I32 => call_pointer_fn::<i32>(f, &args) as f64,
            IntWidth::I64 => call_pointer_fn::<i64>(f, &args) as f64,
        }),
    }
}

/// Marker every kernel prints at entry.
pub const MARKER: &str = "[gptblas]";

/// Oracle entry point behind the exported symbols: reads the arguments
/// through the pointers, runs the oracle and writes results back.
///
/// # Safety
/// `args` must follow the routine's pointer-argument signature with
/// 32-bit integers, and arrays must be at least their storage length.
unsafe fn oracle_entry(routine: Routine, args: &[P]) -> f64 {
    let sig = routine.signature();
    let mut opts = crate::problem::Options::default();
    let (mut m, mut n, mut k, mut incx, mut incy) = (0i64, 0i64, 0i64, 1i64, 1i64);
    for (arg, ptr) in sig.iter().zip(args) {
        match arg {
            Arg::Char(c) => {
                let ch = *(*ptr as *const u8) as char;
                // invalid characters surface as an argument error below
                let _ = opts.set(*c, ch);
            }
            Arg::Int(i) => {
                let v = *(*ptr as *const i32) as i64;
                match i {
                    IntSlot::M => m = v,
                    IntSlot::N => n = v,
                    IntSlot::K => k = v,
                    IntSlot::Incx => incx = v,
                    IntSlot::Incy => incy = v,
                    IntSlot::Lda | IntSlot::Ldb | IntSlot::Ldc => {}
                }
            }
            _ => {}
        }
    }
    let mut p = Problem::zeroed(routine, opts, m, n, k, incx, incy);
    for (arg, ptr) in sig.iter().zip(args) {
        match arg {
            Arg::Scalar(s) => *p.scalar_mut(*s) = *(*ptr as *const f64),
            Arg::Array(a, _) => {
                let dst = p.array_mut(*a);
                let src = std::slice::from_raw_parts(*ptr as *const f64, dst.len());
                dst.copy_from_slice(src);
            }
            _ => {}
        }
    }
    print!("{MARKER}");
    let _ = std::io::stdout().flush();
    match p.apply_oracle() {
        Ok(ret) => {
            for (arg, ptr) in sig.iter().zip(args) {
                if let Arg::Array(a, crate::routine::Intent::InOut) = arg {
                    let src = p.array(*a);
                    std::slice::from_raw_parts_mut(*ptr as *mut f64, src.len()).copy_from_slice(src);
                }
            }
            ret.unwrap_or(0.0)
        }
        Err(e) => {
            eprintln!("XERBLA:{}:{}", e.routine(), e.position());
            0.0
        }
    }
}

macro_rules! export {
    ($($name:ident => $routine:ident, $kind:ident, [$($a:ident)*];)*) => {
        $(
            #[allow(clippy::too_many_arguments)]
            unsafe extern "C" fn $name($($a: P),*) -> export!(@ret $kind) {
                let r = oracle_entry(Routine::$routine, &[$($a),*]);
                export!(@conv $kind, r)
            }
        )*

        /// Address of the oracle's export for `routine`.
        pub fn oracle_symbol(routine: Routine) -> *const c_void {
            match routine {
                $(Routine::$routine => $name as *const c_void,)*
            }
        }
    };
    (@ret void) => { () };
    (@ret double) => { f64 };
    (@ret int) => { i32 };
    (@conv void, $r:expr) => { { let _ = $r; } };
    (@conv double, $r:expr) => { $r };
    (@conv int, $r:expr) => { $r as i32 };
}

export! {
    oracle_dasum => Dasum, double, [a0 a1 a2];
    oracle_daxpy => Daxpy, void, [a0 a1 a2 a3 a4 a5];
    oracle_ddot => Ddot, double, [a0 a1 a2 a3 a4];
    oracle_idamax => Idamax, int, [a0 a1 a2];
    oracle_dnrm2 => Dnrm2, double, [a0 a1 a2];
    oracle_drot => Drot, void, [a0 a1 a2 a3 a4 a5 a6];
    oracle_drotm => Drotm, void, [a0 a1 a2 a3 a4 a5];
    oracle_dgemv => Dgemv, void, [a0 a1 a2 a3 a4 a5 a6 a7 a8 a9 a10];
    oracle_dger => Dger, void, [a0 a1 a2 a3 a4 a5 a6 a7 a8];
    oracle_dsymv => Dsymv, void, [a0 a1 a2 a3 a4 a5 a6 a7 a8 a9];
    oracle_dsyr => Dsyr, void, [a0 a1 a2 a3 a4 a5 a6];
    oracle_dsyr2 => Dsyr2, void, [a0 a1 a2 a3 a4 a5 a6 a7 a8];
    oracle_dtrmv => Dtrmv, void, [a0 a1 a2 a3 a4 a5 a6 a7];
    oracle_dtrsv => Dtrsv, void, [a0 a1 a2 a3 a4 a5 a6 a7];
    oracle_dgemm => Dgemm, void, [a0 a1 a2 a3 a4 a5 a6 a7 a8 a9 a10 a11 a12];
    oracle_dsymm => Dsymm, void, [a0 a1 a2 a3 a4 a5 a6 a7 a8 a9 a10 a11];
    oracle_dsyrk => Dsyrk, void, [a0 a1 a2 a3 a4 a5 a6 a7 a8 a9];
    oracle_dsyr2k => Dsyr2k, void, [a0 a1 a2 a3 a4 a5 a6 a7 a8 a9 a10 a11];
    oracle_dtrmm => Dtrmm, void, [a0 a1 a2 a3 a4 a5 a6 a7 a8 a9 a10];
    oracle_dtrsm => Dtrsm, void, [a0 a1 a2 a3 a4 a5 a6 a7 a8 a9 a10];
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testgen::{enumerate_cases, init_problem, RoutineSpec, SizeProfile};

    #[test]
    fn arity_matches_signature() {
        for r in Routine::ALL {
            let n = r.signature().len();
            assert!((3..=13).contains(&n), "{r}: {n}");
        }
    }

    #[test]
    fn oracle_export_round_trip_is_bit_exact() {
        for r in Routine::ALL {
            let cases = enumerate_cases(&RoutineSpec::of(r), &SizeProfile::small());
            for c in cases.iter().step_by(3) {
                let mut p = init_problem(c);
                let direct = p.run_oracle().unwrap();
                let ret = unsafe { invoke(oracle_symbol(r), &mut p, IntWidth::I32) };
                assert!(p.outputs(ret).bit_eq(&direct), "{}", c.id());
            }
        }
    }
}
