//! Identity, level and calling signature of the twenty target routines.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// BLAS level of a routine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    One = 1,
    Two = 2,
    Three = 3,
}

impl Level {
    pub fn number(self) -> u8 {
        self as u8
    }
}

/// The twenty double-precision routines, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Routine {
    Dasum,
    Daxpy,
    Ddot,
    Idamax,
    Dnrm2,
    Drot,
    Drotm,
    Dgemv,
    Dger,
    Dsymv,
    Dsyr,
    Dsyr2,
    Dtrmv,
    Dtrsv,
    Dgemm,
    Dsymm,
    Dsyrk,
    Dsyr2k,
    Dtrmm,
    Dtrsm,
}

/// Character-valued argument slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CharSlot {
    /// `trans` / `transa`.
    Trans,
    TransB,
    Side,
    Uplo,
    Diag,
}

/// Integer-valued argument slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IntSlot {
    M,
    N,
    K,
    Lda,
    Ldb,
    Ldc,
    Incx,
    Incy,
}

/// Scalar floating-point argument slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalarSlot {
    Alpha,
    Beta,
    /// Cosine of `drot`.
    C,
    /// Sine of `drot`.
    S,
}

/// Array argument slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArraySlot {
    X,
    Y,
    A,
    B,
    C,
    /// The five-element `dparam` array of `drotm`.
    Param,
}

impl ArraySlot {
    pub fn name(self) -> &'static str {
        match self {
            ArraySlot::X => "x",
            ArraySlot::Y => "y",
            ArraySlot::A => "a",
            ArraySlot::B => "b",
            ArraySlot::C => "c",
            ArraySlot::Param => "param",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Intent {
    In,
    InOut,
}

/// One positional argument of the Fortran-style interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arg {
    Char(CharSlot),
    Int(IntSlot),
    Scalar(ScalarSlot),
    Array(ArraySlot, Intent),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReturnKind {
    Void,
    Double,
    Int,
}

/// A parameter axis of the test matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    Trans,
    TransA,
    TransB,
    Side,
    Uplo,
    Diag,
    Incx,
    Incy,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Trans => "trans",
            Axis::TransA => "transa",
            Axis::TransB => "transb",
            Axis::Side => "side",
            Axis::Uplo => "uplo",
            Axis::Diag => "diag",
            Axis::Incx => "incx",
            Axis::Incy => "incy",
        }
    }

    pub fn is_stride(self) -> bool {
        matches!(self, Axis::Incx | Axis::Incy)
    }

    /// Character values admitted by the default test matrix (no `'C'`).
    pub fn char_values(self) -> &'static [u8] {
        match self {
            Axis::Trans | Axis::TransA | Axis::TransB => b"NT",
            Axis::Side => b"LR",
            Axis::Uplo => b"LU",
            Axis::Diag => b"NU",
            Axis::Incx | Axis::Incy => b"",
        }
    }

    /// The character slot this axis binds, for non-stride axes.
    pub fn slot(self) -> Option<CharSlot> {
        match self {
            Axis::Trans | Axis::TransA => Some(CharSlot::Trans),
            Axis::TransB => Some(CharSlot::TransB),
            Axis::Side => Some(CharSlot::Side),
            Axis::Uplo => Some(CharSlot::Uplo),
            Axis::Diag => Some(CharSlot::Diag),
            Axis::Incx | Axis::Incy => None,
        }
    }
}

/// Which problem dimensions a routine consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DimUse {
    pub m: bool,
    pub n: bool,
    pub k: bool,
}

use Arg::{Array, Char, Int, Scalar};
use ArraySlot as A;
use CharSlot as Ch;
use IntSlot as I;
use Intent::{In, InOut};
use ScalarSlot as S;

impl Routine {
    pub const ALL: [Routine; 20] = [
        Routine::Dasum,
        Routine::Daxpy,
        Routine::Ddot,
        Routine::Idamax,
        Routine::Dnrm2,
        Routine::Drot,
        Routine::Drotm,
        Routine::Dgemv,
        Routine::Dger,
        Routine::Dsymv,
        Routine::Dsyr,
        Routine::Dsyr2,
        Routine::Dtrmv,
        Routine::Dtrsv,
        Routine::Dgemm,
        Routine::Dsymm,
        Routine::Dsyrk,
        Routine::Dsyr2k,
        Routine::Dtrmm,
        Routine::Dtrsm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Routine::Dasum => "dasum",
            Routine::Daxpy => "daxpy",
            Routine::Ddot => "ddot",
            Routine::Idamax => "idamax",
            Routine::Dnrm2 => "dnrm2",
            Routine::Drot => "drot",
            Routine::Drotm => "drotm",
            Routine::Dgemv => "dgemv",
            Routine::Dger => "dger",
            Routine::Dsymv => "dsymv",
            Routine::Dsyr => "dsyr",
            Routine::Dsyr2 => "dsyr2",
            Routine::Dtrmv => "dtrmv",
            Routine::Dtrsv => "dtrsv",
            Routine::Dgemm => "dgemm",
            Routine::Dsymm => "dsymm",
            Routine::Dsyrk => "dsyrk",
            Routine::Dsyr2k => "dsyr2k",
            Routine::Dtrmm => "dtrmm",
            Routine::Dtrsm => "dtrsm",
        }
    }

    /// Stable numeric id used by the case-file protocol (1-based table order).
    pub fn id(self) -> u32 {
        Routine::ALL.iter().position(|&r| r == self).unwrap() as u32 + 1
    }

    pub fn from_id(id: u32) -> Option<Routine> {
        (id as usize).checked_sub(1).and_then(|i| Routine::ALL.get(i).copied())
    }

    pub fn level(self) -> Level {
        match self.id() {
            1..=7 => Level::One,
            8..=14 => Level::Two,
            _ => Level::Three,
        }
    }

    /// Exported symbol a candidate must define.
    pub fn entry_symbol(self) -> String {
        format!("GPTBLAS_{}", self.name())
    }

    /// Parameter axes, in the order the test matrix enumerates them.
    pub fn axes(self) -> &'static [Axis] {
        use Axis::*;
        match self {
            Routine::Dasum | Routine::Idamax | Routine::Dnrm2 => &[Incx],
            Routine::Daxpy | Routine::Ddot | Routine::Drot | Routine::Drotm => &[Incx, Incy],
            Routine::Dgemv => &[Trans, Incx, Incy],
            Routine::Dger => &[Incx, Incy],
            Routine::Dsymv | Routine::Dsyr2 => &[Uplo, Incx, Incy],
            Routine::Dsyr => &[Uplo, Incx],
            Routine::Dtrmv | Routine::Dtrsv => &[Uplo, Trans, Diag, Incx],
            Routine::Dgemm => &[TransA, TransB],
            Routine::Dsymm => &[Side, Uplo],
            Routine::Dsyrk | Routine::Dsyr2k => &[Uplo, Trans],
            Routine::Dtrmm | Routine::Dtrsm => &[Side, Uplo, Trans, Diag],
        }
    }

    pub fn dims(self) -> DimUse {
        let (m, n, k) = match self {
            Routine::Dgemv | Routine::Dger => (true, true, false),
            Routine::Dgemm => (true, true, true),
            Routine::Dsymm | Routine::Dtrmm | Routine::Dtrsm => (true, true, false),
            Routine::Dsyrk | Routine::Dsyr2k => (false, true, true),
            _ => (false, true, false),
        };
        DimUse { m, n, k }
    }

    pub fn return_kind(self) -> ReturnKind {
        match self {
            Routine::Dasum | Routine::Ddot | Routine::Dnrm2 => ReturnKind::Double,
            Routine::Idamax => ReturnKind::Int,
            _ => ReturnKind::Void,
        }
    }

    /// Positional arguments of the Fortran interface.
    pub fn signature(self) -> &'static [Arg] {
        match self {
            Routine::Dasum | Routine::Idamax | Routine::Dnrm2 => {
                &[Int(I::N), Array(A::X, In), Int(I::Incx)]
            }
            Routine::Daxpy => &[
                Int(I::N),
                Scalar(S::Alpha),
                Array(A::X, In),
                Int(I::Incx),
                Array(A::Y, InOut),
                Int(I::Incy),
            ],
            Routine::Ddot => &[
                Int(I::N),
                Array(A::X, In),
                Int(I::Incx),
                Array(A::Y, In),
                Int(I::Incy),
            ],
            Routine::Drot => &[
                Int(I::N),
                Array(A::X, InOut),
                Int(I::Incx),
                Array(A::Y, InOut),
                Int(I::Incy),
                Scalar(S::C),
                Scalar(S::S),
            ],
            Routine::Drotm => &[
                Int(I::N),
                Array(A::X, InOut),
                Int(I::Incx),
                Array(A::Y, InOut),
                Int(I::Incy),
                Array(A::Param, In),
            ],
            Routine::Dgemv => &[
                Char(Ch::Trans),
                Int(I::M),
                Int(I::N),
                Scalar(S::Alpha),
                Array(A::A, In),
                Int(I::Lda),
                Array(A::X, In),
                Int(I::Incx),
                Scalar(S::Beta),
                Array(A::Y, InOut),
                Int(I::Incy),
            ],
            Routine::Dger => &[
                Int(I::M),
                Int(I::N),
                Scalar(S::Alpha),
                Array(A::X, In),
                Int(I::Incx),
                Array(A::Y, In),
                Int(I::Incy),
                Array(A::A, InOut),
                Int(I::Lda),
            ],
            Routine::Dsymv => &[
                Char(Ch::Uplo),
                Int(I::N),
                Scalar(S::Alpha),
                Array(A::A, In),
                Int(I::Lda),
                Array(A::X, In),
                Int(I::Incx),
                Scalar(S::Beta),
                Array(A::Y, InOut),
                Int(I::Incy),
            ],
            Routine::Dsyr => &[
                Char(Ch::Uplo),
                Int(I::N),
                Scalar(S::Alpha),
                Array(A::X, In),
                Int(I::Incx),
                Array(A::A, InOut),
                Int(I::Lda),
            ],
            Routine::Dsyr2 => &[
                Char(Ch::Uplo),
                Int(I::N),
                Scalar(S::Alpha),
                Array(A::X, In),
                Int(I::Incx),
                Array(A::Y, In),
                Int(I::Incy),
                Array(A::A, InOut),
                Int(I::Lda),
            ],
            Routine::Dtrmv | Routine::Dtrsv => &[
                Char(Ch::Uplo),
                Char(Ch::Trans),
                Char(Ch::Diag),
                Int(I::N),
                Array(A::A, In),
                Int(I::Lda),
                Array(A::X, InOut),
                Int(I::Incx),
            ],
            Routine::Dgemm => &[
                Char(Ch::Trans),
                Char(Ch::TransB),
                Int(I::M),
                Int(I::N),
                Int(I::K),
                Scalar(S::Alpha),
                Array(A::A, In),
                Int(I::Lda),
                Array(A::B, In),
                Int(I::Ldb),
                Scalar(S::Beta),
                Array(A::C, InOut),
                Int(I::Ldc),
            ],
            Routine::Dsymm => &[
                Char(Ch::Side),
                Char(Ch::Uplo),
                Int(I::M),
                Int(I::N),
                Scalar(S::Alpha),
                Array(A::A, In),
                Int(I::Lda),
                Array(A::B, In),
                Int(I::Ldb),
                Scalar(S::Beta),
                Array(A::C, InOut),
                Int(I::Ldc),
            ],
            Routine::Dsyrk => &[
                Char(Ch::Uplo),
                Char(Ch::Trans),
                Int(I::N),
                Int(I::K),
                Scalar(S::Alpha),
                Array(A::A, In),
                Int(I::Lda),
                Scalar(S::Beta),
                Array(A::C, InOut),
                Int(I::Ldc),
            ],
            Routine::Dsyr2k => &[
                Char(Ch::Uplo),
                Char(Ch::Trans),
                Int(I::N),
                Int(I::K),
                Scalar(S::Alpha),
                Array(A::A, In),
                Int(I::Lda),
                Array(A::B, In),
                Int(I::Ldb),
                Scalar(S::Beta),
                Array(A::C, InOut),
                Int(I::Ldc),
            ],
            Routine::Dtrmm | Routine::Dtrsm => &[
                Char(Ch::Side),
                Char(Ch::Uplo),
                Char(Ch::Trans),
                Char(Ch::Diag),
                Int(I::M),
                Int(I::N),
                Scalar(S::Alpha),
                Array(A::A, In),
                Int(I::Lda),
                Array(A::B, InOut),
                Int(I::Ldb),
            ],
        }
    }

    /// Array slots written by the routine, in signature order.
    pub fn outputs(self) -> impl Iterator<Item = ArraySlot> {
        self.signature().iter().filter_map(|arg| match arg {
            Array(slot, InOut) => Some(*slot),
            _ => None,
        })
    }

    /// Routines whose result depends on a stored triangle or diagonal kind.
    pub fn uses_triangle(self) -> bool {
        self.axes().iter().any(|a| matches!(a, Axis::Uplo))
    }

    /// Triangular solves, which get a conditioning allowance.
    pub fn is_solve(self) -> bool {
        matches!(self, Routine::Dtrsv | Routine::Dtrsm)
    }
}

impl fmt::Display for Routine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown routine `{0}`")]
pub struct UnknownRoutine(pub String);

impl FromStr for Routine {
    type Err = UnknownRoutine;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Routine::ALL
            .iter()
            .copied()
            .find(|r| r.name() == lower)
            .ok_or_else(|| UnknownRoutine(s.to_string()))
    }
}
