//! Reference implementations of the twenty double-precision BLAS routines.
//!
//! These are deliberately plain ports of the Fortran reference loops:
//! column-major storage, one accumulator, loop orders as in the reference
//! library and no internal parallelism. Results are therefore bit-for-bit
//! reproducible, which is what lets verdicts be replayed.
//!
//! Every routine takes Fortran-style arguments (signed dimensions, signed
//! increments, leading dimensions) and reports the first illegal argument
//! by its 1-based position, mirroring `xerbla`. Buffers shorter than the
//! dimensions require are also rejected instead of panicking.
//!
//! Non-referenced storage (the opposite triangle of a symmetric or
//! triangular operand, the diagonal of a unit-triangular operand) is never
//! read or written.

mod level1;
mod level2;
mod level3;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use level1::{dasum, daxpy, ddot, dnrm2, drot, drotm, idamax};
pub use level2::{dgemv, dger, dsymv, dsyr, dsyr2, dtrmv, dtrsv};
pub use level3::{dgemm, dsymm, dsyr2k, dsyrk, dtrmm, dtrsm};

/// Argument error reported by an oracle routine.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArgError {
    #[error("** On entry to {routine} parameter number {position} had an illegal value")]
    Illegal { routine: &'static str, position: u32 },
    #[error("{routine}: array argument {position} holds {len} elements, {needed} required")]
    BufferTooShort {
        routine: &'static str,
        position: u32,
        needed: usize,
        len: usize,
    },
}

impl ArgError {
    /// 1-based position of the offending argument (the `info` of `xerbla`).
    pub fn position(&self) -> u32 {
        match self {
            ArgError::Illegal { position, .. } | ArgError::BufferTooShort { position, .. } => {
                *position
            }
        }
    }

    pub fn routine(&self) -> &'static str {
        match self {
            ArgError::Illegal { routine, .. } | ArgError::BufferTooShort { routine, .. } => routine,
        }
    }
}

/// Error for an unrecognised option character.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid {what} character {ch:?}")]
pub struct ParseOptionError {
    pub what: &'static str,
    pub ch: char,
}

macro_rules! option_enum {
    ($(#[$meta:meta])* $name:ident, $what:literal, { $($variant:ident => $ch:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub fn as_char(self) -> char {
                match self {
                    $($name::$variant => $ch),+
                }
            }

            pub fn from_char(c: char) -> Result<Self, ParseOptionError> {
                match c.to_ascii_uppercase() {
                    $($ch => Ok($name::$variant),)+
                    _ => Err(ParseOptionError { what: $what, ch: c }),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.as_char())
            }
        }

        impl FromStr for $name {
            type Err = ParseOptionError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let mut chars = s.trim().chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => $name::from_char(c),
                    _ => Err(ParseOptionError { what: $what, ch: s.chars().next().unwrap_or('\0') }),
                }
            }
        }
    };
}

option_enum!(
    /// `trans`: operate on `A` or `Aᵀ`. Conjugate transpose is not
    /// meaningful for real routines and is rejected.
    Transpose, "trans", { NoTrans => 'N', Trans => 'T' }
);
option_enum!(
    /// `uplo`: which triangle of a symmetric or triangular matrix is stored.
    Triangle, "uplo", { Lower => 'L', Upper => 'U' }
);
option_enum!(
    /// `side`: whether the special matrix multiplies from the left or right.
    Side, "side", { Left => 'L', Right => 'R' }
);
option_enum!(
    /// `diag`: whether a triangular matrix has an implicit unit diagonal.
    DiagKind, "diag", { Unit => 'U', NonUnit => 'N' }
);

/// Cosine/sine pair of a plane rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotParams {
    pub c: f64,
    pub s: f64,
}

/// Modified Givens transformation `H`, encoded as the `dparam` array.
///
/// | flag | H |
/// |------|---|
/// | -2   | identity |
/// | -1   | `[[h11, h12], [h21, h22]]` |
/// |  0   | `[[1, h12], [h21, 1]]` |
/// |  1   | `[[h11, 1], [-1, h22]]` |
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotmParams {
    pub flag: f64,
    pub h11: f64,
    pub h21: f64,
    pub h12: f64,
    pub h22: f64,
}

impl RotmParams {
    pub fn from_array(p: &[f64; 5]) -> Self {
        RotmParams {
            flag: p[0],
            h11: p[1],
            h21: p[2],
            h12: p[3],
            h22: p[4],
        }
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.flag, self.h11, self.h21, self.h12, self.h22]
    }

    /// Full 2×2 matrix with the entries implied by the flag filled in.
    pub fn matrix(self) -> [[f64; 2]; 2] {
        match self.flag {
            f if f == -2.0 => [[1.0, 0.0], [0.0, 1.0]],
            f if f == 0.0 => [[1.0, self.h12], [self.h21, 1.0]],
            f if f == 1.0 => [[self.h11, 1.0], [-1.0, self.h22]],
            _ => [[self.h11, self.h12], [self.h21, self.h22]],
        }
    }
}

/// `alpha`/`beta` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scalars {
    pub alpha: f64,
    pub beta: f64,
}

/// Storage length a strided vector of `n` elements needs.
pub fn vector_len(n: usize, inc: i64) -> usize {
    if n == 0 {
        0
    } else {
        1 + (n - 1) * inc.unsigned_abs() as usize
    }
}

/// Storage length a column-major `rows × cols` matrix with leading dimension `ld` needs.
pub fn matrix_len(rows: usize, cols: usize, ld: usize) -> usize {
    if rows == 0 || cols == 0 {
        0
    } else {
        ld * (cols - 1) + rows
    }
}

/// Offset of logical element `i` (0-based) of an `n`-element strided vector.
///
/// Positive increments walk forward from the start of the buffer; negative
/// increments start at the far end, as in the Fortran interface.
#[inline]
pub fn vector_offset(i: usize, n: usize, inc: i64) -> usize {
    let step = inc.unsigned_abs() as usize;
    if inc > 0 {
        i * step
    } else {
        (n - 1 - i) * step
    }
}

/// Read-only strided view.
#[derive(Debug, Clone, Copy)]
pub struct StridedVector<'a> {
    data: &'a [f64],
    n: usize,
    inc: i64,
}

impl<'a> StridedVector<'a> {
    pub fn new(data: &'a [f64], n: usize, inc: i64) -> Option<Self> {
        (inc != 0 && data.len() >= vector_len(n, inc)).then_some(StridedVector { data, n, inc })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.data[vector_offset(i, self.n, self.inc)]
    }
}

/// Mutable strided view.
#[derive(Debug)]
pub struct StridedVectorMut<'a> {
    data: &'a mut [f64],
    n: usize,
    inc: i64,
}

impl<'a> StridedVectorMut<'a> {
    pub fn new(data: &'a mut [f64], n: usize, inc: i64) -> Option<Self> {
        if inc != 0 && data.len() >= vector_len(n, inc) {
            Some(StridedVectorMut { data, n, inc })
        } else {
            None
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.data[vector_offset(i, self.n, self.inc)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: f64) {
        self.data[vector_offset(i, self.n, self.inc)] = v;
    }
}

/// Read-only column-major view.
#[derive(Debug, Clone, Copy)]
pub struct ColMajorMatrix<'a> {
    data: &'a [f64],
    rows: usize,
    cols: usize,
    ld: usize,
}

impl<'a> ColMajorMatrix<'a> {
    pub fn new(data: &'a [f64], rows: usize, cols: usize, ld: usize) -> Option<Self> {
        (ld >= rows.max(1) && data.len() >= matrix_len(rows, cols, ld))
            .then_some(ColMajorMatrix { data, rows, cols, ld })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i + j * self.ld]
    }
}

/// Mutable column-major view.
#[derive(Debug)]
pub struct ColMajorMatrixMut<'a> {
    data: &'a mut [f64],
    rows: usize,
    cols: usize,
    ld: usize,
}

impl<'a> ColMajorMatrixMut<'a> {
    pub fn new(data: &'a mut [f64], rows: usize, cols: usize, ld: usize) -> Option<Self> {
        if ld >= rows.max(1) && data.len() >= matrix_len(rows, cols, ld) {
            Some(ColMajorMatrixMut { data, rows, cols, ld })
        } else {
            None
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i + j * self.ld]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i + j * self.ld] = v;
    }
}

/// Argument checking shared by the three levels.
pub(crate) struct Check {
    pub routine: &'static str,
}

impl Check {
    fn illegal(&self, position: u32) -> ArgError {
        ArgError::Illegal {
            routine: self.routine,
            position,
        }
    }

    pub fn dim(&self, position: u32, v: i64) -> Result<usize, ArgError> {
        usize::try_from(v).map_err(|_| self.illegal(position))
    }

    pub fn inc(&self, position: u32, v: i64) -> Result<i64, ArgError> {
        if v == 0 {
            Err(self.illegal(position))
        } else {
            Ok(v)
        }
    }

    pub fn ld(&self, position: u32, v: i64, rows: usize) -> Result<usize, ArgError> {
        match usize::try_from(v) {
            Ok(ld) if ld >= rows.max(1) => Ok(ld),
            _ => Err(self.illegal(position)),
        }
    }

    fn short(&self, position: u32, needed: usize, len: usize) -> ArgError {
        ArgError::BufferTooShort {
            routine: self.routine,
            position,
            needed,
            len,
        }
    }

    pub fn vector<'a>(
        &self,
        position: u32,
        data: &'a [f64],
        n: usize,
        inc: i64,
    ) -> Result<StridedVector<'a>, ArgError> {
        let len = data.len();
        StridedVector::new(data, n, inc).ok_or_else(|| self.short(position, vector_len(n, inc), len))
    }

    pub fn vector_mut<'a>(
        &self,
        position: u32,
        data: &'a mut [f64],
        n: usize,
        inc: i64,
    ) -> Result<StridedVectorMut<'a>, ArgError> {
        let len = data.len();
        StridedVectorMut::new(data, n, inc)
            .ok_or_else(|| self.short(position, vector_len(n, inc), len))
    }

    pub fn matrix<'a>(
        &self,
        position: u32,
        data: &'a [f64],
        rows: usize,
        cols: usize,
        ld: usize,
    ) -> Result<ColMajorMatrix<'a>, ArgError> {
        let len = data.len();
        ColMajorMatrix::new(data, rows, cols, ld)
            .ok_or_else(|| self.short(position, matrix_len(rows, cols, ld), len))
    }

    pub fn matrix_mut<'a>(
        &self,
        position: u32,
        data: &'a mut [f64],
        rows: usize,
        cols: usize,
        ld: usize,
    ) -> Result<ColMajorMatrixMut<'a>, ArgError> {
        let len = data.len();
        ColMajorMatrixMut::new(data, rows, cols, ld)
            .ok_or_else(|| self.short(position, matrix_len(rows, cols, ld), len))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn options_parse_case_insensitively() {
        assert_eq!(Transpose::from_char('t').unwrap(), Transpose::Trans);
        assert_eq!(Triangle::from_char('l').unwrap(), Triangle::Lower);
        assert_eq!(Side::from_char('R').unwrap(), Side::Right);
        assert_eq!(DiagKind::from_char('u').unwrap(), DiagKind::Unit);
        assert_eq!("n".parse::<DiagKind>().unwrap(), DiagKind::NonUnit);
    }

    #[test]
    fn conjugate_transpose_is_rejected() {
        assert!(Transpose::from_char('C').is_err());
        assert!(Transpose::from_char('c').is_err());
    }

    #[test]
    fn strided_offsets() {
        // positive stride: element i at i*inc
        assert_eq!(vector_offset(2, 4, 3), 6);
        // negative stride: reversed
        assert_eq!(vector_offset(0, 4, -3), 9);
        assert_eq!(vector_offset(3, 4, -3), 0);
        assert_eq!(vector_len(4, -3), 10);
        assert_eq!(vector_len(0, 2), 0);
    }

    #[test]
    fn matrix_view_rejects_small_ld() {
        let data = vec![0.0; 12];
        assert!(ColMajorMatrix::new(&data, 4, 3, 3).is_none());
        assert!(ColMajorMatrix::new(&data, 4, 3, 4).is_some());
        assert!(ColMajorMatrix::new(&data, 0, 3, 1).is_some());
    }

    #[test]
    fn rotm_matrix_honours_implied_entries() {
        let p = RotmParams { flag: 1.0, h11: 2.0, h21: 9.0, h12: 9.0, h22: 3.0 };
        assert_eq!(p.matrix(), [[2.0, 1.0], [-1.0, 3.0]]);
        let p = RotmParams { flag: 0.0, h11: 9.0, h21: 4.0, h12: 5.0, h22: 9.0 };
        assert_eq!(p.matrix(), [[1.0, 5.0], [4.0, 1.0]]);
    }
}
