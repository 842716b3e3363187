//! A fully bound invocation of one routine: options, dimensions, strides,
//! scalars and operand buffers, plus the dispatch onto the oracle.

use crate::oracle::{self, ArgError, DiagKind, RotParams, RotmParams, Side, Transpose, Triangle};
use crate::routine::{ArraySlot, CharSlot, IntSlot, Routine, ScalarSlot};

/// Option characters of a call. Slots a routine does not use keep their defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Options {
    pub trans: Transpose,
    pub transb: Transpose,
    pub side: Side,
    pub uplo: Triangle,
    pub diag: DiagKind,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            trans: Transpose::NoTrans,
            transb: Transpose::NoTrans,
            side: Side::Left,
            uplo: Triangle::Upper,
            diag: DiagKind::NonUnit,
        }
    }
}

impl Options {
    pub fn get(&self, slot: CharSlot) -> char {
        match slot {
            CharSlot::Trans => self.trans.as_char(),
            CharSlot::TransB => self.transb.as_char(),
            CharSlot::Side => self.side.as_char(),
            CharSlot::Uplo => self.uplo.as_char(),
            CharSlot::Diag => self.diag.as_char(),
        }
    }

    pub fn set(&mut self, slot: CharSlot, c: char) -> Result<(), oracle::ParseOptionError> {
        match slot {
            CharSlot::Trans => self.trans = Transpose::from_char(c)?,
            CharSlot::TransB => self.transb = Transpose::from_char(c)?,
            CharSlot::Side => self.side = Side::from_char(c)?,
            CharSlot::Uplo => self.uplo = Triangle::from_char(c)?,
            CharSlot::Diag => self.diag = DiagKind::from_char(c)?,
        }
        Ok(())
    }
}

/// Storage shape of one array operand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Vector { n: usize, inc: i64 },
    Matrix { rows: usize, cols: usize, ld: usize },
    Fixed(usize),
}

impl Shape {
    /// Number of `f64` elements allocated for the operand (never zero, so
    /// every operand has a valid address to hand to foreign code).
    pub fn storage_len(self) -> usize {
        let len = match self {
            Shape::Vector { n, inc } => oracle::vector_len(n, inc),
            Shape::Matrix { cols, ld, .. } => ld * cols,
            Shape::Fixed(len) => len,
        };
        len.max(1)
    }
}

/// Values returned by a call: the scalar result (if any) and every
/// written array, in signature order.
#[derive(Debug, Clone, PartialEq)]
pub struct Outputs {
    pub ret: Option<f64>,
    pub arrays: Vec<(ArraySlot, Vec<f64>)>,
}

impl Outputs {
    pub fn array(&self, slot: ArraySlot) -> Option<&[f64]> {
        self.arrays.iter().find(|(s, _)| *s == slot).map(|(_, v)| v.as_slice())
    }

    /// Bitwise equality, NaN payloads included.
    pub fn bit_eq(&self, other: &Outputs) -> bool {
        let same = |a: &[f64], b: &[f64]| {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
        };
        self.ret.map(f64::to_bits) == other.ret.map(f64::to_bits)
            && self.arrays.len() == other.arrays.len()
            && self
                .arrays
                .iter()
                .zip(&other.arrays)
                .all(|((s1, a), (s2, b))| s1 == s2 && same(a, b))
    }
}

/// One bound call of a routine.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub routine: Routine,
    pub opts: Options,
    pub m: i64,
    pub n: i64,
    pub k: i64,
    pub incx: i64,
    pub incy: i64,
    pub alpha: f64,
    pub beta: f64,
    /// Cosine of `drot`.
    pub rot_c: f64,
    /// Sine of `drot`.
    pub rot_s: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub param: Vec<f64>,
}

fn clamp(v: i64) -> usize {
    v.max(0) as usize
}

impl Problem {
    /// A problem with every operand allocated to its storage length and zero-filled.
    #[allow(clippy::too_many_arguments)]
    pub fn zeroed(routine: Routine, opts: Options, m: i64, n: i64, k: i64, incx: i64, incy: i64) -> Self {
        let mut p = Problem {
            routine,
            opts,
            m,
            n,
            k,
            incx,
            incy,
            alpha: 0.0,
            beta: 0.0,
            rot_c: 0.0,
            rot_s: 0.0,
            x: Vec::new(),
            y: Vec::new(),
            a: Vec::new(),
            b: Vec::new(),
            c: Vec::new(),
            param: Vec::new(),
        };
        for slot in p.array_slots() {
            let len = p.shape(slot).storage_len();
            *p.array_mut(slot) = vec![0.0; len];
        }
        p
    }

    pub fn int(&self, slot: IntSlot) -> i64 {
        match slot {
            IntSlot::M => self.m,
            IntSlot::N => self.n,
            IntSlot::K => self.k,
            IntSlot::Incx => self.incx,
            IntSlot::Incy => self.incy,
            IntSlot::Lda => self.ld(ArraySlot::A) as i64,
            IntSlot::Ldb => self.ld(ArraySlot::B) as i64,
            IntSlot::Ldc => self.ld(ArraySlot::C) as i64,
        }
    }

    pub fn scalar(&self, slot: ScalarSlot) -> f64 {
        match slot {
            ScalarSlot::Alpha => self.alpha,
            ScalarSlot::Beta => self.beta,
            ScalarSlot::C => self.rot_c,
            ScalarSlot::S => self.rot_s,
        }
    }

    pub fn scalar_mut(&mut self, slot: ScalarSlot) -> &mut f64 {
        match slot {
            ScalarSlot::Alpha => &mut self.alpha,
            ScalarSlot::Beta => &mut self.beta,
            ScalarSlot::C => &mut self.rot_c,
            ScalarSlot::S => &mut self.rot_s,
        }
    }

    pub fn array(&self, slot: ArraySlot) -> &Vec<f64> {
        match slot {
            ArraySlot::X => &self.x,
            ArraySlot::Y => &self.y,
            ArraySlot::A => &self.a,
            ArraySlot::B => &self.b,
            ArraySlot::C => &self.c,
            ArraySlot::Param => &self.param,
        }
    }

    pub fn array_mut(&mut self, slot: ArraySlot) -> &mut Vec<f64> {
        match slot {
            ArraySlot::X => &mut self.x,
            ArraySlot::Y => &mut self.y,
            ArraySlot::A => &mut self.a,
            ArraySlot::B => &mut self.b,
            ArraySlot::C => &mut self.c,
            ArraySlot::Param => &mut self.param,
        }
    }

    /// Array slots of the signature, in order.
    pub fn array_slots(&self) -> Vec<ArraySlot> {
        self.routine
            .signature()
            .iter()
            .filter_map(|a| match a {
                crate::routine::Arg::Array(s, _) => Some(*s),
                _ => None,
            })
            .collect()
    }

    /// Order of the square matrix `A` for side-dependent routines.
    fn ka(&self) -> usize {
        match self.opts.side {
            Side::Left => clamp(self.m),
            Side::Right => clamp(self.n),
        }
    }

    /// Logical (rows, cols) of a matrix operand.
    pub fn matrix_dims(&self, slot: ArraySlot) -> (usize, usize) {
        let (m, n, k) = (clamp(self.m), clamp(self.n), clamp(self.k));
        let trans = self.opts.trans == Transpose::Trans;
        use Routine::*;
        match (self.routine, slot) {
            (Dgemv | Dger, ArraySlot::A) => (m, n),
            (Dsymv | Dsyr | Dsyr2 | Dtrmv | Dtrsv, ArraySlot::A) => (n, n),
            (Dgemm, ArraySlot::A) => if trans { (k, m) } else { (m, k) },
            (Dgemm, ArraySlot::B) => {
                if self.opts.transb == Transpose::Trans { (n, k) } else { (k, n) }
            }
            (Dgemm | Dsymm, ArraySlot::C) => (m, n),
            (Dsymm | Dtrmm | Dtrsm, ArraySlot::A) => (self.ka(), self.ka()),
            (Dsymm | Dtrmm | Dtrsm, ArraySlot::B) => (m, n),
            (Dsyrk | Dsyr2k, ArraySlot::A | ArraySlot::B) => if trans { (k, n) } else { (n, k) },
            (Dsyrk | Dsyr2k, ArraySlot::C) => (n, n),
            _ => (0, 0),
        }
    }

    /// Leading dimension of a matrix operand: `max(1, rows)`.
    pub fn ld(&self, slot: ArraySlot) -> usize {
        self.matrix_dims(slot).0.max(1)
    }

    /// Logical length of a vector operand.
    pub fn vector_len(&self, slot: ArraySlot) -> usize {
        let (m, n) = (clamp(self.m), clamp(self.n));
        let trans = self.opts.trans == Transpose::Trans;
        match (self.routine, slot) {
            (Routine::Dgemv, ArraySlot::X) => if trans { m } else { n },
            (Routine::Dgemv, ArraySlot::Y) => if trans { n } else { m },
            (Routine::Dger, ArraySlot::X) => m,
            _ => n,
        }
    }

    pub fn shape(&self, slot: ArraySlot) -> Shape {
        match slot {
            ArraySlot::X => Shape::Vector { n: self.vector_len(slot), inc: nonzero(self.incx) },
            ArraySlot::Y => Shape::Vector { n: self.vector_len(slot), inc: nonzero(self.incy) },
            ArraySlot::Param => Shape::Fixed(5),
            _ => {
                let (rows, cols) = self.matrix_dims(slot);
                Shape::Matrix { rows, cols, ld: rows.max(1) }
            }
        }
    }

    /// Runs the oracle in place; returns the scalar result for
    /// value-returning routines.
    pub fn apply_oracle(&mut self) -> Result<Option<f64>, ArgError> {
        use Routine::*;
        let o = self.opts;
        let (m, n, k) = (self.m, self.n, self.k);
        let lda = self.ld(ArraySlot::A) as i64;
        let ldb = self.ld(ArraySlot::B) as i64;
        let ldc = self.ld(ArraySlot::C) as i64;
        let (incx, incy, alpha, beta) = (self.incx, self.incy, self.alpha, self.beta);
        let Problem { x, y, a, b, c, param, .. } = self;
        let ret = match self.routine {
            Dasum => Some(oracle::dasum(n, x, incx)?),
            Daxpy => {
                oracle::daxpy(n, alpha, x, incx, y, incy)?;
                None
            }
            Ddot => Some(oracle::ddot(n, x, incx, y, incy)?),
            Idamax => Some(oracle::idamax(n, x, incx)? as f64),
            Dnrm2 => Some(oracle::dnrm2(n, x, incx)?),
            Drot => {
                let rot = RotParams { c: self.rot_c, s: self.rot_s };
                oracle::drot(n, x, incx, y, incy, rot)?;
                None
            }
            Drotm => {
                let mut p = [0.0; 5];
                for (d, s) in p.iter_mut().zip(param.iter()) {
                    *d = *s;
                }
                oracle::drotm(n, x, incx, y, incy, &RotmParams::from_array(&p))?;
                None
            }
            Dgemv => {
                oracle::dgemv(o.trans, m, n, alpha, a, lda, x, incx, beta, y, incy)?;
                None
            }
            Dger => {
                oracle::dger(m, n, alpha, x, incx, y, incy, a, lda)?;
                None
            }
            Dsymv => {
                oracle::dsymv(o.uplo, n, alpha, a, lda, x, incx, beta, y, incy)?;
                None
            }
            Dsyr => {
                oracle::dsyr(o.uplo, n, alpha, x, incx, a, lda)?;
                None
            }
            Dsyr2 => {
                oracle::dsyr2(o.uplo, n, alpha, x, incx, y, incy, a, lda)?;
                None
            }
            Dtrmv => {
                oracle::dtrmv(o.uplo, o.trans, o.diag, n, a, lda, x, incx)?;
                None
            }
            Dtrsv => {
                oracle::dtrsv(o.uplo, o.trans, o.diag, n, a, lda, x, incx)?;
                None
            }
            Dgemm => {
                oracle::dgemm(o.trans, o.transb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc)?;
                None
            }
            Dsymm => {
                oracle::dsymm(o.side, o.uplo, m, n, alpha, a, lda, b, ldb, beta, c, ldc)?;
                None
            }
            Dsyrk => {
                oracle::dsyrk(o.uplo, o.trans, n, k, alpha, a, lda, beta, c, ldc)?;
                None
            }
            Dsyr2k => {
                oracle::dsyr2k(o.uplo, o.trans, n, k, alpha, a, lda, b, ldb, beta, c, ldc)?;
                None
            }
            Dtrmm => {
                oracle::dtrmm(o.side, o.uplo, o.trans, o.diag, m, n, alpha, a, lda, b, ldb)?;
                None
            }
            Dtrsm => {
                oracle::dtrsm(o.side, o.uplo, o.trans, o.diag, m, n, alpha, a, lda, b, ldb)?;
                None
            }
        };
        Ok(ret)
    }

    /// Collects the written arrays of this (already executed) problem.
    pub fn outputs(&self, ret: Option<f64>) -> Outputs {
        Outputs {
            ret,
            arrays: self
                .routine
                .outputs()
                .map(|slot| (slot, self.array(slot).clone()))
                .collect(),
        }
    }

    /// Runs the oracle on a copy of the problem.
    pub fn run_oracle(&self) -> Result<Outputs, ArgError> {
        let mut p = self.clone();
        let ret = p.apply_oracle()?;
        Ok(p.outputs(ret))
    }

    /// Copy with every operand and scalar replaced by its magnitude.
    pub fn magnitudes(&self) -> Problem {
        let mut p = self.clone();
        for slot in p.array_slots() {
            if slot == ArraySlot::Param {
                continue;
            }
            p.array_mut(slot).iter_mut().for_each(|v| *v = v.abs());
        }
        p.alpha = p.alpha.abs();
        p.beta = p.beta.abs();
        p
    }
}

fn nonzero(inc: i64) -> i64 {
    if inc == 0 {
        1
    } else {
        inc
    }
}
