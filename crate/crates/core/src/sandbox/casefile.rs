//! Binary case files exchanged with the child process.
//!
//! Layout (little-endian throughout):
//!
//! | bytes | field |
//! |-------|-------|
//! | 4     | magic `KGAU` |
//! | 4     | version (u32, currently 1) |
//! | 4     | routine id (u32, 1-based table order) |
//! | 8×3   | m, n, k (i64) |
//! | 8×2   | incx, incy (i64) |
//! | 4     | option characters: trans/transa, side (transb for dgemm), uplo, diag; 0 when unused |
//!
//! An input file continues with every floating-point argument in
//! signature order: scalars as one value, arrays at their storage length
//! (`drotm`'s parameter array is five values). An output file continues
//! with the return value (if the routine has one) followed by the written
//! arrays in signature order.

use crate::problem::{Options, Outputs, Problem};
use crate::routine::{Arg, CharSlot, ReturnKind, Routine};

pub const MAGIC: &[u8; 4] = b"KGAU";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 4 + 4 + 4 + 5 * 8 + 4;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CaseFileError {
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported version {0}")]
    BadVersion(u32),
    #[error("unknown routine id {0}")]
    UnknownRoutine(u32),
    #[error("truncated: need {needed} bytes, have {len}")]
    Truncated { needed: usize, len: usize },
    #[error("{0} trailing bytes")]
    Trailing(usize),
    #[error("output header does not match the case")]
    HeaderMismatch,
    #[error("invalid option character {0:#04x} in slot {1}")]
    BadOption(u8, usize),
}

/// Fixed-size header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub routine: Routine,
    pub m: i64,
    pub n: i64,
    pub k: i64,
    pub incx: i64,
    pub incy: i64,
    pub chars: [u8; 4],
}

/// Header slot holding a character argument.
fn char_index(slot: CharSlot) -> usize {
    match slot {
        CharSlot::Trans => 0,
        // only dgemm has transb, and it has no side
        CharSlot::Side | CharSlot::TransB => 1,
        CharSlot::Uplo => 2,
        CharSlot::Diag => 3,
    }
}

impl Header {
    pub fn of(p: &Problem) -> Header {
        let mut chars = [0u8; 4];
        for arg in p.routine.signature() {
            if let Arg::Char(slot) = arg {
                chars[char_index(*slot)] = p.opts.get(*slot) as u8;
            }
        }
        Header { routine: p.routine, m: p.m, n: p.n, k: p.k, incx: p.incx, incy: p.incy, chars }
    }

    pub fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.routine.id().to_le_bytes());
        for v in [self.m, self.n, self.k, self.incx, self.incy] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.chars);
    }

    pub fn decode(bytes: &[u8]) -> Result<Header, CaseFileError> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(if bytes.len() < 4 {
                CaseFileError::Truncated { needed: HEADER_LEN, len: bytes.len() }
            } else {
                CaseFileError::BadMagic
            });
        }
        if bytes.len() < HEADER_LEN {
            return Err(CaseFileError::Truncated { needed: HEADER_LEN, len: bytes.len() });
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let i64_at = |o: usize| i64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(CaseFileError::BadVersion(version));
        }
        let id = u32_at(8);
        let routine = Routine::from_id(id).ok_or(CaseFileError::UnknownRoutine(id))?;
        let mut chars = [0u8; 4];
        chars.copy_from_slice(&bytes[52..56]);
        Ok(Header {
            routine,
            m: i64_at(12),
            n: i64_at(20),
            k: i64_at(28),
            incx: i64_at(36),
            incy: i64_at(44),
            chars,
        })
    }

    /// A zero-filled problem with this header's shape and options.
    pub fn problem(&self) -> Result<Problem, CaseFileError> {
        let mut opts = Options::default();
        for arg in self.routine.signature() {
            if let Arg::Char(slot) = arg {
                let i = char_index(*slot);
                opts.set(*slot, self.chars[i] as char).map_err(|_| CaseFileError::BadOption(self.chars[i], i))?;
            }
        }
        Ok(Problem::zeroed(self.routine, opts, self.m, self.n, self.k, self.incx, self.incy))
    }
}

fn put(out: &mut Vec<u8>, v: &[f64]) {
    for x in v {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, dst: &mut [f64]) -> Result<(), CaseFileError> {
        let needed = self.pos + dst.len() * 8;
        if needed > self.bytes.len() {
            return Err(CaseFileError::Truncated { needed, len: self.bytes.len() });
        }
        for (i, d) in dst.iter_mut().enumerate() {
            let o = self.pos + i * 8;
            *d = f64::from_le_bytes(self.bytes[o..o + 8].try_into().unwrap());
        }
        self.pos = needed;
        Ok(())
    }

    fn finish(&self) -> Result<(), CaseFileError> {
        match self.bytes.len() - self.pos {
            0 => Ok(()),
            n => Err(CaseFileError::Trailing(n)),
        }
    }
}

/// Serialises the inputs of a problem.
pub fn encode_input(p: &Problem) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN);
    Header::of(p).encode(&mut out);
    for arg in p.routine.signature() {
        match arg {
            Arg::Scalar(s) => put(&mut out, &[p.scalar(*s)]),
            Arg::Array(slot, _) => put(&mut out, p.array(*slot)),
            Arg::Char(_) | Arg::Int(_) => {}
        }
    }
    out
}

pub fn decode_input(bytes: &[u8]) -> Result<Problem, CaseFileError> {
    let header = Header::decode(bytes)?;
    let mut p = header.problem()?;
    let mut r = Reader { bytes, pos: HEADER_LEN };
    for arg in p.routine.signature() {
        match arg {
            Arg::Scalar(s) => {
                let mut v = [0.0];
                r.take(&mut v)?;
                *p.scalar_mut(*s) = v[0];
            }
            Arg::Array(slot, _) => r.take(p.array_mut(*slot))?,
            Arg::Char(_) | Arg::Int(_) => {}
        }
    }
    r.finish()?;
    Ok(p)
}

/// Serialises the results of an executed problem.
pub fn encode_output(p: &Problem, ret: Option<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN);
    Header::of(p).encode(&mut out);
    if p.routine.return_kind() != ReturnKind::Void {
        put(&mut out, &[ret.unwrap_or(0.0)]);
    }
    for slot in p.routine.outputs() {
        put(&mut out, p.array(slot));
    }
    out
}

/// Parses an output file; the header must describe the same call as `expected`.
pub fn decode_output(bytes: &[u8], expected: &Problem) -> Result<Outputs, CaseFileError> {
    let header = Header::decode(bytes)?;
    if header != Header::of(expected) {
        return Err(CaseFileError::HeaderMismatch);
    }
    let mut r = Reader { bytes, pos: HEADER_LEN };
    let ret = if expected.routine.return_kind() != ReturnKind::Void {
        let mut v = [0.0];
        r.take(&mut v)?;
        Some(v[0])
    } else {
        None
    };
    let mut arrays = Vec::new();
    for slot in expected.routine.outputs() {
        let mut v = vec![0.0; expected.array(slot).len()];
        r.take(&mut v)?;
        arrays.push((slot, v));
    }
    r.finish()?;
    Ok(Outputs { ret, arrays })
}
