//! Exhaustive test matrix: parameter combinations × size grid, with
//! seeded operand initialisation.

use std::fmt;

use rand::distributions::{Distribution, Open01};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::oracle::DiagKind;
use crate::problem::{Options, Problem};
use crate::routine::{Arg, ArraySlot, Axis, Level, Routine};

/// Default `alpha`.
pub const ALPHA: f64 = std::f64::consts::PI;
/// Default `beta`.
pub const BETA: f64 = std::f64::consts::E;
/// Strides exercised by the default matrix.
pub const STRIDES: [i64; 2] = [1, 2];

/// Flags cycled through by `drotm` cases, indexed by grid position.
pub const ROTM_FLAGS: [f64; 4] = [-1.0, 0.0, 1.0, -2.0];

/// Value bound to one parameter axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AxisValue {
    Char(char),
    Stride(i64),
}

impl fmt::Display for AxisValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisValue::Char(c) => write!(f, "{c}"),
            AxisValue::Stride(s) => write!(f, "{s}"),
        }
    }
}

/// Identity, level, axes and signature of a routine.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutineSpec {
    pub routine: Routine,
    pub level: Level,
    pub params: Vec<(Axis, Vec<AxisValue>)>,
    pub signature: &'static [Arg],
}

impl RoutineSpec {
    pub fn of(routine: Routine) -> Self {
        let params = routine
            .axes()
            .iter()
            .map(|&axis| {
                let values = if axis.is_stride() {
                    STRIDES.iter().map(|&s| AxisValue::Stride(s)).collect()
                } else {
                    axis.char_values().iter().map(|&c| AxisValue::Char(c as char)).collect()
                };
                (axis, values)
            })
            .collect();
        RoutineSpec { routine, level: routine.level(), params, signature: routine.signature() }
    }

    /// Every parameter combination, first axis varying slowest.
    pub fn combos(&self) -> Vec<Vec<(Axis, AxisValue)>> {
        let mut out: Vec<Vec<(Axis, AxisValue)>> = vec![Vec::new()];
        for (axis, values) in &self.params {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut c = prefix.clone();
                        c.push((*axis, *v));
                        c
                    })
                })
                .collect();
        }
        out
    }
}

/// Problem dimensions; unused ones are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize)]
pub struct Dims {
    pub m: i64,
    pub n: i64,
    pub k: i64,
}

impl Dims {
    pub const fn n(n: i64) -> Self {
        Dims { m: 0, n, k: 0 }
    }
    pub const fn mn(m: i64, n: i64) -> Self {
        Dims { m, n, k: 0 }
    }
    pub const fn nk(n: i64, k: i64) -> Self {
        Dims { m: 0, n, k }
    }
    pub const fn mnk(m: i64, n: i64, k: i64) -> Self {
        Dims { m, n, k }
    }
}

/// Size grids, one per dimension pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeProfile {
    /// Level-1 vector lengths.
    pub vector: Vec<i64>,
    /// Level-2 routines with a general `m × n` matrix.
    pub general: Vec<(i64, i64)>,
    /// Level-2 routines with a square `n × n` matrix.
    pub square: Vec<i64>,
    /// `dgemm`.
    pub gemm: Vec<(i64, i64, i64)>,
    /// Side-dependent level-3 routines, `(m, n)`.
    pub sided: Vec<(i64, i64)>,
    /// Rank-k updates, `(n, k)`.
    pub rank: Vec<(i64, i64)>,
}

const SQ: [i64; 8] = [1, 2, 3, 7, 16, 31, 32, 33];
const RECT: [(i64, i64); 8] = [(33, 16), (32, 7), (16, 33), (7, 32), (16, 3), (3, 16), (0, 16), (16, 0)];

impl Default for SizeProfile {
    fn default() -> Self {
        let squares2 = SQ.iter().map(|&s| (s, s));
        SizeProfile {
            vector: SQ.to_vec(),
            general: squares2
                .clone()
                .chain([(16, 7), (33, 16), (32, 3), (7, 16), (16, 33), (3, 32), (0, 7), (7, 0)])
                .collect(),
            square: vec![0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 15, 16, 17, 31, 32, 33],
            gemm: SQ
                .iter()
                .map(|&s| (s, s, s))
                .chain([
                    (33, 16, 7),
                    (32, 7, 16),
                    (16, 33, 7),
                    (7, 32, 33),
                    (16, 16, 33),
                    (16, 16, 0),
                    (0, 16, 16),
                    (16, 0, 7),
                ])
                .collect(),
            sided: squares2.clone().chain(RECT).collect(),
            rank: squares2.chain(RECT).collect(),
        }
    }
}

impl SizeProfile {
    /// A reduced grid for quick runs: the small end of every default grid.
    pub fn small() -> Self {
        let d = SizeProfile::default();
        let keep = |v: i64| v <= 7;
        SizeProfile {
            vector: d.vector.into_iter().filter(|&n| keep(n)).collect(),
            general: d.general.into_iter().filter(|&(m, n)| keep(m) && keep(n)).collect(),
            square: d.square.into_iter().filter(|&n| keep(n)).collect(),
            gemm: d.gemm.into_iter().filter(|&(m, n, k)| keep(m) && keep(n) && keep(k)).collect(),
            sided: d.sided.into_iter().filter(|&(m, n)| keep(m) && keep(n)).collect(),
            rank: d.rank.into_iter().filter(|&(n, k)| keep(n) && keep(k)).collect(),
        }
    }

    /// Grid a routine is enumerated over.
    pub fn grid(&self, routine: Routine) -> Vec<Dims> {
        use Routine::*;
        match routine {
            Dasum | Daxpy | Ddot | Idamax | Dnrm2 | Drot | Drotm => {
                self.vector.iter().map(|&n| Dims::n(n)).collect()
            }
            Dgemv | Dger => self.general.iter().map(|&(m, n)| Dims::mn(m, n)).collect(),
            Dsymv | Dsyr | Dsyr2 | Dtrmv | Dtrsv => self.square.iter().map(|&n| Dims::n(n)).collect(),
            Dgemm => self.gemm.iter().map(|&(m, n, k)| Dims::mnk(m, n, k)).collect(),
            Dsymm | Dtrmm | Dtrsm => self.sided.iter().map(|&(m, n)| Dims::mn(m, n)).collect(),
            Dsyrk | Dsyr2k => self.rank.iter().map(|&(n, k)| Dims::nk(n, k)).collect(),
        }
    }
}

/// Representative grid of a level: vector lengths, the general `m × n`
/// grid, or the `dgemm` grid.
pub fn default_size_profile(level: Level) -> Vec<Dims> {
    let p = SizeProfile::default();
    match level {
        Level::One => p.grid(Routine::Dasum),
        Level::Two => p.grid(Routine::Dgemv),
        Level::Three => p.grid(Routine::Dgemm),
    }
}

/// One fully bound invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub routine: Routine,
    /// Position in the routine's manifest.
    pub index: usize,
    /// Position of `dims` in the size grid.
    pub grid_index: usize,
    pub params: Vec<(Axis, AxisValue)>,
    pub dims: Dims,
    pub incx: i64,
    pub incy: i64,
    pub seed: u64,
}

/// Canonical text of a parameter combination, e.g. `trans=N,incx=1,incy=2`.
/// Routines without axes use `-`.
pub fn combo_key(params: &[(Axis, AxisValue)]) -> String {
    if params.is_empty() {
        return "-".to_string();
    }
    params.iter().map(|(a, v)| format!("{}={v}", a.name())).collect::<Vec<_>>().join(",")
}

impl TestCase {
    pub fn combo(&self) -> String {
        combo_key(&self.params)
    }

    /// The character-valued part of the combination (strides dropped),
    /// which keys benchmark rows.
    pub fn bench_combo(&self) -> String {
        let chars: Vec<_> = self.params.iter().filter(|(a, _)| !a.is_stride()).copied().collect();
        combo_key(&chars)
    }

    /// Stable descriptor hashed into the seed.
    pub fn descriptor(&self) -> String {
        descriptor(self.routine, &self.params, self.dims, self.grid_index)
    }

    /// Short identifier used in verdicts: `<routine>#<index>`.
    pub fn id(&self) -> String {
        format!("{}#{}", self.routine, self.index)
    }

    pub fn options(&self) -> Options {
        options_of(&self.params)
    }

    /// One manifest line.
    pub fn manifest_line(&self) -> String {
        format!("{} {} seed={:016x}", self.index, self.descriptor(), self.seed)
    }
}

/// Options bound by the character-valued entries of a combination.
pub fn options_of(params: &[(Axis, AxisValue)]) -> Options {
    let mut o = Options::default();
    for (axis, v) in params {
        if let (Some(slot), AxisValue::Char(c)) = (axis.slot(), v) {
            o.set(slot, *c).expect("axis values are valid option characters");
        }
    }
    o
}

/// Inverse of [`combo_key`]; axes must belong to the routine and values
/// must be admissible.
pub fn parse_combo(routine: Routine, key: &str) -> Result<Vec<(Axis, AxisValue)>, String> {
    let key = key.trim();
    if key == "-" || key.is_empty() {
        return Ok(Vec::new());
    }
    key.split(',')
        .map(|part| {
            let (name, value) = part.split_once('=').ok_or_else(|| format!("bad combo entry `{part}`"))?;
            let axis = *routine
                .axes()
                .iter()
                .find(|a| a.name() == name.trim())
                .ok_or_else(|| format!("{routine} has no parameter `{name}`"))?;
            let value = value.trim();
            let v = if axis.is_stride() {
                AxisValue::Stride(value.parse().map_err(|_| format!("bad stride `{value}`"))?)
            } else {
                let c = value.chars().next().map(|c| c.to_ascii_uppercase());
                match c {
                    Some(c) if value.len() == 1 && axis.char_values().contains(&(c as u8)) => AxisValue::Char(c),
                    _ => return Err(format!("bad value `{value}` for {}", axis.name())),
                }
            };
            Ok((axis, v))
        })
        .collect()
}

fn descriptor(routine: Routine, params: &[(Axis, AxisValue)], dims: Dims, grid_index: usize) -> String {
    format!(
        "{routine} {} m={} n={} k={} g={grid_index}",
        combo_key(params),
        dims.m,
        dims.n,
        dims.k
    )
}

/// First eight bytes (little-endian) of the SHA-256 of `text`.
pub fn seed_of(text: &str) -> u64 {
    let digest = Sha256::digest(text.as_bytes());
    let mut b = [0u8; 8];
    b.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(b)
}

/// Full Cartesian product of parameter combinations and the size grid,
/// combinations varying slowest.
pub fn enumerate_cases(spec: &RoutineSpec, profile: &SizeProfile) -> Vec<TestCase> {
    let grid = profile.grid(spec.routine);
    let mut cases = Vec::new();
    for params in spec.combos() {
        let stride = |axis: Axis| {
            params
                .iter()
                .find_map(|(a, v)| match v {
                    AxisValue::Stride(s) if *a == axis => Some(*s),
                    _ => None,
                })
                .unwrap_or(1)
        };
        let (incx, incy) = (stride(Axis::Incx), stride(Axis::Incy));
        for (grid_index, &dims) in grid.iter().enumerate() {
            let seed = seed_of(&descriptor(spec.routine, &params, dims, grid_index));
            cases.push(TestCase {
                routine: spec.routine,
                index: cases.len(),
                grid_index,
                params: params.clone(),
                dims,
                incx,
                incy,
                seed,
            });
        }
    }
    cases
}

/// Line-oriented manifest of a case list.
pub fn manifest(cases: &[TestCase]) -> String {
    cases.iter().map(|c| c.manifest_line() + "\n").collect()
}

/// Sampler for the open interval (0, 1).
pub struct Uniform01(ChaCha8Rng);

impl Uniform01 {
    pub fn new(seed: u64) -> Self {
        Uniform01(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn next(&mut self) -> f64 {
        Open01.sample(&mut self.0)
    }

    pub fn fill(&mut self, v: &mut [f64]) {
        for x in v {
            *x = self.next();
        }
    }
}

/// Binds a case to concrete operands drawn from its seed.
pub fn init_problem(case: &TestCase) -> Problem {
    init_with(case.routine, case.options(), case.dims, case.incx, case.incy, case.seed, case.grid_index)
}

/// Operand initialisation shared by verification and benchmarking.
pub fn init_with(
    routine: Routine,
    opts: Options,
    dims: Dims,
    incx: i64,
    incy: i64,
    seed: u64,
    grid_index: usize,
) -> Problem {
    let mut p = Problem::zeroed(routine, opts, dims.m, dims.n, dims.k, incx, incy);
    let mut rng = Uniform01::new(seed);
    for slot in p.array_slots() {
        rng.fill(p.array_mut(slot));
    }
    p.alpha = ALPHA;
    p.beta = BETA;
    match routine {
        Routine::Drot => {
            let theta = 2.0 * std::f64::consts::PI * rng.next();
            p.rot_c = theta.cos();
            p.rot_s = theta.sin();
        }
        Routine::Drotm => p.param[0] = ROTM_FLAGS[grid_index % ROTM_FLAGS.len()],
        Routine::Dtrsv | Routine::Dtrsm => condition(&mut p),
        _ => {}
    }
    p
}

/// Makes the triangular operand of a solve well conditioned: a non-unit
/// diagonal is shifted by the order, a unit diagonal gets its
/// off-diagonal entries scaled by the inverse order.
fn condition(p: &mut Problem) {
    let (order, _) = p.matrix_dims(ArraySlot::A);
    if order == 0 {
        return;
    }
    let ld = p.ld(ArraySlot::A);
    let unit = p.opts.diag == DiagKind::Unit;
    let shift = order as f64;
    for j in 0..order {
        for i in 0..order {
            let v = &mut p.a[i + j * ld];
            if i == j {
                if !unit {
                    *v += shift;
                }
            } else if unit {
                *v /= shift;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cases(r: Routine) -> Vec<TestCase> {
        enumerate_cases(&RoutineSpec::of(r), &SizeProfile::default())
    }

    #[test]
    fn case_count_anchors() {
        assert_eq!(cases(Routine::Dgemv).len(), 128);
        assert_eq!(cases(Routine::Dtrsm).len(), 256);
        assert_eq!(cases(Routine::Dasum).len(), 16);
    }

    #[test]
    fn every_grid_has_sixteen_tuples_beyond_level_one() {
        let p = SizeProfile::default();
        for r in Routine::ALL {
            let want = if r.level() == Level::One { 8 } else { 16 };
            assert_eq!(p.grid(r).len(), want, "{r}");
        }
    }

    #[test]
    fn general_grid_has_tall_and_wide() {
        let g = default_size_profile(Level::Two);
        assert!(g.iter().any(|d| d.m > d.n));
        assert!(g.iter().any(|d| d.m < d.n));
        assert!(g.iter().any(|d| d.m == 0 || d.n == 0));
    }

    #[test]
    fn combos_vary_first_axis_slowest() {
        let c = cases(Routine::Dgemv);
        assert_eq!(c[0].combo(), "trans=N,incx=1,incy=1");
        assert_eq!(c[16].combo(), "trans=N,incx=1,incy=2");
        assert_eq!(c[127].combo(), "trans=T,incx=2,incy=2");
        assert_eq!(c[5].bench_combo(), "trans=N");
    }

    #[test]
    fn seeds_are_pure_and_distinct() {
        let a = cases(Routine::Dgemm);
        let b = cases(Routine::Dgemm);
        assert_eq!(a, b);
        let mut seeds: Vec<u64> = a.iter().map(|c| c.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), a.len());
    }

    #[test]
    fn init_is_deterministic_and_open_unit() {
        let c = &cases(Routine::Dgemm)[40];
        let p = init_problem(c);
        assert_eq!(p, init_problem(c));
        for v in p.a.iter().chain(&p.b).chain(&p.c) {
            assert!(*v > 0.0 && *v < 1.0);
        }
    }

    #[test]
    fn rotm_flags_cycle() {
        let c = cases(Routine::Drotm);
        let flags: Vec<f64> = c[..4].iter().map(|c| init_problem(c).param[0]).collect();
        assert_eq!(flags, ROTM_FLAGS);
    }

    #[test]
    fn combo_keys_round_trip() {
        for r in Routine::ALL {
            for combo in RoutineSpec::of(r).combos() {
                assert_eq!(parse_combo(r, &combo_key(&combo)).unwrap(), combo);
            }
        }
        assert!(parse_combo(Routine::Dgemm, "side=L").is_err());
        assert!(parse_combo(Routine::Dgemm, "transa=C").is_err());
    }

    #[test]
    fn manifest_has_one_line_per_case() {
        let c = cases(Routine::Ddot);
        let m = manifest(&c);
        assert_eq!(m.lines().count(), c.len());
        assert!(m.starts_with("0 ddot incx=1,incy=1 m=0 n=1 k=0 g=0 seed="));
    }
}
