//! Timing at fixed large sizes and the byte/flop models behind the rates.
//!
//! Levels 1 and 2 report bytes per second, level 3 reports flops per
//! second. Traffic models count every operand once (a streaming lower
//! bound); for symmetric and triangular operands only the stored triangle,
//! taken as `n²/2` elements, is counted.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::oracle::Side;
use crate::problem::Options;
use crate::routine::{Level, Routine};
use crate::testgen::{combo_key, options_of, parse_combo, seed_of, AxisValue, Dims, RoutineSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub level1_n: i64,
    pub level2_mn: i64,
    pub level3_mnk: i64,
    pub reps: usize,
    pub warmups: usize,
    /// Exported to kernels as `OMP_NUM_THREADS`.
    pub threads: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            level1_n: 16_777_216,
            level2_mn: 8192,
            level3_mnk: 2048,
            reps: 5,
            warmups: 1,
            threads: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.level1_n <= 0 || self.level2_mn <= 0 || self.level3_mnk <= 0 || self.threads == 0 {
            return Err("bench sizes and thread count must be positive".into());
        }
        if self.reps < 3 {
            return Err(format!("bench reps must be at least 3 for a median, got {}", self.reps));
        }
        Ok(())
    }

    /// Problem size used for `routine`.
    pub fn dims(&self, routine: Routine) -> Dims {
        match routine.level() {
            Level::One => Dims::n(self.level1_n),
            Level::Two => Dims::mn(self.level2_mn, self.level2_mn),
            Level::Three => {
                let s = self.level3_mnk;
                Dims::mnk(s, s, s)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    BytesPerSec,
    FlopsPerSec,
}

impl MetricKind {
    pub fn of(routine: Routine) -> MetricKind {
        match routine.level() {
            Level::Three => MetricKind::FlopsPerSec,
            Level::One | Level::Two => MetricKind::BytesPerSec,
        }
    }

    /// Display unit of [`metric_value`].
    pub fn unit(self) -> &'static str {
        match self {
            MetricKind::BytesPerSec => "GB/s",
            MetricKind::FlopsPerSec => "GFlops/s",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{routine} is measured in {}, not {}", have.unit(), want.unit())]
pub struct WrongMetric {
    pub routine: Routine,
    pub have: MetricKind,
    pub want: MetricKind,
}

fn u(v: i64) -> u128 {
    v.max(0) as u128
}

/// Bytes moved by one call of a level-1 or level-2 routine.
pub fn traffic_model(routine: Routine, opts: &Options, dims: Dims) -> Result<u128, WrongMetric> {
    use Routine::*;
    let have = MetricKind::of(routine);
    if have != MetricKind::BytesPerSec {
        return Err(WrongMetric { routine, have, want: MetricKind::BytesPerSec });
    }
    let (m, n) = (u(dims.m), u(dims.n));
    let tri = n * n / 2;
    let words = match routine {
        Dasum | Idamax | Dnrm2 => n,
        Ddot => 2 * n,
        Daxpy => 3 * n,
        Drot | Drotm => 4 * n,
        Dgemv => match opts.trans {
            crate::oracle::Transpose::NoTrans => m * n + n + 2 * m,
            crate::oracle::Transpose::Trans => m * n + m + 2 * n,
        },
        Dger => 2 * m * n + m + n,
        Dsymv => tri + 3 * n,
        Dsyr => 2 * tri + n,
        Dsyr2 => 2 * tri + 2 * n,
        Dtrmv | Dtrsv => tri + 2 * n,
        _ => unreachable!("level 3"),
    };
    Ok(8 * words)
}

/// Floating-point operations of one call of a level-3 routine.
pub fn flop_model(routine: Routine, opts: &Options, dims: Dims) -> Result<u128, WrongMetric> {
    use Routine::*;
    let have = MetricKind::of(routine);
    if have != MetricKind::FlopsPerSec {
        return Err(WrongMetric { routine, have, want: MetricKind::FlopsPerSec });
    }
    let (m, n, k) = (u(dims.m), u(dims.n), u(dims.k));
    let left = opts.side == Side::Left;
    Ok(match routine {
        Dgemm => 2 * m * n * k,
        Dsymm => if left { 2 * m * m * n } else { 2 * m * n * n },
        Dsyrk => n * (n + 1) * k,
        Dsyr2k => 2 * n * (n + 1) * k,
        Dtrmm | Dtrsm => if left { n * m * m } else { m * n * n },
        _ => unreachable!("levels 1 and 2"),
    })
}

/// Work of one call in the routine's own metric.
pub fn work_model(routine: Routine, opts: &Options, dims: Dims) -> u128 {
    match MetricKind::of(routine) {
        MetricKind::BytesPerSec => traffic_model(routine, opts, dims),
        MetricKind::FlopsPerSec => flop_model(routine, opts, dims),
    }
    .expect("metric kind matches the routine")
}

/// `work / seconds / 1e9`: GB/s or GFlops/s.
pub fn metric_value(work: u128, seconds: f64) -> f64 {
    work as f64 / seconds / 1e9
}

/// Median of a non-empty sample (mean of the middle pair for even sizes).
pub fn median(samples: &[f64]) -> f64 {
    assert!(!samples.is_empty(), "median of an empty sample");
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let h = v.len() / 2;
    if v.len() % 2 == 1 {
        v[h]
    } else {
        (v[h - 1] + v[h]) / 2.0
    }
}

/// Benchmark rows of a routine: its character-valued combinations with
/// unit strides, in enumeration order.
pub fn bench_combos(routine: Routine) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for params in RoutineSpec::of(routine).combos() {
        if params.iter().any(|(_, v)| matches!(v, AxisValue::Stride(s) if *s != 1)) {
            continue;
        }
        let chars: Vec<_> = params.iter().filter(|(a, _)| !a.is_stride()).copied().collect();
        let key = combo_key(&chars);
        if !out.contains(&key) {
            out.push(key);
        }
    }
    out
}

/// Verification combination a benchmark row depends on (same characters,
/// unit strides).
pub fn verification_combo(routine: Routine, bench_combo: &str) -> Result<String, String> {
    let chars = parse_combo(routine, bench_combo)?;
    let wanted = routine.axes().iter().filter(|a| !a.is_stride()).count();
    if chars.len() != wanted || chars.iter().any(|(a, _)| a.is_stride()) {
        return Err(format!("`{bench_combo}` is not a benchmark row of {routine}"));
    }
    let full = RoutineSpec::of(routine)
        .combos()
        .into_iter()
        .find(|params| {
            params.iter().all(|(a, v)| match v {
                AxisValue::Stride(s) => *s == 1,
                AxisValue::Char(_) => chars.contains(&(*a, *v)),
            })
        })
        .ok_or_else(|| format!("no combination `{bench_combo}` for {routine}"))?;
    Ok(combo_key(&full))
}

/// Seed of the benchmark data for one row.
pub fn bench_seed(routine: Routine, combo: &str, dims: Dims) -> u64 {
    seed_of(&format!("bench {routine} {combo} m={} n={} k={}", dims.m, dims.n, dims.k))
}

/// One measured (routine, combination, implementation) triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSample {
    pub routine: Routine,
    pub combo: String,
    pub impl_id: String,
    /// Median wall time; `None` when timing failed.
    pub seconds: Option<f64>,
    pub metric_value: Option<f64>,
    pub metric_kind: MetricKind,
    pub dims: Dims,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl BenchSample {
    pub fn is_ok(&self) -> bool {
        self.metric_value.is_some()
    }
}

impl fmt::Display for BenchSample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.metric_value, &self.failure) {
            (Some(v), _) => write!(f, "{} {} [{}]: {v:.3} {}", self.routine, self.combo, self.impl_id, self.metric_kind.unit()),
            (None, Some(e)) => write!(f, "{} {} [{}]: failed ({e})", self.routine, self.combo, self.impl_id),
            (None, None) => write!(f, "{} {} [{}]: failed", self.routine, self.combo, self.impl_id),
        }
    }
}

/// What a benchmark asks of an implementation.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingRequest<'a> {
    pub routine: Routine,
    pub combo: &'a str,
    pub dims: Dims,
    pub seed: u64,
    pub reps: usize,
    pub warmups: usize,
}

/// Produces per-repetition wall times (warmups excluded).
pub trait Timer {
    fn time(&mut self, req: &TimingRequest<'_>) -> Result<Vec<f64>, String>;
}

/// A [`Timer`] from a closure; handy for synthetic timings.
pub struct FnTimer<F>(pub F);

impl<F: FnMut(&TimingRequest<'_>) -> Result<Vec<f64>, String>> Timer for FnTimer<F> {
    fn time(&mut self, req: &TimingRequest<'_>) -> Result<Vec<f64>, String> {
        (self.0)(req)
    }
}

/// Times one row and converts the median to the routine's metric.
pub fn run_bench(timer: &mut dyn Timer, routine: Routine, combo: &str, impl_id: &str, cfg: &BenchConfig) -> BenchSample {
    let dims = cfg.dims(routine);
    let kind = MetricKind::of(routine);
    let mut sample = BenchSample {
        routine,
        combo: combo.to_string(),
        impl_id: impl_id.to_string(),
        seconds: None,
        metric_value: None,
        metric_kind: kind,
        dims,
        failure: None,
    };
    let opts = match parse_combo(routine, combo) {
        Ok(p) => options_of(&p),
        Err(e) => {
            sample.failure = Some(e);
            return sample;
        }
    };
    let req = TimingRequest { routine, combo, dims, seed: bench_seed(routine, combo, dims), reps: cfg.reps, warmups: cfg.warmups };
    match timer.time(&req) {
        Ok(times) if !times.is_empty() && times.iter().all(|t| t.is_finite() && *t > 0.0) => {
            let s = median(&times);
            sample.seconds = Some(s);
            sample.metric_value = Some(metric_value(work_model(routine, &opts, dims), s));
        }
        Ok(times) => sample.failure = Some(format!("unusable timings {times:?}")),
        Err(e) => sample.failure = Some(e),
    }
    sample
}

/// Ratio of a candidate's rate to the reference rate, from unrounded values.
pub fn ratio(candidate: f64, reference: f64) -> f64 {
    candidate / reference
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Transpose;

    fn o() -> Options {
        Options::default()
    }

    #[test]
    fn defaults_match_the_fixed_sizes() {
        let c = BenchConfig::default();
        assert_eq!((c.level1_n, c.level2_mn, c.level3_mnk, c.reps, c.warmups), (16_777_216, 8192, 2048, 5, 1));
        assert!(c.threads >= 1);
        assert_eq!(c.dims(Routine::Dtrsm), Dims::mnk(2048, 2048, 2048));
        assert_eq!(c.dims(Routine::Dgemv), Dims::mn(8192, 8192));
        assert_eq!(c.dims(Routine::Ddot), Dims::n(16_777_216));
        assert!(BenchConfig { reps: 2, ..c }.validate().is_err());
    }

    #[test]
    fn traffic_model_table() {
        let n = Dims::n(16_777_216);
        assert_eq!(traffic_model(Routine::Daxpy, &o(), n).unwrap(), 402_653_184);
        assert_eq!(traffic_model(Routine::Ddot, &o(), n).unwrap(), 268_435_456);
        assert_eq!(traffic_model(Routine::Dasum, &o(), Dims::n(4)).unwrap(), 32);
        let mn = Dims::mn(3, 5);
        assert_eq!(traffic_model(Routine::Dgemv, &o(), mn).unwrap(), 8 * (15 + 5 + 6));
        let t = Options { trans: Transpose::Trans, ..o() };
        assert_eq!(traffic_model(Routine::Dgemv, &t, mn).unwrap(), 8 * (15 + 3 + 10));
        assert_eq!(traffic_model(Routine::Dger, &o(), mn).unwrap(), 8 * (30 + 3 + 5));
        assert_eq!(traffic_model(Routine::Dtrmv, &o(), Dims::mn(8, 8)).unwrap(), 8 * (32 + 16));
        assert!(traffic_model(Routine::Dgemm, &o(), Dims::mnk(1, 1, 1)).is_err());
    }

    #[test]
    fn flop_model_table() {
        let s = Dims::mnk(2048, 2048, 2048);
        assert_eq!(flop_model(Routine::Dgemm, &o(), s).unwrap(), 17_179_869_184);
        assert_eq!(flop_model(Routine::Dtrsm, &o(), s).unwrap(), 8_589_934_592);
        assert_eq!(flop_model(Routine::Dgemm, &o(), Dims::mnk(1, 1, 1)).unwrap(), 2);
        let r = Options { side: Side::Right, ..o() };
        assert_eq!(flop_model(Routine::Dsymm, &o(), Dims::mn(2, 3)).unwrap(), 24);
        assert_eq!(flop_model(Routine::Dsymm, &r, Dims::mn(2, 3)).unwrap(), 36);
        assert_eq!(flop_model(Routine::Dtrmm, &r, Dims::mn(2, 3)).unwrap(), 18);
        assert_eq!(flop_model(Routine::Dsyrk, &o(), Dims::nk(3, 4)).unwrap(), 48);
        assert_eq!(flop_model(Routine::Dsyr2k, &o(), Dims::nk(3, 4)).unwrap(), 96);
        assert!(flop_model(Routine::Daxpy, &o(), Dims::n(4)).is_err());
    }

    #[test]
    fn synthetic_one_second_rates() {
        let cfg = BenchConfig::default();
        let mut one = FnTimer(|r: &TimingRequest<'_>| Ok(vec![1.0; r.reps]));
        let s = run_bench(&mut one, Routine::Dgemm, "transa=N,transb=N", "ref", &cfg);
        assert_eq!(s.metric_value, Some(17.179869184));
        assert_eq!(s.metric_kind, MetricKind::FlopsPerSec);
        let s = run_bench(&mut one, Routine::Daxpy, "-", "ref", &cfg);
        assert_eq!(s.metric_value, Some(0.402653184));
        assert_eq!(s.metric_kind, MetricKind::BytesPerSec);
    }

    #[test]
    fn failed_timing_gives_blank_sample() {
        let mut bad = FnTimer(|_: &TimingRequest<'_>| Err("killed by signal 11".to_string()));
        let s = run_bench(&mut bad, Routine::Ddot, "-", "c0", &BenchConfig::default());
        assert!(!s.is_ok());
        assert_eq!(s.failure.as_deref(), Some("killed by signal 11"));
    }

    #[test]
    fn median_and_ratio() {
        assert_eq!(median(&[5.0, 1.0, 3.0, 2.0, 4.0]), 3.0);
        assert_eq!(median(&[4.0, 1.0]), 2.5);
        assert_eq!(ratio(20.0, 10.0), 2.0);
    }

    #[test]
    fn bench_rows_drop_strides() {
        assert_eq!(bench_combos(Routine::Daxpy), vec!["-"]);
        assert_eq!(bench_combos(Routine::Dgemv), vec!["trans=N", "trans=T"]);
        assert_eq!(bench_combos(Routine::Dtrsm).len(), 16);
        assert_eq!(verification_combo(Routine::Dgemv, "trans=T").unwrap(), "trans=T,incx=1,incy=1");
        assert_eq!(verification_combo(Routine::Dasum, "-").unwrap(), "incx=1");
        assert_eq!(verification_combo(Routine::Dgemm, "-").unwrap_err().is_empty(), false);
    }
}
