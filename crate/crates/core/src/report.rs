//! Tables built from a ledger: pass counts per (mode, model) and
//! per-combination performance against the reference.
//!
//! Rendering is a pure function of the table. Text and Markdown round to
//! one decimal; CSV carries the unrounded numbers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bench::{bench_combos, median, ratio, verification_combo, BenchSample, MetricKind};
use crate::ledger::{candidates, CandidateRecord, Entry};
use crate::llm::SampleKey;
use crate::promptkit::PromptMode;
use crate::routine::{Level, Routine};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Column {
    pub mode: PromptMode,
    pub model: String,
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.mode, self.model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PassCell {
    pub passed: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassRow {
    pub level: Level,
    pub routine: Routine,
    /// Aligned with the table's columns; `None` where nothing was sampled.
    pub cells: Vec<Option<PassCell>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PassCountTable {
    pub columns: Vec<Column>,
    pub rows: Vec<PassRow>,
}

impl PassCountTable {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn cell(&self, routine: Routine, col: &Column) -> Option<PassCell> {
        let c = self.columns.iter().position(|x| x == col)?;
        self.rows.iter().find(|r| r.routine == routine)?.cells[c]
    }

    /// Largest sample count of any cell.
    pub fn n_samples(&self) -> usize {
        self.rows.iter().flat_map(|r| r.cells.iter().flatten()).map(|c| c.total).max().unwrap_or(0)
    }
}

/// Latest record per sample key; a resumed ledger never counts twice.
fn unique_records(entries: &[Entry]) -> BTreeMap<SampleKey, &CandidateRecord> {
    candidates(entries).map(|c| (c.key(), c)).collect()
}

fn columns_of<'a>(recs: impl Iterator<Item = &'a CandidateRecord>) -> Vec<Column> {
    let set: BTreeSet<Column> = recs.map(|c| Column { mode: c.mode, model: c.model.clone() }).collect();
    set.into_iter().collect()
}

pub fn build_pass_table(entries: &[Entry]) -> PassCountTable {
    let recs = unique_records(entries);
    let columns = columns_of(recs.values().copied());
    let mut rows = Vec::new();
    for routine in Routine::ALL {
        let mine: Vec<&CandidateRecord> = recs.values().copied().filter(|c| c.routine == routine).collect();
        if mine.is_empty() {
            continue;
        }
        let cells = columns
            .iter()
            .map(|col| {
                let in_col: Vec<_> = mine.iter().filter(|c| c.mode == col.mode && c.model == col.model).collect();
                (!in_col.is_empty())
                    .then(|| PassCell { passed: in_col.iter().filter(|c| c.passed()).count(), total: in_col.len() })
            })
            .collect();
        rows.push(PassRow { level: routine.level(), routine, cells });
    }
    PassCountTable { columns, rows }
}

/// How the candidates of one cell are summarised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    #[default]
    Best,
    Median,
}

impl Selection {
    pub fn name(self) -> &'static str {
        match self {
            Selection::Best => "best",
            Selection::Median => "median",
        }
    }

    fn label(self) -> &'static str {
        match self {
            Selection::Best => "best of passing candidates",
            Selection::Median => "median of passing candidates",
        }
    }
}

impl FromStr for Selection {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "best" => Ok(Selection::Best),
            "median" => Ok(Selection::Median),
            _ => Err(format!("unknown selection `{s}` (best | median)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfCell {
    pub value: f64,
    /// value / reference, from unrounded numbers.
    pub ratio: f64,
    /// Passing candidates that contributed.
    pub candidates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerfRow {
    pub routine: Routine,
    pub combo: String,
    pub metric: MetricKind,
    pub reference: f64,
    pub cells: Vec<Option<PerfCell>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PerfTable {
    pub selection: Selection,
    pub columns: Vec<Column>,
    pub rows: Vec<PerfRow>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReportError {
    #[error("no reference measurement for {routine} {combo}")]
    MissingRef { routine: Routine, combo: String },
}

fn combo_rank(routine: Routine, combo: &str) -> (usize, String) {
    let order = bench_combos(routine);
    (order.iter().position(|c| c == combo).unwrap_or(order.len()), combo.to_string())
}

/// A candidate's sample counts for a cell only if the candidate passed the
/// verification combination behind the benchmark row.
fn usable(rec: &CandidateRecord, s: &BenchSample) -> Option<f64> {
    let v = s.metric_value?;
    let vc = verification_combo(rec.routine, &s.combo).ok()?;
    rec.combo_passed(&vc).then_some(v)
}

pub fn build_perf_table(entries: &[Entry], refs: &[BenchSample], selection: Selection) -> Result<PerfTable, ReportError> {
    let recs = unique_records(entries);
    let benched: Vec<&CandidateRecord> = recs.values().copied().filter(|c| !c.bench.is_empty()).collect();
    let columns = columns_of(benched.iter().copied());

    let mut keys: BTreeSet<(Routine, (usize, String))> = BTreeSet::new();
    for c in &benched {
        for s in &c.bench {
            keys.insert((s.routine, combo_rank(s.routine, &s.combo)));
        }
    }
    for s in refs {
        keys.insert((s.routine, combo_rank(s.routine, &s.combo)));
    }

    let mut rows = Vec::new();
    for (routine, (_, combo)) in keys {
        let reference = refs
            .iter()
            .rev()
            .find(|s| s.routine == routine && s.combo == combo && s.metric_value.is_some())
            .and_then(|s| s.metric_value)
            .ok_or_else(|| ReportError::MissingRef { routine, combo: combo.clone() })?;
        let cells = columns
            .iter()
            .map(|col| {
                let mut vals: Vec<f64> = benched
                    .iter()
                    .filter(|c| c.routine == routine && c.mode == col.mode && c.model == col.model)
                    .filter_map(|c| c.bench.iter().find(|s| s.combo == combo).and_then(|s| usable(c, s)))
                    .collect();
                if vals.is_empty() {
                    return None;
                }
                vals.sort_by(f64::total_cmp);
                let value = match selection {
                    Selection::Best => *vals.last().unwrap(),
                    Selection::Median => median(&vals),
                };
                Some(PerfCell { value, ratio: ratio(value, reference), candidates: vals.len() })
            })
            .collect();
        rows.push(PerfRow { routine, combo, metric: MetricKind::of(routine), reference, cells });
    }
    Ok(PerfTable { selection, columns, rows })
}

/// "68.0 (11.3x)"
pub fn perf_cell_text(c: &PerfCell) -> String {
    format!("{:.1} ({:.1}x)", c.value, c.ratio)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Markdown,
    Csv,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Text, Format::Markdown, Format::Csv];

    pub fn extension(self) -> &'static str {
        match self {
            Format::Text => "txt",
            Format::Markdown => "md",
            Format::Csv => "csv",
        }
    }
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(Format::Text),
            "markdown" | "md" => Ok(Format::Markdown),
            "csv" => Ok(Format::Csv),
            _ => Err(format!("unknown format `{s}` (text | markdown | csv)")),
        }
    }
}

fn align(header: &[String], body: &[Vec<String>]) -> String {
    let mut width = vec![0; header.len()];
    for row in std::iter::once(header).chain(body.iter().map(Vec::as_slice)) {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |row: &[String]| {
        let cells: Vec<String> = row.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
        cells.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header);
    out.push_str(&line(&width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>()));
    for r in body {
        out.push_str(&line(r));
    }
    out
}

fn markdown(header: &[String], body: &[Vec<String>]) -> String {
    let row = |r: &[String]| format!("| {} |\n", r.join(" | "));
    let mut out = row(header);
    out.push_str(&row(&header.iter().map(|_| "---".to_string()).collect::<Vec<_>>()));
    for r in body {
        out.push_str(&row(r));
    }
    out
}

fn csv_string(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

pub const PASS_CSV_HEADER: [&str; 6] = ["level", "routine", "mode", "model", "passed", "candidates"];
pub const PERF_CSV_HEADER: [&str; 10] =
    ["routine", "combo", "unit", "ref", "mode", "model", "selection", "value", "ratio", "candidates"];

pub fn render_pass(t: &PassCountTable, format: Format) -> String {
    let n = t.n_samples();
    let cell = |c: &Option<PassCell>| match c {
        Some(c) if c.total == n => c.passed.to_string(),
        Some(c) => format!("{}/{}", c.passed, c.total),
        None => String::new(),
    };
    let title = format!("Pass counts: candidates passing every test case, out of {n}");
    match format {
        Format::Csv => {
            let mut rows = Vec::new();
            for r in &t.rows {
                for (col, c) in t.columns.iter().zip(&r.cells) {
                    if let Some(c) = c {
                        rows.push(vec![
                            r.level.number().to_string(),
                            r.routine.name().to_string(),
                            col.mode.name().to_string(),
                            col.model.clone(),
                            c.passed.to_string(),
                            c.total.to_string(),
                        ]);
                    }
                }
            }
            csv_string(&PASS_CSV_HEADER, &rows)
        }
        Format::Text | Format::Markdown => {
            let mut header = vec!["Level".to_string(), "Routine".to_string()];
            header.extend(t.columns.iter().map(|c| c.to_string()));
            let body: Vec<Vec<String>> = t
                .rows
                .iter()
                .map(|r| {
                    let mut v = vec![r.level.number().to_string(), r.routine.name().to_string()];
                    v.extend(r.cells.iter().map(cell));
                    v
                })
                .collect();
            if format == Format::Text {
                format!("{title}\n\n{}", align(&header, &body))
            } else {
                format!("**{title}**\n\n{}", markdown(&header, &body))
            }
        }
    }
}

pub fn render_perf(t: &PerfTable, format: Format) -> String {
    let title = format!(
        "Performance per parameter combination, {} (GB/s for levels 1-2, GFlops/s for level 3; ratio to Ref in parentheses; blank: no candidate passed)",
        t.selection.label()
    );
    match format {
        Format::Csv => {
            let mut rows = Vec::new();
            for r in &t.rows {
                for (col, c) in t.columns.iter().zip(&r.cells) {
                    rows.push(vec![
                        r.routine.name().to_string(),
                        r.combo.clone(),
                        r.metric.unit().to_string(),
                        r.reference.to_string(),
                        col.mode.name().to_string(),
                        col.model.clone(),
                        t.selection.name().to_string(),
                        c.map(|c| c.value.to_string()).unwrap_or_default(),
                        c.map(|c| c.ratio.to_string()).unwrap_or_default(),
                        c.map(|c| c.candidates).unwrap_or(0).to_string(),
                    ]);
                }
            }
            csv_string(&PERF_CSV_HEADER, &rows)
        }
        Format::Text | Format::Markdown => {
            let mut header = vec!["Routine".to_string(), "Params".to_string(), "Unit".to_string(), "Ref".to_string()];
            header.extend(t.columns.iter().map(|c| c.to_string()));
            let body: Vec<Vec<String>> = t
                .rows
                .iter()
                .map(|r| {
                    let mut v = vec![
                        r.routine.name().to_string(),
                        r.combo.clone(),
                        r.metric.unit().to_string(),
                        format!("{:.1}", r.reference),
                    ];
                    v.extend(r.cells.iter().map(|c| c.as_ref().map(perf_cell_text).unwrap_or_default()));
                    v
                })
                .collect();
            if format == Format::Text {
                format!("{title}\n\n{}", align(&header, &body))
            } else {
                format!("**{title}**\n\n{}", markdown(&header, &body))
            }
        }
    }
}

pub fn emit_pass(t: &PassCountTable, format: Format, sink: &mut dyn Write) -> io::Result<()> {
    sink.write_all(render_pass(t, format).as_bytes())
}

pub fn emit_perf(t: &PerfTable, format: Format, sink: &mut dyn Write) -> io::Result<()> {
    sink.write_all(render_perf(t, format).as_bytes())
}
