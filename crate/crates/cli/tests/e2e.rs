mod common;

use std::fs;
use std::path::Path;

use common::*;
use kgau_core::ledger::{self, Entry};
use kgau_core::verifier::VerdictKind;

fn reports(dir: &Path) -> Vec<(String, String)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), read(&p)))
        .collect();
    v.sort();
    v
}

fn kinds(entries: &[Entry], routine: &str) -> Vec<VerdictKind> {
    ledger::candidates(entries).filter(|c| c.routine.name() == routine).map(|c| c.verdict).collect()
}

#[test]
fn mock_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let backend = format!("mock:{}", corpus().display());
    let cfg_a = write_config(tmp.path(), "a", &backend, MOCK_RUN);
    let o = run(&["run", "--config", cfg_a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let a = tmp.path().join("a");

    // Pre-computed table: daxpy corpus is all correct, dsymv has two
    // correct entries out of six (indices 0, 1, 6, 7), dtrsm none.
    assert_eq!(read(&a.join("reports/pass.txt")), read(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/mock_pass.txt")));
    let entries = ledger::read(&a.join("ledger.jsonl")).unwrap();
    assert_eq!(ledger::candidates(&entries).count(), 30);
    use VerdictKind::*;
    assert_eq!(kinds(&entries, "daxpy"), vec![Pass; 10]);
    assert_eq!(
        kinds(&entries, "dsymv"),
        vec![Pass, Pass, NumericalError, Crash, Timeout, MarkerMissing, Pass, Pass, NumericalError, Crash]
    );
    assert_eq!(
        kinds(&entries, "dtrsm"),
        vec![NumericalError, Crash, Timeout, MarkerMissing, NumericalError, NumericalError, Crash, Timeout, MarkerMissing, NumericalError]
    );
    assert_eq!(read(&a.join("reports/pass.csv")).lines().nth(1), Some("1,daxpy,NameToCcode,gpt-4.1,10,10"));

    // A second run from scratch produces byte-identical reports and ledger.
    let cfg_b = write_config(tmp.path(), "b", &backend, MOCK_RUN);
    assert_eq!(run(&["run", "--config", cfg_b.to_str().unwrap()]).status.code(), Some(0));
    let b = tmp.path().join("b");
    assert_eq!(reports(&a.join("reports")), reports(&b.join("reports")));
    assert_eq!(read(&a.join("ledger.jsonl")), read(&b.join("ledger.jsonl")));

    // Reports depend on the ledger only.
    fs::remove_dir_all(a.join("scratch")).unwrap();
    let again = tmp.path().join("again");
    let o = run(&["report", "--ledger", a.join("ledger.jsonl").to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(reports(&again), reports(&a.join("reports")));

    // Replaying the stored candidates reproduces the ledger.
    let cfg_c = write_config(tmp.path(), "c", &format!("replay:{}", a.join("candidates").display()), MOCK_RUN);
    assert_eq!(run(&["run", "--config", cfg_c.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(read(&tmp.path().join("c/ledger.jsonl")), read(&a.join("ledger.jsonl")));

    // Resume after a kill mid-write: 13 complete records and a torn one.
    let full = read(&a.join("ledger.jsonl"));
    let lines: Vec<&str> = full.split_inclusive('\n').collect();
    let d = tmp.path().join("d");
    fs::create_dir_all(&d).unwrap();
    let mut partial: String = lines[..13].concat();
    partial.push_str(&lines[13][..lines[13].len() / 2]);
    fs::write(d.join("ledger.jsonl"), partial).unwrap();
    let cfg_d = write_config(tmp.path(), "d", &backend, MOCK_RUN);
    let o = run(&["run", "--config", cfg_d.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("verified 17 candidate(s)"), "{}", stdout(&o));
    assert_eq!(read(&d.join("ledger.jsonl")), full);
}

#[test]
fn cardinality_and_idempotent_rerun() {
    let tmp = tempfile::tempdir().unwrap();
    let body = "routines = [\"daxpy\", \"dsymv\"]\nmodes = [\"NameToCcode\", \"NameToOptCcode\"]\nmodels = [\"o4-mini\"]\n[sampling]\nn_samples = 3\n[verify]\nsizes = \"small\"\ncase_budget_ms = 2000\n";
    let cfg = write_config(tmp.path(), "out", &format!("mock:{}", corpus().display()), body);
    assert_eq!(run(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(0));
    let path = tmp.path().join("out/ledger.jsonl");
    let entries = ledger::read(&path).unwrap();
    assert_eq!(ledger::candidates(&entries).count(), 2 * 2 * 3);
    let before = read(&path);
    let o = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("verified 0 candidate(s), 0 passed, 12 already in the ledger"), "{}", stdout(&o));
    assert_eq!(read(&path), before);
    // Every sample is in the store with its sidecar.
    for i in 0..3 {
        assert!(tmp.path().join(format!("out/candidates/o4-mini/NameToOptCcode/dsymv/{i}.c")).is_file());
        assert!(tmp.path().join(format!("out/candidates/o4-mini/NameToOptCcode/dsymv/{i}.json")).is_file());
    }
}

#[test]
fn bench_rows_feed_the_perf_table() {
    let tmp = tempfile::tempdir().unwrap();
    let body = "routines = [\"daxpy\", \"dsymv\"]\nmodes = [\"NameToOptCcode\"]\nmodels = [\"gpt-4.1\"]\n\
                [sampling]\nn_samples = 4\n[verify]\nsizes = \"small\"\ncase_budget_ms = 2000\n\
                [bench]\nenabled = true\nlevel1_n = 4096\nlevel2_mn = 64\nreps = 3\nthreads = 1\n";
    let cfg = write_config(tmp.path(), "out", &format!("mock:{}", corpus().display()), body);
    let o = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = tmp.path().join("out");
    let entries = ledger::read(&out.join("ledger.jsonl")).unwrap();
    let refs: Vec<_> = ledger::references(&entries).collect();
    assert_eq!(refs.iter().map(|r| (r.routine.name(), r.combo.as_str())).collect::<Vec<_>>(), [("daxpy", "-"), ("dsymv", "uplo=L"), ("dsymv", "uplo=U")]);
    let perf = read(&out.join("reports/perf.txt"));
    assert!(perf.contains("best of passing candidates"), "{perf}");
    assert!(perf.contains("Ref"));

    // CSV values are the unrounded ledger numbers.
    let mut rdr = csv::Reader::from_path(out.join("reports/perf.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    for row in &rows {
        let (routine, combo) = (&row[0], &row[1]);
        let reference: f64 = row[3].parse().unwrap();
        let want_ref = refs.iter().find(|r| r.routine.name() == routine && r.combo == combo).unwrap().metric_value.unwrap();
        assert_eq!(reference, want_ref);
        let best = ledger::candidates(&entries)
            .filter(|c| c.routine.name() == routine)
            .flat_map(|c| c.bench.iter().filter(|s| s.combo == combo).filter_map(|s| s.metric_value))
            .fold(f64::NEG_INFINITY, f64::max);
        let value: f64 = row[7].parse().unwrap();
        assert_eq!(value, best);
        assert_eq!(row[8].parse::<f64>().unwrap(), value / reference);
    }
    // Rows are benchmarked per passing combination: the wrong-uplo entry
    // still gets its uplo=U row, the crasher nothing.
    for c in ledger::candidates(&entries) {
        let benched: Vec<&str> = c.bench.iter().map(|s| s.combo.as_str()).collect();
        let want: Vec<&str> = match (c.routine.name(), c.sample_index) {
            ("daxpy", _) => vec!["-"],
            ("dsymv", 0 | 1) => vec!["uplo=L", "uplo=U"],
            ("dsymv", 2) => vec!["uplo=U"],
            _ => vec![],
        };
        assert_eq!(benched, want, "{}", c.key());
    }
}
