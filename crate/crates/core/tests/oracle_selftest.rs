use kgau_core::selftest::{run, SelftestOptions};

#[test]
fn oracle_matches_dense_evaluator_and_survives_poison() {
    let report = run(&SelftestOptions::default());
    let mut text = Vec::new();
    report.write_text(&mut text).unwrap();
    println!("{}", String::from_utf8(text).unwrap());
    assert!(report.passed(), "first failure: {:?}", report.first_failure());
    assert_eq!(report.routines.len(), 20);
}
