use rpauth::harness::{emit_csv, parse_roc_csv, run_roc, ExperimentPlan};

#[test]
fn emitted_roc_parses_back_to_ten_digits() {
    let plan = ExperimentPlan {
        trials: 500,
        seed: 9,
        ..ExperimentPlan::default()
    };
    let points = run_roc(&plan).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("roc.csv");
    emit_csv(&points, &path).unwrap();
    let rows = parse_roc_csv(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(rows.len(), points.len());
    for (p, row) in points.iter().zip(&rows) {
        let want = [
            p.pfa_set.value(),
            p.pfa_emp.value(),
            p.pd_emp.value(),
            p.pd_analytic.value(),
            p.pd_approx.value(),
            p.stderr_pd,
        ];
        for (w, g) in want.iter().zip(row) {
            assert!((w - g).abs() <= 5e-10 * w.abs(), "{w} vs {g}");
        }
    }
}
