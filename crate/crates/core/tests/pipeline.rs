use qrobust::experiment::{report_to_dir, ExperimentConfig, RegularizationRow, MetricsTable};
use qrobust::lipschitz::LipschitzReport;

#[test]
fn report_writes_every_table_with_stable_headers() {
    let cfg = ExperimentConfig::from_json(
        r#"{"train_count": 40, "test_count": 20, "epochs": 1, "long_epochs": 2, "snapshot_epochs": [1, 2],
            "seeds": [5], "attack_samples": 4, "attack_steps": 2, "lipschitz_probes": 2}"#,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = report_to_dir(&cfg, dir.path()).unwrap();
    assert!(paths.iter().all(|p| p.exists()));
    let read = |name: &str| std::fs::read_to_string(dir.path().join(name)).unwrap();

    let sweep = read("attack_sweep.csv");
    assert_eq!(sweep.lines().next().unwrap(), MetricsTable::CSV_HEADER);
    // 6 checkpoints at epoch 1: the clean row plus 3 budgets
    assert_eq!(sweep.lines().count(), 1 + 6 * 4);
    for line in sweep.lines().skip(1) {
        let v: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&v));
    }

    let transfer = read("transfer.csv");
    assert_eq!(transfer.lines().count(), 7);
    assert!(transfer.starts_with("source,"));

    let lip = read("lipschitz.csv");
    assert_eq!(lip.lines().next().unwrap(), LipschitzReport::CSV_HEADER);
    // 3 reup variants with two snapshots each, plus three single snapshots
    assert_eq!(lip.lines().count(), 1 + 9);

    let reg = read("regularization.csv");
    assert_eq!(reg.lines().next().unwrap(), RegularizationRow::CSV_HEADER);
    assert_eq!(reg.lines().count(), 1 + 6);

    let checkpoints = std::fs::read_dir(dir.path().join("checkpoints")).unwrap().count();
    assert_eq!(checkpoints, 9);
    assert!(dir.path().join("train.qads").exists() && dir.path().join("test.qads").exists());
    let heatmaps: Vec<_> = std::fs::read_dir(dir.path().join("heatmaps")).unwrap().collect();
    assert!(!heatmaps.is_empty());
}
