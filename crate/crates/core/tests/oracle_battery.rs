use branchsim_core::oracles::{battery, BATTERY};

#[test]
fn every_oracle_passes_its_threshold() {
    let reports = battery(20261019, None).unwrap();
    assert_eq!(reports.len(), BATTERY.len());
    for r in &reports {
        println!("{:<24} err {:.3e} threshold {:.1e} samples {}", r.name, r.max_abs_error, r.threshold, r.samples);
    }
    for r in &reports {
        assert!(r.passed, "{} failed: {:.3e} > {:.1e}", r.name, r.max_abs_error, r.threshold);
    }
}

#[test]
fn filter_selects_by_name() {
    let reports = battery(1, Some("kernel")).unwrap();
    let names: Vec<_> = reports.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, vec!["dirichlet_kernel", "windowed_kernel"]);
}
