use meanx_core::{
    envelope_ordering_check, parse_mean, shipped_means, transfer_theorem_check, verify_suite_with,
    FamilyWindow, IterationConfig, Suite, SuiteOptions,
};

fn opts(samples: usize) -> SuiteOptions {
    SuiteOptions {
        samples,
        ..SuiteOptions::default()
    }
}

#[test]
fn every_shipped_mean_passes_every_suite() {
    let cfg = IterationConfig::default();
    for m in shipped_means() {
        for suite in Suite::ALL {
            let rep = verify_suite_with(&m, suite, 11, &cfg, &opts(12)).unwrap();
            for p in &rep.properties {
                assert!(p.passed, "{m} / {suite}: {p:?}");
            }
            assert!(rep.passed);
        }
    }
}

#[test]
fn suite_reports_are_reproducible() {
    let cfg = IterationConfig::default();
    let m = parse_mean("gini:2,-1").unwrap();
    let a = verify_suite_with(&m, Suite::Extension, 3, &cfg, &opts(8)).unwrap();
    let b = verify_suite_with(&m, Suite::Extension, 3, &cfg, &opts(8)).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
}

#[test]
fn transfer_holds_for_power_and_gini_bases() {
    let cfg = IterationConfig::default();
    let window = FamilyWindow::default();
    for text in ["power:2", "gini:1,-1", "gini:2,-1"] {
        let m = parse_mean(text).unwrap();
        let rep = transfer_theorem_check(&m, &window, 16, 5, &cfg).unwrap();
        assert!(rep.passed, "{text}: {:?}", rep.discrepancies);
        assert!(rep.chain_points > 0);
    }
}

#[test]
fn ordering_chain_at_a_fixed_point() {
    let cfg = IterationConfig::default();
    let m = parse_mean("gini:2,-1").unwrap();
    let rep =
        envelope_ordering_check(&m, &[0.5, 2.0, 7.0], &FamilyWindow::default(), &cfg).unwrap();
    assert!(rep.holds, "{:?}", rep.violations);
    assert!(rep.global_lower <= rep.local_lower + 1e-9);
    assert!(rep.local_upper <= rep.global_upper + 1e-9);
    // Gini(2,-1) lies strictly between the geometric and arithmetic means
    assert!(rep.local_lower < rep.extension && rep.extension < rep.local_upper);
}
