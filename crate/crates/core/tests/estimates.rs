mod common;

use common::reference::{rel_err, same_3sf, RESOURCES};
use hm_core::estimator::{
    break_even, estimate, ClassicalReference, CodeFamily, CodeSpec, DistanceRule, FactoryConfig, ResourceEstimate,
    DEFAULT_COPIES, DEFAULT_GAMMA,
};

fn rows(family: CodeFamily, p: f64) -> Vec<ResourceEstimate> {
    let cfg = FactoryConfig::default();
    RESOURCES
        .iter()
        .map(|r| estimate(r.n, &CodeSpec::new(family, p), DEFAULT_GAMMA, DEFAULT_COPIES, &cfg).unwrap())
        .collect()
}

#[test]
fn logical_columns_reproduce() {
    for (r, e) in RESOURCES.iter().zip(rows(CodeFamily::Surface, 1e-3)) {
        assert_eq!(e.logical_qubits, r.logical, "n = {}", r.n);
        assert!(same_3sf(e.toffoli_total as f64, r.toffoli), "n = {}: {}", r.n, e.toffoli_total);
        assert!(same_3sf(e.ccz_infidelity_target, r.infidelity), "n = {}: {}", r.n, e.ccz_infidelity_target);
    }
}

#[test]
fn surface_distances_and_totals() {
    for (p, pick) in [(1e-3, 0), (1e-4, 1)] {
        for (r, e) in RESOURCES.iter().zip(rows(CodeFamily::Surface, p)) {
            let (d, total) = if pick == 0 { (r.d_1e3, r.surface_1e3) } else { (r.d_1e4, r.surface_1e4) };
            assert_eq!(e.distance, Some(d), "n = {}, p = {p}", r.n);
            assert!(rel_err(e.physical_qubits as f64, total) <= 0.05, "n = {}, p = {p}: {}", r.n, e.physical_qubits);
        }
    }
}

#[test]
fn offset_rule_is_more_conservative() {
    let cfg = FactoryConfig::default();
    for r in &RESOURCES {
        let mut spec = CodeSpec::new(CodeFamily::Surface, 1e-3);
        let fitted = estimate(r.n, &spec, DEFAULT_GAMMA, DEFAULT_COPIES, &cfg).unwrap();
        spec.distance_rule = DistanceRule::WithOffset;
        let offset = estimate(r.n, &spec, DEFAULT_GAMMA, DEFAULT_COPIES, &cfg).unwrap();
        assert!(offset.distance >= fitted.distance);
    }
}

#[test]
fn bivariate_bicycle_totals() {
    for (r, e) in RESOURCES.iter().zip(rows(CodeFamily::TwoGross, 1e-4)) {
        assert!(rel_err(e.physical_qubits as f64, r.bivariate_bicycle) <= 0.10, "n = {}: {}", r.n, e.physical_qubits);
        assert_eq!(e.family == CodeFamily::Bb360, r.n > 10_000_000_000_000);
        assert_eq!(e.approximate, e.family == CodeFamily::Bb360);
        assert_eq!(e.modules, Some(e.logical_qubits.div_ceil(12)));
    }
}

#[test]
fn classical_columns() {
    for (r, e) in RESOURCES.iter().zip(rows(CodeFamily::Surface, 1e-3)) {
        assert!(rel_err(e.classical_best_known_bits, r.best_known) <= 0.01, "n = {}", r.n);
        if r.n >= 1_000_000 {
            assert!(rel_err(e.classical_lower_bound_bits, r.lower_bound) <= 0.01, "n = {}", r.n);
        }
    }
}

#[test]
fn crossings_follow_the_columns() {
    // where the printed two-gross column meets the printed classical columns
    let printed = |i: usize, best: bool| {
        let r = &RESOURCES[i];
        (r.bivariate_bicycle, if best { r.best_known } else { r.lower_bound })
    };
    let first_below = |best: bool| (0..RESOURCES.len()).find(|&i| printed(i, best).0 < printed(i, best).1);
    let two_gross = rows(CodeFamily::TwoGross, 1e-4);
    let ours = |reference| break_even(&two_gross, reference).map(|(_, hi)| hi);
    assert_eq!(ours(ClassicalReference::BestKnown), first_below(true).map(|i| RESOURCES[i].n));
    assert_eq!(ours(ClassicalReference::LowerBound), first_below(false).map(|i| RESOURCES[i].n));
    assert_eq!(break_even(&two_gross, ClassicalReference::BestKnown), Some((100_000_000, 1_000_000_000)));
}

#[test]
fn factory_config_parses_and_validates() {
    let json = serde_json::to_string(&FactoryConfig::default()).unwrap();
    assert_eq!(FactoryConfig::from_json(&json).unwrap(), FactoryConfig::default());
    assert!(FactoryConfig::from_json(r#"{"surface": [], "bivariate_bicycle": [], "bb360_module_scale": 1.0}"#).is_err());
    assert!(FactoryConfig::from_json(r#"{"surface": [{"p": 0.001, "qubits": 1}], "extra": 1}"#).is_err());
    let spec = CodeSpec::new(CodeFamily::Surface, 0.02);
    assert!(estimate(10_000, &spec, DEFAULT_GAMMA, 7, &FactoryConfig::default()).is_err());
}
