use proptest::prelude::*;

use qlab_core::{analytic_oracle, classify, classify_all_equivalent, ConditionKind, ConditionTag, FunctionSpec, Verdict};

fn rank(v: Verdict) -> u8 {
    match v {
        Verdict::Convergent => 0,
        Verdict::Inconclusive => 1,
        Verdict::Divergent => 2,
    }
}

fn exp_power(beta: f64) -> FunctionSpec {
    FunctionSpec::ExpPower { alpha: 1.0, beta, tau0: 0.5 }
}

#[test]
fn equivalent_conditions_match_closed_forms_away_from_threshold() {
    let mut specs = vec![
        FunctionSpec::Power { c: 2.0, alpha: 0.5 },
        FunctionSpec::Power { c: 0.5, alpha: 4.0 },
        FunctionSpec::Affine { a: 0.5, b: 2.0 },
    ];
    specs.extend([0.3, 0.6, 2.0, 3.0].map(exp_power));
    for spec in &specs {
        let phi = spec.build().unwrap();
        for p in [0.5, 2.0] {
            if let FunctionSpec::ExpPower { beta, .. } = spec {
                // blocks decay like 2^{-k(1 - pβ)}; closer to the threshold
                // the tail after 40 blocks exceeds the tolerance
                if p * beta > 0.35 && p * beta < 1.35 {
                    continue;
                }
            }
            let report = classify_all_equivalent(&phi, p).unwrap();
            assert!(report.consistent, "{spec:?} p = {p}");
            for r in &report.reports {
                let expected = analytic_oracle(spec, &r.kind).unwrap();
                assert_eq!(r.verdict, expected, "{spec:?} p = {p} {}: {}", r.kind.tag, r.note);
            }
        }
    }
}

#[test]
fn t42_depends_on_dimension() {
    // exp(t^0.6) − 1 + 1/2: β(n − 1) = 0.6 in the plane and 1.2 in space
    let phi = exp_power(0.6).build().unwrap();
    assert_eq!(classify(&phi, ConditionKind::t42(2)).unwrap().verdict, Verdict::Convergent);
    assert_eq!(classify(&phi, ConditionKind::t42(3)).unwrap().verdict, Verdict::Divergent);
    assert_eq!(classify(&phi, ConditionKind::l51()).unwrap().verdict, Verdict::Convergent);
}

#[test]
fn lower_limit_does_not_change_verdict() {
    for spec in [exp_power(0.2), exp_power(2.0), FunctionSpec::Power { c: 1.0, alpha: 1.5 }] {
        let phi = spec.build().unwrap();
        for kind in [ConditionKind::c24(1.0), ConditionKind::c26(1.0), ConditionKind::c29(1.0)] {
            let base = classify(&phi, kind).unwrap().verdict;
            for lower in [2.0, 20.0] {
                let moved = classify(&phi, kind.with_lower(lower)).unwrap();
                assert_eq!(moved.lower, lower);
                assert_eq!(moved.verdict, base, "{spec:?} {} lower {lower}", kind.tag);
            }
        }
    }
}

#[test]
fn reports_carry_block_sums() {
    let phi = FunctionSpec::Power { c: 1.0, alpha: 2.0 }.build().unwrap();
    let r = classify(&phi, ConditionKind::c29(1.0)).unwrap();
    assert_eq!(r.kind.tag, ConditionTag::C29);
    assert!(!r.block_sums.is_empty());
    assert!(r.block_sums.iter().all(|b| *b >= 0.0));
    // ∫_δ^∞ dτ/τ^{3/2} = 2/√δ with default δ = 1
    assert_eq!(r.lower, 1.0);
    assert!((r.partial_sum + r.tail_estimate - 2.0).abs() <= 1e-6, "{}", r.partial_sum);
}

#[test]
fn invalid_exponent_is_rejected() {
    let phi = FunctionSpec::Power { c: 1.0, alpha: 2.0 }.build().unwrap();
    assert!(classify(&phi, ConditionKind::c29(-1.0)).is_err());
    assert!(classify(&phi, ConditionKind::c29(f64::NAN)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn verdict_is_monotone_in_p(beta in 0.2f64..3.0, p1 in 0.2f64..4.0, p2 in 0.2f64..4.0) {
        let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
        let phi = exp_power(beta).build().unwrap();
        let a = classify(&phi, ConditionKind::c29(lo)).unwrap().verdict;
        let b = classify(&phi, ConditionKind::c29(hi)).unwrap().verdict;
        prop_assert!(rank(a) <= rank(b), "beta {} p {} -> {:?}, p {} -> {:?}", beta, lo, a, hi, b);
    }
}
