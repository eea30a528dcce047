use approx::assert_relative_eq;

use qlab_core::mean_inequality::{jensen_check, random_trials, sweep};
use qlab_core::{ball_mean, spherical_average, verify_lemma31, MonotoneMap, RadialField, Verdict};

/// `K = c·r^{-a}`, `Φ = t^α` on the unit ball of `R^n`:
/// left side `c^{-1/p} p/a`, ball mean `n c^α/(n − aα)`,
/// right side `(αp/n) (eM)^{-1/(αp)}`.
fn closed_form(c: f64, a: f64, alpha: f64, p: f64, n: usize) -> (f64, f64, f64) {
    let nf = n as f64;
    let lhs = c.powf(-1.0 / p) * p / a;
    let m = nf * c.powf(alpha) / (nf - a * alpha);
    let rhs = alpha * p / nf * (std::f64::consts::E * m).powf(-1.0 / (alpha * p));
    (lhs, m, rhs)
}

#[test]
fn power_fields_match_closed_forms() {
    for &(c, a, alpha, p, n) in &[
        (1.0, 1.0, 1.0, 1.0, 2),
        (2.0, 0.5, 2.0, 1.5, 3),
        (0.7, 1.2, 1.5, 0.8, 2),
        (1.3, 2.0, 1.0, 2.5, 4),
    ] {
        let k = RadialField::power(n, c, -a).unwrap();
        let phi = MonotoneMap::power(1.0, alpha).unwrap();
        let rec = verify_lemma31(&k, &phi, p).unwrap();
        let (lhs, m, rhs) = closed_form(c, a, alpha, p, n);
        assert_relative_eq!(rec.lhs, lhs, max_relative = 1e-8);
        assert_relative_eq!(rec.m, m, max_relative = 1e-8);
        assert_relative_eq!(rec.rhs, rhs, max_relative = 1e-8);
        assert!(rec.pass && rec.lhs >= rec.rhs);
    }
}

#[test]
fn constant_field_has_infinite_left_side() {
    let k = RadialField::constant(3, 2.0).unwrap();
    let rec = verify_lemma31(&k, &MonotoneMap::power(1.0, 2.0).unwrap(), 1.0).unwrap();
    assert_eq!(rec.lhs, f64::INFINITY);
    assert_eq!(rec.lhs_verdict, Verdict::Divergent);
    assert_relative_eq!(rec.m, 4.0, max_relative = 1e-10);
    assert!(rec.pass);
}

#[test]
fn exponential_phi_with_singular_field_has_infinite_mean() {
    // exp(K) − 1 with K = r^{-0.1} outgrows r^{-n} only for r ≈ e^{-45}
    let k = RadialField::power(4, 1.0, -0.1).unwrap();
    let phi = MonotoneMap::exp_power(1.0, 1.0, 0.0).unwrap();
    let mean = ball_mean(&k, &phi).unwrap();
    assert_eq!(mean.value, f64::INFINITY);
    let rec = verify_lemma31(&k, &phi, 2.0).unwrap();
    assert_eq!(rec.rhs, 0.0);
    assert!(rec.pass);
}

#[test]
fn linear_field_average_is_its_centre_value() {
    let k = RadialField::linear(1.5, vec![0.3, -0.2, 0.4]).unwrap();
    for r in [0.1, 0.5, 0.9] {
        assert_relative_eq!(spherical_average(&k, r).unwrap(), 1.5, max_relative = 1e-14);
    }
    let report = jensen_check(&k, &MonotoneMap::power(1.0, 2.0).unwrap(), &[0.2, 0.6, 0.95]).unwrap();
    assert!(report.holds);
    // Φ(k) ≤ mean Φ(K) is strict for a non-constant field and strictly convex Φ
    assert!(report.worst_gap < 0.0);
}

#[test]
fn radius_outside_the_ball_is_rejected() {
    let k = RadialField::constant(2, 1.0).unwrap();
    assert!(spherical_average(&k, 1.0).is_err());
    assert!(spherical_average(&k, 0.0).is_err());
    assert!(verify_lemma31(&k, &MonotoneMap::identity(), 0.0).is_err());
}

#[test]
fn random_sweep_has_no_violations_and_is_reproducible() {
    let a = sweep(7, 30).unwrap();
    assert_eq!(a.trials, 30);
    assert_eq!(a.violations, 0);
    assert_eq!(a.passes, 30);
    let b = sweep(7, 30).unwrap();
    assert_eq!(a, b);
    assert_eq!(random_trials(7, 30), random_trials(7, 30));
    assert_ne!(random_trials(7, 30), random_trials(8, 30));
}
