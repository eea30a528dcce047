use std::f64::consts::PI;

use approx::assert_relative_eq;

use qlab_core::modulus::boundary_arc_norm;
use qlab_core::{
    dimension_constants, norm_divergence, normalize_phi, ring_modulus, spherical_norm, ExtremalMap, MonotoneMap,
    RadialField, Verdict,
};

#[test]
fn map_is_radial_stretch_onto_ring() {
    let phi = MonotoneMap::power(1.0, 2.0).unwrap();
    let map = ExtremalMap::build(&phi, 3, 1024, 1e-6).unwrap();
    let x = [0.2, -0.3, 0.1];
    let t = (0.04f64 + 0.09 + 0.01).sqrt();
    let y = map.eval(&x).unwrap();
    let rho = map.profile.rho(t).unwrap();
    for i in 0..3 {
        assert_relative_eq!(y[i], rho * x[i] / t, max_relative = 1e-12);
    }
    // ρ(t) = exp(1.5 t^{2/3})
    assert_relative_eq!(rho, (1.5 * t.powf(2.0 / 3.0)).exp(), max_relative = 1e-8);
    assert_relative_eq!(map.profile.rho(1.0).unwrap(), map.big_r, max_relative = 1e-12);
    assert!(map.eval(&[0.5, 0.5]).is_err());
}

#[test]
fn profiles_pass_self_checks_for_several_phi() {
    for phi in [
        MonotoneMap::power(1.0, 2.0).unwrap(),
        MonotoneMap::power(1.0, 3.0).unwrap(),
        MonotoneMap::power(2.0, 1.5).unwrap(),
        MonotoneMap::affine(1.0, 1.0).unwrap(),
    ] {
        let map = ExtremalMap::build(&phi, 2, 2048, 1e-6).unwrap();
        let check = map.profile.check();
        assert!(check.all_ok(), "{phi:?}: {check:?}");
        assert!(map.profile.max_residual() <= 1e-10);
        assert!(map.profile.tail <= map.profile.tail_bound);
        let energy = map.phi_energy().unwrap();
        assert!(energy.within_bound, "{phi:?}: {energy:?}");
        for r in [1e-3, 0.1, 0.7] {
            let exact = map.distortions(r).unwrap();
            let fd = map.fd_distortions(r).unwrap();
            assert_relative_eq!(fd.k_o, exact.k_o, max_relative = 1e-5);
            assert_relative_eq!(exact.k_o, map.profile.k_at(r).unwrap(), max_relative = 1e-9);
        }
    }
}

#[test]
fn boundary_spheres_shrink_to_the_unit_sphere() {
    let map = ExtremalMap::build(&MonotoneMap::power(1.0, 2.0).unwrap(), 2, 1024, 1e-6).unwrap();
    let report = map.boundary_report(&[0.1, 1e-3, 1e-6, 1e-9]).unwrap();
    assert!(report.rho_decreasing_to_one && report.diameters_above_two);
    for probe in &report.probes {
        assert_relative_eq!(probe.diameter, 2.0 * probe.rho, max_relative = 1e-15);
    }
}

#[test]
fn admission_follows_growth_and_divergence() {
    assert!(normalize_phi(&MonotoneMap::power(1.0, 0.5).unwrap()).is_err());
    assert!(normalize_phi(&MonotoneMap::exp_power(1.0, 0.5, 0.0).unwrap()).is_ok());
    // ∫ dτ/(τ ln τ) diverges for exp(t) − 1
    assert!(normalize_phi(&MonotoneMap::exp_power(1.0, 1.0, 0.0).unwrap()).is_err());
}

#[test]
fn ring_modulus_closed_forms() {
    assert_relative_eq!(ring_modulus(1.0, std::f64::consts::E, 2).unwrap(), 2.0 * PI, max_relative = 1e-14);
    // ω_2 = 4π, (ln 4)^{-2}
    assert_relative_eq!(ring_modulus(0.5, 2.0, 3).unwrap(), 4.0 * PI / 4f64.ln().powi(2), max_relative = 1e-14);
    assert_eq!(ring_modulus(1.0, f64::INFINITY, 2).unwrap(), 0.0);
    assert!(ring_modulus(2.0, 1.0, 2).is_err());
    assert!(ring_modulus(1.0, 2.0, 1).is_err());
}

#[test]
fn dimension_constants_low_dimensions() {
    let d2 = dimension_constants(2).unwrap();
    assert_relative_eq!(d2.big_omega, PI, max_relative = 1e-15);
    assert_relative_eq!(d2.omega, 2.0 * PI, max_relative = 1e-15);
    let d3 = dimension_constants(3).unwrap();
    assert_relative_eq!(d3.big_omega, 4.0 * PI / 3.0, max_relative = 1e-15);
    assert_relative_eq!(d3.omega, 4.0 * PI, max_relative = 1e-15);
}

#[test]
fn spherical_norms_of_power_fields() {
    // n = 3: (∫ Q² dA)^{1/2} = 2√π c r^{1+a}
    let q = RadialField::power(3, 1.5, -0.5).unwrap();
    for r in [0.1, 0.5] {
        let expected = 2.0 * PI.sqrt() * 1.5 * f64::powf(r, 0.5);
        assert_relative_eq!(spherical_norm(&q, r).unwrap(), expected, max_relative = 1e-10);
    }
    assert_eq!(norm_divergence(&RadialField::constant(3, 1.0).unwrap(), 0.5).unwrap().verdict, Verdict::Divergent);
    assert_eq!(norm_divergence(&q, 0.5).unwrap().verdict, Verdict::Convergent);
}

#[test]
fn boundary_arc_of_constant_field() {
    // |x₀ + e^{iθ}| < 1 for θ in (2π/3, 4π/3): arc length 2π/3
    let q = RadialField::constant(2, 1.0).unwrap();
    assert_relative_eq!(boundary_arc_norm(&q, 1.0).unwrap(), 2.0 * PI / 3.0, max_relative = 1e-10);
    assert!(boundary_arc_norm(&RadialField::constant(3, 1.0).unwrap(), 1.0).is_err());
}
