//! Dimension constants, ring modulus and spherical `(n−1)`-norms.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::classifier::{ConditionKind, ConditionReport, ConditionTag};
use crate::dyadic::{toward_zero_blocks, BlockRule};
use crate::error::{QlabError, Result};
use crate::formats::extended;
use crate::mean_inequality::RadialField;
use crate::quadrature::{integrate, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionConstants {
    pub n: usize,
    /// Area `ω_{n−1}` of the unit sphere.
    pub omega: f64,
    /// Volume `Ω_n` of the unit ball.
    #[serde(rename = "Omega")]
    pub big_omega: f64,
}

/// `Γ(m/2)` for a positive integer `m`, by the recurrence from `Γ(1) = 1`
/// and `Γ(1/2) = √π`.
pub fn gamma_half(m: usize) -> f64 {
    assert!(m > 0, "Γ has a pole at 0");
    let mut x = if m.is_multiple_of(2) { 1.0 } else { 0.5 };
    let mut g = if m.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    while 2.0 * x < m as f64 {
        g *= x;
        x += 1.0;
    }
    g
}

pub fn dimension_constants(n: usize) -> Result<DimensionConstants> {
    if n < 2 {
        return Err(QlabError::spec("n", format!("dimension must be at least 2, got {n}")));
    }
    let big_omega = PI.powf(n as f64 / 2.0) / gamma_half(n + 2);
    Ok(DimensionConstants {
        n,
        omega: n as f64 * big_omega,
        big_omega,
    })
}

/// Modulus `ω_{n−1} (ln(R/r))^{1−n}` of the curves joining the boundary
/// spheres of the ring `r < |x| < R`.
pub fn ring_modulus(r: f64, big_r: f64, n: usize) -> Result<f64> {
    let dc = dimension_constants(n)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(QlabError::spec("r", format!("must be positive, got {r}")));
    }
    if !(big_r > r) {
        return Err(QlabError::spec("R", format!("must exceed r = {r}, got {big_r}")));
    }
    if big_r == f64::INFINITY {
        return Ok(0.0);
    }
    Ok(dc.omega * (big_r / r).ln().powf(1.0 - n as f64))
}

/// `‖Q‖_{n−1}(0, r) = (∫_{S(r)} Q^{n−1} dA)^{1/(n−1)}`.
pub fn spherical_norm(q: &RadialField, r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(QlabError::Domain(format!("radius {r} outside (0, 1)")));
    }
    let n = q.dim();
    let dc = dimension_constants(n)?;
    let e = (n - 1) as f64;
    let mean = q.spherical_mean_of(r, |v| v.powf(e))?;
    Ok((mean * dc.omega * r.powf(e)).powf(1.0 / e))
}

/// Norm of `Q` over the arc `B² ∩ S(x₀, r)` for the boundary point
/// `x₀ = (1, 0)`; the arc is `x₀ + r e^{iθ}` with `cos θ < −r/2`.
pub fn boundary_arc_norm(q: &RadialField, r: f64) -> Result<f64> {
    if q.dim() != 2 {
        return Err(QlabError::Unsupported(
            "boundary caps are only available in the plane".into(),
        ));
    }
    if !(r > 0.0 && r < 2.0) {
        return Err(QlabError::Domain(format!("radius {r} outside (0, 2)")));
    }
    let theta_c = (-0.5 * r).acos();
    let res = integrate(
        |theta| q.value_at(&[1.0 + r * theta.cos(), r * theta.sin()]),
        theta_c,
        2.0 * PI - theta_c,
        &QuadOptions::default(),
    );
    Ok(r * res.value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalNormProfile {
    pub n: usize,
    /// Centre of the spheres, always the origin here.
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    #[serde(with = "extended::vec")]
    pub values: Vec<f64>,
}

pub fn spherical_norm_profile(q: &RadialField, radii: &[f64]) -> Result<SphericalNormProfile> {
    let values = radii
        .iter()
        .map(|&r| spherical_norm(q, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(SphericalNormProfile {
        n: q.dim(),
        center: vec![0.0; q.dim()],
        radii: radii.to_vec(),
        values,
    })
}

/// Classifies `∫_0^δ dr / ‖Q‖_{n−1}(0, r)` with blocks dyadic toward 0.
pub fn norm_divergence(q: &RadialField, delta: f64) -> Result<ConditionReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(QlabError::spec("delta", format!("must lie in (0, 1), got {delta}")));
    }
    let n = q.dim();
    dimension_constants(n)?;
    spherical_norm(q, delta)?;
    let rule = BlockRule::default();
    let sums = toward_zero_blocks(
        |r| {
            let norm = spherical_norm(q, r).unwrap_or(f64::NAN);
            if norm == f64::INFINITY {
                0.0
            } else {
                1.0 / norm
            }
        },
        delta,
        rule.kmax,
        &QuadOptions::default(),
    );
    let kind = ConditionKind {
        tag: ConditionTag::NormDivergence,
        p: (n - 1) as f64,
        dimension: Some(n),
        lower: Some(delta),
    };
    Ok(ConditionReport::from_blocks(kind, delta, &sums, &rule))
}
