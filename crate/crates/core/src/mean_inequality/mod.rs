//! Both sides of the mean inequality
//!
//! ```text
//! ∫₀¹ dr / (r k(r)^{1/p})  ≥  (1/n) ∫_{eM}^∞ dτ / (τ [Φ⁻¹(τ)]^{1/p})
//! ```
//!
//! for a field `K` on the unit ball with spherical means `k(r)` and ball
//! mean `M` of `Φ ∘ K`.

pub mod field;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::{upward_blocks, BlockRule, Verdict};
use crate::error::{QlabError, Result};
use crate::formats::{extended, FieldSpec, FunctionSpec};
use crate::monotone::{default_convexity_grid, MonotoneMap};
use crate::quadrature::QuadOptions;
use crate::sampling;

pub use field::RadialField;

/// Relative comparison slack between the two sides.
pub const TOL_CMP: f64 = 1e-6;

/// Average of `K` over the sphere `|x| = r`.
pub fn spherical_average(k: &RadialField, r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(QlabError::Domain(format!("radius {r} outside (0, 1)")));
    }
    k.spherical_average(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallMean {
    #[serde(with = "extended")]
    pub value: f64,
    #[serde(with = "extended")]
    pub abs_error: f64,
    pub verdict: Verdict,
}

/// Mean of `Φ ∘ K` over the unit ball, `n ∫₀¹ (mean of Φ∘K on S(r)) r^{n-1} dr`.
///
/// The integral is taken in `s = ln(1/r)` with blocks dyadic in `s`, so a
/// blow-up of `Φ ∘ K` that only overtakes `r^{-n}` at radii far below the
/// `f64` range is still seen. Radial fields are evaluated in logarithms.
pub fn ball_mean(k: &RadialField, phi: &MonotoneMap) -> Result<BallMean> {
    ball_mean_with(k, phi, &BlockRule::default(), &QuadOptions::default())
}

fn ball_mean_with(
    k: &RadialField,
    phi: &MonotoneMap,
    rule: &BlockRule,
    quad: &QuadOptions,
) -> Result<BallMean> {
    let n = k.dim() as f64;
    // surface the dimension error before integrating
    k.spherical_mean_of(0.5, |v| phi.eval(v))?;
    let ln_n = n.ln();
    let sums = upward_blocks(
        |s| match k.ln_radial_value_at_log(s) {
            Some(ln_k) => (phi.ln_eval_at_log(ln_k) + ln_n - n * s).exp(),
            None => {
                let m = k
                    .spherical_mean_of((-s).exp(), |v| phi.eval(v))
                    .unwrap_or(f64::NAN);
                if m == 0.0 {
                    0.0
                } else {
                    n * m * (-n * s).exp()
                }
            }
        },
        0.0,
        rule.kmax,
        quad,
    );
    let a = rule.assess(&sums);
    let value = match a.verdict {
        Verdict::Divergent => f64::INFINITY,
        _ => a.total(),
    };
    Ok(BallMean {
        value,
        abs_error: sums.abs_error + a.tail_estimate.abs(),
        verdict: a.verdict,
    })
}

/// Both sides of the inequality for one `(K, Φ, p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationRecord {
    #[serde(with = "extended")]
    pub lhs: f64,
    #[serde(with = "extended")]
    pub rhs: f64,
    /// Ball mean of `Φ ∘ K`.
    #[serde(with = "extended")]
    pub m: f64,
    pub p: f64,
    pub n: usize,
    pub pass: bool,
    #[serde(with = "extended")]
    pub lhs_error: f64,
    #[serde(with = "extended")]
    pub rhs_error: f64,
    #[serde(with = "extended")]
    pub m_error: f64,
    pub lhs_verdict: Verdict,
    pub rhs_verdict: Verdict,
    pub m_verdict: Verdict,
    /// `1 / k(e^{-s})^{1/p}` at the outer end of the last `s`-block.
    #[serde(with = "extended")]
    pub lhs_integrand_at_end: f64,
    pub convex: bool,
    pub notes: Vec<String>,
}

/// `lhs ≥ rhs − TOL_CMP·min(lhs, rhs)`.
pub fn sides_pass(lhs: f64, rhs: f64) -> bool {
    if lhs == f64::INFINITY {
        return true;
    }
    lhs >= rhs - TOL_CMP * lhs.min(rhs)
}

/// Evaluates both sides and compares them.
pub fn verify_lemma31(k: &RadialField, phi: &MonotoneMap, p: f64) -> Result<VerificationRecord> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(QlabError::spec("p", format!("must be positive, got {p}")));
    }
    let rule = BlockRule::default();
    let quad = QuadOptions::default();
    let n = k.dim();
    let mut notes = Vec::new();

    let convex = phi.check_convex(&default_convexity_grid()).convex;
    if !convex {
        notes.push("phi failed the convexity check; the inequality is not guaranteed".into());
    }

    // left side after r = e^{-s}
    let k_at_log = |s: f64| -> f64 {
        match k.radial_value_at_log(s) {
            Some(v) => v,
            None => k.spherical_average((-s).exp()).unwrap_or(f64::NAN),
        }
    };
    let inv_p = 1.0 / p;
    let lhs_integrand = |s: f64| 1.0 / k_at_log(s).powf(inv_p);
    k.spherical_mean_of(0.5, |v| v)?;
    let lhs_sums = upward_blocks(lhs_integrand, 0.0, rule.kmax, &quad);
    let lhs_a = rule.assess(&lhs_sums);
    let lhs = match lhs_a.verdict {
        Verdict::Divergent => f64::INFINITY,
        _ => lhs_a.total(),
    };
    if lhs_a.verdict == Verdict::Inconclusive {
        notes.push(format!("left side inconclusive: {}", lhs_a.note));
    }

    let mean = ball_mean_with(k, phi, &rule, &quad)?;
    if mean.verdict == Verdict::Inconclusive {
        notes.push("ball mean inconclusive; using partial sum plus tail estimate".into());
    }

    let (rhs, rhs_error, rhs_verdict) = if mean.value == f64::INFINITY {
        notes.push("M = ∞, right side vanishes".into());
        (0.0, 0.0, Verdict::Convergent)
    } else if mean.value <= 0.0 {
        notes.push("M = 0, right side diverges at its lower limit".into());
        (f64::INFINITY, 0.0, Verdict::Divergent)
    } else {
        let phi_p = phi.power_compose(p)?;
        let start = 1.0 + mean.value.ln();
        let sums = upward_blocks(
            |u| (-phi_p.ln_inverse_at_log(u)).exp(),
            start,
            rule.kmax,
            &quad,
        );
        let a = rule.assess(&sums);
        let nf = n as f64;
        let value = match a.verdict {
            Verdict::Divergent => f64::INFINITY,
            _ => a.total() / nf,
        };
        (value, (sums.abs_error + a.tail_estimate.abs()) / nf, a.verdict)
    };

    Ok(VerificationRecord {
        lhs,
        rhs,
        m: mean.value,
        p,
        n,
        pass: sides_pass(lhs, rhs),
        lhs_error: lhs_sums.abs_error + lhs_a.tail_estimate.abs(),
        rhs_error,
        m_error: mean.abs_error,
        lhs_verdict: lhs_a.verdict,
        rhs_verdict,
        m_verdict: mean.verdict,
        lhs_integrand_at_end: lhs_integrand(lhs_sums.last_edge()),
        convex,
        notes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JensenReport {
    pub holds: bool,
    /// Largest `Φ(k(r)) − mean(Φ∘K)` seen (non-positive when the check holds).
    pub worst_gap: f64,
    pub worst_radius: f64,
}

/// Checks `Φ(k(r)) ≤ mean of Φ∘K over S(r)` at the given radii.
pub fn jensen_check(k: &RadialField, phi: &MonotoneMap, radii: &[f64]) -> Result<JensenReport> {
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_radius = f64::NAN;
    let mut holds = true;
    for &r in radii {
        let left = phi.eval(spherical_average(k, r)?);
        let right = k.spherical_mean_of(r, |v| phi.eval(v))?;
        let gap = left - right;
        if right.is_finite() && gap > 1e-12 * right.abs().max(1.0) {
            holds = false;
        }
        if gap > worst_gap || worst_radius.is_nan() {
            worst_gap = gap;
            worst_radius = r;
        }
    }
    Ok(JensenReport {
        holds,
        worst_gap,
        worst_radius,
    })
}

/// One randomized trial of the inequality suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub field: FieldSpec,
    pub phi: FunctionSpec,
    pub p: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: Trial,
    pub record: VerificationRecord,
    pub jensen: JensenReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub seed: u64,
    pub trials: usize,
    pub passes: usize,
    pub violations: usize,
    pub jensen_failures: usize,
    pub vacuous: usize,
    pub outcomes: Vec<TrialOutcome>,
}

/// Growth order of `Φ` at infinity, `∞` for exponential families.
fn growth_order(phi: &FunctionSpec) -> f64 {
    match phi {
        FunctionSpec::Power { alpha, .. } => *alpha,
        FunctionSpec::ExpPower { .. } => f64::INFINITY,
        FunctionSpec::Affine { .. } => 1.0,
        FunctionSpec::Pwl { blow_up, .. } => {
            if blow_up.is_some() {
                f64::INFINITY
            } else {
                1.0
            }
        }
    }
}

/// Draws the `(K, Φ, p)` triples of the randomized suite.
///
/// Singular fields `c·r^{-a}` mostly take `a·q < n`, where `q` is the growth
/// order of `Φ`, so that the ball mean is finite and the comparison is not
/// vacuous.
pub fn random_trials(seed: u64, count: usize) -> Vec<Trial> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let phi = match rng.gen_range(0..20) {
                0..=6 => FunctionSpec::Power {
                    c: rng.gen_range(0.5..2.0),
                    alpha: rng.gen_range(1.0..3.0),
                },
                7..=10 => FunctionSpec::ExpPower {
                    alpha: rng.gen_range(0.2..1.0),
                    beta: rng.gen_range(1.0..2.0),
                    tau0: rng.gen_range(0.0..1.0),
                },
                11..=14 => FunctionSpec::Affine {
                    a: rng.gen_range(0.5..2.0),
                    b: rng.gen_range(0.0..1.0),
                },
                _ => {
                    let blow = rng.gen_bool(0.3);
                    FunctionSpec::from_map(&sampling::random_convex_table(&mut rng, blow))
                        .expect("tables always have a spec")
                }
            };
            let p = rng.gen_range(0.5..3.0);
            // bounded fields make the left side infinite, so most trials use
            // singular powers: 1 in 20 constant, 17 in 20 powers, 2 in 20 linear
            let kind = match rng.gen_range(0..20) {
                0 => 0,
                1..=17 => 1,
                _ => 2,
            };
            let n = if kind == 2 { rng.gen_range(2..=3) } else { rng.gen_range(2..=4) };
            let nf = n as f64;
            let field = match kind {
                0 => FieldSpec::Constant {
                    c: rng.gen_range(0.5..3.0),
                },
                1 => {
                    let q = growth_order(&phi);
                    let a = if q.is_infinite() || rng.gen_bool(0.1) {
                        rng.gen_range(0.05..1.5)
                    } else if rng.gen_bool(0.9) {
                        rng.gen_range(0.05..0.95) * nf / q
                    } else {
                        nf / q + rng.gen_range(0.0..1.0)
                    };
                    FieldSpec::Power {
                        c: rng.gen_range(0.5..2.0),
                        exponent: -a,
                    }
                }
                _ => {
                    let c0 = rng.gen_range(1.0..2.0);
                    let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt().max(1e-12);
                    let scale = rng.gen_range(0.0..0.9) * c0 / norm;
                    FieldSpec::Linear {
                        c0,
                        grad: dir.iter().map(|d| d * scale).collect(),
                    }
                }
            };
            Trial { field, phi, p, n }
        })
        .collect()
}

/// Runs the randomized suite; trials are independent and evaluated in parallel.
pub fn sweep(seed: u64, count: usize) -> Result<SweepSummary> {
    use rayon::prelude::*;
    let trials = random_trials(seed, count);
    let outcomes: Vec<TrialOutcome> = trials
        .into_par_iter()
        .map(|trial| -> Result<TrialOutcome> {
            let k = trial.field.build(trial.n)?;
            let phi = trial.phi.build()?;
            let record = verify_lemma31(&k, &phi, trial.p)?;
            let jensen = jensen_check(&k, &phi, &[0.05, 0.3, 0.6, 0.9])?;
            Ok(TrialOutcome {
                trial,
                record,
                jensen,
            })
        })
        .collect::<Result<_>>()?;
    let passes = outcomes.iter().filter(|o| o.record.pass).count();
    Ok(SweepSummary {
        seed,
        trials: count,
        passes,
        violations: count - passes,
        jensen_failures: outcomes.iter().filter(|o| !o.jensen.holds).count(),
        vacuous: outcomes
            .iter()
            .filter(|o| o.record.lhs == f64::INFINITY || o.record.rhs == 0.0)
            .count(),
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn inv_r(n: usize) -> RadialField {
        RadialField::power(n, 1.0, -1.0).unwrap()
    }

    #[test]
    fn spherical_average_examples() {
        assert_eq!(spherical_average(&inv_r(2), 0.25).unwrap(), 4.0);
        let c = RadialField::constant(3, 2.5).unwrap();
        assert_eq!(spherical_average(&c, 0.7).unwrap(), 2.5);
        let tilted = RadialField::linear(1.0, vec![1.0, 0.0]).unwrap();
        assert!((spherical_average(&tilted, 0.5).unwrap() - 1.0).abs() < 1e-14);
        assert!(spherical_average(&c, 1.0).is_err());
    }

    #[test]
    fn ball_mean_examples() {
        let id = MonotoneMap::identity();
        let m = ball_mean(&inv_r(2), &id).unwrap();
        assert!((m.value - 2.0).abs() < 1e-10, "{m:?}");
        let c = RadialField::constant(2, 3.0).unwrap();
        assert!((ball_mean(&c, &id).unwrap().value - 3.0).abs() < 1e-12);
        let one = RadialField::constant(3, 1.0).unwrap();
        let sq = MonotoneMap::power(1.0, 2.0).unwrap();
        assert!((ball_mean(&one, &sq).unwrap().value - 1.0).abs() < 1e-12);
        let m = ball_mean(&inv_r(2), &sq).unwrap();
        assert_eq!(m.verdict, Verdict::Divergent);
        assert_eq!(m.value, f64::INFINITY);
    }

    #[test]
    fn hand_computable_record() {
        let rec = verify_lemma31(&inv_r(2), &MonotoneMap::identity(), 1.0).unwrap();
        assert!((rec.lhs - 1.0).abs() < 1e-9, "{rec:?}");
        assert!((rec.m - 2.0).abs() < 1e-9);
        assert!((rec.rhs - 1.0 / (4.0 * E)).abs() < 1e-9, "{}", rec.rhs);
        assert!(rec.pass);
    }

    #[test]
    fn constant_field_has_infinite_left_side() {
        let c = RadialField::constant(2, 2.0).unwrap();
        let rec = verify_lemma31(&c, &MonotoneMap::power(1.0, 2.0).unwrap(), 1.5).unwrap();
        assert_eq!(rec.lhs, f64::INFINITY);
        assert!(rec.pass);
    }

    #[test]
    fn infinite_mean_is_vacuous() {
        let rec = verify_lemma31(&inv_r(2), &MonotoneMap::power(1.0, 2.0).unwrap(), 1.0).unwrap();
        assert!((rec.lhs - 1.0).abs() < 1e-9);
        assert_eq!(rec.m, f64::INFINITY);
        assert_eq!(rec.rhs, 0.0);
        assert!(rec.pass);
    }

    #[test]
    fn jensen_on_sampled_field() {
        let k = RadialField::linear(1.5, vec![0.8, -0.6, 0.5]).unwrap();
        let phi = MonotoneMap::power(1.0, 2.0).unwrap();
        let rep = jensen_check(&k, &phi, &[0.1, 0.5, 0.95]).unwrap();
        assert!(rep.holds, "{rep:?}");
        assert!(rep.worst_gap <= 0.0);
        // strict for a non-constant field and strictly convex phi
        assert!(rep.worst_gap < -1e-6);
    }

    #[test]
    fn doubling_phi_doubles_mean_and_keeps_right_side() {
        let k = RadialField::power(3, 1.0, -0.5).unwrap();
        let phi = MonotoneMap::power(1.0, 2.0).unwrap();
        let a = verify_lemma31(&k, &phi, 2.0).unwrap();
        let b = verify_lemma31(&k, &phi.scaled(2.0).unwrap(), 2.0).unwrap();
        assert!((b.m - 2.0 * a.m).abs() < 1e-9 * a.m);
        assert!(b.rhs <= a.rhs * (1.0 + 1e-9));
        assert_eq!(a.lhs, b.lhs);
        assert!(a.pass && b.pass);
    }

    #[test]
    fn mean_of_linear_field_matches_closed_form() {
        // n = 2, K = 1 + x₁, Φ = t²: mean over the disk of (1 + x₁)² = 1 + 1/4
        let k = RadialField::linear(1.0, vec![1.0, 0.0]).unwrap();
        let m = ball_mean(&k, &MonotoneMap::power(1.0, 2.0).unwrap()).unwrap();
        assert!((m.value - 1.25).abs() < 1e-10, "{m:?}");
    }
}
