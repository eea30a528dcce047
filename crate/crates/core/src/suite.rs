//! The verification battery behind `qlab suite`.
//!
//! Each criterion is a self-contained check with a pass flag and a small
//! JSON record of the numbers it looked at. Reports contain no timings, so
//! a fixed seed gives byte-identical output.

use std::f64::consts::{E, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::classifier::{analytic_oracle, classify, verdicts_agree, Classifier, ConditionKind};
use crate::dyadic::Verdict;
use crate::error::Result;
use crate::extremal::{normalize_phi, ExtremalMap, DEFAULT_GRID, DEFAULT_R_MIN, TOL_FE};
use crate::formats::FunctionSpec;
use crate::mean_inequality::{sweep, verify_lemma31, RadialField};
use crate::modulus::{dimension_constants, norm_divergence, spherical_norm};
use crate::monotone::MonotoneMap;
use crate::sampling::random_convex_table;

pub const DEFAULT_SEED: u64 = 20_240_917;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub pass: bool,
    pub details: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub passed: usize,
    pub total: usize,
    pub criteria: Vec<CriterionResult>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.passed == self.total
    }
}

fn result(id: u32, name: &str, outcome: Result<(bool, Value)>) -> CriterionResult {
    let (pass, details) = match outcome {
        Ok(v) => v,
        Err(e) => (false, json!({ "error": e.to_string() })),
    };
    CriterionResult {
        id,
        name: name.to_string(),
        pass,
        details,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn square() -> MonotoneMap {
    MonotoneMap::Power { c: 1.0, alpha: 2.0 }
}

/// The analytic families of the oracle table.
pub fn oracle_families() -> Vec<FunctionSpec> {
    let mut v: Vec<FunctionSpec> = [1.0, 2.0, 3.0]
        .iter()
        .map(|&alpha| FunctionSpec::Power { c: 1.0, alpha })
        .collect();
    v.extend([0.5, 1.0, 2.0].iter().map(|&beta| FunctionSpec::ExpPower {
        alpha: 1.0,
        beta,
        tau0: 0.0,
    }));
    v.push(FunctionSpec::Affine { a: 1.0, b: 1.0 });
    v
}

/// The conditions of the oracle table: `T42` for `n = 2, 3`, `C29` for `p = 1, 2`.
pub fn oracle_conditions() -> Vec<ConditionKind> {
    vec![
        ConditionKind::t42(2),
        ConditionKind::t42(3),
        ConditionKind::c29(1.0),
        ConditionKind::c29(2.0),
    ]
}

pub fn extremal_closed_form(n: usize) -> Result<(bool, Value)> {
    let map = ExtremalMap::build(&square(), n, DEFAULT_GRID, DEFAULT_R_MIN)?;
    let p = &map.profile;
    let check = p.check();
    let k_err = p
        .r_grid
        .iter()
        .zip(&p.k_values)
        .map(|(r, k)| rel(*k, r.powf(-2.0 / 3.0)))
        .fold(0.0, f64::max);
    let e = map.phi_energy()?;
    let omega = dimension_constants(n)?.omega;
    let (energy_expected, bound_expected) = match n {
        2 => (3.0 * PI, 3.0 * PI),
        3 => (12.0 * PI / 5.0, 6.0 * PI),
        _ => (f64::NAN, f64::NAN),
    };
    let i1 = p.i_one();
    let mut pass = check.all_ok()
        && p.gamma == 1.0
        && check.max_residual <= TOL_FE
        && k_err <= 1e-10
        && (i1 - 1.5).abs() <= 1e-8
        && (map.big_r - 1.5f64.exp()).abs() <= 1e-7
        && rel(e.energy, energy_expected) <= 1e-3
        && rel(e.bound, bound_expected) <= 1e-9
        && e.within_bound;
    if n == 2 {
        pass &= rel(e.energy, e.bound) <= 1e-9;
    }
    Ok((
        pass,
        json!({
            "n": n,
            "gamma": p.gamma,
            "max_residual": check.max_residual,
            "max_k_rel_error": k_err,
            "I1": i1,
            "R": map.big_r,
            "energy": e.energy,
            "bound": e.bound,
            "omega": omega,
            "profile_checks": check,
        }),
    ))
}

pub fn radii_log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

pub fn fd_dilatation() -> Result<(bool, Value)> {
    let map = ExtremalMap::build(&square(), 2, DEFAULT_GRID, DEFAULT_R_MIN)?;
    let mut worst: f64 = 0.0;
    let mut worst_r = f64::NAN;
    for r in radii_log_spaced(1e-3, 0.9, 50) {
        let fd = map.fd_distortions(r)?;
        let k = map.profile.k_at(r)?;
        let err = (fd.k_o / k - 1.0).abs();
        if err > worst || worst_r.is_nan() {
            worst = err;
            worst_r = r;
        }
    }
    Ok((worst <= 1e-5, json!({ "radii": 50, "max_rel_error": worst, "at_radius": worst_r })))
}

pub fn non_extendability() -> Result<(bool, Value)> {
    let map = ExtremalMap::build(&square(), 2, DEFAULT_GRID, DEFAULT_R_MIN)?;
    let probes = [0.5, 0.1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-10];
    let rep = map.boundary_report(&probes)?;
    let small_ok = rep
        .probes
        .iter()
        .filter(|p| p.t <= 1e-6)
        .all(|p| p.rho > 1.0 && p.rho < 1.0 + 1e-3);
    Ok((
        small_ok && rep.diameters_above_two && rep.rho_decreasing_to_one,
        serde_json::to_value(&rep).unwrap_or(Value::Null),
    ))
}

pub fn mean_inequality_suite(seed: u64) -> Result<(bool, Value)> {
    let hand = verify_lemma31(
        &RadialField::power(2, 1.0, -1.0)?,
        &MonotoneMap::identity(),
        1.0,
    )?;
    let hand_ok = (hand.lhs - 1.0).abs() <= 1e-8 && (hand.rhs - 1.0 / (4.0 * E)).abs() <= 1e-8 && hand.pass;
    let s = sweep(seed, 100)?;
    let failed: Vec<usize> = s
        .outcomes
        .iter()
        .enumerate()
        .filter(|(_, o)| !o.record.pass)
        .map(|(i, _)| i)
        .collect();
    Ok((
        hand_ok && s.violations == 0 && s.jensen_failures == 0,
        json!({
            "hand_case": { "lhs": hand.lhs, "rhs": hand.rhs, "M": hand.m },
            "trials": s.trials,
            "passes": s.passes,
            "violations": s.violations,
            "failed_trials": failed,
            "jensen_failures": s.jensen_failures,
            "vacuous": s.vacuous,
        }),
    ))
}

pub fn oracle_agreement() -> Result<(bool, Value)> {
    let brute = Classifier::with_kmax(60);
    let rows: Vec<(FunctionSpec, ConditionKind)> = oracle_families()
        .into_iter()
        .flat_map(|f| oracle_conditions().into_iter().map(move |k| (f.clone(), k)))
        .collect();
    let checked = rows
        .par_iter()
        .map(|(spec, kind)| -> Result<Value> {
            let phi = spec.build()?;
            let oracle = analytic_oracle(spec, kind)?;
            let validated = brute.classify(&phi, *kind)?.verdict;
            let verdict = classify(&phi, *kind)?.verdict;
            Ok(json!({
                "phi": spec,
                "condition": kind.tag.name(),
                "p": kind.p,
                "oracle": oracle,
                "brute_force_k60": validated,
                "verdict": verdict,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let field = |v: &Value, k: &str| v[k].as_str().unwrap_or("").to_string();
    let oracle_validated = checked.iter().all(|v| field(v, "oracle") == field(v, "brute_force_k60"));
    let agree = checked.iter().filter(|v| field(v, "oracle") == field(v, "verdict")).count();
    let inconclusive = checked.iter().filter(|v| field(v, "verdict") == "Inconclusive").count();
    Ok((
        oracle_validated && agree == checked.len() && inconclusive == 0,
        json!({
            "rows": checked.len(),
            "agreement": agree,
            "inconclusive": inconclusive,
            "oracle_validated": oracle_validated,
            "table": checked,
        }),
    ))
}

pub fn equivalence(seed: u64) -> Result<(bool, Value)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_7ab1e);
    let tables: Vec<MonotoneMap> = (0..20)
        .map(|i| random_convex_table(&mut rng, i % 4 == 3))
        .collect();
    let rows = tables
        .par_iter()
        .map(|phi| -> Result<[Verdict; 3]> {
            Ok([
                classify(phi, ConditionKind::c26(1.0))?.verdict,
                classify(phi, ConditionKind::c27(1.0))?.verdict,
                classify(phi, ConditionKind::c29(1.0))?.verdict,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let with_inconclusive = rows
        .iter()
        .filter(|r| r.contains(&Verdict::Inconclusive))
        .count();
    let disagreements = rows
        .iter()
        .filter(|r| !r.contains(&Verdict::Inconclusive) && !verdicts_agree(r.iter().copied()))
        .count();
    let rate = with_inconclusive as f64 / rows.len() as f64;
    Ok((
        disagreements == 0 && rate <= 0.2,
        json!({
            "tables": rows.len(),
            "disagreements": disagreements,
            "inconclusive_rate": rate,
            "verdicts": rows,
        }),
    ))
}

fn divergence_rank(v: Verdict) -> u8 {
    match v {
        Verdict::Convergent => 0,
        Verdict::Inconclusive => 1,
        Verdict::Divergent => 2,
    }
}

pub fn monotone_in_p() -> Result<(bool, Value)> {
    let phi = MonotoneMap::exp_power(1.0, 1.0, 0.0)?;
    let ps = [0.5, 1.0, 2.0, 4.0];
    let verdicts = ps
        .iter()
        .map(|&p| classify(&phi, ConditionKind::c29(p)).map(|r| r.verdict))
        .collect::<Result<Vec<_>>>()?;
    let monotone = verdicts
        .windows(2)
        .all(|w| divergence_rank(w[1]) >= divergence_rank(w[0]));
    Ok((monotone, json!({ "p": ps, "verdicts": verdicts })))
}

pub fn mutual_exclusion() -> Result<(bool, Value)> {
    let mut rows = Vec::new();
    let mut pass = true;
    for spec in oracle_families() {
        let phi = spec.build()?;
        let accepted = normalize_phi(&phi).is_ok();
        let l51 = classify(&phi, ConditionKind::l51())?.verdict;
        if accepted && l51 != Verdict::Convergent {
            pass = false;
        }
        for n in [2usize, 3] {
            let t42 = classify(&phi, ConditionKind::t42(n))?.verdict;
            let composed_accepted = normalize_phi(&phi.power_compose((n - 1) as f64)?).is_ok();
            if t42 == Verdict::Divergent && composed_accepted {
                pass = false;
            }
            rows.push(json!({
                "phi": spec,
                "n": n,
                "accepted": accepted,
                "L51": l51,
                "T42": t42,
                "phi_n_minus_1_accepted": composed_accepted,
            }));
        }
    }
    Ok((pass, json!({ "rows": rows })))
}

pub fn modulus_utilities() -> Result<(bool, Value)> {
    let mut exact = true;
    let mut ratios = Vec::new();
    for n in 2..=10 {
        let d = dimension_constants(n)?;
        exact &= d.omega == n as f64 * d.big_omega;
        ratios.push(d.omega / d.big_omega);
    }
    let norm = spherical_norm(&RadialField::constant(2, 1.0)?, 0.5)?;
    let one = norm_divergence(&RadialField::constant(2, 1.0)?, 0.5)?.verdict;
    let inv = norm_divergence(&RadialField::power(2, 1.0, -1.0)?, 0.5)?.verdict;
    Ok((
        exact && (norm - PI).abs() <= 1e-12 && one == Verdict::Divergent && inv == Verdict::Convergent,
        json!({
            "omega_over_Omega": ratios,
            "norm_const_n2_r05": norm,
            "divergence_const": one,
            "divergence_inverse_radius": inv,
        }),
    ))
}

/// Runs criteria 1 to 10.
pub fn run_suite(seed: u64) -> SuiteReport {
    type Job = Box<dyn Fn() -> CriterionResult + Send + Sync>;
    let jobs: Vec<Job> = vec![
        Box::new(|| result(1, "extremal map, phi = t^2, n = 2", extremal_closed_form(2))),
        Box::new(|| result(2, "extremal map, phi = t^2, n = 3", extremal_closed_form(3))),
        Box::new(|| result(3, "finite-difference dilatation", fd_dilatation())),
        Box::new(|| result(4, "non-extendability signature", non_extendability())),
        Box::new(move || result(5, "mean inequality suite", mean_inequality_suite(seed))),
        Box::new(|| result(6, "classifier vs analytic oracle", oracle_agreement())),
        Box::new(move || result(7, "equivalence on random convex tables", equivalence(seed))),
        Box::new(|| result(8, "monotonicity in p", monotone_in_p())),
        Box::new(|| result(9, "mutual exclusion", mutual_exclusion())),
        Box::new(|| result(10, "modulus utilities", modulus_utilities())),
    ];
    let criteria: Vec<CriterionResult> = jobs.par_iter().map(|job| job()).collect();
    SuiteReport {
        tool: "qlab".into(),
        version: VERSION.into(),
        seed,
        passed: criteria.iter().filter(|c| c.pass).count(),
        total: criteria.len(),
        criteria,
    }
}
