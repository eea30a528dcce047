//! Numerical classification of the integral divergence conditions.
//!
//! | tag   | integral                               | blocks                  |
//! |-------|----------------------------------------|-------------------------|
//! | `C24` | `∫_δ^∞ H_p'(t) dt / t`                 | dyadic in `t`           |
//! | `C25` | `∫_δ^∞ dH_p(t) / t`                    | dyadic in `t`           |
//! | `C26` | `∫_δ^∞ H_p(t) dt / t²`                 | dyadic in `t`           |
//! | `C27` | `∫_0^δ H_p(1/t) dt`                    | dyadic toward 0         |
//! | `C28` | `∫_{η₀}^∞ dη / H_p⁻¹(η)`               | dyadic in `η`           |
//! | `C29` | `∫_{δ}^∞ dτ / (τ Φ_p⁻¹(τ))`            | dyadic in `u = ln τ`    |
//! | `T42` | `C29` with `p = n − 1`                 | dyadic in `u = ln τ`    |
//! | `L51` | `C29` with `p = 1`                     | dyadic in `u = ln τ`    |
//!
//! `H_p = log Φ_p` and `Φ_p(t) = Φ(t^p)`. The `τ`-integrals are taken in
//! `u = ln τ`, where they read `∫ du / Φ_p⁻¹(e^u)`; blocks that are dyadic
//! in `τ` would all have comparable mass for integrands like
//! `1/(τ ln² τ)` and could not be told apart from divergent ones.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{toward_zero_blocks, upward_blocks, BlockRule, BlockSums, Verdict};
use crate::error::{QlabError, Result};
use crate::formats::{extended, FunctionSpec};
use crate::monotone::{default_convexity_grid, MonotoneMap};
use crate::quadrature::QuadOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConditionTag {
    C24,
    C25,
    C26,
    C27,
    C28,
    C29,
    T42,
    L51,
    /// `∫_0^δ dr / ‖Q‖_{n−1}(r)`, produced by the modulus tools.
    NormDivergence,
}

impl ConditionTag {
    pub const EQUIVALENT: [ConditionTag; 6] = [
        ConditionTag::C24,
        ConditionTag::C25,
        ConditionTag::C26,
        ConditionTag::C27,
        ConditionTag::C28,
        ConditionTag::C29,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConditionTag::C24 => "C24",
            ConditionTag::C25 => "C25",
            ConditionTag::C26 => "C26",
            ConditionTag::C27 => "C27",
            ConditionTag::C28 => "C28",
            ConditionTag::C29 => "C29",
            ConditionTag::T42 => "T42",
            ConditionTag::L51 => "L51",
            ConditionTag::NormDivergence => "norm",
        }
    }

    /// One-line description of the integral.
    pub fn formula(self) -> &'static str {
        match self {
            ConditionTag::C24 => "int_d^inf H_p'(t) dt/t",
            ConditionTag::C25 => "int_d^inf dH_p(t)/t",
            ConditionTag::C26 => "int_d^inf H_p(t) dt/t^2",
            ConditionTag::C27 => "int_0^d H_p(1/t) dt",
            ConditionTag::C28 => "int_d^inf deta/H_p^-1(eta)",
            ConditionTag::C29 => "int_d^inf dtau/(tau Phi_p^-1(tau))",
            ConditionTag::T42 => "int_d^inf dtau/(tau [Phi^-1(tau)]^(1/(n-1)))",
            ConditionTag::L51 => "int_d^inf dtau/(tau phi^-1(tau))",
            ConditionTag::NormDivergence => "int_0^d dr/||Q||_(n-1)(r)",
        }
    }
}

impl std::fmt::Display for ConditionTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A condition together with its exponent and lower limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionKind {
    pub tag: ConditionTag,
    /// Exponent `p`; for `T42` this is `n − 1`, for `L51` it is 1.
    pub p: f64,
    pub dimension: Option<usize>,
    /// Lower limit (`δ`, `η₀` or `δ_*`); `None` picks the default.
    pub lower: Option<f64>,
}

impl ConditionKind {
    pub fn new(tag: ConditionTag, p: f64) -> Self {
        ConditionKind {
            tag,
            p,
            dimension: None,
            lower: None,
        }
    }

    pub fn c24(p: f64) -> Self {
        Self::new(ConditionTag::C24, p)
    }
    pub fn c25(p: f64) -> Self {
        Self::new(ConditionTag::C25, p)
    }
    pub fn c26(p: f64) -> Self {
        Self::new(ConditionTag::C26, p)
    }
    pub fn c27(p: f64) -> Self {
        Self::new(ConditionTag::C27, p)
    }
    pub fn c28(p: f64) -> Self {
        Self::new(ConditionTag::C28, p)
    }
    pub fn c29(p: f64) -> Self {
        Self::new(ConditionTag::C29, p)
    }

    /// The extension criterion in dimension `n`.
    pub fn t42(n: usize) -> Self {
        ConditionKind {
            tag: ConditionTag::T42,
            p: n.saturating_sub(1) as f64,
            dimension: Some(n),
            lower: None,
        }
    }

    /// The convergence hypothesis on `φ` of the extremal construction.
    pub fn l51() -> Self {
        Self::new(ConditionTag::L51, 1.0)
    }

    pub fn with_lower(mut self, lower: f64) -> Self {
        self.lower = Some(lower);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.tag == ConditionTag::T42 {
            match self.dimension {
                Some(n) if n >= 2 => {}
                _ => return Err(QlabError::spec("n", "dimension must be at least 2")),
            }
        }
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(QlabError::spec("p", format!("must be positive, got {}", self.p)));
        }
        if self.tag == ConditionTag::NormDivergence {
            return Err(QlabError::Unsupported(
                "norm divergence is classified by the modulus tools".into(),
            ));
        }
        Ok(())
    }

    /// Resolves the lower limit against `τ₀` and `t₀` of `Φ_p`.
    pub fn resolve_lower(&self, phi: &MonotoneMap) -> Result<f64> {
        self.validate()?;
        let phi_p = phi.power_compose(self.p)?;
        let tau0 = phi_p.tau0();
        let t0 = phi_p.zero_level();
        let name = self.tag.name().to_string();
        let reject = |value: f64, reason: String| QlabError::LowerLimit {
            condition: name.clone(),
            value,
            reason,
        };
        match self.tag {
            ConditionTag::C24 | ConditionTag::C25 | ConditionTag::C26 => {
                if t0.is_infinite() {
                    return Err(QlabError::Domain("Φ vanishes identically".into()));
                }
                let d = self.lower.unwrap_or_else(|| (2.0 * t0).max(1.0));
                if !(d > t0 && d.is_finite()) {
                    return Err(reject(d, format!("must exceed t0 = {t0}")));
                }
                Ok(d)
            }
            ConditionTag::C27 => {
                if t0.is_infinite() {
                    return Err(QlabError::Domain("Φ vanishes identically".into()));
                }
                let d = self.lower.unwrap_or_else(|| 1.0 / (2.0 * t0).max(1.0));
                if !(d > 0.0 && d * t0 < 1.0 && d.is_finite()) {
                    return Err(reject(d, format!("must lie in (0, 1/t0) with t0 = {t0}")));
                }
                Ok(d)
            }
            ConditionTag::C28 => {
                let floor = tau0.ln();
                let d = self.lower.unwrap_or_else(|| (2.0 * tau0).ln().max(1.0));
                if !(d > floor && d.is_finite()) {
                    return Err(reject(d, format!("must exceed ln tau0 = {floor}")));
                }
                Ok(d)
            }
            ConditionTag::C29 | ConditionTag::T42 | ConditionTag::L51 => {
                let d = self.lower.unwrap_or_else(|| (2.0 * tau0).max(1.0));
                if !(d > tau0 && d.is_finite()) {
                    return Err(reject(d, format!("must exceed tau0 = {tau0}")));
                }
                Ok(d)
            }
            ConditionTag::NormDivergence => unreachable!("rejected by validate"),
        }
    }
}

/// Verdict on one condition with the block evidence behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub kind: ConditionKind,
    /// Lower limit actually used.
    pub lower: f64,
    pub verdict: Verdict,
    /// Integral over the finite head segment before the first dyadic block.
    #[serde(with = "extended")]
    pub head: f64,
    #[serde(with = "extended::vec")]
    pub block_sums: Vec<f64>,
    #[serde(with = "extended")]
    pub partial_sum: f64,
    #[serde(with = "extended")]
    pub tail_estimate: f64,
    #[serde(with = "extended")]
    pub abs_error: f64,
    pub note: String,
}

impl ConditionReport {
    pub(crate) fn from_blocks(
        kind: ConditionKind,
        lower: f64,
        sums: &BlockSums,
        rule: &BlockRule,
    ) -> Self {
        let a = rule.assess(sums);
        ConditionReport {
            kind,
            lower,
            verdict: a.verdict,
            head: sums.head,
            block_sums: sums.blocks.clone(),
            partial_sum: a.partial_sum,
            tail_estimate: a.tail_estimate,
            abs_error: sums.abs_error,
            note: a.note,
        }
    }
}

/// Block rule and quadrature settings used for classification.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Classifier {
    pub rule: BlockRule,
    pub quad: QuadOptions,
}

impl Classifier {
    pub fn with_kmax(kmax: usize) -> Self {
        Classifier {
            rule: BlockRule::default().with_kmax(kmax),
            quad: QuadOptions::default(),
        }
    }

    pub fn classify(&self, phi: &MonotoneMap, kind: ConditionKind) -> Result<ConditionReport> {
        let lower = kind.resolve_lower(phi)?;
        let sums = self.block_sums(phi, &kind, lower)?;
        Ok(ConditionReport::from_blocks(kind, lower, &sums, &self.rule))
    }

    /// Raw block sums of a condition integral from `lower`.
    pub fn block_sums(&self, phi: &MonotoneMap, kind: &ConditionKind, lower: f64) -> Result<BlockSums> {
        let h = phi.log_transform(kind.p)?;
        let phi_p = h.composed().clone();
        let kmax = self.rule.kmax;
        let q = &self.quad;
        Ok(match kind.tag {
            ConditionTag::C24 => upward_blocks(
                |t| {
                    let d = h.derivative(t);
                    if d == 0.0 {
                        0.0
                    } else {
                        d / t
                    }
                },
                lower,
                kmax,
                q,
            ),
            ConditionTag::C25 => stieltjes_blocks(|t| h.eval(t), lower, kmax, q),
            ConditionTag::C26 => upward_blocks(|t| h.eval(t) / (t * t), lower, kmax, q),
            ConditionTag::C27 => toward_zero_blocks(|t| phi_p.ln_eval_at_log(-t.ln()), lower, kmax, q),
            ConditionTag::C28 => upward_blocks(|eta| (-phi_p.ln_inverse_at_log(eta)).exp(), lower, kmax, q),
            ConditionTag::C29 | ConditionTag::T42 | ConditionTag::L51 => upward_blocks(
                |u| (-phi_p.ln_inverse_at_log(u)).exp(),
                lower.ln(),
                kmax,
                q,
            ),
            ConditionTag::NormDivergence => unreachable!("rejected by validate"),
        })
    }
}

/// `∫ dH/t` over dyadic blocks, each block integrated by parts:
/// `∫_a^b dH/t = H(b)/b − H(a)/a + ∫_a^b H/t² dt`.
fn stieltjes_blocks<F: Fn(f64) -> f64>(h: F, start: f64, kmax: usize, quad: &QuadOptions) -> BlockSums {
    let mut sums = upward_blocks(|t| h(t) / (t * t), start, kmax, quad);
    let by_parts = |a: f64, b: f64, inner: f64| -> f64 {
        let (ha, hb) = (h(a), h(b));
        if hb == f64::INFINITY {
            return f64::INFINITY;
        }
        hb / b - ha / a + inner
    };
    if start < 1.0 {
        sums.head = by_parts(start, 1.0, sums.head);
    }
    for (k, b) in sums.blocks.iter_mut().enumerate() {
        *b = by_parts(sums.edges[k], sums.edges[k + 1], *b);
    }
    sums
}

pub fn classify(phi: &MonotoneMap, kind: ConditionKind) -> Result<ConditionReport> {
    Classifier::default().classify(phi, kind)
}

/// Verdicts on all six equivalent conditions at a common `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub p: f64,
    pub reports: Vec<ConditionReport>,
    /// All non-inconclusive verdicts agree.
    pub consistent: bool,
    pub convex: bool,
    pub warnings: Vec<String>,
}

impl EquivalenceReport {
    pub fn verdict(&self, tag: ConditionTag) -> Option<Verdict> {
        self.reports.iter().find(|r| r.kind.tag == tag).map(|r| r.verdict)
    }
}

/// True when all verdicts other than `Inconclusive` agree.
pub fn verdicts_agree<I: IntoIterator<Item = Verdict>>(verdicts: I) -> bool {
    let mut seen = None;
    for v in verdicts {
        if v == Verdict::Inconclusive {
            continue;
        }
        match seen {
            None => seen = Some(v),
            Some(s) if s != v => return false,
            _ => {}
        }
    }
    true
}

impl Classifier {
    pub fn classify_all_equivalent(&self, phi: &MonotoneMap, p: f64) -> Result<EquivalenceReport> {
        let convexity = phi.check_convex(&default_convexity_grid());
        let mut warnings = Vec::new();
        if !convexity.convex {
            warnings.push("phi failed the convexity check; equivalence is not guaranteed".to_string());
        }
        let reports = ConditionTag::EQUIVALENT
            .par_iter()
            .map(|&tag| self.classify(phi, ConditionKind::new(tag, p)))
            .collect::<Result<Vec<_>>>()?;
        let consistent = verdicts_agree(reports.iter().map(|r| r.verdict));
        if !consistent {
            warnings.push("non-inconclusive verdicts disagree".to_string());
        }
        Ok(EquivalenceReport {
            p,
            reports,
            consistent,
            convex: convexity.convex,
            warnings,
        })
    }
}

pub fn classify_all_equivalent(phi: &MonotoneMap, p: f64) -> Result<EquivalenceReport> {
    Classifier::default().classify_all_equivalent(phi, p)
}

/// Closed-form verdict for the analytic families.
///
/// Power and affine maps (with `a > 0` or a positive constant) make every
/// condition converge. For `exp(α t^β) − 1 + τ₀` the substitution
/// `u = ln τ` turns the `τ`-integral into `∫ du / u^{1/(pβ)}`, which
/// diverges exactly when `p·β ≥ 1`; the other conditions reduce to
/// `∫ t^{pβ−2} dt` at infinity or `∫ t^{−pβ} dt` at zero with the same
/// threshold.
pub fn analytic_oracle(spec: &FunctionSpec, kind: &ConditionKind) -> Result<Verdict> {
    kind.validate()?;
    match spec {
        FunctionSpec::Power { .. } => Ok(Verdict::Convergent),
        FunctionSpec::Affine { a, b } => {
            if *a == 0.0 && *b == 0.0 {
                Err(QlabError::Unsupported("the zero map has no admissible limits".into()))
            } else {
                Ok(Verdict::Convergent)
            }
        }
        FunctionSpec::ExpPower { beta, .. } => Ok(if kind.p * beta >= 1.0 {
            Verdict::Divergent
        } else {
            Verdict::Convergent
        }),
        FunctionSpec::Pwl { .. } => Err(QlabError::Unsupported(
            "no closed-form verdict for tables".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_t() -> MonotoneMap {
        MonotoneMap::exp_power(1.0, 1.0, 1.0).unwrap()
    }

    fn square() -> MonotoneMap {
        MonotoneMap::power(1.0, 2.0).unwrap()
    }

    #[test]
    fn t42_examples() {
        assert_eq!(classify(&exp_t(), ConditionKind::t42(2)).unwrap().verdict, Verdict::Divergent);
        assert_eq!(classify(&square(), ConditionKind::t42(2)).unwrap().verdict, Verdict::Convergent);
        assert_eq!(classify(&square(), ConditionKind::l51()).unwrap().verdict, Verdict::Convergent);
    }

    #[test]
    fn equivalent_sets() {
        let e = classify_all_equivalent(&exp_t(), 1.0).unwrap();
        assert!(e.consistent);
        for r in &e.reports {
            assert_eq!(r.verdict, Verdict::Divergent, "{:?}", r.kind.tag);
        }
        let s = classify_all_equivalent(&square(), 1.0).unwrap();
        assert!(s.consistent);
        for r in &s.reports {
            assert_eq!(r.verdict, Verdict::Convergent, "{:?} {}", r.kind.tag, r.note);
        }
        let c = classify_all_equivalent(&MonotoneMap::affine(0.0, 3.0).unwrap(), 1.0).unwrap();
        assert!(c.consistent);
        assert_eq!(c.verdict(ConditionTag::C29), Some(Verdict::Convergent));
    }

    #[test]
    fn c29_value_for_square() {
        // ∫_1^∞ dτ / τ^{3/2} = 2
        let r = classify(&square(), ConditionKind::c29(1.0)).unwrap();
        assert!((r.partial_sum + r.tail_estimate - 2.0).abs() < 1e-8);
    }

    #[test]
    fn log_form_for_exponential() {
        // ∫ log e^t dt / t² = ∫ dt / t
        let r = classify(&exp_t(), ConditionKind::c26(1.0)).unwrap();
        assert_eq!(r.verdict, Verdict::Divergent);
        for b in &r.block_sums[1..] {
            assert!((b - std::f64::consts::LN_2).abs() < 1e-6, "{b}");
        }
    }

    #[test]
    fn lower_limit_restrictions() {
        let phi = MonotoneMap::affine(1.0, 2.0).unwrap();
        assert!(matches!(
            classify(&phi, ConditionKind::t42(2).with_lower(1.5)),
            Err(QlabError::LowerLimit { .. })
        ));
        assert!(classify(&phi, ConditionKind::t42(2).with_lower(2.5)).is_ok());
        let shifted = MonotoneMap::table(&[(0.0, 0.0), (2.0, 0.0), (3.0, 1.0)], Default::default(), None)
            .unwrap();
        assert!(matches!(
            classify(&shifted, ConditionKind::c26(1.0).with_lower(1.5)),
            Err(QlabError::LowerLimit { .. })
        ));
        assert!(matches!(
            classify(&shifted, ConditionKind::c27(1.0).with_lower(0.6)),
            Err(QlabError::LowerLimit { .. })
        ));
        assert_eq!(classify(&shifted, ConditionKind::c27(1.0)).unwrap().lower, 0.25);
        assert!(classify(&MonotoneMap::affine(0.0, 0.0).unwrap(), ConditionKind::c26(1.0)).is_err());
    }

    #[test]
    fn blow_up_makes_everything_diverge() {
        let phi = MonotoneMap::table(&[(0.0, 0.0), (1.0, 1.0), (2.0, 3.0)], Default::default(), Some(5.0))
            .unwrap();
        let e = classify_all_equivalent(&phi, 1.0).unwrap();
        for r in &e.reports {
            assert_eq!(r.verdict, Verdict::Divergent, "{:?}", r.kind.tag);
        }
    }

    #[test]
    fn oracle_rule() {
        let spec = |beta| FunctionSpec::ExpPower { alpha: 1.0, beta, tau0: 0.0 };
        assert_eq!(analytic_oracle(&spec(1.0), &ConditionKind::c29(1.0)).unwrap(), Verdict::Divergent);
        assert_eq!(analytic_oracle(&spec(2.0), &ConditionKind::c29(1.0)).unwrap(), Verdict::Divergent);
        assert_eq!(analytic_oracle(&spec(0.5), &ConditionKind::c29(1.0)).unwrap(), Verdict::Convergent);
        assert_eq!(analytic_oracle(&spec(0.5), &ConditionKind::t42(3)).unwrap(), Verdict::Divergent);
        let power = FunctionSpec::Power { c: 1.0, alpha: 3.0 };
        assert_eq!(analytic_oracle(&power, &ConditionKind::t42(3)).unwrap(), Verdict::Convergent);
        assert!(analytic_oracle(&FunctionSpec::Affine { a: 0.0, b: 0.0 }, &ConditionKind::c29(1.0)).is_err());
    }
}
