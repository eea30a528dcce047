//! Non-decreasing maps `[0, ∞] → [0, ∞]` and their calculus.
//!
//! Values are plain `f64`; `f64::INFINITY` stands for `+∞` and the log
//! transform may return `-∞`. The generalized inverse is
//! `Φ⁻¹(τ) = inf{ t : Φ(t) ≥ τ }` with `inf ∅ = ∞`.

use serde::{Deserialize, Serialize};

use crate::error::{QlabError, Result};

/// Relative tolerance of numerically computed inverses.
pub const TOL_INV: f64 = 1e-10;
/// Slack of the convexity test.
pub const TOL_CONV: f64 = 1e-9;
/// Beyond this abscissa the bisection inverse declares the super-level set empty.
pub const BRACKET_LIMIT: f64 = 1e300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    #[default]
    Linear,
    /// Right-continuous steps: the value on `[t_i, t_{i+1})` is `v_i`.
    Step,
}

/// Tabulated map. The first knot sits at `t = 0`; past the last knot a
/// linear table continues with its last slope and a step table stays
/// constant. From `blow_up` on the map is `+∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    ts: Vec<f64>,
    vs: Vec<f64>,
    interpolation: Interpolation,
    blow_up: Option<f64>,
}

impl Table {
    pub fn new(
        knots: &[(f64, f64)],
        interpolation: Interpolation,
        blow_up: Option<f64>,
    ) -> Result<Self> {
        if knots.is_empty() {
            return Err(QlabError::spec("knots", "at least one knot is required"));
        }
        if knots[0].0 != 0.0 {
            return Err(QlabError::spec("knots[0]", "first knot must be at t = 0"));
        }
        for (i, &(t, v)) in knots.iter().enumerate() {
            if !t.is_finite() || !v.is_finite() || v < 0.0 {
                return Err(QlabError::spec(
                    format!("knots[{i}]"),
                    "knot coordinates must be finite with non-negative value",
                ));
            }
            if i > 0 {
                let (tp, vp) = knots[i - 1];
                if t <= tp {
                    return Err(QlabError::spec(
                        format!("knots[{i}]"),
                        "abscissae must be strictly increasing",
                    ));
                }
                if v < vp {
                    return Err(QlabError::spec(
                        format!("knots[{i}]"),
                        "ordinates must be non-decreasing",
                    ));
                }
            }
        }
        if let Some(b) = blow_up {
            let last = knots[knots.len() - 1].0;
            if !(b > last) || !b.is_finite() {
                return Err(QlabError::spec(
                    "blow_up",
                    "blow-up knot must be finite and beyond the last knot",
                ));
            }
        }
        Ok(Table {
            ts: knots.iter().map(|k| k.0).collect(),
            vs: knots.iter().map(|k| k.1).collect(),
            interpolation,
            blow_up,
        })
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.ts.iter().cloned().zip(self.vs.iter().cloned())
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn blow_up(&self) -> Option<f64> {
        self.blow_up
    }

    fn last_slope(&self) -> f64 {
        let m = self.ts.len();
        if m < 2 || self.interpolation == Interpolation::Step {
            0.0
        } else {
            (self.vs[m - 1] - self.vs[m - 2]) / (self.ts[m - 1] - self.ts[m - 2])
        }
    }

    fn eval(&self, t: f64) -> f64 {
        if let Some(b) = self.blow_up {
            if t >= b {
                return f64::INFINITY;
            }
        }
        let m = self.ts.len();
        if t == f64::INFINITY {
            return if self.last_slope() > 0.0 {
                f64::INFINITY
            } else {
                self.vs[m - 1]
            };
        }
        // index of the last knot with ts[i] <= t
        let i = self.ts.partition_point(|&x| x <= t).saturating_sub(1);
        match self.interpolation {
            Interpolation::Step => self.vs[i],
            Interpolation::Linear => {
                if i + 1 < m {
                    let w = (t - self.ts[i]) / (self.ts[i + 1] - self.ts[i]);
                    self.vs[i] + w * (self.vs[i + 1] - self.vs[i])
                } else {
                    self.vs[m - 1] + self.last_slope() * (t - self.ts[m - 1])
                }
            }
        }
    }

    /// `ln Φ(e^x)`; past the last knot the linear tail is evaluated in log
    /// space so that `e^x` may overflow.
    fn ln_eval_at_log(&self, x: f64) -> f64 {
        let m = self.ts.len();
        let t_last = self.ts[m - 1];
        if self.blow_up.is_some() || x <= t_last.max(1.0).ln() + 1.0 {
            return self.eval(x.exp()).ln();
        }
        let s = self.last_slope();
        if s > 0.0 {
            // v + s(t − t_m) = t·(s + (v − s·t_m)/t)
            x + (s + (self.vs[m - 1] - s * t_last) * (-x).exp()).ln()
        } else {
            self.vs[m - 1].ln()
        }
    }

    /// `ln Φ⁻¹(e^η)`, with the linear tail in log space.
    fn ln_inverse_at_log(&self, eta: f64) -> f64 {
        let m = self.ts.len();
        let v_last = self.vs[m - 1];
        let s = self.last_slope();
        if self.blow_up.is_some() || s <= 0.0 || eta <= v_last.max(1.0).ln() + 1.0 {
            return self.inverse(eta.exp()).ln();
        }
        // t_m + (τ − v)/s = τ·(1/s + (t_m − v/s)/τ)
        eta + (1.0 / s + (self.ts[m - 1] - v_last / s) * (-eta).exp()).ln()
    }

    fn inverse(&self, tau: f64) -> f64 {
        let m = self.ts.len();
        let cap = self.blow_up.unwrap_or(f64::INFINITY);
        if tau <= self.vs[0] {
            return 0.0;
        }
        // first knot reaching tau
        let j = self.vs.partition_point(|&v| v < tau);
        if j < m {
            return match self.interpolation {
                Interpolation::Step => self.ts[j],
                Interpolation::Linear => {
                    let (t0, v0, t1, v1) = (self.ts[j - 1], self.vs[j - 1], self.ts[j], self.vs[j]);
                    (t0 + (tau - v0) * (t1 - t0) / (v1 - v0)).min(t1)
                }
            };
        }
        let s = self.last_slope();
        if s > 0.0 && tau.is_finite() {
            (self.ts[m - 1] + (tau - self.vs[m - 1]) / s).min(cap)
        } else {
            cap
        }
    }

    fn zero_level(&self) -> f64 {
        match self.vs.iter().position(|&v| v > 0.0) {
            Some(0) => 0.0,
            Some(j) => match self.interpolation {
                Interpolation::Linear => self.ts[j - 1],
                Interpolation::Step => self.ts[j],
            },
            None => {
                if self.last_slope() > 0.0 {
                    self.ts[self.ts.len() - 1]
                } else {
                    self.blow_up.unwrap_or(f64::INFINITY)
                }
            }
        }
    }
}

/// A non-decreasing map of `[0, ∞]` into `[0, ∞]`.
#[derive(Debug, Clone, PartialEq)]
pub enum MonotoneMap {
    /// `c·t^α`
    Power { c: f64, alpha: f64 },
    /// `exp(α·t^β) − 1 + τ₀`
    ExpPower { alpha: f64, beta: f64, offset: f64 },
    /// `a·t + b`
    Affine { a: f64, b: f64 },
    Table(Table),
    /// `Φ(t^p)`
    Composed { base: Box<MonotoneMap>, p: f64 },
    /// `λ·Φ(t)`
    Scaled { base: Box<MonotoneMap>, factor: f64 },
    /// Identity on `[0, 1)`, `max(φ(t), t)` on `[1, ∞]`.
    Normalized { base: Box<MonotoneMap> },
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(QlabError::spec(name, format!("must be positive and finite, got {x}")))
    }
}

fn non_negative(name: &str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(QlabError::spec(name, format!("must be non-negative and finite, got {x}")))
    }
}

/// `ln(e^x + e^y)` without overflow.
fn log_add_exp(x: f64, y: f64) -> f64 {
    let m = x.max(y);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + ((x - m).exp() + (y - m).exp()).ln()
}

impl MonotoneMap {
    pub fn power(c: f64, alpha: f64) -> Result<Self> {
        positive("params.c", c)?;
        positive("params.alpha", alpha)?;
        Ok(MonotoneMap::Power { c, alpha })
    }

    pub fn exp_power(alpha: f64, beta: f64, offset: f64) -> Result<Self> {
        positive("params.alpha", alpha)?;
        positive("params.beta", beta)?;
        non_negative("params.tau0", offset)?;
        Ok(MonotoneMap::ExpPower {
            alpha,
            beta,
            offset,
        })
    }

    pub fn affine(a: f64, b: f64) -> Result<Self> {
        non_negative("params.a", a)?;
        non_negative("params.b", b)?;
        Ok(MonotoneMap::Affine { a, b })
    }

    pub fn table(
        knots: &[(f64, f64)],
        interpolation: Interpolation,
        blow_up: Option<f64>,
    ) -> Result<Self> {
        Table::new(knots, interpolation, blow_up).map(MonotoneMap::Table)
    }

    pub fn identity() -> Self {
        MonotoneMap::Power { c: 1.0, alpha: 1.0 }
    }

    /// `Φ_p(t) = Φ(t^p)`.
    pub fn power_compose(&self, p: f64) -> Result<Self> {
        positive("p", p)?;
        if p == 1.0 {
            return Ok(self.clone());
        }
        Ok(match self {
            MonotoneMap::Power { c, alpha } => MonotoneMap::Power {
                c: *c,
                alpha: alpha * p,
            },
            MonotoneMap::ExpPower {
                alpha,
                beta,
                offset,
            } => MonotoneMap::ExpPower {
                alpha: *alpha,
                beta: beta * p,
                offset: *offset,
            },
            MonotoneMap::Composed { base, p: q } => MonotoneMap::Composed {
                base: base.clone(),
                p: q * p,
            },
            other => MonotoneMap::Composed {
                base: Box::new(other.clone()),
                p,
            },
        })
    }

    /// `λ·Φ` for `λ > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        positive("factor", factor)?;
        Ok(MonotoneMap::Scaled {
            base: Box::new(self.clone()),
            factor,
        })
    }

    pub fn normalized(&self) -> Self {
        MonotoneMap::Normalized {
            base: Box::new(self.clone()),
        }
    }

    /// `H_p = log Φ_p`.
    pub fn log_transform(&self, p: f64) -> Result<LogMap> {
        Ok(LogMap {
            phi_p: self.power_compose(p)?,
        })
    }

    /// `Φ(t)`. Negative or NaN arguments yield NaN.
    pub fn eval(&self, t: f64) -> f64 {
        if t.is_nan() || t < 0.0 {
            return f64::NAN;
        }
        match self {
            MonotoneMap::Power { c, alpha } => c * t.powf(*alpha),
            MonotoneMap::ExpPower {
                alpha,
                beta,
                offset,
            } => (alpha * t.powf(*beta)).exp_m1() + offset,
            MonotoneMap::Affine { a, b } => {
                if *a == 0.0 {
                    *b
                } else {
                    a * t + b
                }
            }
            MonotoneMap::Table(table) => table.eval(t),
            MonotoneMap::Composed { base, p } => base.eval(t.powf(*p)),
            MonotoneMap::Scaled { base, factor } => factor * base.eval(t),
            MonotoneMap::Normalized { base } => {
                if t < 1.0 {
                    t
                } else {
                    base.eval(t).max(t)
                }
            }
        }
    }

    /// `sup Φ = Φ(∞)`.
    pub fn supremum(&self) -> f64 {
        self.eval(f64::INFINITY)
    }

    /// `τ₀ = Φ(0)`.
    pub fn tau0(&self) -> f64 {
        self.eval(0.0)
    }

    /// `t₀ = sup{ t : Φ(t) = 0 }`, zero when `Φ(0) > 0`.
    pub fn zero_level(&self) -> f64 {
        if self.tau0() > 0.0 {
            return 0.0;
        }
        match self {
            MonotoneMap::Power { .. } | MonotoneMap::ExpPower { .. } => 0.0,
            MonotoneMap::Affine { a, .. } => {
                if *a > 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            MonotoneMap::Table(table) => table.zero_level(),
            MonotoneMap::Composed { base, p } => base.zero_level().powf(1.0 / p),
            MonotoneMap::Scaled { base, .. } => base.zero_level(),
            MonotoneMap::Normalized { .. } => 0.0,
        }
    }

    /// Generalized inverse `inf{ t : Φ(t) ≥ τ }`.
    pub fn inverse(&self, tau: f64) -> f64 {
        if tau.is_nan() || tau < 0.0 {
            return f64::NAN;
        }
        match self {
            MonotoneMap::Power { c, alpha } => (tau / c).powf(1.0 / alpha),
            MonotoneMap::ExpPower {
                alpha,
                beta,
                offset,
            } => {
                if tau <= *offset {
                    0.0
                } else {
                    ((tau - offset).ln_1p() / alpha).powf(1.0 / beta)
                }
            }
            MonotoneMap::Affine { a, b } => {
                if tau <= *b {
                    0.0
                } else if *a == 0.0 {
                    f64::INFINITY
                } else {
                    (tau - b) / a
                }
            }
            MonotoneMap::Table(table) => table.inverse(tau),
            MonotoneMap::Composed { base, p } => base.inverse(tau).powf(1.0 / p),
            MonotoneMap::Scaled { base, factor } => base.inverse(tau / factor),
            MonotoneMap::Normalized { base } => {
                if tau < 1.0 {
                    tau
                } else {
                    base.inverse(tau).min(tau).max(1.0)
                }
            }
        }
    }

    /// `ln Φ(e^x)`, stable where `Φ` or `e^x` overflow.
    pub fn ln_eval_at_log(&self, x: f64) -> f64 {
        match self {
            MonotoneMap::Power { c, alpha } => c.ln() + alpha * x,
            MonotoneMap::ExpPower {
                alpha,
                beta,
                offset,
            } => {
                let y = alpha * (beta * x).exp();
                if y > 40.0 {
                    y + ((offset - 1.0) * (-y).exp()).ln_1p()
                } else {
                    (y.exp_m1() + offset).ln()
                }
            }
            MonotoneMap::Affine { a, b } => {
                if *a == 0.0 {
                    b.ln()
                } else {
                    log_add_exp(a.ln() + x, b.ln())
                }
            }
            MonotoneMap::Table(table) => table.ln_eval_at_log(x),
            MonotoneMap::Composed { base, p } => base.ln_eval_at_log(p * x),
            MonotoneMap::Scaled { base, factor } => factor.ln() + base.ln_eval_at_log(x),
            MonotoneMap::Normalized { base } => {
                if x < 0.0 {
                    x
                } else {
                    base.ln_eval_at_log(x).max(x)
                }
            }
        }
    }

    /// `ln Φ⁻¹(e^η)`, stable where `e^η` or the inverse overflow.
    pub fn ln_inverse_at_log(&self, eta: f64) -> f64 {
        match self {
            MonotoneMap::Power { c, alpha } => (eta - c.ln()) / alpha,
            MonotoneMap::ExpPower {
                alpha,
                beta,
                offset,
            } => {
                if eta <= offset.ln() {
                    return f64::NEG_INFINITY;
                }
                // ln(τ + 1 − τ₀) with τ = e^η
                let y = if eta > 40.0 {
                    eta + ((1.0 - offset) * (-eta).exp()).ln_1p()
                } else {
                    (eta.exp() - offset).ln_1p()
                };
                (y.ln() - alpha.ln()) / beta
            }
            MonotoneMap::Affine { a, b } => {
                if eta <= b.ln() {
                    f64::NEG_INFINITY
                } else if *a == 0.0 {
                    f64::INFINITY
                } else {
                    eta + (-b * (-eta).exp()).ln_1p() - a.ln()
                }
            }
            MonotoneMap::Table(table) => table.ln_inverse_at_log(eta),
            MonotoneMap::Composed { base, p } => base.ln_inverse_at_log(eta) / p,
            MonotoneMap::Scaled { base, factor } => base.ln_inverse_at_log(eta - factor.ln()),
            MonotoneMap::Normalized { base } => {
                if eta < 0.0 {
                    eta
                } else {
                    base.ln_inverse_at_log(eta).min(eta).max(0.0)
                }
            }
        }
    }

    /// True when the map has no intervals of constancy, so that
    /// `Φ⁻¹(Φ(t)) = t` holds exactly.
    pub fn is_strictly_increasing(&self) -> bool {
        match self {
            MonotoneMap::Power { .. } | MonotoneMap::ExpPower { .. } => true,
            MonotoneMap::Affine { a, .. } => *a > 0.0,
            MonotoneMap::Table(t) => {
                t.interpolation == Interpolation::Linear
                    && t.vs.windows(2).all(|w| w[1] > w[0])
                    && (t.ts.len() < 2 || t.last_slope() > 0.0)
            }
            MonotoneMap::Composed { base, .. } | MonotoneMap::Scaled { base, .. } => {
                base.is_strictly_increasing()
            }
            MonotoneMap::Normalized { .. } => false,
        }
    }

    /// Midpoint-convexity and inclination test on `grid`.
    pub fn check_convex(&self, grid: &[f64]) -> ConvexityReport {
        let mut pts: Vec<f64> = grid.iter().cloned().filter(|t| *t >= 0.0 && t.is_finite()).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let vals: Vec<f64> = pts.iter().map(|&t| self.eval(t)).collect();
        let slack = |scale: f64| TOL_CONV + 1e-12 * scale.abs();

        let mut worst_midpoint: Option<Violation> = None;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let rhs = 0.5 * (vals[i] + vals[j]);
                if rhs.is_infinite() {
                    continue;
                }
                let mid = 0.5 * (pts[i] + pts[j]);
                let excess = self.eval(mid) - rhs;
                if excess > slack(rhs)
                    && worst_midpoint.is_none_or(|w| excess > w.excess)
                {
                    worst_midpoint = Some(Violation {
                        left: pts[i],
                        middle: mid,
                        right: pts[j],
                        excess,
                    });
                }
            }
        }

        // inclination (Φ(t) − Φ(0))/t must not decrease
        let phi0 = self.tau0();
        let mut worst_inclination: Option<Violation> = None;
        let positive: Vec<(f64, f64)> = pts
            .iter()
            .zip(&vals)
            .filter(|(t, v)| **t > 0.0 && v.is_finite())
            .map(|(t, v)| (*t, (*v - phi0) / *t))
            .collect();
        for w in positive.windows(2) {
            let drop = w[0].1 - w[1].1;
            if drop > slack(w[0].1) && worst_inclination.is_none_or(|v| drop > v.excess) {
                worst_inclination = Some(Violation {
                    left: w[0].0,
                    middle: 0.5 * (w[0].0 + w[1].0),
                    right: w[1].0,
                    excess: drop,
                });
            }
        }

        ConvexityReport {
            convex: worst_midpoint.is_none() && worst_inclination.is_none(),
            worst_midpoint,
            worst_inclination,
        }
    }
}

/// A grid suited to [`MonotoneMap::check_convex`]: zero plus a geometric
/// ladder from `2^-8` to `2^12`.
pub fn default_convexity_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend((-16..=24).map(|k| 2f64.powf(k as f64 * 0.5)));
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub left: f64,
    pub middle: f64,
    pub right: f64,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub convex: bool,
    pub worst_midpoint: Option<Violation>,
    pub worst_inclination: Option<Violation>,
}

/// `H_p(t) = log Φ_p(t)` together with its inverse `H_p⁻¹(η) = Φ_p⁻¹(e^η)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogMap {
    phi_p: MonotoneMap,
}

/// Step ratio of the central differences used for `H_p'`.
pub const FD_RATIO: f64 = 1.01;

impl LogMap {
    pub fn composed(&self) -> &MonotoneMap {
        &self.phi_p
    }

    /// `H_p(t)`, `-∞` where `Φ_p` vanishes.
    pub fn eval(&self, t: f64) -> f64 {
        if t == 0.0 {
            return self.phi_p.tau0().ln();
        }
        self.phi_p.ln_eval_at_log(t.ln())
    }

    /// `H_p⁻¹(η)`.
    pub fn inverse(&self, eta: f64) -> f64 {
        self.phi_p.ln_inverse_at_log(eta).exp()
    }

    /// Central difference on a logarithmic stencil; zero on the set where
    /// `H_p = -∞`.
    pub fn derivative(&self, t: f64) -> f64 {
        let hi = self.eval(t * FD_RATIO);
        let lo = self.eval(t / FD_RATIO);
        if hi == f64::NEG_INFINITY {
            return 0.0;
        }
        if hi == f64::INFINITY {
            return f64::INFINITY;
        }
        if lo == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        (hi - lo) / (t * (FD_RATIO - 1.0 / FD_RATIO))
    }
}

/// Generalized inverse of an arbitrary non-decreasing `f` by bracketed
/// bisection: the bracket grows geometrically from `[0, 1]`, and the set is
/// declared empty once the upper end passes [`BRACKET_LIMIT`].
pub fn inverse_by_bisection<F: Fn(f64) -> f64>(f: F, tau: f64) -> f64 {
    if f(0.0) >= tau {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi) < tau {
        lo = hi;
        hi *= 2.0;
        if hi > BRACKET_LIMIT {
            return f64::INFINITY;
        }
    }
    while hi - lo > TOL_INV * 0.01 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= tau {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
