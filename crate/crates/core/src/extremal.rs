//! The radial stretch map built from a convex `φ` with
//! `∫ dτ / (τ φ⁻¹(τ)) < ∞`.
//!
//! `K` solves `K(r)·φ(K(r)) = (γ/r)²` with `γ = φ(1)^{1/2}`, then
//! `I(t) = ∫_0^t dr / (r K(r))`, `ρ = e^I` and `f(x) = ρ(|x|)·x/|x|`.
//! Everything radial is handled in `s = ln(1/r)`, where
//! `I(t) = ∫_{ln(1/t)}^∞ ds / K(e^{-s})`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{classify, ConditionKind, ConditionReport};
use crate::dyadic::{upward_blocks, BlockRule, Verdict};
use crate::error::{QlabError, Result};
use crate::modulus::dimension_constants;
use crate::monotone::MonotoneMap;
use crate::quadrature::{gauss_legendre, QuadOptions};

/// Relative residual allowed in `Ψ(K(r)) = (γ/r)²`.
pub const TOL_FE: f64 = 1e-10;
pub const DEFAULT_GRID: usize = 4096;
pub const DEFAULT_R_MIN: f64 = 1e-6;
/// Gauss–Legendre nodes per grid interval.
const NODES_PER_INTERVAL: usize = 4;
/// Relative step of the radial finite difference.
pub const FD_STEP: f64 = 1e-4;

/// Constants `(C, T)` with `φ(t) ≥ C·t` for `t ≥ T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthWitness {
    pub c: f64,
    pub t: f64,
}

/// Scans `φ(t)/t` on a log grid over `[1, 1e8]`. No witness exists when
/// the ratio is not positive or still decays over the last decade.
pub fn linear_growth_witness(phi: &MonotoneMap) -> Option<GrowthWitness> {
    let ratio = |t: f64| phi.eval(t) / t;
    let grid: Vec<f64> = (0..=80).map(|k| 10f64.powf(k as f64 / 10.0)).collect();
    let c = grid.iter().map(|&t| ratio(t)).fold(f64::INFINITY, f64::min);
    if !(c > 0.0) {
        return None;
    }
    if ratio(1e8) < 0.999 * ratio(1e7) {
        return None;
    }
    Some(GrowthWitness { c, t: 1.0 })
}

/// Why a `φ` is admissible for the construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Admission {
    pub witness: GrowthWitness,
    pub l51: ConditionReport,
}

/// Checks the linear growth and the convergence hypothesis on `φ`.
pub fn admit(phi: &MonotoneMap) -> Result<Admission> {
    let witness = linear_growth_witness(phi).ok_or_else(|| {
        QlabError::Rejected("no linear growth witness φ(t) ≥ C·t on [1, 1e8]".into())
    })?;
    let l51 = classify(phi, ConditionKind::l51())?;
    match l51.verdict {
        Verdict::Convergent => Ok(Admission { witness, l51 }),
        Verdict::Divergent => Err(QlabError::Rejected(
            "∫ dτ/(τ φ⁻¹(τ)) diverges, so the map extends and no counterexample exists".into(),
        )),
        Verdict::Inconclusive => Err(QlabError::Rejected(format!(
            "convergence of ∫ dτ/(τ φ⁻¹(τ)) is inconclusive ({})",
            l51.note
        ))),
    }
}

/// Identity on `[0, 1)`, `max(φ(t), t)` beyond, after checking admissibility.
pub fn normalize_phi(phi: &MonotoneMap) -> Result<MonotoneMap> {
    admit(phi)?;
    Ok(phi.normalized())
}

/// `ln K` at `s = ln(1/r)` for the normalized `φ`, and the relative residual.
fn solve_log_k(phi: &MonotoneMap, ln_gamma: f64, s: f64) -> Result<(f64, f64)> {
    let target = 2.0 * (ln_gamma + s);
    let g = |l: f64| l + phi.ln_eval_at_log(l) - target;
    let mut hi = ln_gamma + s;
    let mut lo = phi.ln_inverse_at_log(ln_gamma + s).min(hi);
    let (glo, ghi) = (g(lo), g(hi));
    if ghi < 0.0 || glo.is_nan() || ghi.is_nan() {
        return Err(QlabError::Bracket(format!(
            "Ψ(γ/r) below (γ/r)² at r = {:e}",
            (-s).exp()
        )));
    }
    if glo > 0.0 {
        if glo > TOL_FE {
            return Err(QlabError::Bracket(format!(
                "Ψ(φ⁻¹(γ/r)) above (γ/r)² at r = {:e}",
                (-s).exp()
            )));
        }
        hi = lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (l, gl) = {
        let (a, b) = (g(lo), g(hi));
        if a.abs() <= b.abs() {
            (lo, a)
        } else {
            (hi, b)
        }
    };
    Ok((l, gl.exp_m1().abs()))
}

/// Solved `K(r)` on a log grid with the cumulative `I(t)`.
#[derive(Debug, Clone)]
pub struct DistortionProfile {
    /// The normalized `φ`.
    pub phi: MonotoneMap,
    pub gamma: f64,
    /// Increasing radii, `r_grid[0] = r_min`, last entry 1.
    pub r_grid: Vec<f64>,
    pub k_values: Vec<f64>,
    pub i_table: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `I(r_min)`, integrated.
    pub tail: f64,
    /// `∫_{γ/r_min}^∞ dτ / (τ φ⁻¹(τ))`, an upper bound for `tail`.
    pub tail_bound: f64,
    s_max: f64,
    step: f64,
    /// `(s, weight, 1/K(e^{-s}))` at the interval quadrature nodes.
    nodes: Vec<(f64, f64, f64)>,
}

/// `∫_{s0}^∞ w(s) / K(e^{-s}) ds` by dyadic blocks.
fn tail_integral<W: Fn(f64) -> f64 + Sync>(phi: &MonotoneMap, ln_gamma: f64, s0: f64, w: W) -> Result<f64> {
    let rule = BlockRule::default();
    let sums = upward_blocks(
        |s| match solve_log_k(phi, ln_gamma, s) {
            Ok((l, _)) => w(s) * (-l).exp(),
            Err(_) => f64::NAN,
        },
        s0,
        rule.kmax,
        &QuadOptions::default(),
    );
    let a = rule.assess(&sums);
    match a.verdict {
        Verdict::Divergent => Err(QlabError::Rejected("I(t) diverges near the origin".into())),
        _ if a.partial_sum.is_nan() => Err(QlabError::Bracket("tail integrand failed".into())),
        _ => Ok(a.total()),
    }
}

impl DistortionProfile {
    /// Solves the profile for an admissible `φ` (normalized here).
    pub fn solve(phi: &MonotoneMap, grid_size: usize, r_min: f64) -> Result<Self> {
        if grid_size < 2 {
            return Err(QlabError::spec("grid", "need at least two grid points"));
        }
        if !(r_min > 0.0 && r_min < 1.0) {
            return Err(QlabError::spec("rmin", format!("must lie in (0, 1), got {r_min}")));
        }
        let phi = normalize_phi(phi)?;
        let gamma = phi.eval(1.0).sqrt();
        let ln_gamma = gamma.ln();
        let s_max = -r_min.ln();
        let step = s_max / (grid_size - 1) as f64;
        let s_at = |j: usize| if j + 1 == grid_size { 0.0 } else { s_max - j as f64 * step };

        let solved = (0..grid_size)
            .into_par_iter()
            .map(|j| solve_log_k(&phi, ln_gamma, s_at(j)))
            .collect::<Result<Vec<_>>>()?;
        let k_values: Vec<f64> = solved.iter().map(|(l, _)| l.exp()).collect();
        let residuals: Vec<f64> = solved.iter().map(|(_, res)| *res).collect();

        let (gx, gw) = gauss_legendre(NODES_PER_INTERVAL);
        let nodes: Vec<(f64, f64, f64)> = (0..grid_size - 1)
            .into_par_iter()
            .map(|j| -> Result<Vec<(f64, f64, f64)>> {
                let (a, b) = (s_at(j + 1), s_at(j));
                let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
                gx.iter()
                    .zip(&gw)
                    .map(|(x, w)| {
                        let s = mid + half * x;
                        let (l, _) = solve_log_k(&phi, ln_gamma, s)?;
                        Ok((s, w * half, (-l).exp()))
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();

        let tail = tail_integral(&phi, ln_gamma, s_max, |_| 1.0)?;
        let tail_bound = {
            let rule = BlockRule::default();
            let sums = upward_blocks(
                |u| (-phi.ln_inverse_at_log(u)).exp(),
                ln_gamma + s_max,
                rule.kmax,
                &QuadOptions::default(),
            );
            let a = rule.assess(&sums);
            if a.verdict == Verdict::Divergent {
                f64::INFINITY
            } else {
                a.total()
            }
        };

        let mut i_table = Vec::with_capacity(grid_size);
        let mut acc = tail;
        i_table.push(acc);
        for j in 0..grid_size - 1 {
            let chunk = &nodes[j * NODES_PER_INTERVAL..(j + 1) * NODES_PER_INTERVAL];
            acc += chunk.iter().map(|(_, w, ik)| w * ik).sum::<f64>();
            i_table.push(acc);
        }

        Ok(DistortionProfile {
            phi,
            gamma,
            r_grid: (0..grid_size)
                .map(|j| if j == 0 { r_min } else { (-s_at(j)).exp() })
                .collect(),
            k_values,
            i_table,
            residuals,
            tail,
            tail_bound,
            s_max,
            step,
            nodes,
        })
    }

    pub fn r_min(&self) -> f64 {
        self.r_grid[0]
    }

    pub fn i_one(&self) -> f64 {
        *self.i_table.last().expect("grid is non-empty")
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }

    /// `K(r)` solved directly.
    pub fn k_at(&self, r: f64) -> Result<f64> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(QlabError::Domain(format!("radius {r} outside (0, 1]")));
        }
        let (l, _) = solve_log_k(&self.phi, self.gamma.ln(), -r.ln())?;
        Ok(l.exp())
    }

    /// `I(t)`: monotone cubic Hermite interpolation of the table in `s`
    /// with the exact slope `dI/ds = −1/K`; below `r_min` it is integrated.
    pub fn i_at(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(QlabError::Domain(format!("radius {t} outside (0, 1]")));
        }
        if t == 1.0 {
            return Ok(self.i_one());
        }
        let s = -t.ln();
        if s > self.s_max {
            return tail_integral(&self.phi, self.gamma.ln(), s, |_| 1.0);
        }
        let n = self.r_grid.len();
        let s_of = |j: usize| if j + 1 == n { 0.0 } else { self.s_max - j as f64 * self.step };
        let j = (((self.s_max - s) / self.step).floor() as usize).min(n - 2);
        let (s_lo, s_hi) = (s_of(j + 1), s_of(j));
        // I as a function of s on [s_lo, s_hi]
        let (y0, y1) = (self.i_table[j + 1], self.i_table[j]);
        let (mut m0, mut m1) = (-1.0 / self.k_values[j + 1], -1.0 / self.k_values[j]);
        let h = s_hi - s_lo;
        let delta = (y1 - y0) / h;
        if delta == 0.0 {
            m0 = 0.0;
            m1 = 0.0;
        } else {
            let (a, b) = (m0 / delta, m1 / delta);
            let norm = a * a + b * b;
            if norm > 9.0 {
                let tau = 3.0 / norm.sqrt();
                m0 = tau * a * delta;
                m1 = tau * b * delta;
            }
        }
        let x = ((s - s_lo) / h).clamp(0.0, 1.0);
        let (x2, x3) = (x * x, x * x * x);
        let h00 = 2.0 * x3 - 3.0 * x2 + 1.0;
        let h10 = x3 - 2.0 * x2 + x;
        let h01 = -2.0 * x3 + 3.0 * x2;
        let h11 = x3 - x2;
        Ok(h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1)
    }

    /// `ρ(t) = e^{I(t)}`.
    pub fn rho(&self, t: f64) -> Result<f64> {
        Ok(self.i_at(t)?.exp())
    }

    /// `∫_0^∞ e^{−m s} / K(e^{−s}) ds`; `m = 0` gives `I(1)`.
    pub fn weighted_integral(&self, m: f64) -> Result<f64> {
        if m == 0.0 {
            return Ok(self.i_one());
        }
        let body: f64 = self.nodes.iter().map(|(s, w, ik)| w * (-m * s).exp() * ik).sum();
        let tail = tail_integral(&self.phi, self.gamma.ln(), self.s_max, |s| (-m * s).exp())?;
        Ok(body + tail)
    }

    /// Grid-wide checks of the invariants of the solved profile.
    pub fn check(&self) -> ProfileCheck {
        let n = self.r_grid.len();
        let mut sandwich = true;
        for (r, k) in self.r_grid.iter().zip(&self.k_values) {
            let upper = self.gamma / r;
            let lower = self.phi.inverse(upper);
            if *k > upper * (1.0 + 1e-12) || *k < lower * (1.0 - 1e-12) {
                sandwich = false;
            }
        }
        ProfileCheck {
            max_residual: self.max_residual(),
            residual_ok: self.max_residual() <= TOL_FE,
            sandwich_ok: sandwich,
            k_decreasing: self.k_values.windows(2).all(|w| w[1] < w[0]),
            k_finite: self.k_values.iter().all(|k| k.is_finite()),
            i_non_decreasing: self.i_table.windows(2).all(|w| w[1] >= w[0]),
            i_one_finite: self.i_one().is_finite(),
            k_at_one: self.k_values[n - 1],
            tail_within_bound: self.tail <= self.tail_bound * (1.0 + 1e-9),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileCheck {
    pub max_residual: f64,
    pub residual_ok: bool,
    pub sandwich_ok: bool,
    pub k_decreasing: bool,
    pub k_finite: bool,
    pub i_non_decreasing: bool,
    pub i_one_finite: bool,
    pub k_at_one: f64,
    pub tail_within_bound: bool,
}

impl ProfileCheck {
    pub fn all_ok(&self) -> bool {
        self.residual_ok
            && self.sandwich_ok
            && self.k_decreasing
            && self.k_finite
            && self.i_non_decreasing
            && self.i_one_finite
            && (self.k_at_one - 1.0).abs() <= 1e-12
            && self.tail_within_bound
    }
}

/// Tangential and radial stretching of `f` on `S(r)` and their ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distortions {
    pub delta_tau: f64,
    pub delta_r: f64,
    pub k_o: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub energy: f64,
    pub bound: f64,
    pub within_bound: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryProbe {
    pub t: f64,
    pub rho: f64,
    /// Diameter of the image of `S(0, t)`, `2ρ(t)`.
    pub diameter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub probes: Vec<BoundaryProbe>,
    /// `ρ` decreases along the probes and stays above 1.
    pub rho_decreasing_to_one: bool,
    /// Every image sphere has diameter above 2.
    pub diameters_above_two: bool,
    #[serde(rename = "R")]
    pub big_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalSummary {
    pub gamma: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub energy: f64,
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct ExtremalMap {
    pub n: usize,
    pub profile: DistortionProfile,
    pub big_r: f64,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl ExtremalMap {
    pub fn new(n: usize, profile: DistortionProfile) -> Result<Self> {
        dimension_constants(n)?;
        let big_r = profile.i_one().exp();
        Ok(ExtremalMap { n, profile, big_r })
    }

    pub fn build(phi: &MonotoneMap, n: usize, grid_size: usize, r_min: f64) -> Result<Self> {
        dimension_constants(n)?;
        Self::new(n, DistortionProfile::solve(phi, grid_size, r_min)?)
    }

    /// `f(x) = ρ(|x|)·x/|x|`.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(QlabError::Domain(format!(
                "point has {} coordinates, map lives in dimension {}",
                x.len(),
                self.n
            )));
        }
        let r = norm(x);
        if !(r > 0.0 && r < 1.0) {
            return Err(QlabError::Domain(format!("|x| = {r} outside (0, 1)")));
        }
        let scale = self.profile.rho(r)? / r;
        Ok(x.iter().map(|v| v * scale).collect())
    }

    pub fn distortions(&self, r: f64) -> Result<Distortions> {
        if !(r > 0.0 && r < 1.0) {
            return Err(QlabError::Domain(format!("radius {r} outside (0, 1)")));
        }
        let rho = self.profile.rho(r)?;
        let k = self.profile.k_at(r)?;
        let delta_tau = rho / r;
        let delta_r = rho / (r * k);
        debug_assert!(delta_r <= delta_tau * (1.0 + 1e-12));
        Ok(Distortions {
            delta_tau,
            delta_r,
            k_o: k,
        })
    }

    /// Distortions from differences of [`ExtremalMap::eval`]: a central
    /// difference of `|f|` along the radius and the chord ratio on a short
    /// tangential arc.
    pub fn fd_distortions(&self, r: f64) -> Result<Distortions> {
        let h = FD_STEP * r;
        let point = |radius: f64, theta: f64| -> Vec<f64> {
            let mut x = vec![0.0; self.n];
            x[0] = radius * theta.cos();
            x[1] = radius * theta.sin();
            x
        };
        let outer = norm(&self.eval(&point(r + h, 0.0))?);
        let inner = norm(&self.eval(&point(r - h, 0.0))?);
        let delta_r = (outer - inner) / (2.0 * h);
        let dtheta = FD_STEP;
        let a = self.eval(&point(r, -dtheta))?;
        let b = self.eval(&point(r, dtheta))?;
        let image_chord = norm(&a.iter().zip(&b).map(|(p, q)| p - q).collect::<Vec<_>>());
        let chord = 2.0 * r * dtheta.sin();
        let delta_tau = image_chord / chord;
        Ok(Distortions {
            delta_tau,
            delta_r,
            k_o: delta_tau / delta_r,
        })
    }

    /// `ω_{n−1} ∫_0^1 φ(K(r)) r^{n−1} dr` and the bound `γ² ω_{n−1} I(1)`.
    pub fn phi_energy(&self) -> Result<EnergyReport> {
        let omega = dimension_constants(self.n)?.omega;
        let g2 = self.profile.gamma * self.profile.gamma;
        let energy = omega * g2 * self.profile.weighted_integral((self.n - 2) as f64)?;
        let bound = g2 * omega * self.profile.i_one();
        Ok(EnergyReport {
            energy,
            bound,
            within_bound: energy <= bound * (1.0 + crate::mean_inequality::TOL_CMP),
        })
    }

    pub fn boundary_report(&self, probes: &[f64]) -> Result<BoundaryReport> {
        let probes = probes
            .iter()
            .map(|&t| {
                if !(t > 0.0 && t < 1.0) {
                    return Err(QlabError::Domain(format!("probe {t} outside (0, 1)")));
                }
                let rho = self.profile.rho(t)?;
                Ok(BoundaryProbe {
                    t,
                    rho,
                    diameter: 2.0 * rho,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let rho_decreasing_to_one = probes.iter().all(|p| p.rho > 1.0)
            && probes
                .windows(2)
                .all(|w| w[1].t >= w[0].t || w[1].rho <= w[0].rho);
        Ok(BoundaryReport {
            diameters_above_two: probes.iter().all(|p| p.diameter > 2.0),
            rho_decreasing_to_one,
            probes,
            big_r: self.big_r,
        })
    }

    pub fn summary(&self) -> Result<ExtremalSummary> {
        let e = self.phi_energy()?;
        Ok(ExtremalSummary {
            gamma: self.profile.gamma,
            big_r: self.big_r,
            energy: e.energy,
            bound: e.bound,
        })
    }
}
