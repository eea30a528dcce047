//! Scalar fields on the unit ball and their spherical averages.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{QlabError, Result};
use crate::quadrature::gauss_legendre;

/// Angular nodes on the circle.
pub const CIRCLE_NODES: usize = 256;
/// Gauss–Legendre nodes in `z = cos θ` on the sphere.
pub const SPHERE_LATITUDES: usize = 64;
/// Trapezoidal nodes in longitude on the sphere.
pub const SPHERE_LONGITUDES: usize = 128;

type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Shape {
    Constant(f64),
    Power { c: f64, exponent: f64 },
    LogPower { c: f64, exponent: f64 },
    Radial(RadialFn),
    Linear { c0: f64, grad: Vec<f64> },
    Sampled(PointFn),
}

/// A field `K : Bⁿ → [0, ∞]`, either radial or sampled on spheres.
#[derive(Clone)]
pub struct RadialField {
    dim: usize,
    shape: Shape,
}

impl fmt::Debug for RadialField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shape = match &self.shape {
            Shape::Constant(c) => format!("Constant({c})"),
            Shape::Power { c, exponent } => format!("Power({c}·r^{exponent})"),
            Shape::LogPower { c, exponent } => format!("LogPower({c}·log(1/r)^{exponent})"),
            Shape::Radial(_) => "Radial(<fn>)".into(),
            Shape::Linear { c0, grad } => format!("Linear({c0} + {grad:?}·x)"),
            Shape::Sampled(_) => "Sampled(<fn>)".into(),
        };
        f.debug_struct("RadialField")
            .field("dim", &self.dim)
            .field("shape", &shape)
            .finish()
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim >= 2 {
        Ok(())
    } else {
        Err(QlabError::spec("n", format!("dimension must be at least 2, got {dim}")))
    }
}

fn check_coefficient(c: f64) -> Result<()> {
    if c >= 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(QlabError::spec("c", format!("must be non-negative and finite, got {c}")))
    }
}

/// Unit directions and weights (summing to 1) of the angular rules.
fn circle_rule() -> &'static [([f64; 3], f64)] {
    static RULE: OnceLock<Vec<([f64; 3], f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let step = std::f64::consts::TAU / CIRCLE_NODES as f64;
        (0..CIRCLE_NODES)
            .map(|j| {
                let th = j as f64 * step;
                ([th.cos(), th.sin(), 0.0], 1.0 / CIRCLE_NODES as f64)
            })
            .collect()
    })
}

fn sphere_rule() -> &'static [([f64; 3], f64)] {
    static RULE: OnceLock<Vec<([f64; 3], f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let (zs, ws) = gauss_legendre(SPHERE_LATITUDES);
        let step = std::f64::consts::TAU / SPHERE_LONGITUDES as f64;
        let mut nodes = Vec::with_capacity(SPHERE_LATITUDES * SPHERE_LONGITUDES);
        for (z, w) in zs.iter().zip(&ws) {
            let rho = (1.0 - z * z).max(0.0).sqrt();
            for j in 0..SPHERE_LONGITUDES {
                let ph = j as f64 * step;
                nodes.push(([rho * ph.cos(), rho * ph.sin(), *z], 0.5 * w / SPHERE_LONGITUDES as f64));
            }
        }
        nodes
    })
}

impl RadialField {
    pub fn constant(dim: usize, c: f64) -> Result<Self> {
        check_dim(dim)?;
        check_coefficient(c)?;
        Ok(RadialField {
            dim,
            shape: Shape::Constant(c),
        })
    }

    /// `c·r^exponent`; `1/|x|` is `power(n, 1.0, -1.0)`.
    pub fn power(dim: usize, c: f64, exponent: f64) -> Result<Self> {
        check_dim(dim)?;
        check_coefficient(c)?;
        if !exponent.is_finite() {
            return Err(QlabError::spec("exponent", "must be finite"));
        }
        Ok(RadialField {
            dim,
            shape: Shape::Power { c, exponent },
        })
    }

    /// `c·(ln 1/r)^exponent`.
    pub fn log_power(dim: usize, c: f64, exponent: f64) -> Result<Self> {
        check_dim(dim)?;
        check_coefficient(c)?;
        if !exponent.is_finite() {
            return Err(QlabError::spec("exponent", "must be finite"));
        }
        Ok(RadialField {
            dim,
            shape: Shape::LogPower { c, exponent },
        })
    }

    pub fn radial_fn<F>(dim: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_dim(dim)?;
        Ok(RadialField {
            dim,
            shape: Shape::Radial(Arc::new(f)),
        })
    }

    /// `c0 + grad·x` with `|grad| ≤ c0`, so the field is non-negative on the ball.
    pub fn linear(c0: f64, grad: Vec<f64>) -> Result<Self> {
        let dim = grad.len();
        check_dim(dim)?;
        if dim > 3 {
            return Err(QlabError::spec("grad", "sampled fields support n = 2 or 3 only"));
        }
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !(c0.is_finite() && norm <= c0) {
            return Err(QlabError::spec("c0", "need |grad| <= c0 for a non-negative field"));
        }
        Ok(RadialField {
            dim,
            shape: Shape::Linear { c0, grad },
        })
    }

    /// A field sampled pointwise on spheres (n = 2 or 3).
    pub fn sampled<F>(dim: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        check_dim(dim)?;
        if dim > 3 {
            return Err(QlabError::Unsupported(format!(
                "sampled fields need n = 2 or 3, got {dim}"
            )));
        }
        Ok(RadialField {
            dim,
            shape: Shape::Sampled(Arc::new(f)),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_radial(&self) -> bool {
        matches!(
            self.shape,
            Shape::Constant(_) | Shape::Power { .. } | Shape::LogPower { .. } | Shape::Radial(_)
        )
    }

    /// `K(r)` for radial fields, `None` otherwise.
    pub fn radial_value(&self, r: f64) -> Option<f64> {
        match &self.shape {
            Shape::Constant(c) => Some(*c),
            Shape::Power { c, exponent } => Some(c * r.powf(*exponent)),
            Shape::LogPower { c, exponent } => Some(c * (-r.ln()).powf(*exponent)),
            Shape::Radial(f) => Some(f(r)),
            _ => None,
        }
    }

    /// `K(e^{-s})` for radial fields, stable for radii below the `f64` range.
    pub fn radial_value_at_log(&self, s: f64) -> Option<f64> {
        match &self.shape {
            Shape::Power { c, exponent } => Some(c * (-exponent * s).exp()),
            Shape::LogPower { c, exponent } => Some(c * s.powf(*exponent)),
            _ => self.radial_value((-s).exp()),
        }
    }

    /// `ln K(e^{-s})` for radial fields, finite where `K` itself overflows.
    pub fn ln_radial_value_at_log(&self, s: f64) -> Option<f64> {
        match &self.shape {
            Shape::Constant(c) => Some(c.ln()),
            Shape::Power { c, exponent } => Some(c.ln() - exponent * s),
            Shape::LogPower { c, exponent } => Some(c.ln() + exponent * s.ln()),
            _ => self.radial_value_at_log(s).map(f64::ln),
        }
    }

    /// `K(x)` at a point of the ball.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Linear { c0, grad } => c0 + grad.iter().zip(x).map(|(g, x)| g * x).sum::<f64>(),
            Shape::Sampled(f) => f(x),
            _ => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                self.radial_value(r).unwrap_or(f64::NAN)
            }
        }
    }

    /// Area-measure average of `g ∘ K` over the sphere `|x| = r`.
    pub fn spherical_mean_of<G: Fn(f64) -> f64>(&self, r: f64, g: G) -> Result<f64> {
        if let Some(v) = self.radial_value(r) {
            return Ok(g(v));
        }
        let rule = match self.dim {
            2 => circle_rule(),
            3 => sphere_rule(),
            n => {
                return Err(QlabError::Unsupported(format!(
                    "sampled spherical averages need n = 2 or 3, got {n}"
                )))
            }
        };
        let d = self.dim;
        Ok(rule
            .iter()
            .map(|(u, w)| {
                let x = [r * u[0], r * u[1], r * u[2]];
                w * g(self.value_at(&x[..d]))
            })
            .sum())
    }

    /// Average of `K` itself over `|x| = r`; exact for linear fields, whose
    /// linear part averages to zero.
    pub fn spherical_average(&self, r: f64) -> Result<f64> {
        match &self.shape {
            Shape::Linear { c0, .. } => Ok(*c0),
            _ => self.spherical_mean_of(r, |v| v),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_average_of_polynomials() {
        // mean of z² over S² is 1/3, of x·y is 0
        let f = RadialField::sampled(3, |x| x[2] * x[2] / (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).unwrap();
        let m = f.spherical_mean_of(0.7, |v| v).unwrap();
        assert!((m - 1.0 / 3.0).abs() < 1e-14, "{m}");
        let g = RadialField::sampled(3, |x| 1.0 + x[0] * x[1]).unwrap();
        assert!((g.spherical_mean_of(0.5, |v| v).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn linear_average_matches_quadrature() {
        for grad in [vec![0.3, -0.4], vec![0.2, 0.5, -0.1]] {
            let f = RadialField::linear(1.2, grad).unwrap();
            let q = f.spherical_mean_of(0.8, |v| v).unwrap();
            assert!((f.spherical_average(0.8).unwrap() - q).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_large_sampled_dimension() {
        assert!(RadialField::sampled(4, |_| 1.0).is_err());
        assert!(RadialField::linear(1.0, vec![0.1, 0.1, 0.1, 0.1]).is_err());
        assert!(RadialField::linear(0.5, vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn log_radius_evaluation() {
        let f = RadialField::power(2, 2.0, -1.5).unwrap();
        let s: f64 = 3.0;
        let direct = f.radial_value((-s).exp()).unwrap();
        assert!((f.radial_value_at_log(s).unwrap() - direct).abs() < 1e-12 * direct);
        // beyond the double range of r
        assert!(f.radial_value_at_log(1e3).unwrap().is_infinite());
        let l = RadialField::log_power(3, 1.0, 0.5).unwrap();
        assert_eq!(l.radial_value_at_log(4.0), Some(2.0));
    }
}
