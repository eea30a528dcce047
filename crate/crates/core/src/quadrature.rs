//! Fixed and adaptive quadrature rules.
//!
//! The adaptive driver is a 7/15-point Gauss–Kronrod scheme with a global
//! error queue: the panel with the largest error estimate is bisected until
//! the summed estimate falls under the requested tolerance. When the
//! interval is on the positive axis the initial panels are spaced
//! geometrically, which suits integrands that vary on a logarithmic scale.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

// Kronrod abscissae on [0,1] (symmetric), odd indices are the Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on the number of panels kept in the queue.
    pub max_panels: usize,
    /// Number of panels the interval is split into before adaptation.
    pub initial_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol: 1e-8,
            abs_tol: 1e-300,
            max_panels: 400,
            initial_panels: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let value = kron * half;
    let error = ((kron - gauss) * half).abs();
    (value, error)
}

/// Integrates `f` over `[a, b]`.
///
/// An infinite sample makes the whole result infinite (with zero error
/// estimate); NaN samples propagate.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> QuadResult {
    if a == b {
        return QuadResult {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        };
    }
    if b < a {
        let r = integrate(f, b, a, opts);
        return QuadResult {
            value: -r.value,
            ..r
        };
    }

    let panels = opts.initial_panels.max(1);
    let geometric = a > 0.0 && b / a > 1.5;
    let mut edges = Vec::with_capacity(panels + 1);
    for i in 0..=panels {
        let w = i as f64 / panels as f64;
        let x = if geometric {
            a * (b / a).powf(w)
        } else {
            a + (b - a) * w
        };
        edges.push(x);
    }
    edges[panels] = b;

    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut evaluations = 0;
    for w in edges.windows(2) {
        let (value, error) = kronrod15(&f, w[0], w[1]);
        evaluations += 15;
        if value.is_nan() {
            return QuadResult {
                value: f64::NAN,
                abs_error: f64::NAN,
                evaluations,
            };
        }
        if value.is_infinite() {
            return QuadResult {
                value,
                abs_error: 0.0,
                evaluations,
            };
        }
        total += value;
        total_err += error;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }

    while total_err > opts.abs_tol.max(opts.rel_tol * total.abs()) && heap.len() < opts.max_panels
    {
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // panel collapsed to adjacent floats
            heap.push(worst);
            break;
        }
        let (v1, e1) = kronrod15(&f, worst.a, mid);
        let (v2, e2) = kronrod15(&f, mid, worst.b);
        evaluations += 30;
        if v1.is_infinite() || v2.is_infinite() || v1.is_nan() || v2.is_nan() {
            let value = v1 + v2;
            return QuadResult {
                value,
                abs_error: if value.is_nan() { f64::NAN } else { 0.0 },
                evaluations,
            };
        }
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }

    // re-sum to shed the drift of the running updates
    let (value, abs_error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
    QuadResult {
        value,
        abs_error,
        evaluations,
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss-Legendre order must be positive");
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, refined by Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| 3.0 * x * x, 0.0, 2.0, &QuadOptions::default());
        assert!((r.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn log_scale_integrand() {
        // ∫_1^1e6 dt/t = ln 1e6
        let r = integrate(|t| 1.0 / t, 1.0, 1e6, &QuadOptions::default());
        assert!((r.value - 1e6f64.ln()).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn infinite_sample_propagates() {
        let r = integrate(
            |t| if t > 0.5 { f64::INFINITY } else { 1.0 },
            0.0,
            1.0,
            &QuadOptions::default(),
        );
        assert_eq!(r.value, f64::INFINITY);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let r = integrate(|x| x, 1.0, 0.0, &QuadOptions::default());
        assert!((r.value + 0.5).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_weights_and_moments() {
        for n in [1, 2, 4, 7, 64] {
            let (x, w) = gauss_legendre(n);
            let sum: f64 = w.iter().sum();
            assert!((sum - 2.0).abs() < 1e-13, "n={n} sum={sum}");
            // exact for degree 2n-1
            let deg = 2 * n - 2;
            let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((m - 2.0 / (deg as f64 + 1.0)).abs() < 1e-12, "n={n}");
        }
    }
}
