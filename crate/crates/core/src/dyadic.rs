//! Dyadic block decomposition of improper integrals and the block-ratio
//! convergence rule.
//!
//! An integral over `[a, ∞)` is cut into blocks `[c·2^k, c·2^{k+1}]`
//! (with a finite head `[a, 1]` when `a < 1`); an integral over `(0, b]`
//! is cut into the mirrored blocks `[b·2^{-k-1}, b·2^{-k}]`. The trailing
//! block sums decide the verdict: steady or growing blocks above a floor
//! mean divergence, geometric decay with a small tail bound means
//! convergence, anything else is reported as inconclusive.

use serde::{Deserialize, Serialize};

use crate::quadrature::{integrate, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Divergent,
    Convergent,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Divergent => "Divergent",
            Verdict::Convergent => "Convergent",
            Verdict::Inconclusive => "Inconclusive",
        };
        f.write_str(s)
    }
}

/// Thresholds of the block-ratio rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockRule {
    /// Index of the last block, blocks are `k = 0..=kmax`.
    pub kmax: usize,
    /// Number of trailing ratios inspected.
    pub window: usize,
    /// Trailing blocks must exceed this to count as divergent.
    pub divergence_floor: f64,
    /// `b_{k+1} >= growth_slack * b_k` counts as non-decreasing.
    pub growth_slack: f64,
    /// `b_{k+1} <= decay_ratio * b_k` counts as geometric decay.
    pub decay_ratio: f64,
    /// Largest geometric tail bound accepted for convergence.
    pub tail_tol: f64,
    /// Trailing blocks below this magnitude are treated as exact zeros.
    pub negligible: f64,
}

impl Default for BlockRule {
    fn default() -> Self {
        BlockRule {
            kmax: 40,
            window: 5,
            divergence_floor: 1e-4,
            growth_slack: 0.9,
            decay_ratio: 0.9,
            tail_tol: 1e-6,
            negligible: 1e-12,
        }
    }
}

/// Block layout and sums of one improper integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSums {
    /// Integral over the finite head segment (zero when absent).
    pub head: f64,
    pub blocks: Vec<f64>,
    /// Block boundaries; `edges[k]..edges[k+1]` is block `k`.
    pub edges: Vec<f64>,
    /// Summed quadrature error estimates.
    pub abs_error: f64,
}

impl BlockSums {
    /// Head plus all finite blocks.
    pub fn partial_sum(&self) -> f64 {
        self.head + self.blocks.iter().sum::<f64>()
    }

    /// Outer edge of the last block.
    pub fn last_edge(&self) -> f64 {
        *self.edges.last().unwrap_or(&f64::NAN)
    }
}

/// Result of applying a [`BlockRule`] to a set of block sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockAssessment {
    pub verdict: Verdict,
    pub partial_sum: f64,
    /// Estimated integral beyond the last block (infinite when divergent).
    pub tail_estimate: f64,
    pub note: String,
}

impl BlockAssessment {
    /// Best estimate of the full integral.
    pub fn total(&self) -> f64 {
        self.partial_sum + self.tail_estimate
    }
}

/// Integrates `f` over `[start, ∞)` blockwise.
pub fn upward_blocks<F: Fn(f64) -> f64>(
    f: F,
    start: f64,
    kmax: usize,
    quad: &QuadOptions,
) -> BlockSums {
    let (anchor, head, mut abs_error) = if start >= 1.0 {
        (start, 0.0, 0.0)
    } else {
        let r = integrate(&f, start, 1.0, quad);
        (1.0, r.value, r.abs_error)
    };
    let edges: Vec<f64> = (0..=kmax + 1)
        .map(|k| anchor * 2f64.powi(k as i32))
        .collect();
    let mut blocks = Vec::with_capacity(kmax + 1);
    for w in edges.windows(2) {
        let r = integrate(&f, w[0], w[1], quad);
        abs_error += r.abs_error;
        blocks.push(r.value);
    }
    BlockSums {
        head,
        blocks,
        edges,
        abs_error,
    }
}

/// Integrates `f` over `(0, end]` blockwise, block `k` being
/// `[end·2^{-k-1}, end·2^{-k}]`.
pub fn toward_zero_blocks<F: Fn(f64) -> f64>(
    f: F,
    end: f64,
    kmax: usize,
    quad: &QuadOptions,
) -> BlockSums {
    let edges: Vec<f64> = (0..=kmax + 1)
        .map(|k| end * 0.5f64.powi(k as i32))
        .collect();
    let mut blocks = Vec::with_capacity(kmax + 1);
    let mut abs_error = 0.0;
    for w in edges.windows(2) {
        let r = integrate(&f, w[1], w[0], quad);
        abs_error += r.abs_error;
        blocks.push(r.value);
    }
    BlockSums {
        head: 0.0,
        blocks,
        edges,
        abs_error,
    }
}

impl BlockRule {
    pub fn with_kmax(mut self, kmax: usize) -> Self {
        self.kmax = kmax;
        self
    }

    pub fn assess(&self, sums: &BlockSums) -> BlockAssessment {
        let partial = sums.partial_sum();
        if sums.head == f64::INFINITY || sums.blocks.contains(&f64::INFINITY) {
            return BlockAssessment {
                verdict: Verdict::Divergent,
                partial_sum: f64::INFINITY,
                tail_estimate: f64::INFINITY,
                note: "a block is infinite".into(),
            };
        }
        if partial.is_nan() {
            return BlockAssessment {
                verdict: Verdict::Inconclusive,
                partial_sum: partial,
                tail_estimate: f64::NAN,
                note: "integrand produced NaN".into(),
            };
        }
        let n = sums.blocks.len();
        if n < self.window + 1 {
            return BlockAssessment {
                verdict: Verdict::Inconclusive,
                partial_sum: partial,
                tail_estimate: f64::NAN,
                note: format!("need at least {} blocks", self.window + 1),
            };
        }
        let tail = &sums.blocks[n - self.window - 1..];

        if tail.iter().all(|b| b.abs() <= self.negligible) {
            return BlockAssessment {
                verdict: Verdict::Convergent,
                partial_sum: partial,
                tail_estimate: 0.0,
                note: "trailing blocks vanish".into(),
            };
        }

        let last_five = &tail[1..];
        let steady = tail
            .windows(2)
            .all(|w| w[1] >= self.growth_slack * w[0]);
        if last_five.iter().all(|b| *b > self.divergence_floor) && steady {
            return BlockAssessment {
                verdict: Verdict::Divergent,
                partial_sum: partial,
                tail_estimate: f64::INFINITY,
                note: format!("trailing blocks steady at ~{:.3e}", tail[self.window]),
            };
        }

        let same_sign = tail.iter().all(|b| *b >= 0.0) || tail.iter().all(|b| *b <= 0.0);
        let ratios: Vec<f64> = tail
            .windows(2)
            .map(|w| {
                if w[1] == 0.0 {
                    0.0
                } else if w[0] == 0.0 {
                    f64::INFINITY
                } else {
                    (w[1] / w[0]).abs()
                }
            })
            .collect();
        let q = ratios.iter().cloned().fold(0.0, f64::max);
        let last = tail[self.window];
        let geometric_tail = if q < 1.0 {
            last * q / (1.0 - q)
        } else {
            f64::INFINITY
        };
        if same_sign && q <= self.decay_ratio && geometric_tail.abs() < self.tail_tol {
            return BlockAssessment {
                verdict: Verdict::Convergent,
                partial_sum: partial,
                tail_estimate: geometric_tail,
                note: format!("block ratio <= {q:.3}"),
            };
        }
        BlockAssessment {
            verdict: Verdict::Inconclusive,
            partial_sum: partial,
            tail_estimate: geometric_tail,
            note: format!("max trailing ratio {q:.3}, last block {last:.3e}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assess_up<F: Fn(f64) -> f64>(f: F, start: f64) -> BlockAssessment {
        let rule = BlockRule::default();
        rule.assess(&upward_blocks(f, start, rule.kmax, &QuadOptions::default()))
    }

    #[test]
    fn harmonic_diverges() {
        assert_eq!(assess_up(|t| 1.0 / t, 1.0).verdict, Verdict::Divergent);
    }

    #[test]
    fn inverse_square_converges_to_one() {
        let a = assess_up(|t| 1.0 / (t * t), 1.0);
        assert_eq!(a.verdict, Verdict::Convergent);
        assert!((a.total() - 1.0).abs() < 1e-10, "{}", a.total());
    }

    #[test]
    fn head_segment_is_used_below_one() {
        // ∫_{0.25}^∞ e^{-t} dt
        let a = assess_up(|t| (-t).exp(), 0.25);
        assert_eq!(a.verdict, Verdict::Convergent);
        assert!((a.total() - (-0.25f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn toward_zero_mirrors() {
        let rule = BlockRule::default();
        let log = rule.assess(&toward_zero_blocks(|r| 1.0 / r, 0.5, 40, &QuadOptions::default()));
        assert_eq!(log.verdict, Verdict::Divergent);
        let sqrt = rule.assess(&toward_zero_blocks(
            |r| 1.0 / r.sqrt(),
            1.0,
            40,
            &QuadOptions::default(),
        ));
        assert_eq!(sqrt.verdict, Verdict::Inconclusive);
        let lin = rule.assess(&toward_zero_blocks(|r| r, 1.0, 40, &QuadOptions::default()));
        assert_eq!(lin.verdict, Verdict::Convergent);
        assert!((lin.total() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_integrand_is_convergent() {
        let a = assess_up(|_| 0.0, 3.0);
        assert_eq!(a.verdict, Verdict::Convergent);
        assert_eq!(a.total(), 0.0);
    }

    #[test]
    fn infinite_block_is_divergent() {
        let a = assess_up(|t| if t > 100.0 { f64::INFINITY } else { 1.0 }, 1.0);
        assert_eq!(a.verdict, Verdict::Divergent);
    }

    #[test]
    fn oscillating_blocks_are_inconclusive() {
        // blocks alternate between large and small
        let a = assess_up(
            |t| {
                let k = t.log2().floor() as i64;
                if k % 2 == 0 {
                    1.0 / t
                } else {
                    1e-3 / t
                }
            },
            1.0,
        );
        assert_eq!(a.verdict, Verdict::Inconclusive);
    }
}
