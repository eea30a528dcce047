//! Random generators shared by the randomized suites.

use rand::Rng;

use crate::monotone::{Interpolation, MonotoneMap};

/// A random convex piecewise-linear map with 3 to 7 knots.
///
/// Slopes are non-decreasing, so the table is convex on its knots and on the
/// last-slope extension. With `blow_up` the map jumps to `+∞` shortly after
/// the last knot.
pub fn random_convex_table<R: Rng + ?Sized>(rng: &mut R, blow_up: bool) -> MonotoneMap {
    let count = rng.gen_range(3..=7);
    let mut knots = Vec::with_capacity(count);
    let mut t = 0.0;
    let mut v = if rng.gen_bool(0.5) {
        0.0
    } else {
        rng.gen_range(0.0..2.0)
    };
    let mut slope = rng.gen_range(0.0..1.0);
    knots.push((t, v));
    for _ in 1..count {
        let dt = rng.gen_range(0.25..3.0);
        t += dt;
        v += slope * dt;
        knots.push((t, v));
        slope += rng.gen_range(0.1..2.0);
    }
    // the final segment keeps the last slope; make it positive so Φ is unbounded
    let last = knots.len() - 1;
    if knots[last].1 <= knots[last - 1].1 {
        knots[last].1 = knots[last - 1].1 + 0.5 * (knots[last].0 - knots[last - 1].0);
    }
    let cap = blow_up.then(|| t + rng.gen_range(0.5..4.0));
    MonotoneMap::table(&knots, Interpolation::Linear, cap).expect("generated knots are valid")
}
