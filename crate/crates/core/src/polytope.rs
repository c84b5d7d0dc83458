//! Pairwise-bias polytope for triples of ±1 variables.
//!
//! Three pairwise expectations `(b12, b13, b23)` come from some distribution
//! over `{−1, 1}³` iff they lie in the tetrahedron spanned by the integral
//! points `(1,1,1)`, `(1,−1,−1)`, `(−1,1,−1)`, `(−1,−1,1)`.

use crate::error::{Error, Result};

const TOL: f64 = 1e-12;

/// Weights of the four sign patterns `(+++), (+−−), (−+−), (−−+)` (up to global
/// negation) that reproduce the given biases. Any triple yields four numbers
/// summing to 1; they are all non-negative iff the triple is feasible.
fn raw_weights(b12: f64, b13: f64, b23: f64) -> [f64; 4] {
    [
        (1.0 + b12 + b13 + b23) / 4.0,
        (1.0 - b12 - b13 + b23) / 4.0,
        (1.0 - b12 + b13 - b23) / 4.0,
        (1.0 + b12 - b13 - b23) / 4.0,
    ]
}

const INEQUALITIES: [&str; 4] = [
    "b12 + b13 + b23 >= -1",
    "b23 >= b12 + b13 - 1",
    "b13 >= b12 + b23 - 1",
    "b12 >= b13 + b23 - 1",
];

/// True iff the triple of pairwise biases is realizable by ±1 variables.
pub fn triple_bias_feasible(b12: f64, b13: f64, b23: f64) -> bool {
    raw_weights(b12, b13, b23).iter().all(|&c| c >= -TOL)
}

/// Distribution `(c₊₊₊, c₊₋₋, c₋₊₋, c₋₋₊)` over sign patterns with the given
/// pairwise expectations.
pub fn triple_bias_distribution(b12: f64, b13: f64, b23: f64) -> Result<[f64; 4]> {
    if [b12, b13, b23].iter().any(|b| !b.is_finite()) {
        return Err(Error::domain("biases must be finite"));
    }
    let w = raw_weights(b12, b13, b23);
    if let Some(i) = w.iter().position(|&c| c < -TOL) {
        return Err(Error::domain(format!(
            "biases ({b12}, {b13}, {b23}) violate {}",
            INEQUALITIES[i]
        )));
    }
    Ok(w.map(|c| c.clamp(0.0, 1.0)))
}

/// The four sign patterns in the order used by [`triple_bias_distribution`].
pub const SIGN_PATTERNS: [[i8; 3]; 4] = [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]];
