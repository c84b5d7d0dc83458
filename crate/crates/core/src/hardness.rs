//! The `3(√21 − 4)/2` bound for MAX NAE-{3,5}-SAT.
//!
//! A `(1 − p, p)` mixture of 3-clauses with biases `(−1/3, −1/3, −1/3)` and
//! 5-clauses with the sunflower pattern is satisfied by RPR² with value
//! `(1−p)(3 + 3F₂)/4 + p(15 − 6F₂ − F₄)/16`, where `F₂ = F₂(1/3)` and `F₄ ≥ F₂²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::golden_section_min;

/// The minimax point of the mixture bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureBound {
    /// Weight on 5-clauses, `3/√21`.
    pub p_star: f64,
    /// Worst-case `F₂(1/3)`, `2√21 − 9`.
    pub f2_star: f64,
    /// `3(√21 − 4)/2`.
    pub bound: f64,
    /// `|numeric minimax − bound|`.
    pub residual: f64,
}

/// Upper end of the range of `F₂(1/3)` over odd rounding functions.
pub const F2_MAX: f64 = 1.0 / 3.0;

pub fn mixture_value(p: f64, f2: f64, f4: f64) -> f64 {
    (1.0 - p) * (3.0 + 3.0 * f2) / 4.0 + p * (15.0 - 6.0 * f2 - f4) / 16.0
}

/// `max_{F₂ ∈ [0, 1/3]} mixture_value(p, F₂, F₂²)` and its maximizer.
///
/// The expression is concave in `F₂` with vertex `(6 − 9p)/p`.
pub fn inner_max(p: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("mixture weight {p} outside [0, 1]")));
    }
    if p == 0.0 {
        return Ok((F2_MAX, mixture_value(0.0, F2_MAX, F2_MAX * F2_MAX)));
    }
    let f2 = ((6.0 - 9.0 * p) / p).clamp(0.0, F2_MAX);
    Ok((f2, mixture_value(p, f2, f2 * f2)))
}

const VERIFY_TOL: f64 = 1e-9;

/// Closed-form minimax together with an independent numeric check: golden
/// section over `p` of a golden-section inner maximization over `F₂`.
pub fn nae35_bound() -> Result<MixtureBound> {
    let s21 = 21f64.sqrt();
    let p_star = 3.0 / s21;
    let f2_star = 2.0 * s21 - 9.0;
    let bound = 3.0 * (s21 - 4.0) / 2.0;

    let inner = |p: f64| {
        let (_, v) = golden_section_min(|f| -mixture_value(p, f, f * f), 0.0, F2_MAX, 1e-13);
        -v
    };
    // coarse grid to bracket the minimum, then refine
    let grid = 200;
    let (mut best_i, mut best_v) = (0usize, f64::INFINITY);
    for i in 0..=grid {
        let v = inner(i as f64 / grid as f64);
        if v < best_v {
            best_i = i;
            best_v = v;
        }
    }
    let lo = (best_i.saturating_sub(1)) as f64 / grid as f64;
    let hi = ((best_i + 1).min(grid)) as f64 / grid as f64;
    let (_, numeric) = golden_section_min(inner, lo, hi, 1e-12);
    let residual = (numeric - bound).abs();
    if residual > VERIFY_TOL {
        return Err(Error::Numeric(format!(
            "numeric minimax {numeric} disagrees with closed form {bound}"
        )));
    }
    Ok(MixtureBound { p_star, f2_star, bound, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mixture_examples() {
        assert!((mixture_value(0.0, 1.0 / 3.0, 0.0) - 1.0).abs() < 1e-15);
        assert_eq!(mixture_value(1.0, 0.0, 0.0), 15.0 / 16.0);
        let s = 21f64.sqrt();
        let f = 2.0 * s - 9.0;
        let v = mixture_value(3.0 / s, f, f * f);
        assert!((v - 3.0 * (s - 4.0) / 2.0).abs() < 1e-14);
        assert!((v - 0.873_863_5).abs() < 1e-7);
    }

    #[test]
    fn bound_examples() {
        let b = nae35_bound().unwrap();
        assert!((b.bound - 0.873_863_542).abs() < 1e-9);
        assert!(b.bound < 7.0 / 8.0);
        assert!((b.p_star - 0.654_653_670).abs() < 1e-9);
        assert!((b.f2_star - 0.16515).abs() < 1e-5);
        assert!(b.residual < 1e-9);
        // bound = (84 p* + 36/p*)/16 − 6
        assert!((b.bound - ((84.0 * b.p_star + 36.0 / b.p_star) / 16.0 - 6.0)).abs() < 1e-12);
        let (f, v) = inner_max(b.p_star).unwrap();
        assert!((f - b.f2_star).abs() < 1e-12 && (v - b.bound).abs() < 1e-12);
    }

    #[test]
    fn inner_max_examples() {
        let (f, v) = inner_max(1.0).unwrap();
        assert_eq!(f, 0.0);
        assert_eq!(v, 15.0 / 16.0);
        let (_, v) = inner_max(0.5).unwrap();
        let grid = (0..=200)
            .map(|i| {
                let f = i as f64 / 600.0;
                mixture_value(0.5, f, f * f)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        // vertex (6 − 4.5)/0.5 = 3 clamps to 1/3, which is a grid point
        assert!((v - grid).abs() < 1e-9);
        assert_eq!(inner_max(0.0).unwrap(), (1.0 / 3.0, 1.0));
        assert!(inner_max(1.5).is_err());
    }

    #[test]
    fn concave_in_f2() {
        for p in [0.1, 0.5, 0.9] {
            let h = 1e-3;
            for i in 1..333 {
                let f = i as f64 * h;
                let m = |x: f64| mixture_value(p, x, x * x);
                assert!(m(f + h) - 2.0 * m(f) + m(f - h) <= 1e-15);
            }
        }
    }

    proptest! {
        #[test]
        fn inner_max_dominates(p in 0.0f64..=1.0, f in 0.0f64..=1.0 / 3.0) {
            let (_, v) = inner_max(p).unwrap();
            prop_assert!(v >= mixture_value(p, f, f * f) - 1e-15);
        }

        #[test]
        fn affine_in_p(p in 0.0f64..=1.0, f2 in 0.0f64..0.34, f4 in 0.0f64..0.2) {
            let a = mixture_value(0.0, f2, f4);
            let b = mixture_value(1.0, f2, f4);
            prop_assert!((mixture_value(p, f2, f4) - (a + p * (b - a))).abs() < 1e-14);
        }
    }
}
