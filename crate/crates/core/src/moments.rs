//! Moment functions of RPR² rounding: `F₂`, symmetric `F_{2ℓ}`, the Gaussian
//! noise operator, satisfaction probabilities of symmetric NAE clauses and
//! Monte Carlo moments for arbitrary bias matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gram::{validate_gram, GramConfig, DEFAULT_TOL};
use crate::normal;
use crate::quad;
use crate::step::StepFunction;

/// A moment value with its Monte Carlo standard error (`0` for exact values).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl MomentEstimate {
    pub fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0, samples: 0 }
    }

    /// One-sided upper confidence bound `value + z·σ`.
    pub fn upper_bound(&self, z: f64) -> f64 {
        self.value + z * self.std_error
    }

    /// `|value − other| ≤ z·σ`.
    pub fn agrees_with(&self, other: f64, z: f64) -> bool {
        (self.value - other).abs() <= z * self.std_error
    }
}

const QUAD_HALF_WIDTH: f64 = 10.0;
const QUAD_TOL: f64 = 1e-12;

/// `(U_η f)(x) = E[f(ηx + √(1−η²) Z)]`.
pub fn noise_operator(f: &StepFunction, eta: f64, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::domain(format!("noise parameter {eta} outside [0, 1]")));
    }
    Ok(noise_unchecked(f, eta, x))
}

fn noise_unchecked(f: &StepFunction, eta: f64, x: f64) -> f64 {
    if eta == 1.0 {
        return f.eval(x);
    }
    let s = (1.0 - eta * eta).sqrt();
    let c = eta * x;
    // sum over the positive cells and their mirror images
    f.positive_cells()
        .map(|(lo, hi, b)| {
            let plus = normal::interval_mass((lo - c) / s, (hi - c) / s);
            let minus = normal::interval_mass((-hi - c) / s, (-lo - c) / s);
            b * (plus - minus)
        })
        .sum()
}

/// `F₂[f](ρ) = E[f(X) f(Y)]` for `ρ`-correlated standard normals, computed
/// exactly from bivariate rectangle probabilities of the step cells.
pub fn f2(f: &StepFunction, rho: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::domain(format!("correlation {rho} outside [-1, 1]")));
    }
    if rho == 1.0 {
        return Ok(f.second_moment());
    }
    if rho == -1.0 {
        return Ok(-f.second_moment());
    }
    let (breaks, values) = f.full_line_cells();
    let p = normal::cell_probabilities(&breaks, rho);
    let mut acc = 0.0;
    for (i, row) in p.iter().enumerate() {
        if values[i] == 0.0 {
            continue;
        }
        let inner: f64 = row.iter().zip(&values).map(|(q, v)| q * v).sum();
        acc += values[i] * inner;
    }
    Ok(acc)
}

/// Positive split points for quadrature of functions of `U_η f`: the smoothed
/// jumps sit near `a_i/η`.
fn split_points(f: &StepFunction, eta: f64) -> Vec<f64> {
    let mut pts = vec![0.0];
    if eta > 0.0 {
        pts.extend(f.breakpoints().iter().map(|a| a / eta).filter(|&p| p < QUAD_HALF_WIDTH));
    }
    pts.push(QUAD_HALF_WIDTH);
    pts
}

/// `2∫₀^{10} g(U_η f(x)) φ(x) dx` for even `g`.
fn symmetric_integral(f: &StepFunction, eta: f64, g: impl Fn(f64) -> f64) -> Result<f64> {
    let pts = split_points(f, eta);
    let v = quad::integrate_pieces(|x| g(noise_unchecked(f, eta, x)) * normal::pdf(x), &pts, QUAD_TOL)?;
    Ok(2.0 * v)
}

/// `F_{2ℓ}` at the symmetric point where all pairwise biases equal `ρ ≥ 0`,
/// via `∫ (U_{√ρ} f)^{2ℓ} φ`.
pub fn f2l_symmetric(f: &StepFunction, rho: f64, l: u32) -> Result<f64> {
    if rho < 0.0 {
        return Err(Error::domain(
            "f2l_symmetric needs rho >= 0; use moment_mc for negative correlations",
        ));
    }
    if rho > 1.0 {
        return Err(Error::domain(format!("correlation {rho} exceeds 1")));
    }
    if l == 0 {
        return Err(Error::domain("moment order l must be positive"));
    }
    if rho == 0.0 {
        return Ok(0.0);
    }
    symmetric_integral(f, rho.sqrt(), |u| u.powi(2 * l as i32))
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Probability that RPR² with `f` satisfies a NAE clause of size `k` whose
/// vectors have all pairwise biases equal to `ρ`.
pub fn sat_prob_symmetric(f: &StepFunction, k: u32, rho: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::domain("clause size must be at least 2"));
    }
    if !(rho <= 1.0 && rho >= -1.0 / (k as f64 - 1.0) - 1e-12) {
        return Err(Error::domain(format!(
            "{k} vectors cannot have all pairwise biases equal to {rho}"
        )));
    }
    let half = 2f64.powi(k as i32 - 1);
    if k <= 3 {
        return Ok((half - 1.0 - binom(k, 2) * f2(f, rho)?) / half);
    }
    if rho < 0.0 {
        return Err(Error::domain(
            "clause sizes >= 4 need higher moments at negative correlation; use moment_mc",
        ));
    }
    let ki = k as i32;
    let eta = rho.sqrt();
    let tail = symmetric_integral(f, eta, |u| (1.0 + u).powi(ki) + (1.0 - u).powi(ki))?;
    // mass beyond |x| = 10 where U is (numerically) constant
    let far = noise_unchecked(f, eta, QUAD_HALF_WIDTH);
    let out = 2.0 * normal::sf(QUAD_HALF_WIDTH) * ((1.0 + far).powi(ki) + (1.0 - far).powi(ki));
    Ok(1.0 - (tail + out) / 2f64.powi(ki))
}

const CHUNK: u64 = 1 << 16;

/// Monte Carlo estimate of `E[∏ f(tᵢ)]` where `t ~ N(0, B)`.
///
/// Samples are split into fixed chunks with their own ChaCha stream, so the
/// result depends only on `(samples, seed)` and not on the thread count.
pub fn moment_mc(f: &StepFunction, b: &GramConfig, samples: u64, seed: u64) -> Result<MomentEstimate> {
    let diag = validate_gram(b, DEFAULT_TOL);
    if !diag.accepted {
        return Err(Error::domain(format!("bias matrix rejected: {diag:?}")));
    }
    let l = b.factor(DEFAULT_TOL)?;
    let k = b.order();
    let rows: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| l[(i, j)]).collect()).collect();
    Ok(monte_carlo(samples, seed, k, |z| {
        rows.iter().map(|r| f.eval(crate::gram::dot(r, z))).product()
    }))
}

/// Chunked, order-deterministic Monte Carlo mean of `g(z)` with `z ~ N(0, I_dim)`.
pub(crate) fn monte_carlo(
    samples: u64,
    seed: u64,
    dim: usize,
    g: impl Fn(&[f64]) -> f64 + Sync,
) -> MomentEstimate {
    if samples == 0 {
        return MomentEstimate { value: f64::NAN, std_error: f64::NAN, samples: 0 };
    }
    let chunks = samples.div_ceil(CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let n = CHUNK.min(samples - c * CHUNK);
            let mut z = vec![0.0; dim];
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                for zi in z.iter_mut() {
                    *zi = rng.sample(StandardNormal);
                }
                let v = g(&z);
                s1 += v;
                s2 += v * v;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |a, s| (a.0 + s.0, a.1 + s.1));
    let n = samples as f64;
    let mean = s1 / n;
    let var = if samples > 1 { ((s2 - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    MomentEstimate { value: mean, std_error: (var / n).sqrt(), samples }
}

/// The odd step function that equals `sign(x)` for `ε ≤ |x| < 1.5ε` and `0` elsewhere.
pub fn interval_rounding(eps: f64) -> Result<StepFunction> {
    StepFunction::new(vec![eps, 1.5 * eps], vec![0.0, 1.0, 0.0])
}

/// Four unit vectors in ℝ³ whose pairwise biases are all positive but whose
/// fourth moment under [`interval_rounding`] is negative.
pub fn f4_witness_vectors(delta: f64) -> Result<[[f64; 3]; 4]> {
    let upper = 2.0 - 3f64.sqrt();
    if !(delta > 0.0 && delta < upper) {
        return Err(Error::domain(format!("delta must lie in (0, 2 - sqrt 3), got {delta}")));
    }
    let c = (2.0 - delta) / 3.0;
    let m = (5.0 + 4.0 * delta - delta * delta).sqrt() / 3.0;
    let h = 3f64.sqrt() / 2.0;
    Ok([
        [1.0, 0.0, 0.0],
        [c, m, 0.0],
        [c, -0.5 * m, h * m],
        [c, -0.5 * m, -h * m],
    ])
}

/// Result of [`f4_negative_witness`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct F4Witness {
    pub delta: f64,
    pub eps: f64,
    /// Bias of `v₁` against each of `v₂, v₃, v₄`.
    pub bias_first: f64,
    /// Bias among `v₂, v₃, v₄`.
    pub bias_rest: f64,
    /// Largest deviation of the constructed Gram entries from the two biases.
    pub bias_error: f64,
    pub estimate: MomentEstimate,
}

/// Monte Carlo `E[x₁x₂x₃x₄]` for the four-vector configuration under interval
/// rounding. Each sample draws the projection and takes the conditional
/// expectation over the independent coins, which is `∏ f(vᵢ·u)`.
pub fn f4_negative_witness(delta: f64, eps: f64, samples: u64, seed: u64) -> Result<F4Witness> {
    let v = f4_witness_vectors(delta)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::domain("eps must be positive"));
    }
    let f = interval_rounding(eps)?;
    let bias_first = (2.0 - delta) / 3.0;
    let bias_rest = (1.0 - 4.0 * delta + delta * delta) / 6.0;
    let mut bias_error = 0.0f64;
    for i in 0..4 {
        for j in (i + 1)..4 {
            let want = if i == 0 { bias_first } else { bias_rest };
            bias_error = bias_error.max((crate::gram::dot(&v[i], &v[j]) - want).abs());
        }
    }
    let estimate = monte_carlo(samples, seed, 3, |u| {
        v.iter().map(|vi| f.eval(crate::gram::dot(vi, u))).product()
    });
    Ok(F4Witness { delta, eps, bias_first, bias_rest, bias_error, estimate })
}
