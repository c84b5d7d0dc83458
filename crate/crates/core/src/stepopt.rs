//! Step rounding functions for satisfiable MAX NAE-K-SAT.
//!
//! The objective assumes the hardest configuration of a `k`-clause is the
//! symmetric one with all pairwise biases `1 − 4/k`; ratios reported here are
//! conjectured under that assumption.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::sat_prob_symmetric;
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::step::StepFunction;

/// Pairwise bias of the conjectured hardest `k`-clause.
pub fn symmetric_bias(k: u32) -> f64 {
    1.0 - 4.0 / k as f64
}

/// `p_f(k, 1 − 4/k)`; `k = 4` is exactly `7/8` for every odd `f`.
pub fn alpha_k(f: &StepFunction, k: u32) -> Result<f64> {
    if k < 3 {
        return Err(Error::domain(format!("clause size {k} < 3")));
    }
    if k == 4 {
        return Ok(7.0 / 8.0);
    }
    sat_prob_symmetric(f, k, symmetric_bias(k))
}

/// `min_{k∈K} α_k(f)`.
pub fn objective_alpha_k(f: &StepFunction, ks: &[u32]) -> Result<f64> {
    if ks.is_empty() {
        return Err(Error::domain("empty clause-size set"));
    }
    ks.iter().try_fold(f64::INFINITY, |m, &k| Ok(m.min(alpha_k(f, k)?)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepSearchConfig {
    pub ks: Vec<u32>,
    /// Number of steps `ℓ + 1` on the positive half-line.
    pub steps: usize,
    /// Restrict to `±1` values (both alternating sign patterns are tried).
    pub pm1: bool,
    pub restarts: usize,
    pub seed: u64,
    pub x_tol: f64,
    pub max_evals: usize,
}

impl StepSearchConfig {
    pub fn new(ks: Vec<u32>, steps: usize, pm1: bool) -> Self {
        Self { ks, steps, pm1, restarts: 64, seed: 0, x_tol: 1e-10, max_evals: 4000 }
    }

    fn validate(&self) -> Result<()> {
        if self.ks.is_empty() || self.ks.iter().any(|&k| k < 3) {
            return Err(Error::domain("clause sizes must be at least 3"));
        }
        if self.steps == 0 {
            return Err(Error::domain("need at least one step"));
        }
        if self.restarts == 0 {
            return Err(Error::domain("need at least one restart"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepSearchResult {
    pub f: StepFunction,
    pub objective: f64,
    /// `α_k(f)` for each `k ∈ K`.
    pub per_k: Vec<(u32, f64)>,
    pub evals: usize,
    pub converged: bool,
}

/// Radical inverse of `i` in base `b`.
fn halton(mut i: u64, b: u64) -> f64 {
    let (mut r, mut scale) = (0.0, 1.0 / b as f64);
    while i > 0 {
        r += (i % b) as f64 * scale;
        i /= b;
        scale /= b as f64;
    }
    r
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Decodes `a₁ = e^{u₁}`, `a_{i+1} − a_i = e^{u_{i+1}}`, `b_i = sin v_i`.
fn decode(x: &[f64], nbp: usize, pm1: Option<bool>) -> Result<StepFunction> {
    let mut bps = Vec::with_capacity(nbp);
    let mut a = 0.0;
    for u in &x[..nbp] {
        a += u.exp();
        bps.push(a);
    }
    let values = match pm1 {
        Some(lead_negative) => (0..=nbp)
            .map(|i| if (i % 2 == 0) == lead_negative { -1.0 } else { 1.0 })
            .collect(),
        None => x[nbp..].iter().map(|v| v.sin()).collect(),
    };
    StepFunction::new(bps, values)
}

struct Run {
    x: Vec<f64>,
    value: f64,
    evals: usize,
    converged: bool,
    pattern: Option<bool>,
}

/// Multi-start Nelder–Mead maximization of [`objective_alpha_k`] over step
/// functions with `config.steps` steps. Deterministic given the config.
pub fn optimize_step(config: &StepSearchConfig) -> Result<StepSearchResult> {
    config.validate()?;
    let nbp = config.steps - 1;
    let patterns: Vec<Option<bool>> = if config.pm1 { vec![Some(true), Some(false)] } else { vec![None] };
    let dim = nbp + if config.pm1 { 0 } else { config.steps };
    let ks = &config.ks;
    let opts = NelderMeadOptions { x_tol: config.x_tol, f_tol: 1e-15, max_evals: config.max_evals };
    let loss = |x: &[f64], pattern: Option<bool>| match decode(x, nbp, pattern) {
        Ok(f) => objective_alpha_k(&f, ks).map(|v| -v).unwrap_or(f64::INFINITY),
        Err(_) => f64::INFINITY,
    };

    let jobs: Vec<(usize, Option<bool>)> =
        (0..config.restarts).flat_map(|r| patterns.iter().map(move |&p| (r, p))).collect();
    let runs: Vec<Run> = jobs
        .par_iter()
        .map(|&(r, pattern)| {
            let idx = config.seed.wrapping_add(r as u64 + 1);
            let x0: Vec<f64> = (0..dim)
                .map(|d| {
                    let h = halton(idx, PRIMES[d % PRIMES.len()]);
                    if d < nbp {
                        // a₁ in (0.4, 3), later gaps in (0.05, 3), log-uniform
                        let lo: f64 = if d == 0 { 0.4 } else { 0.05 };
                        lo.ln() + h * (3f64.ln() - lo.ln())
                    } else {
                        (h - 0.5) * std::f64::consts::PI
                    }
                })
                .collect();
            let step = vec![0.3; dim];
            let mut res = nelder_mead(|x| loss(x, pattern), &x0, &step, opts);
            let mut evals = res.evals;
            // one restart from the optimum shakes off premature collapse
            if dim > 0 {
                let again = nelder_mead(|x| loss(x, pattern), &res.x, &vec![0.05; dim], opts);
                evals += again.evals;
                if again.value <= res.value {
                    res = again;
                }
            }
            Run { x: res.x, value: res.value, evals, converged: res.converged, pattern }
        })
        .collect();

    let best = runs
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value).then_with(|| cmp_lex(&a.x, &b.x)))
        .expect("at least one run");
    if !best.value.is_finite() {
        return Err(Error::Numeric("every restart failed to evaluate".into()));
    }
    let f = decode(&best.x, nbp, best.pattern)?;
    let per_k = ks.iter().map(|&k| Ok((k, alpha_k(&f, k)?))).collect::<Result<Vec<_>>>()?;
    Ok(StepSearchResult {
        objective: -best.value,
        f,
        per_k,
        evals: runs.iter().map(|r| r.evals).sum(),
        converged: best.converged,
    })
}

fn cmp_lex(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// One row of [`breakpoint_sweep`]: the new breakpoint and `α_k` per `k ∈ K`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub a: f64,
    pub alphas: Vec<f64>,
}

/// Appends a breakpoint at each `a` in `positions` (terminal value flipped)
/// and evaluates every `k ∈ K`.
pub fn breakpoint_sweep(f: &StepFunction, positions: &[f64], ks: &[u32]) -> Result<Vec<SweepRow>> {
    let last_bp = f.breakpoints().last().copied().unwrap_or(0.0);
    if let Some(&bad) = positions.iter().find(|&&a| !(a > last_bp) || !a.is_finite()) {
        return Err(Error::domain(format!("sweep position {bad} not beyond the last breakpoint {last_bp}")));
    }
    let last_val = *f.values().last().expect("step functions have a value");
    positions
        .par_iter()
        .map(|&a| {
            let g = f.with_extra_step(a, -last_val)?;
            let alphas = ks.iter().map(|&k| alpha_k(&g, k)).collect::<Result<Vec<_>>>()?;
            Ok(SweepRow { a, alphas })
        })
        .collect()
}
