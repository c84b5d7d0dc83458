//! Optimal rounding for the hard MAX CUT and MAX NAE-{3}-SAT distributions.
//!
//! For a hard distribution the best odd rounding function maximizes a
//! quadratic functional `−λ₁∫f²φ − ∫∫ M(x,y) f(x) f(y)` subject to `|f| ≤ 1`.
//! On an equal-mass grid of `N` cells, the unclamped cells satisfy the
//! discrete Fredholm equation `(I + λM̂′) f′ = g` with `λ = N/λ₁`, where the
//! clamped cells (`f = ±1` on the outer `i_a` cells) feed the right-hand side.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments;
use crate::normal;
use crate::optim::golden_section_min;
use crate::step::{cell_midpoints, GridFunction, StepFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    MaxCut,
    Nae3,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Problem::MaxCut => "maxcut",
            Problem::Nae3 => "nae3",
        })
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "maxcut" => Ok(Problem::MaxCut),
            "nae3" => Ok(Problem::Nae3),
            _ => Err(Error::domain(format!("unknown problem {s:?} (expected maxcut or nae3)"))),
        }
    }
}

/// Which bias the `α`-weighted NAE-3 triple `(ρ₀, ρ₀, ρ₀)` uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rho0Variant {
    /// `ρ₀ = max(ρ, −1/3)`.
    Clamped,
    /// `ρ₀ = 1`.
    One,
}

impl fmt::Display for Rho0Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rho0Variant::Clamped => "clamped",
            Rho0Variant::One => "one",
        })
    }
}

/// Hard bias distribution.
///
/// * MAX CUT: pairs with bias `ρ` (weight `α`) and `1` (weight `1 − α`).
/// * NAE-3: triples `(ρ₀, ρ₀, ρ₀)` (weight `α`) and `(ρ, ρ, 1)` (weight `1 − α`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardDistribution {
    pub problem: Problem,
    pub alpha: f64,
    pub rho: f64,
    pub variant: Option<Rho0Variant>,
}

/// Largest `α` used when forming `λ₁`, which vanishes at `α = 1`.
const ALPHA_CAP: f64 = 1.0 - 1e-6;

impl HardDistribution {
    pub fn new(problem: Problem, alpha: f64, rho: f64, variant: Option<Rho0Variant>) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::domain(format!("alpha {alpha} outside [0, 1]")));
        }
        if !(-1.0..=0.0).contains(&rho) {
            return Err(Error::domain(format!("rho {rho} outside [-1, 0]")));
        }
        match (problem, variant) {
            (Problem::MaxCut, Some(_)) => {
                return Err(Error::domain("the rho0 variant only applies to nae3"))
            }
            (Problem::Nae3, None) => return Err(Error::domain("nae3 needs a rho0 variant")),
            _ => {}
        }
        Ok(Self { problem, alpha, rho, variant })
    }

    pub fn maxcut(alpha: f64, rho: f64) -> Result<Self> {
        Self::new(Problem::MaxCut, alpha, rho, None)
    }

    pub fn nae3(alpha: f64, rho: f64, variant: Rho0Variant) -> Result<Self> {
        Self::new(Problem::Nae3, alpha, rho, Some(variant))
    }

    /// Bias of the `α`-weighted NAE-3 triple (`None` for MAX CUT).
    pub fn rho0(&self) -> Option<f64> {
        self.variant.map(|v| match v {
            Rho0Variant::Clamped => self.rho.max(-1.0 / 3.0),
            Rho0Variant::One => 1.0,
        })
    }

    /// `(weight, biases)` pairs: one bias per MAX CUT edge, three per NAE-3 triple.
    pub fn support(&self) -> Vec<(f64, Vec<f64>)> {
        let (a, r) = (self.alpha, self.rho);
        match self.rho0() {
            None => vec![(a, vec![r]), (1.0 - a, vec![1.0])],
            Some(r0) => vec![(a, vec![r0, r0, r0]), (1.0 - a, vec![r, r, 1.0])],
        }
    }

    /// Fraction of constraints the vector solution satisfies.
    pub fn completeness(&self) -> f64 {
        value_over_support(self, |b| b)
    }

    /// Kernel and diagonal weight of the functional being minimized, scaled so
    /// the `ρ`-term (MAX CUT, ρ₀ = 1) or the `ρ₀`-term (clamped) has weight 1.
    pub fn kernel_spec(&self) -> KernelSpec {
        let a = self.alpha.min(ALPHA_CAP);
        let r = self.rho;
        match self.variant {
            None => KernelSpec { terms: vec![(1.0, r)], lambda1: (1.0 - a) / a },
            Some(Rho0Variant::Clamped) => KernelSpec {
                terms: vec![((2.0 - 2.0 * a) / (3.0 * a), r), (1.0, self.rho0().unwrap())],
                lambda1: (1.0 - a) / (3.0 * a),
            },
            Some(Rho0Variant::One) => KernelSpec {
                terms: vec![(1.0, r)],
                lambda1: (1.0 + 2.0 * a) / (2.0 - 2.0 * a),
            },
        }
    }
}

/// `Σ weight · value(support element)` where a pair with bias `b` is worth
/// `(1 − F(b))/2` and a triple `(3 − ΣF(b))/4`.
fn value_over_support(dist: &HardDistribution, mut f2: impl FnMut(f64) -> f64) -> f64 {
    dist.support()
        .into_iter()
        .map(|(w, biases)| {
            if w == 0.0 {
                return 0.0;
            }
            let s: f64 = biases.iter().map(|&b| f2(b)).sum();
            w * if biases.len() == 1 { (1.0 - s) / 2.0 } else { (3.0 - s) / 4.0 }
        })
        .sum()
}

/// `M(x, y) = Σ w_j φ_{ρ_j}(x, y)` plus the weight `λ₁` of `∫f²φ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub terms: Vec<(f64, f64)>,
    pub lambda1: f64,
}

impl KernelSpec {
    /// `λ = N/λ₁`, the coefficient of `M̂` in the discrete equation.
    pub fn discrete_lambda(&self, n: usize) -> f64 {
        n as f64 / self.lambda1
    }
}

pub fn completeness(dist: &HardDistribution) -> f64 {
    dist.completeness()
}

/// Expected fraction of constraints satisfied by RPR² with `f`.
pub fn soundness(f: &StepFunction, dist: &HardDistribution) -> Result<f64> {
    let mut err = None;
    let v = value_over_support(dist, |b| match moments::f2(f, b) {
        Ok(x) => x,
        Err(e) => {
            err = Some(e);
            0.0
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// [`soundness`] of a grid function.
pub fn soundness_grid(f: &GridFunction, dist: &HardDistribution) -> Result<f64> {
    soundness(&f.to_step_function()?, dist)
}

/// Cell probabilities `P[X ∈ cell_i, Y ∈ cell_j]` on the equal-mass grid.
pub fn cell_matrix(rho: f64, n: usize) -> Result<DMatrix<f64>> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::domain(format!("correlation {rho} outside [-1, 1]")));
    }
    let breaks = normal::equal_prob_grid(n)?;
    let p = normal::cell_probabilities(&breaks, rho);
    Ok(DMatrix::from_fn(n, n, |i, j| p[i][j]))
}

/// `M̂_ij = ∫_{cell_i}∫_{cell_j} M(x,y) dx dy`.
pub fn build_kernel_matrix(spec: &KernelSpec, n: usize) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(n, n);
    for &(w, rho) in &spec.terms {
        if !w.is_finite() {
            return Err(Error::domain("kernel weights must be finite"));
        }
        m += cell_matrix(rho, n)? * w;
    }
    Ok(m)
}

fn clamp_range(n: usize, ia: usize) -> Result<()> {
    if 2 * ia > n {
        return Err(Error::domain(format!("clamp index {ia} exceeds N/2 = {}", n / 2)));
    }
    Ok(())
}

/// Solves `(I + λM̂′) f′ = g` for the cells not clamped to `±1`
/// (`f_i = −1` for the first `i_a` cells, `+1` for the last `i_a`) and returns
/// the full vector of cell values. Values are not clipped to `[−1, 1]`.
pub fn solve_discrete_fredholm(m: &DMatrix<f64>, lambda: f64, ia: usize) -> Result<Vec<f64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::structural("kernel matrix must be square"));
    }
    clamp_range(n, ia)?;
    let mut f = vec![0.0; n];
    for i in 0..ia {
        f[i] = -1.0;
        f[n - 1 - i] = 1.0;
    }
    let inner: Vec<usize> = (ia..n - ia).collect();
    if inner.is_empty() {
        return Ok(f);
    }
    let k = inner.len();
    let g = nalgebra::DVector::from_fn(k, |r, _| {
        let i = inner[r];
        let lo: f64 = (0..ia).map(|j| m[(i, j)]).sum();
        let hi: f64 = (n - ia..n).map(|j| m[(i, j)]).sum();
        lambda * (lo - hi)
    });
    let a = DMatrix::from_fn(k, k, |r, c| {
        let v = lambda * m[(inner[r], inner[c])];
        if r == c { 1.0 + v } else { v }
    });
    let sol = a.lu().solve(&g).ok_or(Error::Singular { lambda })?;
    for (r, &i) in inner.iter().enumerate() {
        f[i] = sol[r];
    }
    Ok(f)
}

/// Optimal step function for one distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FredholmSolution {
    pub dist: HardDistribution,
    pub f: GridFunction,
    /// Number of cells clamped to `−1` (and to `+1`) at each end.
    pub clamp: usize,
    pub lambda: f64,
    /// `max |f_i + λ(M̂f)_i|` over unclamped cells.
    pub residual: f64,
    pub soundness: f64,
    pub completeness: f64,
    /// Whether a clamp with a non-empty, admissible interior was found.
    pub consistent: bool,
}

impl FredholmSolution {
    pub fn ratio(&self) -> f64 {
        self.soundness / self.completeness
    }
}

/// Cell matrices for one `(ρ, N)`, reusable across `α`.
pub struct DistMatrices {
    n: usize,
    rho: f64,
    p_rho: DMatrix<f64>,
    /// Cell matrix at `max(ρ, −1/3)`, shared with `p_rho` when equal.
    p_clamped: Option<DMatrix<f64>>,
}

impl DistMatrices {
    pub fn new(rho: f64, n: usize) -> Result<Self> {
        let p_rho = cell_matrix(rho, n)?;
        let r0 = rho.max(-1.0 / 3.0);
        let p_clamped = if r0 != rho { Some(cell_matrix(r0, n)?) } else { None };
        Ok(Self { n, rho, p_rho, p_clamped })
    }

    fn at(&self, bias: f64) -> Option<&DMatrix<f64>> {
        if bias == self.rho {
            Some(&self.p_rho)
        } else if bias == self.rho.max(-1.0 / 3.0) {
            self.p_clamped.as_ref()
        } else {
            None
        }
    }

    /// `F₂` of the grid function with values `f` at `bias`.
    fn f2(&self, f: &[f64], bias: f64) -> f64 {
        if bias == 1.0 {
            return f.iter().map(|v| v * v).sum::<f64>() / self.n as f64;
        }
        let m = self.at(bias).expect("bias outside the cached support");
        let mut acc = 0.0;
        for j in 0..self.n {
            if f[j] == 0.0 {
                continue;
            }
            let col: f64 = (0..self.n).map(|i| m[(i, j)] * f[i]).sum();
            acc += col * f[j];
        }
        acc
    }

    /// `λM̂` for the distribution.
    fn lambda_kernel(&self, dist: &HardDistribution) -> Result<(f64, DMatrix<f64>)> {
        let spec = dist.kernel_spec();
        let lambda = spec.discrete_lambda(self.n);
        let mut k = DMatrix::zeros(self.n, self.n);
        for &(w, r) in &spec.terms {
            let m = self
                .at(r)
                .ok_or_else(|| Error::domain(format!("no cached matrix for correlation {r}")))?;
            k += m * (lambda * w);
        }
        Ok((lambda, k))
    }
}

/// Odd-symmetric reduction of `(I + K)f = 0` on unclamped cells: only the
/// upper half is solved, using `f_{N−1−j} = −f_j`.
struct ReducedSystem {
    n: usize,
    /// First 0-based index of the upper half.
    start: usize,
    /// `A_ij = K_{s+i, s+j} − K_{s+i, N−1−s−j}` over the upper half.
    a: DMatrix<f64>,
    /// Full `K` for residuals.
    k: DMatrix<f64>,
}

impl ReducedSystem {
    fn new(k: DMatrix<f64>) -> Self {
        let n = k.nrows();
        let start = n - n / 2;
        let h = n / 2;
        let a = DMatrix::from_fn(h, h, |i, j| k[(start + i, start + j)] - k[(start + i, n - 1 - start - j)]);
        Self { n, start, a, k }
    }

    fn half(&self) -> usize {
        self.n / 2
    }

    /// Full cell vector for clamp `ia`.
    fn solve(&self, ia: usize) -> Option<Vec<f64>> {
        let h = self.half();
        let m = h - ia;
        let mut upper = vec![1.0; h];
        if m > 0 {
            let rhs = nalgebra::DVector::from_fn(m, |i, _| -(m..h).map(|j| self.a[(i, j)]).sum::<f64>());
            let sys = DMatrix::from_fn(m, m, |i, j| self.a[(i, j)] + if i == j { 1.0 } else { 0.0 });
            let sol = sys.lu().solve(&rhs)?;
            if sol.iter().any(|v| !v.is_finite()) {
                return None;
            }
            upper[..m].copy_from_slice(sol.as_slice());
        }
        let mut f = vec![0.0; self.n];
        for (j, &v) in upper.iter().enumerate() {
            f[self.start + j] = v;
            f[self.n - 1 - self.start - j] = -v;
        }
        Some(f)
    }

    fn residual(&self, f: &[f64], ia: usize) -> f64 {
        let n = self.n;
        (ia..n - ia)
            .map(|i| {
                let kf: f64 = (0..n).map(|j| self.k[(i, j)] * f[j]).sum();
                (f[i] + kf).abs()
            })
            .fold(0.0, f64::max)
    }
}

const MONO_TOL: f64 = 1e-12;

/// Unclamped values strictly inside `(−1, 1)` and the whole vector monotone.
fn admissible(f: &[f64], ia: usize) -> bool {
    let n = f.len();
    f[ia..n - ia].iter().all(|v| v.abs() < 1.0) && f.windows(2).all(|w| w[1] >= w[0] - MONO_TOL)
}

/// Optimal step function for `dist` on an `N`-cell grid.
pub fn optimal_step_function(dist: &HardDistribution, n: usize) -> Result<FredholmSolution> {
    let mats = DistMatrices::new(dist.rho, n)?;
    optimal_with(dist, &mats)
}

/// [`optimal_step_function`] with precomputed cell matrices.
pub fn optimal_with(dist: &HardDistribution, mats: &DistMatrices) -> Result<FredholmSolution> {
    if mats.rho != dist.rho {
        return Err(Error::domain("cell matrices were built for a different rho"));
    }
    let (mut lambda, mut k) = mats.lambda_kernel(dist)?;
    let mut sys = ReducedSystem::new(k.clone());
    let h = sys.half();
    // a singular reduced matrix only occurs for isolated λ; nudge and retry
    let mut solve = |ia: usize, sys: &mut ReducedSystem, lambda: &mut f64| -> Result<Vec<f64>> {
        for _ in 0..4 {
            if let Some(f) = sys.solve(ia) {
                return Ok(f);
            }
            let scale = 1.0 + 1e-9;
            *lambda *= scale;
            k *= scale;
            *sys = ReducedSystem::new(k.clone());
        }
        Err(Error::Singular { lambda: *lambda })
    };
    let sound = |f: &[f64]| value_over_support(dist, |b| mats.f2(f, b));

    // smallest admissible clamp in [1, h − 1]; admissibility is monotone in ia
    let mut candidates = vec![0, h];
    let mut consistent = false;
    if h >= 2 {
        let (mut lo, mut hi) = (1, h - 1);
        let top_ok = admissible(&solve(hi, &mut sys, &mut lambda)?, hi);
        if top_ok {
            while lo < hi {
                let mid = (lo + hi) / 2;
                if admissible(&solve(mid, &mut sys, &mut lambda)?, mid) {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            candidates.push(lo);
            if lo + 1 < h {
                candidates.push(lo + 1);
            }
            consistent = true;
        } else {
            for ia in 1..h {
                if admissible(&solve(ia, &mut sys, &mut lambda)?, ia) {
                    candidates.push(ia);
                    consistent = true;
                }
            }
        }
    }
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    for ia in candidates {
        let f = solve(ia, &mut sys, &mut lambda)?;
        if !admissible(&f, ia) {
            continue;
        }
        let s = sound(&f);
        if best.as_ref().is_none_or(|b| s > b.0) {
            best = Some((s, ia, f));
        }
    }
    let (soundness, clamp, f) = best.ok_or_else(|| Error::Numeric("no admissible clamp".into()))?;
    let residual = sys.residual(&f, clamp);
    Ok(FredholmSolution {
        dist: *dist,
        f: GridFunction::new(f)?,
        clamp,
        lambda,
        residual,
        soundness,
        completeness: dist.completeness(),
        consistent,
    })
}

/// The distributions evaluated at one `(α, ρ)` grid point.
fn variants(problem: Problem, alpha: f64, rho: f64) -> Result<Vec<HardDistribution>> {
    Ok(match problem {
        Problem::MaxCut => vec![HardDistribution::maxcut(alpha, rho)?],
        Problem::Nae3 => {
            let mut v = vec![HardDistribution::nae3(alpha, rho, Rho0Variant::Clamped)?];
            // ρ₀ = 1 at α = 1 has completeness 0 and a rank-one system
            if alpha < 1.0 {
                v.push(HardDistribution::nae3(alpha, rho, Rho0Variant::One)?);
            }
            v
        }
    })
}

/// One evaluated distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub problem: Problem,
    pub alpha: f64,
    pub rho: f64,
    pub variant: Option<Rho0Variant>,
    pub completeness: f64,
    pub soundness: f64,
}

impl CurvePoint {
    pub fn ratio(&self) -> f64 {
        self.soundness / self.completeness
    }

    fn from_solution(s: &FredholmSolution) -> Self {
        Self {
            problem: s.dist.problem,
            alpha: s.dist.alpha,
            rho: s.dist.rho,
            variant: s.dist.variant,
            completeness: s.completeness,
            soundness: s.soundness,
        }
    }
}

const MIN_COMPLETENESS: f64 = 1e-9;

/// Solves every distribution on the grid; rows of `ρ` run in parallel.
pub fn grid_points(problem: Problem, alphas: &[f64], rhos: &[f64], n: usize) -> Result<Vec<CurvePoint>> {
    if alphas.is_empty() || rhos.is_empty() {
        return Err(Error::domain("alpha and rho grids must be non-empty"));
    }
    let rows: Vec<Result<Vec<CurvePoint>>> = rhos
        .par_iter()
        .map(|&rho| {
            let mats = DistMatrices::new(rho, n)?;
            let mut out = Vec::new();
            for &alpha in alphas {
                for dist in variants(problem, alpha, rho)? {
                    if dist.completeness() <= MIN_COMPLETENESS {
                        continue;
                    }
                    out.push(CurvePoint::from_solution(&optimal_with(&dist, &mats)?));
                }
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::new();
    for r in rows {
        all.extend(r?);
    }
    Ok(all)
}

/// Completeness/soundness tradeoff: the minimum soundness per completeness
/// bucket (`buckets` equal-width buckets on `[0, 1]`), made monotone by taking
/// for each bucket the minimum over all buckets of at least its completeness.
pub fn curve(problem: Problem, alphas: &[f64], rhos: &[f64], n: usize, buckets: usize) -> Result<Vec<CurvePoint>> {
    let pts = grid_points(problem, alphas, rhos, n)?;
    Ok(lower_envelope(&pts, buckets.max(1)))
}

pub fn lower_envelope(pts: &[CurvePoint], buckets: usize) -> Vec<CurvePoint> {
    let mut best: Vec<Option<CurvePoint>> = vec![None; buckets];
    for p in pts {
        let b = ((p.completeness * buckets as f64) as usize).min(buckets - 1);
        if best[b].is_none_or(|q| p.soundness < q.soundness) {
            best[b] = Some(*p);
        }
    }
    let mut out: Vec<CurvePoint> = best.into_iter().flatten().collect();
    let mut running: Option<CurvePoint> = None;
    for p in out.iter_mut().rev() {
        match running {
            Some(r) if r.soundness < p.soundness => {
                // a harder distribution with higher completeness dominates
                p.soundness = r.soundness;
            }
            _ => running = Some(*p),
        }
    }
    out
}

/// Settings for [`approx_ratio`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioConfig {
    /// Points per axis of the coarse grid.
    pub grid: usize,
    pub grid_cells: usize,
    /// Golden-section rounds per axis.
    pub rounds: usize,
    pub cells: usize,
    pub alpha_range: (f64, f64),
    pub rho_range: (f64, f64),
}

impl Default for RatioConfig {
    fn default() -> Self {
        Self {
            grid: 500,
            grid_cells: 100,
            rounds: 3,
            cells: 600,
            alpha_range: (0.0, 1.0),
            rho_range: (-1.0, 0.0),
        }
    }
}

/// Result of [`approx_ratio`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioResult {
    pub problem: Problem,
    pub ratio: f64,
    pub alpha: f64,
    pub rho: f64,
    pub variant: Option<Rho0Variant>,
    /// Minimum ratio found by the coarse grid.
    pub grid_ratio: f64,
    pub solution: FredholmSolution,
}

/// Grid values on `[lo, hi]`; with `lo = 0` for `α` the zero endpoint is skipped.
fn axis(lo: f64, hi: f64, count: usize, skip_lo: bool) -> Vec<f64> {
    if count <= 1 || lo == hi {
        return vec![hi];
    }
    let (start, steps) = if skip_lo { (1, count) } else { (0, count - 1) };
    (start..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect()
}

/// Hardest distribution at one `(α, ρ)` on an `N`-cell grid.
pub fn hardest_at(problem: Problem, alpha: f64, rho: f64, n: usize) -> Result<FredholmSolution> {
    let mats = DistMatrices::new(rho, n)?;
    let mut best: Option<FredholmSolution> = None;
    for dist in variants(problem, alpha, rho)? {
        if dist.completeness() <= MIN_COMPLETENESS {
            continue;
        }
        let s = optimal_with(&dist, &mats)?;
        if best.as_ref().is_none_or(|b| s.ratio() < b.ratio()) {
            best = Some(s);
        }
    }
    best.ok_or_else(|| Error::domain("no distribution with positive completeness at this point"))
}

/// `min` over hard distributions of `soundness/completeness`: a coarse grid
/// then coordinate-wise golden-section refinement at `cells` cells.
pub fn approx_ratio(problem: Problem, cfg: &RatioConfig) -> Result<RatioResult> {
    let (a_lo, a_hi) = cfg.alpha_range;
    let (r_lo, r_hi) = cfg.rho_range;
    if !(0.0 <= a_lo && a_lo <= a_hi && a_hi <= 1.0 && -1.0 <= r_lo && r_lo <= r_hi && r_hi <= 0.0) {
        return Err(Error::domain("alpha range must lie in [0, 1] and rho range in [-1, 0]"));
    }
    let alphas = axis(a_lo, a_hi, cfg.grid, a_lo == 0.0);
    let rhos = axis(r_lo, r_hi, cfg.grid, false);
    let pts = grid_points(problem, &alphas, &rhos, cfg.grid_cells)?;
    let start = pts
        .iter()
        .min_by(|a, b| a.ratio().total_cmp(&b.ratio()))
        .copied()
        .ok_or_else(|| Error::domain("grid has no point with positive completeness"))?;

    let step_a = if alphas.len() > 1 { (a_hi - a_lo) / (alphas.len() - 1) as f64 } else { 0.0 };
    let step_r = if rhos.len() > 1 { (r_hi - r_lo) / (rhos.len() - 1) as f64 } else { 0.0 };
    let (mut alpha, mut rho) = (start.alpha, start.rho);
    let eval = |a: f64, r: f64| hardest_at(problem, a, r, cfg.cells).map(|s| s.ratio()).unwrap_or(f64::INFINITY);
    for round in 0..cfg.rounds {
        let shrink = 0.5f64.powi(round as i32);
        if step_a > 0.0 {
            let w = step_a * shrink;
            let mats = DistMatrices::new(rho, cfg.cells)?;
            let by_alpha = |a: f64| -> f64 {
                let mut worst = f64::INFINITY;
                if let Ok(vs) = variants(problem, a, rho) {
                    for d in vs {
                        if d.completeness() > MIN_COMPLETENESS {
                            if let Ok(s) = optimal_with(&d, &mats) {
                                worst = worst.min(s.ratio());
                            }
                        }
                    }
                }
                worst
            };
            let lo = (alpha - w).max(a_lo.max(1e-9));
            let hi = (alpha + w).min(a_hi);
            let (a, v) = golden_section_min(&by_alpha, lo, hi, 1e-5);
            if v <= by_alpha(alpha) {
                alpha = a;
            }
        }
        if step_r > 0.0 {
            let w = step_r * shrink;
            let lo = (rho - w).max(r_lo);
            let hi = (rho + w).min(r_hi);
            let (r, v) = golden_section_min(|r| eval(alpha, r), lo, hi, 1e-5);
            if v <= eval(alpha, rho) {
                rho = r;
            }
        }
    }
    let solution = hardest_at(problem, alpha, rho, cfg.cells)?;
    Ok(RatioResult {
        problem,
        ratio: solution.ratio(),
        alpha,
        rho,
        variant: solution.dist.variant,
        grid_ratio: start.ratio(),
        solution,
    })
}

/// Least-squares fit of `clamp(s·x, −1, 1)` to a grid function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlinearFit {
    /// `NaN` when there are no interior cells.
    pub slope: f64,
    /// `max |f_i − clamp(s·x_i)|` over interior cells.
    pub max_deviation: f64,
    pub interior_cells: usize,
}

impl SlinearFit {
    pub fn is_degenerate(&self) -> bool {
        self.interior_cells == 0
    }
}

/// Slope through the origin over the cells with `|f_i| < 1`, regressed on the
/// cell medians `Φ⁻¹((i − ½)/N)`.
pub fn slinear_fit(f: &GridFunction) -> Result<SlinearFit> {
    let mids = cell_midpoints(f.cells())?;
    let inner: Vec<(f64, f64)> = mids
        .iter()
        .zip(f.values())
        .filter(|(_, v)| v.abs() < 1.0)
        .map(|(&x, &v)| (x, v))
        .collect();
    let sxx: f64 = inner.iter().map(|(x, _)| x * x).sum();
    if inner.is_empty() || sxx == 0.0 {
        return Ok(SlinearFit { slope: f64::NAN, max_deviation: f64::NAN, interior_cells: 0 });
    }
    let slope = inner.iter().map(|(x, v)| x * v).sum::<f64>() / sxx;
    let max_deviation = inner
        .iter()
        .map(|(x, v)| (v - (slope * x).clamp(-1.0, 1.0)).abs())
        .fold(0.0, f64::max);
    Ok(SlinearFit { slope, max_deviation, interior_cells: inner.len() })
}

/// Result of [`successive_approximation`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Iterates {
    pub values: Vec<f64>,
    /// `‖f_n − f_{n−1}‖_∞` per iteration.
    pub residuals: Vec<f64>,
    pub diverged: bool,
}

/// Iterates `f_n = g + λ M̂ f_{n−1}` from `f_0 = g` on the `N = g.len()` grid.
pub fn successive_approximation(spec: &KernelSpec, g: &[f64], lambda: f64, iterations: usize) -> Result<Iterates> {
    if iterations == 0 {
        return Err(Error::domain("at least one iteration is required"));
    }
    let m = build_kernel_matrix(spec, g.len())?;
    successive_with_matrix(&m, g, lambda, iterations)
}

pub fn successive_with_matrix(m: &DMatrix<f64>, g: &[f64], lambda: f64, iterations: usize) -> Result<Iterates> {
    if m.nrows() != g.len() || m.ncols() != g.len() {
        return Err(Error::structural("kernel and right-hand side sizes differ"));
    }
    let gv = nalgebra::DVector::from_column_slice(g);
    let mut f = gv.clone();
    let mut residuals = Vec::with_capacity(iterations);
    let mut growth = 0;
    let mut diverged = false;
    for _ in 0..iterations {
        let next = &gv + (m * &f) * lambda;
        let r = (&next - &f).amax();
        if residuals.last().is_some_and(|&p| r > p) {
            growth += 1;
        } else {
            growth = 0;
        }
        residuals.push(r);
        f = next;
        if growth >= 3 || !r.is_finite() {
            diverged = true;
            break;
        }
    }
    Ok(Iterates { values: f.iter().copied().collect(), residuals, diverged })
}

/// CSV with columns `problem,alpha,rho,rho0_variant,completeness,soundness,ratio`.
pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut s = String::from("problem,alpha,rho,rho0_variant,completeness,soundness,ratio\n");
    for p in points {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p.problem,
            fmt9(p.alpha),
            fmt9(p.rho),
            p.variant.map_or_else(|| "none".to_string(), |v| v.to_string()),
            fmt9(p.completeness),
            fmt9(p.soundness),
            fmt9(p.ratio())
        ));
    }
    s
}

/// CSV with columns `cell_midpoint,value`.
pub fn grid_function_csv(f: &GridFunction) -> Result<String> {
    let mids = cell_midpoints(f.cells())?;
    let mut s = String::from("cell_midpoint,value\n");
    for (x, v) in mids.iter().zip(f.values()) {
        s.push_str(&format!("{},{}\n", fmt9(*x), fmt9(*v)));
    }
    Ok(s)
}

/// Nine significant digits.
pub fn fmt9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = 9 - 1 - x.abs().log10().floor() as i32;
    if (0..=17).contains(&digits) {
        format!("{:.*}", digits as usize, x)
    } else {
        format!("{x:.8e}")
    }
}
