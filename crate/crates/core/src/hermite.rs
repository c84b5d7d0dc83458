//! Normalized Hermite polynomials and the Hermite geometry of rounding
//! functions.
//!
//! `H_n(x) = (1/√n!) Σ_ℓ (−1)^ℓ m_ℓ(K_n) x^{n−2ℓ}` where `m_ℓ(K_n)` counts the
//! `ℓ`-matchings of the complete graph. These are orthonormal under the
//! Gaussian measure, and a rounding function has the expansion
//! `f = Σ c_i H_i` with `c_i = ∫ f H_i φ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;
use crate::step::StepFunction;

/// `m_ℓ(K_n) = n! / (ℓ! 2^ℓ (n − 2ℓ)!)`, zero when `2ℓ > n`.
pub fn matchings_count(l: u32, n: u32) -> Result<u128> {
    if 2 * l > n {
        return Ok(0);
    }
    let mut m: u128 = 1;
    for j in 1..=l as u128 {
        let n = n as u128;
        m = m
            .checked_mul((n - 2 * j + 2) * (n - 2 * j + 1))
            .ok_or_else(|| Error::Numeric(format!("m_{l}(K_{n}) overflows u128")))?
            / (2 * j);
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermitePoly {
    degree: u32,
    /// `coeffs[j]` multiplies `x^j`.
    coeffs: Vec<f64>,
}

impl HermitePoly {
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Evaluates through the three-term recurrence, which stays accurate
    /// where the monomial form cancels badly.
    pub fn eval(&self, x: f64) -> f64 {
        hermite_values(self.degree as usize, x)[self.degree as usize]
    }
}

/// `H_n` from the matching-count formula.
pub fn hermite_poly(n: u32) -> Result<HermitePoly> {
    let norm = (1..=n).map(|i| (i as f64).sqrt()).product::<f64>();
    let mut coeffs = vec![0.0; n as usize + 1];
    for l in 0..=n / 2 {
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        coeffs[(n - 2 * l) as usize] = sign * matchings_count(l, n)? as f64 / norm;
    }
    Ok(HermitePoly { degree: n, coeffs })
}

/// `[H_0(x), …, H_n(x)]` via `√(i+1) H_{i+1} = x H_i − √i H_{i−1}`.
pub fn hermite_values(n: usize, x: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(n + 1);
    h.push(1.0);
    if n >= 1 {
        h.push(x);
    }
    for i in 1..n {
        let next = (x * h[i] - (i as f64).sqrt() * h[i - 1]) / ((i + 1) as f64).sqrt();
        h.push(next);
    }
    h
}

/// `c_0, …, c_max_degree` of a step function, from the exact antiderivative
/// `∫_lo^hi H_n φ = (H_{n−1}(lo)φ(lo) − H_{n−1}(hi)φ(hi)) / √n`.
///
/// Even coefficients vanish for odd `f`; a non-negligible one is reported as
/// a numeric error.
pub fn hermite_coeffs(f: &StepFunction, max_degree: usize) -> Result<Vec<f64>> {
    let (breaks, values) = f.full_line_cells();
    let mut c = vec![0.0; max_degree + 1];
    // boundary term H_{n−1}(t)φ(t) at each finite break, for all n at once
    let mut edge: Vec<Vec<f64>> = Vec::with_capacity(breaks.len());
    for &t in &breaks {
        let phi = normal::pdf(t);
        edge.push(hermite_values(max_degree, t).into_iter().map(|h| h * phi).collect());
    }
    for (cell, &b) in values.iter().enumerate() {
        if b == 0.0 {
            continue;
        }
        let lo = if cell == 0 { f64::NEG_INFINITY } else { breaks[cell - 1] };
        let hi = breaks.get(cell).copied().unwrap_or(f64::INFINITY);
        c[0] += b * normal::interval_mass(lo, hi);
        for (n, cn) in c.iter_mut().enumerate().skip(1) {
            let at = |k: Option<usize>| k.map_or(0.0, |k| edge[k][n - 1]);
            let lo_term = at(cell.checked_sub(1));
            let hi_term = at((cell < breaks.len()).then_some(cell));
            *cn += b * (lo_term - hi_term) / (n as f64).sqrt();
        }
    }
    for (n, cn) in c.iter().enumerate().step_by(2) {
        if cn.abs() > 1e-10 {
            return Err(Error::Numeric(format!("even coefficient c_{n} = {cn:e} of an odd function")));
        }
    }
    Ok(c)
}

/// `c_i η^i`, indexed by degree.
pub fn damped_coeffs(c: &[f64], eta: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::domain(format!("eta {eta} outside [0, 1]")));
    }
    let mut w = 1.0;
    Ok(c.iter()
        .map(|ci| {
            let v = ci * w;
            w *= eta;
            v
        })
        .collect())
}

/// `Σ c_i H_i(x)`.
pub fn reconstruct(c: &[f64], x: f64) -> f64 {
    if c.is_empty() {
        return 0.0;
    }
    hermite_values(c.len() - 1, x).iter().zip(c).map(|(h, ci)| h * ci).sum()
}

/// Monomial coefficients of `Σ α_i H_{2i−1}`.
fn odd_combination(alphas: &[f64]) -> Result<Vec<f64>> {
    let mut p = vec![0.0; 2 * alphas.len()];
    for (i, &a) in alphas.iter().enumerate() {
        let h = hermite_poly(2 * i as u32 + 1)?;
        for (pj, hj) in p.iter_mut().zip(h.coeffs()) {
            *pj += a * hj;
        }
    }
    // directions like (cos π/2, 1) leave round-off in the leading slots
    let scale = p.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    while p.last().is_some_and(|&c| c.abs() <= 1e-14 * scale) {
        p.pop();
    }
    Ok(p)
}

fn horner(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn derivative(p: &[f64]) -> Vec<f64> {
    p.iter().enumerate().skip(1).map(|(j, c)| j as f64 * c).collect()
}

/// Negated remainder of `a / b`, rescaled to unit max-coefficient.
fn neg_rem(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead = b[db];
    while r.len() > db {
        let q = r[r.len() - 1] / lead;
        let shift = r.len() - 1 - db;
        for (j, bj) in b.iter().enumerate() {
            r[shift + j] -= q * bj;
        }
        r.pop();
    }
    let scale = r.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let tiny = 1e-12 * a.iter().chain(b).fold(0.0f64, |m, c| m.max(c.abs()));
    while r.last().is_some_and(|c| c.abs() <= tiny) {
        r.pop();
    }
    if scale > 0.0 {
        r.iter_mut().for_each(|c| *c = -*c / scale);
    }
    r
}

struct Sturm(Vec<Vec<f64>>);

impl Sturm {
    fn new(p: &[f64]) -> Self {
        let mut seq = vec![p.to_vec(), derivative(p)];
        while seq.last().is_some_and(|q| q.len() > 1) {
            let n = seq.len();
            let r = neg_rem(&seq[n - 2], &seq[n - 1]);
            if r.is_empty() {
                break;
            }
            seq.push(r);
        }
        Sturm(seq)
    }

    fn changes(&self, x: f64) -> usize {
        let signs: Vec<f64> = self.0.iter().map(|q| horner(q, x)).filter(|v| *v != 0.0).collect();
        signs.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count()
    }

    /// Distinct roots in `(a, b]`.
    fn count(&self, a: f64, b: f64) -> usize {
        self.changes(a).saturating_sub(self.changes(b))
    }
}

/// Positive roots of odd multiplicity, isolated by Sturm counts and refined
/// by bisection to `1e−12`.
fn positive_sign_changes(p: &[f64]) -> Result<Vec<f64>> {
    let lead = *p.last().ok_or_else(|| Error::domain("zero polynomial"))?;
    let bound = 1.0 + p.iter().map(|c| (c / lead).abs()).fold(0.0, f64::max);
    let sturm = Sturm::new(p);
    let lo0 = 1e-9;
    let mut stack = vec![(lo0, bound)];
    let mut roots = Vec::new();
    while let Some((a, b)) = stack.pop() {
        match sturm.count(a, b) {
            0 => {}
            1 => {
                let (fa, fb) = (horner(p, a), horner(p, b));
                if fa == 0.0 || fb == 0.0 || (fa > 0.0) != (fb > 0.0) {
                    let (mut x0, mut x1) = (a, b);
                    while x1 - x0 > 1e-12 {
                        let m = 0.5 * (x0 + x1);
                        let fm = horner(p, m);
                        if fm == 0.0 {
                            x0 = m;
                            x1 = m;
                        } else if (fm > 0.0) == (fa > 0.0) {
                            x0 = m;
                        } else {
                            x1 = m;
                        }
                    }
                    roots.push(0.5 * (x0 + x1));
                }
            }
            _ if b - a < 1e-13 * b.max(1.0) => {
                return Err(Error::Numeric(format!("cannot isolate roots of polynomial {p:?} near {a}")));
            }
            _ => {
                let m = 0.5 * (a + b);
                stack.push((a, m));
                stack.push((m, b));
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}

/// The `±1` function `sign(Σ α_i H_{2i−1})` and its odd coefficients
/// `c_1, c_3, …, c_{2k−1}`. It maximizes `Σ α_i c_{2i−1}` over all rounding
/// functions.
pub fn extreme_point(alphas: &[f64]) -> Result<(StepFunction, Vec<f64>)> {
    if alphas.iter().all(|&a| a == 0.0) {
        return Err(Error::domain("direction must be nonzero"));
    }
    let p = odd_combination(alphas)?;
    let roots = positive_sign_changes(&p)
        .map_err(|e| Error::Numeric(format!("{e}; polynomial coefficients {p:?}")))?;
    let mut probes: Vec<f64> = Vec::with_capacity(roots.len() + 1);
    let mut lo = 0.0;
    for &r in &roots {
        probes.push(0.5 * (lo + r));
        lo = r;
    }
    probes.push(lo + 1.0);
    let values: Vec<f64> = probes
        .iter()
        .map(|&x| if horner(&p, x) >= 0.0 { 1.0 } else { -1.0 })
        .collect();
    let f = StepFunction::new(roots, values)?;
    let c = hermite_coeffs(&f, 2 * alphas.len() - 1)?;
    Ok((f, c.into_iter().skip(1).step_by(2).collect()))
}

/// One point of the `P₂` boundary: direction angle `θ`, `(c₁, c₃)` of
/// `sign(cos θ H₁ + sin θ H₃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub angle: f64,
    pub c1: f64,
    pub c3: f64,
}

/// Traces the boundary of `{(c₁, c₃)}` over `angles` equally spaced directions.
pub fn p2_boundary(angles: usize) -> Result<Vec<BoundaryPoint>> {
    if angles == 0 {
        return Err(Error::domain("need at least one angle"));
    }
    (0..angles)
        .map(|j| {
            let angle = 2.0 * std::f64::consts::PI * j as f64 / angles as f64;
            let (_, c) = extreme_point(&[angle.cos(), angle.sin()])?;
            Ok(BoundaryPoint { angle, c1: c[0], c3: c[1] })
        })
        .collect()
}

/// Distance from `(c1, c3)` to the closed polyline through `boundary`.
pub fn distance_to_boundary(boundary: &[BoundaryPoint], c1: f64, c3: f64) -> f64 {
    let n = boundary.len();
    (0..n)
        .map(|i| {
            let (a, b) = (boundary[i], boundary[(i + 1) % n]);
            let (dx, dy) = (b.c1 - a.c1, b.c3 - a.c3);
            let len2 = dx * dx + dy * dy;
            let t = if len2 > 0.0 { (((c1 - a.c1) * dx + (c3 - a.c3) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
            (a.c1 + t * dx - c1).hypot(a.c3 + t * dy - c3)
        })
        .fold(f64::INFINITY, f64::min)
}

/// `angle,c1,c3` CSV.
pub fn boundary_csv(points: &[BoundaryPoint]) -> String {
    let mut s = String::from("angle_rad,c1,c3\n");
    for p in points {
        s.push_str(&format!(
            "{},{},{}\n",
            crate::fredholm::fmt9(p.angle),
            crate::fredholm::fmt9(p.c1),
            crate::fredholm::fmt9(p.c3)
        ));
    }
    s
}
