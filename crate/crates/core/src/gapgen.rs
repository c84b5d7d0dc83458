//! Explicit MAX NAE-{3,5} integrality-gap instances.
//!
//! Variables are indexed by the vectors of
//! `V = {(b₁e_i + b₂e_j + b₃e_k)/√3}` with `x_{−v} = −x_v`. Clauses are
//! sampled i.i.d. from the 3-clause family (pairwise biases all `−1/3`) and
//! the 5-clause family (four petals sharing a coordinate plus one disjoint
//! vector). All bias checks are exact: dot products are integers over 3.

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardness::mixture_value;
use crate::moments::MomentEstimate;
use crate::pipeline::{Clause, NAEInstance};

/// Weight of the 5-clause class, `3/√21`.
pub fn five_clause_weight() -> f64 {
    3.0 / 21f64.sqrt()
}

/// A vector of `V`: three distinct coordinates, each `±1/√3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SparseVec {
    idx: [u32; 3],
    signs: [i8; 3],
}

impl SparseVec {
    /// Entries are `(0-based coordinate, sign)` in any order.
    pub fn new(mut entries: [(u32, i8); 3]) -> Result<Self> {
        entries.sort_unstable_by_key(|e| e.0);
        if entries[0].0 == entries[1].0 || entries[1].0 == entries[2].0 {
            return Err(Error::domain("coordinates must be distinct"));
        }
        if entries.iter().any(|e| e.1 != 1 && e.1 != -1) {
            return Err(Error::domain("signs must be ±1"));
        }
        Ok(Self {
            idx: entries.map(|e| e.0),
            signs: entries.map(|e| e.1),
        })
    }

    pub fn indices(&self) -> [u32; 3] {
        self.idx
    }

    pub fn signs(&self) -> [i8; 3] {
        self.signs
    }

    /// `3·(u·v)`, an integer in `[−3, 3]`.
    pub fn dot3(&self, other: &SparseVec) -> i32 {
        let mut s = 0;
        for a in 0..3 {
            for b in 0..3 {
                if self.idx[a] == other.idx[b] {
                    s += (self.signs[a] * other.signs[b]) as i32;
                }
            }
        }
        s
    }

    pub fn neg(&self) -> Self {
        Self { idx: self.idx, signs: self.signs.map(|s| -s) }
    }

    pub fn positives(&self) -> usize {
        self.signs.iter().filter(|&&s| s > 0).count()
    }

    /// Representative with positive first sign, and whether `self` is its negation.
    pub fn canonical(&self) -> (Self, bool) {
        if self.signs[0] > 0 { (*self, false) } else { (self.neg(), true) }
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let s = 1.0 / 3f64.sqrt();
        let mut v = vec![0.0; n];
        for a in 0..3 {
            v[self.idx[a] as usize] = self.signs[a] as f64 * s;
        }
        v
    }

    /// Injective for coordinates below `2²⁰`.
    fn key(&self) -> u64 {
        let [a, b, c] = self.idx.map(|i| i as u64);
        let bits = self.signs.iter().fold(0u64, |k, &s| (k << 1) | (s > 0) as u64);
        (a << 43) | (b << 23) | (c << 3) | bits
    }
}

/// A sampled clause; its weight is uniform within its class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapClause {
    pub vecs: Vec<SparseVec>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapInstance {
    pub n: usize,
    pub three: Vec<GapClause>,
    pub five: Vec<GapClause>,
}

const SHARD: usize = 4096;
const MAX_N: usize = 1 << 20;

fn distinct<const K: usize>(rng: &mut ChaCha8Rng, n: usize) -> [u32; K] {
    let idx = sample(rng, n, K);
    std::array::from_fn(|i| idx.index(i) as u32)
}

fn signs<const K: usize>(rng: &mut ChaCha8Rng) -> [i8; K] {
    std::array::from_fn(|_| if rng.random::<bool>() { 1 } else { -1 })
}

fn sv(e: [(u32, i8); 3]) -> SparseVec {
    SparseVec::new(e).expect("sampled coordinates are distinct")
}

fn sample_three(rng: &mut ChaCha8Rng, n: usize) -> Vec<SparseVec> {
    let i: [u32; 6] = distinct(rng, n);
    let s: [i8; 6] = signs(rng);
    vec![
        sv([(i[0], s[0]), (i[1], -s[1]), (i[3], s[3])]),
        sv([(i[1], s[1]), (i[2], -s[2]), (i[4], s[4])]),
        sv([(i[2], s[2]), (i[0], -s[0]), (i[5], s[5])]),
    ]
}

fn sample_five(rng: &mut ChaCha8Rng, n: usize) -> Vec<SparseVec> {
    let i: [u32; 12] = distinct(rng, n);
    let s: [i8; 12] = signs(rng);
    let mut v: Vec<SparseVec> = (1..=4)
        .map(|j| sv([(i[0], s[0]), (i[2 * j - 1], s[2 * j - 1]), (i[2 * j], s[2 * j])]))
        .collect();
    v.push(sv([(i[9], s[9]), (i[10], s[10]), (i[11], s[11])]));
    v
}

fn sample_clauses(
    count: usize,
    weight: f64,
    seed: u64,
    stream_base: u64,
    draw: impl Fn(&mut ChaCha8Rng) -> Vec<SparseVec> + Sync,
) -> Vec<GapClause> {
    let shards = count.div_ceil(SHARD);
    (0..shards)
        .into_par_iter()
        .flat_map_iter(|sh| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream_base + sh as u64);
            let len = SHARD.min(count - sh * SHARD);
            (0..len).map(|_| GapClause { vecs: draw(&mut rng), weight }).collect::<Vec<_>>()
        })
        .collect()
}

/// Samples `m3` 3-clauses and `m5` 5-clauses over `V ⊂ ℝⁿ`.
pub fn gen_gap_instance(n: usize, m3: usize, m5: usize, seed: u64) -> Result<GapInstance> {
    if n < 12 {
        return Err(Error::domain(format!("n = {n} < 12; a 5-clause needs 12 distinct coordinates")));
    }
    if n > MAX_N {
        return Err(Error::domain(format!("n = {n} exceeds {MAX_N}")));
    }
    if m3 == 0 || m5 == 0 {
        return Err(Error::domain("need at least one clause of each size"));
    }
    let p = five_clause_weight();
    let three = sample_clauses(m3, (1.0 - p) / m3 as f64, seed, 0, |r| sample_three(r, n));
    let five = sample_clauses(m5, p / m5 as f64, seed, 1 << 32, |r| sample_five(r, n));
    Ok(GapInstance { n, three, five })
}

/// Required `3·(v_a·v_b)` for the pairs `(a, b)`, `a < b`, in lexicographic order.
fn required_bias(size: usize, a: usize, b: usize) -> i32 {
    match size {
        3 => -1,
        _ if b == 4 => 0,
        _ => {
            debug_assert!(a < 4);
            1
        }
    }
}

impl GapInstance {
    pub fn total_weight(&self) -> f64 {
        self.three.iter().chain(&self.five).map(|c| c.weight).sum()
    }

    /// Checks every clause's pairwise biases exactly.
    pub fn verify_biases(&self) -> Result<()> {
        for (size, clauses) in [(3, &self.three), (5, &self.five)] {
            for (c, clause) in clauses.iter().enumerate() {
                if clause.vecs.len() != size {
                    return Err(Error::structural(format!("{size}-clause {c} has {} vectors", clause.vecs.len())));
                }
                for a in 0..size {
                    for b in a + 1..size {
                        let got = clause.vecs[a].dot3(&clause.vecs[b]);
                        if got != required_bias(size, a, b) {
                            return Err(Error::structural(format!(
                                "{size}-clause {c}: 3·(v{}·v{}) = {got}",
                                a + 1,
                                b + 1
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Converts to an NAE instance; variable `i + 1` is the canonical vector `vars[i]`.
    pub fn to_nae(&self) -> (NAEInstance, Vec<SparseVec>) {
        let mut ids: HashMap<SparseVec, i32> = HashMap::new();
        let mut vars = Vec::new();
        let mut clauses = Vec::with_capacity(self.three.len() + self.five.len());
        for c in self.three.iter().chain(&self.five) {
            let lits = c
                .vecs
                .iter()
                .map(|v| {
                    let (rep, flipped) = v.canonical();
                    let id = *ids.entry(rep).or_insert_with(|| {
                        vars.push(rep);
                        vars.len() as i32
                    });
                    if flipped { -id } else { id }
                })
                .collect();
            clauses.push(Clause { weight: c.weight, lits });
        }
        let inst = NAEInstance::new(vars.len(), clauses).expect("clause vectors are pairwise non-parallel");
        (inst, vars)
    }
}

/// Sparse vector file for `vars` (1-based coordinates).
pub fn vectors_text(n: usize, vars: &[SparseVec]) -> String {
    let mut s = format!("v {} {n}\n", vars.len());
    for (i, v) in vars.iter().enumerate() {
        s.push_str(&format!("{} s", i + 1));
        for a in 0..3 {
            s.push_str(&format!(" {}:{}", v.idx[a] + 1, v.signs[a]));
        }
        s.push('\n');
    }
    s
}

/// A distribution over satisfying assignments, probabilities `weight/denom`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalDistribution {
    pub denom: u32,
    pub rows: Vec<(u32, Vec<i8>)>,
}

impl LocalDistribution {
    /// `denom·E[X_a X_b]`.
    pub fn bias_num(&self, a: usize, b: usize) -> i64 {
        self.rows.iter().map(|(w, x)| *w as i64 * (x[a] * x[b]) as i64).sum()
    }

    pub fn bias(&self, a: usize, b: usize) -> f64 {
        self.bias_num(a, b) as f64 / self.denom as f64
    }
}

/// Local distributions certifying SDP completeness 1 for each clause size.
pub fn completeness_witness(size: usize) -> Result<LocalDistribution> {
    match size {
        3 => Ok(LocalDistribution {
            denom: 3,
            rows: vec![(1, vec![1, 1, -1]), (1, vec![1, -1, 1]), (1, vec![-1, 1, 1])],
        }),
        5 => Ok(LocalDistribution {
            denom: 6,
            rows: (0..5)
                .map(|i| {
                    let mut x = vec![1; 5];
                    x[i] = -1;
                    (if i == 4 { 2 } else { 1 }, x)
                })
                .collect(),
        }),
        _ => Err(Error::domain(format!("no witness for clause size {size}"))),
    }
}

fn sunflower_with(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<SparseVec> {
    let idx = sample(rng, n, 2 * k + 1);
    let sgn = |rng: &mut ChaCha8Rng| if rng.random::<bool>() { 1 } else { -1 };
    let centre = (idx.index(0) as u32, sgn(rng));
    (0..k)
        .map(|j| sv([centre, (idx.index(2 * j + 1) as u32, sgn(rng)), (idx.index(2 * j + 2) as u32, sgn(rng))]))
        .collect()
}

/// `k` vectors sharing one signed coordinate, with disjoint petals.
pub fn sunflower_sample(n: usize, k: usize, seed: u64) -> Result<Vec<SparseVec>> {
    if 2 * k + 1 > n {
        return Err(Error::domain(format!("sunflower of {k} petals needs n >= {}", 2 * k + 1)));
    }
    Ok(sunflower_with(&mut ChaCha8Rng::seed_from_u64(seed), n, k))
}

/// Integral assignment of `V`.
#[derive(Debug, Clone)]
pub enum Rule {
    /// Vectors with 3 (2) positive coordinates are `+1` with probability
    /// `p1` (`p2`); others take the negated value of their antipode. Each
    /// trial draws a fresh assignment.
    Probabilistic { p1: f64, p2: f64 },
    /// Values of canonical representatives (positive first sign).
    Map(HashMap<SparseVec, i8>),
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn uniform(seed: u64, trial: u64, key: u64) -> f64 {
    let h = splitmix(splitmix(splitmix(seed) ^ trial) ^ key);
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl Rule {
    /// The rule with `F₂ = 2√21 − 9`: `p₂ = 0`, `p₁ = 1 − 2√(2√21 − 9)`.
    pub fn tuned() -> Self {
        Rule::Probabilistic { p1: 1.0 - 2.0 * (2.0 * 21f64.sqrt() - 9.0).sqrt(), p2: 0.0 }
    }

    /// Enumerates `V ⊂ ℝⁿ` and assigns each canonical vector `g(v)`.
    pub fn from_fn(n: usize, g: impl Fn(&SparseVec) -> i8) -> Self {
        let mut map = HashMap::new();
        for i in 0..n as u32 {
            for j in i + 1..n as u32 {
                for k in j + 1..n as u32 {
                    for (s2, s3) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                        let v = SparseVec { idx: [i, j, k], signs: [1, s2, s3] };
                        map.insert(v, if g(&v) > 0 { 1 } else { -1 });
                    }
                }
            }
        }
        Rule::Map(map)
    }

    fn validate(&self) -> Result<()> {
        if let Rule::Probabilistic { p1, p2 } = self {
            if !(0.0..=1.0).contains(p1) || !(0.0..=1.0).contains(p2) {
                return Err(Error::domain(format!("rule probabilities ({p1}, {p2}) outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Value of `x_v` in trial `trial`.
    pub fn value(&self, v: &SparseVec, seed: u64, trial: u64) -> Result<i8> {
        match self {
            Rule::Probabilistic { p1, p2 } => {
                let c = v.positives();
                let (rep, sign) = if c >= 2 { (*v, 1) } else { (v.neg(), -1) };
                let p = if rep.positives() == 3 { *p1 } else { *p2 };
                Ok(if uniform(seed, trial, rep.key()) < p { sign } else { -sign })
            }
            Rule::Map(map) => {
                let (rep, flipped) = v.canonical();
                let x = *map
                    .get(&rep)
                    .ok_or_else(|| Error::domain(format!("assignment map misses {rep:?}")))?;
                Ok(if flipped { -x } else { x })
            }
        }
    }

    /// `E[x_v]` over a sunflower petal, `(p₁ + p₂ − 1)/2` for the probabilistic rule.
    pub fn petal_mean(&self) -> Option<f64> {
        match self {
            Rule::Probabilistic { p1, p2 } => Some((p1 + p2 - 1.0) / 2.0),
            Rule::Map(_) => None,
        }
    }
}

fn mean_se(sum: f64, sum_sq: f64, n: u64) -> MomentEstimate {
    let nf = n as f64;
    let mean = sum / nf;
    let var = if n > 1 { ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
    MomentEstimate { value: mean, std_error: (var / nf).sqrt(), samples: n }
}

/// Estimates `F₂` over `𝒟₂` and `F₄` over `𝒟₄` under `rule`. Sample `s` uses
/// trial `s` of the rule; the pair is the first two petals of the 4-tuple.
pub fn assignment_moments(rule: &Rule, n: usize, samples: u64, seed: u64) -> Result<(MomentEstimate, MomentEstimate)> {
    rule.validate()?;
    if n < 9 {
        return Err(Error::domain(format!("n = {n} < 9; a 4-petal sunflower needs 9 coordinates")));
    }
    if samples == 0 {
        return Err(Error::domain("samples must be positive"));
    }
    const CHUNK: u64 = 1 << 14;
    let chunks = samples.div_ceil(CHUNK);
    let sums = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<[f64; 4]> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let mut acc = [0.0; 4];
            for s in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let vs = sunflower_with(&mut rng, n, 4);
                let mut x = [0i8; 4];
                for (xi, v) in x.iter_mut().zip(&vs) {
                    *xi = rule.value(v, seed, s)?;
                }
                let pair = (x[0] * x[1]) as f64;
                let quad = (x[0] * x[1] * x[2] * x[3]) as f64;
                acc[0] += pair;
                acc[1] += pair * pair;
                acc[2] += quad;
                acc[3] += quad * quad;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold([0.0; 4], |a, b| std::array::from_fn(|i| a[i] + b[i]));
    Ok((mean_se(sums[0], sums[1], samples), mean_se(sums[2], sums[3], samples)))
}

/// Result of [`evaluate_gap`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapEvaluation {
    /// Mean satisfied weight over trials.
    pub fraction: f64,
    pub std_error: f64,
    pub trials: u64,
    /// Pooled `−x_ax_b` over 3-clause pairs and `x_ax_b` over 5-clause petal pairs.
    pub f2: MomentEstimate,
    /// `x₁x₂x₃x₄` over 5-clause petals.
    pub f4: MomentEstimate,
    /// `(1−p)(3+3F̂₂)/4 + p(15−6F̂₂−F̂₄)/16`.
    pub predicted: f64,
}

/// Satisfied weight of `rule` on `instance`, averaged over `trials` draws.
pub fn evaluate_gap(instance: &GapInstance, rule: &Rule, trials: u64, seed: u64) -> Result<GapEvaluation> {
    rule.validate()?;
    if trials == 0 {
        return Err(Error::domain("trials must be positive"));
    }
    // per trial: [satisfied weight, f2 sum, f2 count, f4 sum, f4 count]
    let per_trial = (0..trials)
        .map(|t| -> Result<[f64; 5]> {
            let value = |v: &SparseVec| rule.value(v, seed, t);
            let three = instance
                .three
                .par_iter()
                .map(|c| -> Result<[f64; 2]> {
                    let x = [value(&c.vecs[0])?, value(&c.vecs[1])?, value(&c.vecs[2])?];
                    let pairs = (x[0] * x[1] + x[0] * x[2] + x[1] * x[2]) as f64;
                    let sat = if x[0] == x[1] && x[1] == x[2] { 0.0 } else { c.weight };
                    Ok([sat, -pairs])
                })
                .try_reduce(|| [0.0; 2], |a, b| Ok([a[0] + b[0], a[1] + b[1]]))?;
            let five = instance
                .five
                .par_iter()
                .map(|c| -> Result<[f64; 3]> {
                    let mut x = [0i8; 5];
                    for (xi, v) in x.iter_mut().zip(&c.vecs) {
                        *xi = value(v)?;
                    }
                    let mut pairs = 0i32;
                    for a in 0..4 {
                        for b in a + 1..4 {
                            pairs += (x[a] * x[b]) as i32;
                        }
                    }
                    let quad = (x[0] * x[1] * x[2] * x[3]) as f64;
                    let sat = if x.iter().all(|&xi| xi == x[0]) { 0.0 } else { c.weight };
                    Ok([sat, pairs as f64, quad])
                })
                .try_reduce(|| [0.0; 3], |a, b| Ok([a[0] + b[0], a[1] + b[1], a[2] + b[2]]))?;
            let total = instance.total_weight();
            let n_pairs = (3 * instance.three.len() + 6 * instance.five.len()) as f64;
            Ok([
                (three[0] + five[0]) / total,
                (three[1] + five[1]) / n_pairs,
                0.0,
                five[2] / instance.five.len() as f64,
                0.0,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let stat = |i: usize| {
        let s: f64 = per_trial.iter().map(|r| r[i]).sum();
        let s2: f64 = per_trial.iter().map(|r| r[i] * r[i]).sum();
        mean_se(s, s2, trials)
    };
    let fr = stat(0);
    let f2 = stat(1);
    let f4 = stat(3);
    let p = five_clause_weight();
    Ok(GapEvaluation {
        fraction: fr.value,
        std_error: fr.std_error,
        trials,
        f2,
        f4,
        predicted: mixture_value(p, f2.value, f4.value),
    })
}

/// Mixture value with `F₄` raised to at least `F₂² − slack`.
pub fn soundness_upper_estimate(f2: f64, f4: f64, p: f64, slack: f64) -> f64 {
    mixture_value(p, f2, f4.max(f2 * f2 - slack))
}
