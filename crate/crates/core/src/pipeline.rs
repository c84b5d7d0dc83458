//! End-to-end RPR² on weighted NAE instances with explicit vector solutions.
//!
//! Instance format (line oriented, `c` starts a comment):
//!
//! ```text
//! p nae <num_vars> <num_clauses>
//! <weight> <k> <lit_1> ... <lit_k>      literals are ±(1-based variable)
//! ```
//!
//! Vector format: a header `v <num_vars> <dim>`, then one line per variable,
//! either dense `<id> <dim floats>` or sparse `<id> s <idx>:<±1> ...` where
//! each listed 1-based coordinate holds `±1/√m` for `m` listed entries.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gram::{dot, VectorAssignment};
use crate::step::StepFunction;

/// A weighted NAE clause over signed literals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub weight: f64,
    /// `+v` or `−v` for 1-based variable `v`.
    pub lits: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NAEInstance {
    num_vars: usize,
    clauses: Vec<Clause>,
}

impl NAEInstance {
    pub fn new(num_vars: usize, clauses: Vec<Clause>) -> Result<Self> {
        for (c, clause) in clauses.iter().enumerate() {
            check_clause(clause, num_vars).map_err(|msg| Error::domain(format!("clause {}: {msg}", c + 1)))?;
        }
        Ok(Self { num_vars, clauses })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn total_weight(&self) -> f64 {
        self.clauses.iter().map(|c| c.weight).sum()
    }

    /// Serializes in the instance file format.
    pub fn to_text(&self) -> String {
        let mut s = format!("p nae {} {}\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            s.push_str(&format!("{} {}", c.weight, c.lits.len()));
            for l in &c.lits {
                s.push_str(&format!(" {l}"));
            }
            s.push('\n');
        }
        s
    }
}

fn check_clause(c: &Clause, num_vars: usize) -> std::result::Result<(), String> {
    if !(c.weight > 0.0 && c.weight.is_finite()) {
        return Err(format!("weight {} must be positive", c.weight));
    }
    if c.lits.len() < 2 {
        return Err("a clause needs at least 2 literals".into());
    }
    let mut seen = Vec::with_capacity(c.lits.len());
    for &l in &c.lits {
        let v = l.unsigned_abs() as usize;
        if l == 0 || v > num_vars {
            return Err(format!("literal {l} out of range 1..={num_vars}"));
        }
        if seen.contains(&v) {
            return Err(format!("variable {v} repeated"));
        }
        seen.push(v);
    }
    Ok(())
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Parses the instance file format.
pub fn parse_instance(text: &str) -> Result<NAEInstance> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line_no = no + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks[0] == "p" {
            if header.is_some() {
                return Err(parse_err(line_no, "duplicate header"));
            }
            if toks.len() != 4 || toks[1] != "nae" {
                return Err(parse_err(line_no, "header must be `p nae <num_vars> <num_clauses>`"));
            }
            let n = toks[2].parse().map_err(|_| parse_err(line_no, "bad variable count"))?;
            let m = toks[3].parse().map_err(|_| parse_err(line_no, "bad clause count"))?;
            header = Some((n, m));
            continue;
        }
        let (n, _) = header.ok_or_else(|| parse_err(line_no, "clause before `p nae` header"))?;
        if toks.len() < 2 {
            return Err(parse_err(line_no, "clause needs `<weight> <k> <lits>`"));
        }
        let weight: f64 = toks[0].parse().map_err(|_| parse_err(line_no, format!("bad weight {:?}", toks[0])))?;
        let k: usize = toks[1].parse().map_err(|_| parse_err(line_no, format!("bad clause size {:?}", toks[1])))?;
        if toks.len() != k + 2 {
            return Err(parse_err(line_no, format!("clause size {k} but {} literals", toks.len() - 2)));
        }
        let lits = toks[2..]
            .iter()
            .map(|t| t.parse::<i32>().map_err(|_| parse_err(line_no, format!("bad literal {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let clause = Clause { weight, lits };
        check_clause(&clause, n).map_err(|msg| parse_err(line_no, msg))?;
        clauses.push(clause);
    }
    let (n, m) = header.ok_or_else(|| parse_err(0, "missing `p nae` header"))?;
    if clauses.len() != m {
        return Err(parse_err(0, format!("header declares {m} clauses, found {}", clauses.len())));
    }
    NAEInstance::new(n, clauses)
}

/// Parses the vector file format.
pub fn parse_vectors(text: &str) -> Result<VectorAssignment> {
    let mut header: Option<(usize, usize)> = None;
    let mut vecs: Vec<Option<Vec<f64>>> = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line_no = no + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks[0] == "v" {
            if header.is_some() || toks.len() != 3 {
                return Err(parse_err(line_no, "header must appear once as `v <num_vars> <dim>`"));
            }
            let n: usize = toks[1].parse().map_err(|_| parse_err(line_no, "bad variable count"))?;
            let d: usize = toks[2].parse().map_err(|_| parse_err(line_no, "bad dimension"))?;
            header = Some((n, d));
            vecs = vec![None; n];
            continue;
        }
        let (n, d) = header.ok_or_else(|| parse_err(line_no, "vector before `v` header"))?;
        let id: usize = toks[0].parse().map_err(|_| parse_err(line_no, "bad variable id"))?;
        if id == 0 || id > n {
            return Err(parse_err(line_no, format!("variable id {id} out of range")));
        }
        if vecs[id - 1].is_some() {
            return Err(parse_err(line_no, format!("variable {id} given twice")));
        }
        let v = if toks.get(1) == Some(&"s") {
            let entries = &toks[2..];
            if entries.is_empty() {
                return Err(parse_err(line_no, "sparse vector without entries"));
            }
            let scale = 1.0 / (entries.len() as f64).sqrt();
            let mut v = vec![0.0; d];
            for e in entries {
                let (i, s) = e.split_once(':').ok_or_else(|| parse_err(line_no, format!("bad entry {e:?}")))?;
                let i: usize = i.parse().map_err(|_| parse_err(line_no, format!("bad index in {e:?}")))?;
                let s: i32 = s.parse().map_err(|_| parse_err(line_no, format!("bad sign in {e:?}")))?;
                if i == 0 || i > d || s.abs() != 1 || v[i - 1] != 0.0 {
                    return Err(parse_err(line_no, format!("invalid sparse entry {e:?}")));
                }
                v[i - 1] = s as f64 * scale;
            }
            v
        } else {
            if toks.len() != d + 1 {
                return Err(parse_err(line_no, format!("expected {d} coordinates")));
            }
            toks[1..]
                .iter()
                .map(|t| t.parse::<f64>().map_err(|_| parse_err(line_no, format!("bad coordinate {t:?}"))))
                .collect::<Result<Vec<_>>>()?
        };
        vecs[id - 1] = Some(v);
    }
    if header.is_none() {
        return Err(parse_err(0, "missing `v` header"));
    }
    let vectors = vecs
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| parse_err(0, format!("no vector for variable {}", i + 1))))
        .collect::<Result<Vec<_>>>()?;
    VectorAssignment::new(vectors)
}

/// `±1` value per variable (index 0 is variable 1).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment(pub Vec<i8>);

impl Assignment {
    pub fn value(&self, lit: i32) -> Option<i8> {
        let v = *self.0.get(lit.unsigned_abs() as usize - 1)?;
        Some(if lit < 0 { -v } else { v })
    }
}

/// One RPR² sample for round `round`: the projection uses ChaCha stream
/// `2·round`, the coin of variable `i` is word `2i` of stream `2·round + 1`.
pub fn rpr2_round_at(vectors: &VectorAssignment, f: &StepFunction, seed: u64, round: u64) -> Assignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * round);
    let r: Vec<f64> = (0..vectors.dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut coins = ChaCha8Rng::seed_from_u64(seed);
    coins.set_stream(2 * round + 1);
    let x = vectors
        .vectors()
        .iter()
        .map(|v| {
            let p = (1.0 + f.eval(dot(v, &r))) / 2.0;
            let u = (coins.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            if u < p { 1 } else { -1 }
        })
        .collect();
    Assignment(x)
}

/// [`rpr2_round_at`] for round 0.
pub fn rpr2_round(vectors: &VectorAssignment, f: &StepFunction, seed: u64) -> Assignment {
    rpr2_round_at(vectors, f, seed, 0)
}

/// Satisfied weight over total weight.
pub fn evaluate(instance: &NAEInstance, x: &Assignment) -> Result<f64> {
    if x.0.len() < instance.num_vars {
        return Err(Error::structural(format!(
            "assignment covers {} of {} variables",
            x.0.len(),
            instance.num_vars
        )));
    }
    let mut sat = 0.0;
    for c in &instance.clauses {
        let first = x.value(c.lits[0]).ok_or_else(|| Error::structural("literal out of range"))?;
        let mut mixed = false;
        for &l in &c.lits[1..] {
            if x.value(l).ok_or_else(|| Error::structural("literal out of range"))? != first {
                mixed = true;
                break;
            }
        }
        if mixed {
            sat += c.weight;
        }
    }
    Ok(sat / instance.total_weight())
}

/// Expected value of a uniformly random assignment.
pub fn random_baseline(instance: &NAEInstance) -> f64 {
    let num: f64 = instance
        .clauses
        .iter()
        .map(|c| c.weight * (1.0 - 0.5f64.powi(c.lits.len() as i32 - 1)))
        .sum();
    num / instance.total_weight()
}

/// Result of [`best_of_rounds`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundsResult {
    pub best: Assignment,
    pub best_fraction: f64,
    /// Fraction achieved by each round, in order.
    pub fractions: Vec<f64>,
}

impl RoundsResult {
    pub fn mean(&self) -> f64 {
        self.fractions.iter().sum::<f64>() / self.fractions.len() as f64
    }

    pub fn std_error(&self) -> f64 {
        let n = self.fractions.len() as f64;
        if n < 2.0 {
            return 0.0;
        }
        let m = self.mean();
        let var = self.fractions.iter().map(|f| (f - m) * (f - m)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    }
}

/// Best of `rounds` independent RPR² samples.
pub fn best_of_rounds(
    instance: &NAEInstance,
    vectors: &VectorAssignment,
    f: &StepFunction,
    rounds: u64,
    seed: u64,
) -> Result<RoundsResult> {
    if rounds == 0 {
        return Err(Error::domain("rounds must be at least 1"));
    }
    if vectors.len() < instance.num_vars {
        return Err(Error::structural(format!(
            "{} vectors for {} variables",
            vectors.len(),
            instance.num_vars
        )));
    }
    let mut fractions = Vec::with_capacity(rounds as usize);
    let mut best: Option<(Assignment, f64)> = None;
    for round in 0..rounds {
        let x = rpr2_round_at(vectors, f, seed, round);
        let v = evaluate(instance, &x)?;
        fractions.push(v);
        if best.as_ref().is_none_or(|b| v > b.1) {
            best = Some((x, v));
        }
    }
    let (best, best_fraction) = best.unwrap();
    Ok(RoundsResult { best, best_fraction, fractions })
}

/// Independently sets each `y_i` to `+1` with probability `δ`, to `−1` with
/// probability `δ`, and leaves it as `x_i` otherwise.
pub fn noise_assignment(x: &Assignment, delta: f64, seed: u64) -> Result<Assignment> {
    if !(0.0..=0.5).contains(&delta) {
        return Err(Error::domain(format!("delta {delta} outside [0, 1/2]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = x
        .0
        .iter()
        .map(|&xi| {
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            if u < delta {
                1
            } else if u < 2.0 * delta {
                -1
            } else {
                xi
            }
        })
        .collect();
    Ok(Assignment(y))
}

/// `(P_k(δ), Q_k(δ)) = (1 − 2(1−δ)^k + (1−2δ)^k, (1−2δ)^k)`.
pub fn pq_values(k: u32, delta: f64) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    if !(0.0..=0.5).contains(&delta) {
        return Err(Error::domain(format!("delta {delta} outside [0, 1/2]")));
    }
    let ki = k as i32;
    let q = (1.0 - 2.0 * delta).powi(ki);
    Ok((1.0 - 2.0 * (1.0 - delta).powi(ki) + q, q))
}

/// `δ` with `Q_k(δ) = 1 − ε/2`.
pub fn delta_for_eps(k: u32, eps: f64) -> Result<f64> {
    if k == 0 || !(0.0..=2.0).contains(&eps) {
        return Err(Error::domain("need k >= 1 and eps in [0, 2]"));
    }
    Ok((1.0 - (1.0 - eps / 2.0).powf(1.0 / k as f64)) / 2.0)
}
