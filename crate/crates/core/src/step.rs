//! Odd rounding functions: finite step functions and equal-mass grid functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;

/// Odd step function `f` with `f(x) = b_i` on `[a_i, a_{i+1})` for `x ≥ 0`
/// (`a_0 = 0`, `a_{ℓ+1} = ∞`) and `f(−x) = −f(x)`.
///
/// `f(0)` is `b_0`; every integral against a density ignores that point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    #[serde(rename = "a")]
    breakpoints: Vec<f64>,
    #[serde(rename = "b")]
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::structural(format!(
                "{} breakpoints need {} values, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                values.len()
            )));
        }
        if breakpoints.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::domain("breakpoints must be finite and strictly positive"));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("breakpoints must be strictly increasing"));
        }
        if values.iter().any(|b| !(b.abs() <= 1.0)) {
            return Err(Error::domain("step values must lie in [-1, 1]"));
        }
        Ok(Self { breakpoints, values })
    }

    /// Hyperplane rounding, `f = sign`.
    pub fn sign() -> Self {
        Self { breakpoints: vec![], values: vec![1.0] }
    }

    /// The constant-magnitude function `b0 · sign(x)`; `b0 = 0` is the random assignment.
    pub fn scaled_sign(b0: f64) -> Result<Self> {
        Self::new(vec![], vec![b0])
    }

    pub fn zero() -> Self {
        Self { breakpoints: vec![], values: vec![0.0] }
    }

    /// ±1 function with values `b_i = (−1)^{i+1}` between the given breakpoints.
    pub fn alternating(breakpoints: Vec<f64>) -> Result<Self> {
        let values = (0..=breakpoints.len())
            .map(|i| if i % 2 == 0 { -1.0 } else { 1.0 })
            .collect();
        Self::new(breakpoints, values)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of steps to the right of the origin.
    pub fn steps(&self) -> usize {
        self.values.len()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let ax = x.abs();
        let i = self.breakpoints.partition_point(|&a| a <= ax);
        let v = self.values[i];
        if x < 0.0 {
            -v
        } else {
            v
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Positive-half cells `(lo, hi, value)`, the last with `hi = ∞`.
    pub fn positive_cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.values.len()).map(move |i| {
            let lo = if i == 0 { 0.0 } else { self.breakpoints[i - 1] };
            let hi = self.breakpoints.get(i).copied().unwrap_or(f64::INFINITY);
            (lo, hi, self.values[i])
        })
    }

    /// Partition of the whole line as `(breaks, values)`: `values[c]` holds on
    /// the `c`-th cell delimited by the finite `breaks` (outer cells unbounded).
    /// Zero is a break only when `b_0 ≠ 0`.
    pub fn full_line_cells(&self) -> (Vec<f64>, Vec<f64>) {
        let mut breaks: Vec<f64> = self.breakpoints.iter().rev().map(|a| -a).collect();
        let mut values: Vec<f64> = self.values.iter().rev().map(|b| -b).collect();
        if self.values[0] != 0.0 {
            breaks.push(0.0);
            values.extend(self.values.iter().copied());
        } else {
            // merge the two central cells which both carry 0
            values.extend(self.values.iter().skip(1).copied());
        }
        breaks.extend(self.breakpoints.iter().copied());
        (breaks, values)
    }

    /// `∫ f² φ`.
    pub fn second_moment(&self) -> f64 {
        self.positive_cells()
            .map(|(lo, hi, b)| 2.0 * b * b * normal::interval_mass(lo, hi))
            .sum()
    }

    /// Copy with one more breakpoint `a` appended beyond the last one.
    pub fn with_extra_step(&self, a: f64, value: f64) -> Result<Self> {
        let mut bp = self.breakpoints.clone();
        bp.push(a);
        let mut vals = self.values.clone();
        vals.push(value);
        Self::new(bp, vals)
    }
}

/// Piecewise-constant odd function on the partition of the line into `N`
/// cells of Gaussian mass `1/N` each (cell `i` spans `(a_{i−1}, a_i)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    values: Vec<f64>,
}

const ODD_TOL: f64 = 1e-9;

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::domain("a grid function needs at least 2 cells"));
        }
        if values.iter().any(|v| !(v.abs() <= 1.0 + 1e-12)) {
            return Err(Error::domain("grid values must lie in [-1, 1]"));
        }
        for i in 0..n / 2 {
            if (values[i] + values[n - 1 - i]).abs() > ODD_TOL {
                return Err(Error::domain(format!("grid function is not odd at cell {}", i + 1)));
            }
        }
        if n % 2 == 1 && values[n / 2].abs() > ODD_TOL {
            return Err(Error::domain("odd grid function must vanish on the central cell"));
        }
        let values = values.into_iter().map(|v| v.clamp(-1.0, 1.0)).collect();
        Ok(Self { values })
    }

    /// Samples `g` at the Gaussian-median point of every cell and symmetrizes.
    pub fn from_fn(n: usize, g: impl Fn(f64) -> f64) -> Result<Self> {
        let mids = cell_midpoints(n)?;
        let mut v: Vec<f64> = mids.iter().map(|&x| g(x).clamp(-1.0, 1.0)).collect();
        for i in 0..n / 2 {
            let odd = 0.5 * (v[n - 1 - i] - v[i]);
            v[i] = -odd;
            v[n - 1 - i] = odd;
        }
        if n % 2 == 1 {
            v[n / 2] = 0.0;
        }
        Self::new(v)
    }

    /// The s-linear function `clamp(s·x, −1, 1)` sampled on cell midpoints.
    pub fn slinear(n: usize, slope: f64) -> Result<Self> {
        Self::from_fn(n, |x| slope * x)
    }

    pub fn sign(n: usize) -> Result<Self> {
        Self::from_fn(n, |x| x.signum())
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_monotone(&self, tol: f64) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0] - tol)
    }

    /// The same function as a [`StepFunction`] (cells with equal values merged).
    pub fn to_step_function(&self) -> Result<StepFunction> {
        let n = self.values.len();
        let breaks = normal::equal_prob_grid(n)?;
        let start = n / 2; // first cell with non-negative support
        let mut bps = Vec::new();
        let mut vals = Vec::new();
        for i in start..n {
            let v = self.values[i];
            if vals.is_empty() {
                vals.push(v);
                continue;
            }
            if v != *vals.last().unwrap() {
                bps.push(breaks[i - 1]);
                vals.push(v);
            }
        }
        // with odd N the central cell straddles zero and carries 0
        StepFunction::new(bps, vals)
    }
}

/// Gaussian medians `Φ⁻¹((i − ½)/N)` of the `N` equal-mass cells.
pub fn cell_midpoints(n: usize) -> Result<Vec<f64>> {
    (1..=n).map(|i| normal::probit((i as f64 - 0.5) / n as f64)).collect()
}

/// Odd part `(f(x) − f(−x))/2` of samples on a symmetric grid.
pub fn odd_part(xs: &[f64], fs: &[f64]) -> Result<Vec<f64>> {
    if xs.len() != fs.len() {
        return Err(Error::structural("sample and grid lengths differ"));
    }
    let n = xs.len();
    for i in 0..n {
        let mirror = xs[n - 1 - i];
        if (xs[i] + mirror).abs() > 1e-12 * (1.0 + xs[i].abs()) {
            return Err(Error::structural(format!(
                "grid is not symmetric: x[{i}] = {} but mirrored point is {mirror}",
                xs[i]
            )));
        }
        if i > 0 && xs[i] <= xs[i - 1] {
            return Err(Error::structural("grid must be strictly increasing"));
        }
    }
    Ok((0..n).map(|i| 0.5 * (fs[i] - fs[n - 1 - i])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(StepFunction::new(vec![1.0, 0.5], vec![0.0, 1.0, -1.0]).is_err());
        assert!(StepFunction::new(vec![0.0], vec![0.0, 1.0]).is_err());
        assert!(StepFunction::new(vec![1.0], vec![0.0, 1.5]).is_err());
        assert!(StepFunction::new(vec![1.0], vec![0.0]).is_err());
        assert!(StepFunction::new(vec![1.0, 2.0], vec![0.1, -1.0, 1.0]).is_ok());
    }

    #[test]
    fn evaluation_is_odd_and_right_closed() {
        let f = StepFunction::new(vec![1.0, 2.0], vec![0.25, -0.5, 1.0]).unwrap();
        assert_eq!(f.eval(1.0), -0.5);
        assert_eq!(f.eval(0.999), 0.25);
        assert_eq!(f.eval(2.0), 1.0);
        assert_eq!(f.eval(0.0), 0.25);
        for x in [0.1, 0.7, 1.0, 1.5, 2.0, 5.0] {
            assert_eq!(f.eval(-x), -f.eval(x));
        }
    }

    #[test]
    fn full_line_cells_merge_zero_center() {
        let f = StepFunction::new(vec![1.0], vec![0.0, 1.0]).unwrap();
        let (breaks, vals) = f.full_line_cells();
        assert_eq!(breaks, vec![-1.0, 1.0]);
        assert_eq!(vals, vec![-1.0, 0.0, 1.0]);
        let (breaks, vals) = StepFunction::sign().full_line_cells();
        assert_eq!(breaks, vec![0.0]);
        assert_eq!(vals, vec![-1.0, 1.0]);
    }

    #[test]
    fn grid_roundtrip_through_step_function() {
        let g = GridFunction::slinear(10, 2.0).unwrap();
        let f = g.to_step_function().unwrap();
        let mids = cell_midpoints(10).unwrap();
        for (i, x) in mids.iter().enumerate() {
            assert!((f.eval(*x) - g.values()[i]).abs() < 1e-15);
        }
        let g = GridFunction::slinear(9, 2.0).unwrap();
        assert_eq!(g.values()[4], 0.0);
        let f = g.to_step_function().unwrap();
        assert_eq!(f.values()[0], 0.0);
        assert!((f.second_moment() - g.values().iter().map(|v| v * v).sum::<f64>() / 9.0).abs() < 1e-12);
    }

    #[test]
    fn grid_rejects_non_odd() {
        assert!(GridFunction::new(vec![-1.0, 0.5]).is_err());
        assert!(GridFunction::new(vec![-1.0, 0.1, 1.0]).is_err());
        assert!(GridFunction::new(vec![-0.5, 0.5]).is_ok());
    }

    #[test]
    fn odd_part_examples() {
        let xs = [-1.0, -0.5, 0.0, 0.5, 1.0];
        let even: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!(odd_part(&xs, &even).unwrap().iter().all(|v| *v == 0.0));
        let odd: Vec<f64> = xs.iter().map(|x| x * x * x).collect();
        assert_eq!(odd_part(&xs, &odd).unwrap(), odd);
        // clamped x + 1 gives (0.5, 1), whose odd part is ±(1 − 0.5)/2
        let xs = [-0.5, 0.5];
        let f: Vec<f64> = xs.iter().map(|x| (x + 1.0f64).clamp(-1.0, 1.0)).collect();
        assert_eq!(odd_part(&xs, &f).unwrap(), vec![-0.25, 0.25]);
        let unclamped: Vec<f64> = xs.iter().map(|x| x + 1.0).collect();
        assert_eq!(odd_part(&xs, &unclamped).unwrap(), vec![-0.5, 0.5]);
        assert!(odd_part(&[-1.0, 0.5], &[0.0, 0.0]).is_err());
    }
}
