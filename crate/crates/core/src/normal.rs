//! Univariate and bivariate standard normal distribution functions.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Standard normal density.
#[inline]
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Standard normal CDF `Φ(x)`, accurate to full relative precision in both tails.
#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 − Φ(x)`.
#[inline]
pub fn sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// `Φ(hi) − Φ(lo)` evaluated on the side of the origin that avoids cancellation.
pub fn interval_mass(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if lo >= 0.0 {
        sf(lo) - sf(hi)
    } else {
        cdf(hi) - cdf(lo)
    }
}

// Rational approximation for the probit (Acklam), refined by one Newton step.
const PROBIT_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const PROBIT_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const PROBIT_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const PROBIT_D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];
const PROBIT_LOW: f64 = 0.02425;

fn probit_rational(p: f64) -> f64 {
    let (a, b, c, d) = (&PROBIT_A, &PROBIT_B, &PROBIT_C, &PROBIT_D);
    if p < PROBIT_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    } else if p <= 1.0 - PROBIT_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    }
}

/// Inverse standard normal CDF.
pub fn probit(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("probit requires 0 < p < 1, got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let x = probit_rational(p);
    // residual measured in the smaller tail
    let e = if p < 0.5 { cdf(x) - p } else { (1.0 - p) - sf(x) };
    let dens = pdf(x);
    Ok(if dens > 0.0 { x - e / dens } else { x })
}

/// Interior breakpoints `a_1 < … < a_{N−1}` of the partition of the real line
/// into `N` cells of equal Gaussian mass `1/N`.
pub fn equal_prob_grid(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::domain(format!("equal_prob_grid requires N >= 2, got {n}")));
    }
    let mut a = vec![0.0; n - 1];
    for i in 1..n {
        // build from the positive half so the grid is exactly antisymmetric
        if 2 * i > n {
            a[i - 1] = probit(i as f64 / n as f64)?;
        }
    }
    for i in 1..n {
        if 2 * i < n {
            a[i - 1] = -a[n - i - 1];
        } else if 2 * i == n {
            a[i - 1] = 0.0;
        }
    }
    Ok(a)
}

// Gauss–Legendre half-rules (6, 12 and 20 points) used by the Drezner–Genz integrand.
const GL6: [(f64, f64); 3] = [
    (0.171_324_492_379_170_5, 0.932_469_514_203_152_1),
    (0.360_761_573_048_138_4, 0.661_209_386_466_264_5),
    (0.467_913_934_572_691, 0.238_619_186_083_197),
];
const GL12: [(f64, f64); 6] = [
    (0.047_175_336_386_511_77, 0.981_560_634_246_719_1),
    (0.106_939_325_995_318_3, 0.904_117_256_370_475),
    (0.160_078_328_543_346_4, 0.769_902_674_194_305),
    (0.203_167_426_723_065_9, 0.587_317_954_286_617_1),
    (0.233_492_536_538_354_7, 0.367_831_498_998_180_2),
    (0.249_147_045_813_402_9, 0.125_233_408_511_469_2),
];
const GL20: [(f64, f64); 10] = [
    (0.017_614_007_139_152_12, 0.993_128_599_185_094_9),
    (0.040_601_429_800_386_94, 0.963_971_927_277_913_8),
    (0.062_672_048_334_109_06, 0.912_234_428_251_325_9),
    (0.083_276_741_576_704_75, 0.839_116_971_822_218_8),
    (0.101_930_119_817_240_4, 0.746_331_906_460_150_8),
    (0.118_194_531_961_518_4, 0.636_053_680_726_515),
    (0.131_688_638_449_176_6, 0.510_867_001_950_827_1),
    (0.142_096_109_318_382_1, 0.373_706_088_715_419_6),
    (0.149_172_986_472_603_7, 0.227_785_851_141_645_1),
    (0.152_753_387_130_725_9, 0.076_526_521_133_497_33),
];

/// `P[X > h, Y > k]` for standard normals with correlation `r`, `|r| < 1`,
/// by Gauss–Legendre quadrature of the Drezner–Wesolowsky integrand (Genz's BVND).
/// Absolute accuracy is about `1e-15`.
pub fn bvn_upper(h: f64, k: f64, r: f64) -> f64 {
    let ar = r.abs();
    let rule: &[(f64, f64)] = if ar < 0.3 {
        &GL6
    } else if ar < 0.75 {
        &GL12
    } else {
        &GL20
    };
    let mut k = k;
    let mut hk = h * k;
    if ar < 0.925 {
        let mut bvn = 0.0;
        if ar > 0.0 {
            let hs = (h * h + k * k) / 2.0;
            let asr = 0.5 * r.asin();
            for &(w, x) in rule {
                for s in [-1.0, 1.0] {
                    let sn = (asr * (s * x + 1.0)).sin();
                    bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
                }
            }
            bvn *= asr / (2.0 * PI);
        }
        return bvn + sf(h) * sf(k);
    }
    if r < 0.0 {
        k = -k;
        hk = -hk;
    }
    let mut bvn = 0.0;
    if ar < 1.0 {
        let a_s = (1.0 - r) * (1.0 + r);
        let mut a = a_s.sqrt();
        let b_s = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        let asr = -0.5 * (b_s / a_s + hk);
        if asr > -100.0 {
            bvn = a
                * asr.exp()
                * (1.0 - c * (b_s - a_s) * (1.0 - d * b_s / 5.0) / 3.0 + c * d * a_s * a_s / 5.0);
        }
        if -hk < 100.0 {
            let b = b_s.sqrt();
            bvn -= (-0.5 * hk).exp()
                * SQRT_2PI
                * cdf(-b / a)
                * b
                * (1.0 - c * b_s * (1.0 - d * b_s / 5.0) / 3.0);
        }
        a /= 2.0;
        for &(w, x) in rule {
            for s in [-1.0, 1.0] {
                let xs = (a * (s * x + 1.0)).powi(2);
                let rs = (1.0 - xs).sqrt();
                let asr = -0.5 * (b_s / xs + hk);
                if asr > -100.0 {
                    bvn += a
                        * w
                        * asr.exp()
                        * ((-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs
                            - (1.0 + c * xs * (1.0 + d * xs)));
                }
            }
        }
        bvn = -bvn / (2.0 * PI);
    }
    if r > 0.0 {
        bvn + sf(h.max(k))
    } else {
        // k was negated above
        let mut v = -bvn;
        if k > h {
            v += cdf(k) - cdf(h);
        }
        v.max(0.0)
    }
}

/// Bivariate standard normal CDF `P[X ≤ x, Y ≤ y]` with correlation `r ∈ [−1, 1]`.
/// Infinite arguments are allowed; `r = ±1` is handled exactly.
pub fn binormal_cdf(x: f64, y: f64, r: f64) -> f64 {
    if x == f64::NEG_INFINITY || y == f64::NEG_INFINITY {
        return 0.0;
    }
    if x == f64::INFINITY {
        return cdf(y);
    }
    if y == f64::INFINITY {
        return cdf(x);
    }
    if r >= 1.0 {
        return cdf(x.min(y));
    }
    if r <= -1.0 {
        // X ≤ x and −X ≤ y
        return interval_mass(-y, x);
    }
    bvn_upper(-x, -y, r).clamp(0.0, 1.0)
}

/// Probability that a standard bivariate normal pair with correlation `r`
/// lands in `[x_lo, x_hi] × [y_lo, y_hi]`. Bounds may be infinite.
pub fn binormal_rect(r: f64, x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Result<f64> {
    if !(x_lo <= x_hi && y_lo <= y_hi) {
        return Err(Error::domain("binormal_rect requires lo <= hi on both axes"));
    }
    if !(-1.0..=1.0).contains(&r) {
        return Err(Error::domain(format!("correlation {r} outside [-1, 1]")));
    }
    let p = binormal_cdf(x_hi, y_hi, r) - binormal_cdf(x_lo, y_hi, r) - binormal_cdf(x_hi, y_lo, r)
        + binormal_cdf(x_lo, y_lo, r);
    Ok(p.clamp(0.0, 1.0))
}

/// Cell-probability matrix `P[X ∈ cell_i, Y ∈ cell_j]` for the partition of the
/// line given by `breaks` (finite, increasing; the outer cells extend to ±∞).
/// Uses one CDF evaluation per breakpoint pair and inclusion–exclusion.
pub fn cell_probabilities(breaks: &[f64], r: f64) -> Vec<Vec<f64>> {
    let mut edges = Vec::with_capacity(breaks.len() + 2);
    edges.push(f64::NEG_INFINITY);
    edges.extend_from_slice(breaks);
    edges.push(f64::INFINITY);
    let m = edges.len();
    // cdf grid, symmetric in its two arguments
    let mut grid = vec![vec![0.0; m]; m];
    for p in 0..m {
        for q in p..m {
            let v = binormal_cdf(edges[p], edges[q], r);
            grid[p][q] = v;
            grid[q][p] = v;
        }
    }
    let cells = m - 1;
    let mut out = vec![vec![0.0; cells]; cells];
    for i in 0..cells {
        for j in 0..cells {
            out[i][j] = grid[i + 1][j + 1] - grid[i][j + 1] - grid[i + 1][j] + grid[i][j];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bisection on Φ (or on the upper tail above the median) as an independent inverse.
    fn bisect_probit(p: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0, 40.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let below = if p < 0.5 { cdf(mid) < p } else { sf(mid) > 1.0 - p };
            if below {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn probit_examples() {
        assert_eq!(probit(0.5).unwrap(), 0.0);
        assert!((probit(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-9);
        assert!((probit(0.841_344_7).unwrap() - 1.0).abs() < 1e-6);
        for p in [1e-12, 1e-6, 0.01, 0.2, 0.3, 0.7, 0.99, 1.0 - 1e-9] {
            assert!((probit(p).unwrap() - bisect_probit(p)).abs() < 1e-9, "p = {p}");
        }
        assert!(probit(0.0).is_err());
        assert!(probit(1.0).is_err());
        assert!(probit(f64::NAN).is_err());
    }

    #[test]
    fn equal_prob_grid_examples() {
        assert_eq!(equal_prob_grid(2).unwrap(), vec![0.0]);
        let g4 = equal_prob_grid(4).unwrap();
        assert!((g4[0] + 0.6745).abs() < 1e-4 && g4[1] == 0.0 && (g4[2] - 0.6745).abs() < 1e-4);
        let g3 = equal_prob_grid(3).unwrap();
        assert!((g3[0] + 0.4307).abs() < 1e-4 && (g3[1] - 0.4307).abs() < 1e-4);
        let g = equal_prob_grid(601).unwrap();
        for i in 0..g.len() {
            assert_eq!(g[i], -g[g.len() - 1 - i]);
            if i > 0 {
                assert!(g[i] > g[i - 1]);
            }
        }
        assert!(equal_prob_grid(1).is_err());
    }

    #[test]
    fn rect_examples() {
        let inf = f64::INFINITY;
        assert!((binormal_rect(0.0, 0.0, inf, 0.0, inf).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(binormal_rect(1.0, 0.0, inf, -inf, 0.0).unwrap(), 0.0);
        let orthant = 0.25 + 0.5f64.asin() / (2.0 * PI);
        assert!((binormal_rect(0.5, 0.0, inf, 0.0, inf).unwrap() - orthant).abs() < 1e-12);
        assert!(binormal_rect(0.5, 1.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn orthant_identity_across_correlations() {
        let inf = f64::INFINITY;
        for i in -99..=99 {
            let r = i as f64 / 100.0;
            let p = binormal_rect(r, 0.0, inf, 0.0, inf).unwrap();
            let want = 0.25 + r.asin() / (2.0 * PI);
            assert!((p - want).abs() < 1e-12, "r = {r}: {p} vs {want}");
        }
    }

    #[test]
    fn cdf_matches_one_dimensional_quadrature() {
        // P[X ≤ x, Y ≤ y] = ∫_{-∞}^{x} φ(t) Φ((y − r t)/√(1−r²)) dt
        for &r in &[-0.97, -0.8, -0.5, -0.1, 0.2, 0.6, 0.93, 0.99] {
            for &(x, y) in &[(0.3, -0.7), (-1.2, 2.0), (1.5, 1.5), (-2.5, -0.4)] {
                let s = (1.0f64 - r * r).sqrt();
                let v = crate::quad::integrate(|t| pdf(t) * cdf((y - r * t) / s), -12.0, x, 1e-13)
                    .unwrap();
                assert!((binormal_cdf(x, y, r) - v).abs() < 1e-11, "r={r} x={x} y={y}");
            }
        }
    }

    #[test]
    fn cell_probabilities_rows_sum_to_marginal() {
        let breaks = equal_prob_grid(7).unwrap();
        for r in [-1.0, -0.74, 0.0, 0.4, 1.0] {
            let m = cell_probabilities(&breaks, r);
            for row in &m {
                let s: f64 = row.iter().sum();
                assert!((s - 1.0 / 7.0).abs() < 1e-13);
            }
        }
    }
}
