//! Derivative-free minimizers: golden-section search and Nelder–Mead.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Minimizes a unimodal `f` on `[a, b]`; returns `(argmin, min)`.
pub fn golden_section_min(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let (fa, fb) = (f(a), f(b));
    [(c, fc), (d, fd), (a, fa), (b, fb)]
        .into_iter()
        .fold((c, fc), |best, p| if p.1 < best.1 { p } else { best })
}

/// Options for [`nelder_mead`].
#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Stop when the simplex diameter falls below this.
    pub x_tol: f64,
    /// Stop when the spread of objective values falls below this.
    pub f_tol: f64,
    pub max_evals: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { x_tol: 1e-10, f_tol: 1e-14, max_evals: 20_000 }
    }
}

/// Result of [`nelder_mead`].
#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Nelder–Mead simplex minimization from `x0` with initial edge lengths `step`
/// (standard coefficients 1, 2, ½, ½).
pub fn nelder_mead(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    step: &[f64],
    opts: NelderMeadOptions,
) -> NelderMeadResult {
    let n = x0.len();
    if n == 0 {
        return NelderMeadResult { x: vec![], value: f(&[]), evals: 1, converged: true };
    }
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() { f64::INFINITY } else { v }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step[i];
        let v = eval(&x);
        simplex.push((x, v));
    }
    let mut evals = n + 1;
    let mut converged = false;
    while evals < opts.max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let diam = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if diam < opts.x_tol || (spread.abs() < opts.f_tol && diam < opts.x_tol.sqrt()) {
            converged = true;
            break;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (w - c)).collect()
        };
        let xr = along(-1.0);
        let fr = eval(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe);
            evals += 1;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let x = along(-0.5);
                let v = eval(&x);
                (x, v)
            } else {
                let x = along(0.5);
                let v = eval(&x);
                (x, v)
            };
            evals += 1;
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for (x, v) in simplex.iter_mut().skip(1) {
                    for (xi, bi) in x.iter_mut().zip(&best) {
                        *xi = bi + 0.5 * (*xi - bi);
                    }
                    *v = eval(x);
                }
                evals += n;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    NelderMeadResult { x, value, evals, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_quadratic() {
        let (x, v) = golden_section_min(|x| (x - 0.3) * (x - 0.3) + 2.0, -1.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6 && (v - 2.0).abs() < 1e-12);
        let (x, _) = golden_section_min(|x| x, 0.0, 1.0, 1e-12);
        assert!(x < 1e-11);
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let r = nelder_mead(
            |x| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2),
            &[-1.2, 1.0],
            &[0.5, 0.5],
            NelderMeadOptions::default(),
        );
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn nelder_mead_one_dimensional() {
        let r = nelder_mead(|x| (x[0] - 2.0).abs(), &[0.0], &[1.0], NelderMeadOptions::default());
        assert!((r.x[0] - 2.0).abs() < 1e-8);
    }
}
