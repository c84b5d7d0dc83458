//! Gram matrices of pairwise biases and explicit unit-vector assignments.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance on symmetry, unit diagonal and the minimum eigenvalue.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Symmetric `k×k` matrix of pairwise biases `B_ij = v_i·v_j` with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct GramConfig {
    m: DMatrix<f64>,
}

/// Outcome of [`validate_gram`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GramDiagnostics {
    pub max_asymmetry: f64,
    pub max_diagonal_deviation: f64,
    pub min_eigenvalue: f64,
    pub accepted: bool,
}

impl GramConfig {
    /// Wraps a square matrix without checking the Gram properties; use
    /// [`validate_gram`] or [`GramConfig::new`] for that.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::structural("empty bias matrix"));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != k) {
            return Err(Error::structural(format!(
                "bias matrix is not square: row {} has {} entries, expected {k}",
                i + 1,
                r.len()
            )));
        }
        Ok(Self { m: DMatrix::from_fn(k, k, |i, j| rows[i][j]) })
    }

    /// Square matrix that must pass [`validate_gram`] at [`DEFAULT_TOL`].
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let g = Self::from_rows(rows)?;
        let d = validate_gram(&g, DEFAULT_TOL);
        if !d.accepted {
            return Err(Error::domain(format!("not a valid Gram matrix: {d:?}")));
        }
        Ok(g)
    }

    /// All off-diagonal entries equal to `rho`.
    pub fn symmetric(k: usize, rho: f64) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|i| (0..k).map(|j| if i == j { 1.0 } else { rho }).collect())
            .collect();
        Self::new(&rows)
    }

    pub fn order(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// A factor `L` with `L Lᵀ = B`, from the eigendecomposition with
    /// negative eigenvalues (at most `tol` in size) set to zero.
    pub fn factor(&self, tol: f64) -> Result<DMatrix<f64>> {
        let sym = (&self.m + self.m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let k = self.order();
        let mut l = eig.eigenvectors.clone();
        for c in 0..k {
            let ev = eig.eigenvalues[c];
            if ev < -tol {
                return Err(Error::domain(format!(
                    "bias matrix is indefinite (eigenvalue {ev})"
                )));
            }
            let s = ev.max(0.0).sqrt();
            for r in 0..k {
                l[(r, c)] *= s;
            }
        }
        Ok(l)
    }
}

/// Checks symmetry, unit diagonal and positive semidefiniteness, each within `tol`.
pub fn validate_gram(b: &GramConfig, tol: f64) -> GramDiagnostics {
    let m = &b.m;
    let k = m.nrows();
    let mut asym = 0.0f64;
    let mut diag = 0.0f64;
    for i in 0..k {
        diag = diag.max((m[(i, i)] - 1.0).abs());
        for j in 0..i {
            asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    let finite = m.iter().all(|v| v.is_finite());
    let min_eig = if finite {
        let sym = (m + m.transpose()) * 0.5;
        SymmetricEigen::new(sym).eigenvalues.min()
    } else {
        f64::NAN
    };
    GramDiagnostics {
        max_asymmetry: asym,
        max_diagonal_deviation: diag,
        min_eigenvalue: min_eig,
        accepted: finite && asym <= tol && diag <= tol && min_eig >= -tol,
    }
}

/// Unit vectors in a shared dimension, one per variable (index 0 is variable 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorAssignment {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

const UNIT_TOL: f64 = 1e-12;

impl VectorAssignment {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let dim = vectors.first().map_or(0, Vec::len);
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::structural(format!(
                    "vector {} has dimension {}, expected {dim}",
                    i + 1,
                    v.len()
                )));
            }
            let n2: f64 = v.iter().map(|x| x * x).sum();
            if !((n2.sqrt() - 1.0).abs() <= UNIT_TOL) {
                return Err(Error::domain(format!(
                    "vector {} has norm {} (must be 1)",
                    i + 1,
                    n2.sqrt()
                )));
            }
        }
        Ok(Self { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector(&self, var: usize) -> &[f64] {
        &self.vectors[var]
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Gram matrix of the listed variables (0-based).
    pub fn gram(&self, vars: &[usize]) -> Result<GramConfig> {
        let rows: Vec<Vec<f64>> = vars
            .iter()
            .map(|&i| vars.iter().map(|&j| dot(&self.vectors[i], &self.vectors[j])).collect())
            .collect();
        GramConfig::from_rows(&rows)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let id = GramConfig::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]])
            .unwrap();
        assert!(validate_gram(&id, 1e-9).accepted);

        let t = -1.0 / 3.0;
        let b = GramConfig::symmetric(3, t).unwrap();
        let d = validate_gram(&b, 1e-9);
        assert!(d.accepted);
        assert!((d.min_eigenvalue - 1.0 / 3.0).abs() < 1e-12);

        let bad = GramConfig::from_rows(&[vec![1.0, 1.5], vec![1.5, 1.0]]).unwrap();
        let d = validate_gram(&bad, 1e-9);
        assert!(!d.accepted);
        assert!((d.min_eigenvalue + 0.5).abs() < 1e-12);

        assert!(matches!(
            GramConfig::from_rows(&[vec![1.0, 0.0], vec![0.0]]),
            Err(Error::Structural(_))
        ));
        let asym = GramConfig::from_rows(&[vec![1.0, 0.2], vec![0.1, 1.0]]).unwrap();
        assert!(!validate_gram(&asym, 1e-9).accepted);
    }

    #[test]
    fn factor_reproduces_semidefinite_matrix() {
        // rank one: all pairwise biases 1
        let b = GramConfig::symmetric(4, 1.0).unwrap();
        let l = b.factor(DEFAULT_TOL).unwrap();
        let back = &l * l.transpose();
        assert!((back - b.matrix()).abs().max() < 1e-12);
    }

    #[test]
    fn unit_norm_required() {
        assert!(VectorAssignment::new(vec![vec![1.0, 0.0], vec![0.6, 0.8]]).is_ok());
        assert!(VectorAssignment::new(vec![vec![1.0, 0.1]]).is_err());
        assert!(matches!(
            VectorAssignment::new(vec![vec![1.0, 0.0], vec![1.0]]),
            Err(Error::Structural(_))
        ));
    }

    proptest! {
        #[test]
        fn gram_of_explicit_unit_vectors_is_accepted(
            raw in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 2..7)
        ) {
            let vecs: Vec<Vec<f64>> = raw
                .into_iter()
                .filter_map(|v| {
                    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    (n > 1e-3).then(|| v.iter().map(|x| x / n).collect())
                })
                .collect();
            prop_assume!(!vecs.is_empty());
            let va = VectorAssignment::new(vecs).unwrap();
            let idx: Vec<usize> = (0..va.len()).collect();
            prop_assert!(validate_gram(&va.gram(&idx).unwrap(), DEFAULT_TOL).accepted);
        }
    }
}
