//! Dense reference computations, independent of the Lanczos/Householder path.

#![allow(dead_code)]

use llwlc_core::generators::erdos_renyi;
use llwlc_core::{ConstraintMatrix, Graph};
use nalgebra::DMatrix;

pub fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Orthonormal basis of null(Cᵀ) from the zero eigenspace of C Cᵀ.
pub fn null_space_basis(c: &ConstraintMatrix) -> DMatrix<f64> {
    let dense = c.to_dense();
    let n = dense.nrows();
    let eig = (&dense * dense.transpose()).symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1.0);
    let cols: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i].abs() <= 1e-9 * scale).collect();
    DMatrix::from_fn(n, cols.len(), |r, k| eig.eigenvectors[(r, cols[k])])
}

pub fn constrained_spectrum(l: &DMatrix<f64>, c: &ConstraintMatrix) -> Vec<f64> {
    let nb = null_space_basis(c);
    if nb.ncols() == 0 {
        return Vec::new();
    }
    sorted_eigenvalues(&(nb.transpose() * l * &nb))
}

/// Collapses eigenvalues closer than `tol`.
pub fn distinct(values: &[f64], tol: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for &v in values {
        if out.last().map_or(true, |&last| v - last > tol) {
            out.push(v);
        }
    }
    out
}

pub fn random_connected(n: usize, p: f64, seed: u64) -> Graph {
    (0..)
        .map(|k| erdos_renyi(n, p, seed.wrapping_mul(1000).wrapping_add(k)).unwrap())
        .find(Graph::is_connected)
        .unwrap()
}
