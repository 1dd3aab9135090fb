//! Dense reference eigensolves used as independent oracles.

use llwlc_core::ConstraintMatrix;
use nalgebra::DMatrix;

/// Eigenvalues in ascending order.
pub fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Eigenpairs sorted by descending eigenvalue.
pub fn descending_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Orthonormal basis `N` of null(Cᵀ), taken from the zero eigenspace of `C Cᵀ`.
pub fn null_space_basis(c: &ConstraintMatrix) -> DMatrix<f64> {
    let dense = c.to_dense();
    let n = dense.nrows();
    if dense.ncols() == 0 {
        return DMatrix::identity(n, n);
    }
    let eig = (&dense * dense.transpose()).symmetric_eigen();
    let scale = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |a, &b| a.max(b.abs()))
        .max(f64::MIN_POSITIVE);
    let cols: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i].abs() <= 1e-9 * scale).collect();
    DMatrix::from_fn(n, cols.len(), |r, k| eig.eigenvectors[(r, cols[k])])
}

/// Ascending eigenvalues of `NᵀLN`.
pub fn constrained_spectrum(l: &DMatrix<f64>, c: &ConstraintMatrix) -> Vec<f64> {
    let nb = null_space_basis(c);
    if nb.ncols() == 0 {
        return Vec::new();
    }
    sorted_eigenvalues(&(nb.transpose() * l * &nb))
}

/// Collapses ascending values closer than `tol` to their first representative.
pub fn distinct(values: &[f64], tol: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for &v in values {
        if out.last().map_or(true, |&last| v - last > tol) {
            out.push(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use llwlc_core::{ConstraintColumn, Provenance};

    #[test]
    fn null_space_of_ones() {
        let c = ConstraintMatrix::new(
            3,
            vec![ConstraintColumn::from_dense(&[1.0; 3], Provenance::DegreeSum).unwrap()],
        )
        .unwrap();
        let nb = null_space_basis(&c);
        assert_eq!(nb.ncols(), 2);
        assert!(nb.row_sum().abs().max() < 1e-12);
    }

    #[test]
    fn distinct_collapses() {
        assert_eq!(distinct(&[0.0, 1e-12, 1.0, 1.0, 2.0], 1e-9), vec![0.0, 1.0, 2.0]);
    }
}
