//! Symmetric tridiagonal matrices and their eigendecomposition.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Symmetric tridiagonal `T` with diagonal `α₁..α_j` and off-diagonal `β₂..β_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn new(alphas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() || betas.len() + 1 != alphas.len() {
            return Err(Error::Dimension {
                expected: alphas.len().saturating_sub(1),
                got: betas.len(),
            });
        }
        Ok(Self { alphas, betas })
    }

    pub fn dim(&self) -> usize {
        self.alphas.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let j = self.dim();
        let mut t = DMatrix::from_diagonal(&DVector::from_column_slice(&self.alphas));
        for (i, &b) in self.betas.iter().enumerate() {
            t[(i, i + 1)] = b;
            t[(i + 1, i)] = b;
        }
        debug_assert_eq!(t.nrows(), j);
        t
    }
}

/// `T = B diag(R) Bᵀ` with `R` ascending, by implicit QL iterations with
/// Wilkinson shifts.
pub fn tridiagonal_evd(t: &TridiagonalMatrix) -> (DMatrix<f64>, Vec<f64>) {
    let n = t.dim();
    let mut d = t.alphas.clone();
    // e[i] couples i and i+1; e[n-1] is scratch
    let mut e: Vec<f64> = t.betas.iter().copied().chain(std::iter::once(0.0)).collect();
    let mut z = DMatrix::<f64>::identity(n, n);

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                // convergence in a handful of sweeps is the norm; give up on
                // this eigenvalue rather than loop forever on NaN input
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let zk1 = z[(k, i + 1)];
                    let zk = z[(k, i)];
                    z[(k, i + 1)] = s * zk + c * zk1;
                    z[(k, i)] = c * zk - s * zk1;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| z[(r, order[c])]);
    (vectors, values)
}
