//! Orthogonal projection onto the null space of `Cᵀ`.
//!
//! `P b = b - C y` where `y = argmin ‖C y - b‖₂`. The least-squares problem is
//! solved directly from a Householder factorization `C = Q R` that is computed
//! once and reused for every application.

use crate::constraints::{ConstraintMatrix, DEFAULT_RANK_TOL};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
struct Reflector {
    /// Acts on indices `offset..n`.
    offset: usize,
    v: Vec<f64>,
    beta: f64,
}

impl Reflector {
    fn apply(&self, x: &mut [f64]) {
        let tail = &mut x[self.offset..];
        let dot: f64 = self.v.iter().zip(tail.iter()).map(|(a, b)| a * b).sum();
        let s = self.beta * dot;
        for (t, vi) in tail.iter_mut().zip(&self.v) {
            *t -= s * vi;
        }
    }
}

/// Householder QR grown one column at a time; a column whose new diagonal
/// entry of `R` falls below the rank threshold is rejected and leaves the
/// factorization untouched.
#[derive(Debug, Clone)]
pub(crate) struct IncrementalQr {
    n: usize,
    reflectors: Vec<Reflector>,
    /// Column `k` holds `R[0..=k, k]`.
    r: Vec<Vec<f64>>,
    largest_diag: f64,
}

impl IncrementalQr {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            n,
            reflectors: Vec::new(),
            r: Vec::new(),
            largest_diag: 0.0,
        }
    }

    pub(crate) fn rank(&self) -> usize {
        self.reflectors.len()
    }

    /// Returns the new `|R[k, k]|` on acceptance, `None` if dependent.
    pub(crate) fn try_push(&mut self, column: &[f64], tol: f64) -> Option<f64> {
        debug_assert_eq!(column.len(), self.n);
        let k = self.rank();
        if k >= self.n {
            return None;
        }
        let col_norm = norm(column);
        let mut w = column.to_vec();
        for h in &self.reflectors {
            h.apply(&mut w);
        }
        let tail_norm = norm(&w[k..]);
        let scale = self.largest_diag.max(col_norm);
        if scale == 0.0 || tail_norm <= tol * scale {
            return None;
        }
        let alpha = if w[k] >= 0.0 { -tail_norm } else { tail_norm };
        let mut v = w[k..].to_vec();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        self.reflectors.push(Reflector {
            offset: k,
            v,
            beta: 2.0 / vv,
        });
        let mut rcol = w[..k].to_vec();
        rcol.push(alpha);
        self.r.push(rcol);
        self.largest_diag = self.largest_diag.max(alpha.abs());
        Some(alpha.abs())
    }

    /// `x ← Qᵀ x`.
    fn apply_qt(&self, x: &mut [f64]) {
        for h in &self.reflectors {
            h.apply(x);
        }
    }

    /// `x ← Q x`.
    fn apply_q(&self, x: &mut [f64]) {
        for h in self.reflectors.iter().rev() {
            h.apply(x);
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Null-space projector `P = I - C (CᵀC)⁻¹ Cᵀ`, never formed explicitly.
#[derive(Debug, Clone)]
pub struct Projector {
    qr: IncrementalQr,
}

impl Projector {
    /// `P = I` on `R^n`.
    pub fn identity(n: usize) -> Self {
        Self {
            qr: IncrementalQr::new(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.qr.n
    }

    /// Number of constraints.
    pub fn rank(&self) -> usize {
        self.qr.rank()
    }

    /// `b ← P b`.
    pub fn apply_in_place(&self, b: &mut [f64]) {
        if self.rank() == 0 {
            return;
        }
        self.qr.apply_qt(b);
        b[..self.rank()].iter_mut().for_each(|x| *x = 0.0);
        self.qr.apply_q(b);
    }

    pub fn apply(&self, b: &[f64]) -> Vec<f64> {
        let mut out = b.to_vec();
        self.apply_in_place(&mut out);
        out
    }

    /// Minimizer of `‖C y - b‖₂` by back substitution on `R`.
    pub fn least_squares(&self, b: &[f64]) -> Vec<f64> {
        let l = self.rank();
        let mut z = b.to_vec();
        self.qr.apply_qt(&mut z);
        let mut y = vec![0.0; l];
        for i in (0..l).rev() {
            let mut s = z[i];
            for (j, yj) in y.iter().enumerate().skip(i + 1) {
                s -= self.qr.r[j][i] * yj;
            }
            y[i] = s / self.qr.r[i][i];
        }
        y
    }
}

pub fn build_projector(c: &ConstraintMatrix) -> Result<Projector> {
    let mut qr = IncrementalQr::new(c.nrows());
    for (idx, col) in c.columns().iter().enumerate() {
        if qr.try_push(&col.to_dense(c.nrows()), DEFAULT_RANK_TOL).is_none() {
            return Err(Error::RankDeficient { column: idx });
        }
    }
    Ok(Projector { qr })
}
