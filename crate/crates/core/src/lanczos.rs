//! Lanczos iteration restricted to the null space of `Cᵀ`.
//!
//! Each step projects `L q_j` back onto `null(Cᵀ)` before the three-term
//! recurrence, so every Lanczos vector (and hence every Ritz vector) satisfies
//! the constraints. The Ritz pairs of the resulting tridiagonal matrix
//! approximate the minimizers of the Rayleigh quotient `fᵀLf / fᵀf` subject to
//! `Cᵀf = 0`. With an empty `C` this is the plain Lanczos method.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constraints::ConstraintMatrix;
use crate::error::{Error, Result};
use crate::laplacian::SymmetricOperator;
use crate::projector::{build_projector, Projector};
use crate::tridiag::{tridiagonal_evd, TridiagonalMatrix};

/// Retries allowed when the start vector projects to zero.
pub const MAX_START_ATTEMPTS: usize = 5;

/// Output of the recurrence: `j ≤ κ` orthonormal Lanczos vectors and `T`.
#[derive(Debug, Clone)]
pub struct LanczosRun {
    pub q: Vec<Vec<f64>>,
    pub t: TridiagonalMatrix,
    /// `β_{j+1}` fell below the tolerance before `κ` steps.
    pub breakdown: bool,
}

/// Deterministic pseudo-random start vector in `[-1, 1)^n`.
pub fn start_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn constrained_lanczos(
    op: &impl SymmetricOperator,
    proj: &Projector,
    start: &[f64],
    kappa: usize,
    eps: f64,
) -> Result<LanczosRun> {
    let n = op.dim();
    if start.len() != n || proj.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            got: if start.len() != n { start.len() } else { proj.dim() },
        });
    }
    if kappa == 0 {
        return Err(Error::InvalidArgument("kappa must be at least 1".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument("breakdown tolerance must be positive".into()));
    }

    let mut next = proj.apply(start);
    let mut beta = norm(&next);
    if beta <= 1e-12 * norm(start) || beta == 0.0 {
        return Err(Error::DegenerateStart { attempts: 1 });
    }

    let mut q: Vec<Vec<f64>> = Vec::with_capacity(kappa);
    let mut alphas = Vec::with_capacity(kappa);
    let mut betas = Vec::with_capacity(kappa);
    let mut lq = vec![0.0; n];
    let mut breakdown = false;

    for j in 0..kappa {
        let qj: Vec<f64> = next.iter().map(|x| x / beta).collect();
        op.apply(&qj, &mut lq);
        // u = P(L q_j) - β_j q_{j-1}
        let mut u = proj.apply(&lq);
        if let Some(prev) = q.last() {
            axpy(-beta, prev, &mut u);
        }
        let alpha = dot(&u, &qj);
        axpy(-alpha, &qj, &mut u);
        alphas.push(alpha);
        q.push(qj);

        // roundoff drift out of null(Cᵀ), then two Gram-Schmidt sweeps
        proj.apply_in_place(&mut u);
        for _ in 0..2 {
            for qi in &q {
                let c = dot(&u, qi);
                axpy(-c, qi, &mut u);
            }
        }
        next = u;
        beta = norm(&next);
        if j + 1 == kappa {
            break;
        }
        if beta <= eps {
            breakdown = true;
            break;
        }
        betas.push(beta);
    }

    Ok(LanczosRun {
        t: TridiagonalMatrix::new(alphas, betas)?,
        q,
        breakdown,
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub lanczos_steps: usize,
    pub breakdown: bool,
    /// `‖P(L v_i) - R_i v_i‖₂` for the effective pairs.
    pub residuals: Vec<f64>,
    /// `max |Cᵀ V|`.
    pub max_constraint_violation: f64,
    /// `max |VᵀV - I|` over the effective block.
    pub max_orthogonality_loss: f64,
}

/// Ritz vectors `V = Q B` and Ritz values `R`, truncated or zero padded to `κ` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedEigenbasis {
    pub vectors: DMatrix<f64>,
    pub values: Vec<f64>,
    pub kappa_effective: usize,
    pub diagnostics: Diagnostics,
}

/// Keeps the `kappa_target` smallest Ritz pairs (values ascending), padding with zeros.
pub fn make_eigenbasis(q: &[Vec<f64>], b: &DMatrix<f64>, r: &[f64], kappa_target: usize) -> ConstrainedEigenbasis {
    let n = q.first().map_or(0, Vec::len);
    let j = r.len();
    let mut order: Vec<usize> = (0..j).collect();
    order.sort_by(|&a, &c| r[a].total_cmp(&r[c]));
    let keep = j.min(kappa_target);

    let mut vectors = DMatrix::zeros(n, kappa_target);
    let mut values = vec![0.0; kappa_target];
    for (col, &src) in order.iter().take(keep).enumerate() {
        values[col] = r[src];
        let mut out = vectors.column_mut(col);
        for (i, qi) in q.iter().enumerate() {
            let w = b[(i, src)];
            for (o, x) in out.iter_mut().zip(qi) {
                *o += w * x;
            }
        }
    }
    ConstrainedEigenbasis {
        vectors,
        values,
        kappa_effective: keep,
        diagnostics: Diagnostics {
            lanczos_steps: j,
            ..Default::default()
        },
    }
}

impl ConstrainedEigenbasis {
    pub fn n(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn kappa(&self) -> usize {
        self.values.len()
    }

    /// Ritz values of the effective (non-padded) pairs.
    pub fn effective_values(&self) -> &[f64] {
        &self.values[..self.kappa_effective]
    }

    /// Fills residual, constraint and orthogonality diagnostics.
    pub fn diagnose(&mut self, op: &impl SymmetricOperator, proj: &Projector, c: &ConstraintMatrix) {
        let n = self.n();
        let k = self.kappa_effective;
        let mut lv = vec![0.0; n];
        let mut residuals = Vec::with_capacity(k);
        let mut max_ctv: f64 = 0.0;
        for i in 0..k {
            let v: Vec<f64> = self.vectors.column(i).iter().copied().collect();
            op.apply(&v, &mut lv);
            let mut res = proj.apply(&lv);
            axpy(-self.values[i], &v, &mut res);
            residuals.push(norm(&res));
            for x in c.transpose_apply(&v) {
                max_ctv = max_ctv.max(x.abs());
            }
        }
        let block = self.vectors.columns(0, k);
        let gram = block.transpose() * block;
        let mut loss: f64 = 0.0;
        for a in 0..k {
            for b in 0..k {
                let want = if a == b { 1.0 } else { 0.0 };
                loss = loss.max((gram[(a, b)] - want).abs());
            }
        }
        self.diagnostics.residuals = residuals;
        self.diagnostics.max_constraint_violation = max_ctv;
        self.diagnostics.max_orthogonality_loss = loss;
    }

    /// `x ↦ V diag(φ(R)) Vᵀ x` as an implicit operator.
    pub fn low_rank(&self, phi: impl Fn(f64) -> f64) -> LowRankOperator<'_> {
        LowRankOperator {
            vectors: &self.vectors,
            weights: self.values.iter().map(|&r| phi(r)).collect(),
        }
    }

    /// Plain-text dump: header `n kappa kappa_effective`, the Ritz values,
    /// then one line per column of `V`; diagnostics lines start with `#`.
    pub fn to_dump(&self) -> String {
        let fmt_row = |xs: &mut dyn Iterator<Item = f64>| xs.map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ");
        let mut out = format!("{} {} {}\n", self.n(), self.kappa(), self.kappa_effective);
        let _ = writeln!(out, "{}", fmt_row(&mut self.values.iter().copied()));
        for col in self.vectors.column_iter() {
            let _ = writeln!(out, "{}", fmt_row(&mut col.iter().copied()));
        }
        let d = &self.diagnostics;
        let _ = writeln!(out, "# steps {}", d.lanczos_steps);
        let _ = writeln!(out, "# breakdown {}", d.breakdown);
        let _ = writeln!(out, "# max|CtV| {:.6e}", d.max_constraint_violation);
        let _ = writeln!(out, "# max|VtV-I| {:.6e}", d.max_orthogonality_loss);
        let _ = writeln!(
            out,
            "# residuals {}",
            d.residuals
                .iter()
                .map(|x| format!("{x:.6e}"))
                .collect::<Vec<_>>()
                .join(" ")
        );
        out
    }

    pub fn parse_dump(text: &str) -> Result<Self> {
        let perr = |line: usize, msg: &str| Error::Parse {
            line,
            msg: msg.to_string(),
        };
        let mut diagnostics = Diagnostics::default();
        let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut toks = rest.split_whitespace();
                let key = toks.next().unwrap_or("");
                let vals: Vec<&str> = toks.collect();
                let first = || vals.first().copied().unwrap_or("");
                match key {
                    "steps" => diagnostics.lanczos_steps = first().parse().map_err(|_| perr(i + 1, "bad steps"))?,
                    "breakdown" => diagnostics.breakdown = first() == "true",
                    "max|CtV|" => {
                        diagnostics.max_constraint_violation = first().parse().map_err(|_| perr(i + 1, "bad value"))?
                    }
                    "max|VtV-I|" => {
                        diagnostics.max_orthogonality_loss = first().parse().map_err(|_| perr(i + 1, "bad value"))?
                    }
                    "residuals" => {
                        diagnostics.residuals = vals
                            .iter()
                            .map(|t| t.parse().map_err(|_| perr(i + 1, "bad residual")))
                            .collect::<Result<_>>()?
                    }
                    _ => {}
                }
                continue;
            }
            let vals = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| perr(i + 1, "bad number")))
                .collect::<Result<Vec<_>>>()?;
            rows.push((i + 1, vals));
        }
        let (hl, header) = rows.first().ok_or_else(|| perr(1, "missing header"))?;
        let [n, kappa, eff] = header[..] else {
            return Err(perr(*hl, "header must be \"n kappa kappa_effective\""));
        };
        let (n, kappa, eff) = (n as usize, kappa as usize, eff as usize);
        if rows.len() != 2 + kappa {
            return Err(perr(*hl, "row count does not match kappa"));
        }
        let values = rows[1].1.clone();
        if values.len() != kappa {
            return Err(perr(rows[1].0, "expected kappa Ritz values"));
        }
        let mut vectors = DMatrix::zeros(n, kappa);
        for (c, (line, col)) in rows[2..].iter().enumerate() {
            if col.len() != n {
                return Err(perr(*line, "column length differs from n"));
            }
            vectors.column_mut(c).copy_from_slice(col);
        }
        Ok(Self {
            vectors,
            values,
            kappa_effective: eff,
            diagnostics,
        })
    }
}

/// `V diag(w) Vᵀ`, applied without forming the `n × n` matrix.
#[derive(Debug, Clone)]
pub struct LowRankOperator<'a> {
    vectors: &'a DMatrix<f64>,
    weights: Vec<f64>,
}

/// Largest size for which [`LowRankOperator::to_dense`] will materialize.
pub const DENSE_LIMIT: usize = 512;

impl LowRankOperator<'_> {
    pub fn apply_matrix(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut coeffs = self.vectors.transpose() * x;
        for (mut row, &w) in coeffs.row_iter_mut().zip(&self.weights) {
            row *= w;
        }
        self.vectors * coeffs
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let xm = DMatrix::from_column_slice(x.len(), 1, x);
        self.apply_matrix(&xm).iter().copied().collect()
    }

    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let n = self.vectors.nrows();
        if n > DENSE_LIMIT {
            return Err(Error::InvalidArgument(format!(
                "refusing to materialize a {n}x{n} operator"
            )));
        }
        Ok(self.apply_matrix(&DMatrix::identity(n, n)))
    }
}

impl SymmetricOperator for LowRankOperator<'_> {
    fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&LowRankOperator::apply(self, x));
    }

    fn norm1(&self) -> f64 {
        // crude bound; only used to scale tolerances
        self.weights.iter().map(|w| w.abs()).fold(0.0, f64::max) * self.vectors.nrows() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Lanczos steps.
    pub steps: usize,
    /// Columns of the returned basis.
    pub kappa_target: usize,
    pub seed: u64,
    /// Breakdown tolerance is `breakdown_scale * ‖L‖₁`.
    pub breakdown_scale: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            steps: 10,
            kappa_target: 10,
            seed: 0,
            breakdown_scale: 1e-10,
        }
    }
}

impl SolveOptions {
    pub fn with_kappa(kappa: usize) -> Self {
        Self {
            steps: kappa,
            kappa_target: kappa,
            ..Default::default()
        }
    }
}

/// Projector, recurrence, tridiagonal EVD and diagnostics in one call.
///
/// A start vector that projects to zero is redrawn from a derived seed up to
/// [`MAX_START_ATTEMPTS`] times.
pub fn solve(op: &impl SymmetricOperator, c: &ConstraintMatrix, opts: &SolveOptions) -> Result<ConstrainedEigenbasis> {
    let n = op.dim();
    if c.nrows() != n {
        return Err(Error::Dimension {
            expected: n,
            got: c.nrows(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidArgument("empty operator".into()));
    }
    let proj = build_projector(c)?;
    let eps = opts.breakdown_scale * op.norm1().max(f64::MIN_POSITIVE);
    let eps = if eps > 0.0 { eps } else { opts.breakdown_scale };

    let mut run = None;
    for attempt in 0..MAX_START_ATTEMPTS as u64 {
        let seed = opts.seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        match constrained_lanczos(op, &proj, &start_vector(n, seed), opts.steps, eps) {
            Ok(r) => {
                run = Some(r);
                break;
            }
            Err(Error::DegenerateStart { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    let run = run.ok_or(Error::DegenerateStart {
        attempts: MAX_START_ATTEMPTS,
    })?;

    let (b, r) = tridiagonal_evd(&run.t);
    let mut basis = make_eigenbasis(&run.q, &b, &r, opts.kappa_target);
    basis.diagnostics.breakdown = run.breakdown;
    basis.diagnose(op, &proj, c);
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{ConstraintColumn, Provenance};
    use crate::generators::{cycle, path};
    use crate::laplacian::laplacian;

    #[test]
    fn diagonal_three() {
        let l = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let basis = solve(&l, &ConstraintMatrix::empty(3), &SolveOptions::with_kappa(3)).unwrap();
        for (x, y) in basis.values.iter().zip([1.0, 2.0, 3.0]) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn path_three_spectrum() {
        let l = laplacian(&path(3).unwrap());
        let basis = solve(&l, &ConstraintMatrix::empty(3), &SolveOptions::with_kappa(3)).unwrap();
        for (x, y) in basis.values.iter().zip([0.0, 1.0, 3.0]) {
            assert!((x - y).abs() < 1e-10, "{:?}", basis.values);
        }
    }

    #[test]
    fn padding_when_krylov_space_is_small() {
        // P3 has three eigenvalues, so at most three steps complete
        let l = laplacian(&path(3).unwrap());
        let opts = SolveOptions {
            steps: 10,
            kappa_target: 10,
            ..Default::default()
        };
        let basis = solve(&l, &ConstraintMatrix::empty(3), &opts).unwrap();
        assert_eq!(basis.kappa_effective, 3);
        assert!(basis.diagnostics.breakdown);
        assert!(basis.values[3..].iter().all(|&v| v == 0.0));
        assert!(basis.vectors.columns(3, 7).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn make_eigenbasis_truncates_to_smallest() {
        let q: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|k| if i == k { 1.0 } else { 0.0 }).collect())
            .collect();
        let b = DMatrix::identity(3, 3);
        let basis = make_eigenbasis(&q, &b, &[5.0, -1.0, 2.0], 2);
        assert_eq!(basis.values, vec![-1.0, 2.0]);
        assert_eq!(basis.vectors[(1, 0)], 1.0);
        assert_eq!(basis.vectors[(2, 1)], 1.0);
    }

    #[test]
    fn constraints_hold_on_six_cycle() {
        let g = cycle(6).unwrap();
        let l = laplacian(&g);
        let col = ConstraintColumn::from_dense(&[0., 0., 1., -1., -1., 1.], Provenance::NeumannBoundary).unwrap();
        let c = ConstraintMatrix::new(6, vec![col]).unwrap();
        let basis = solve(&l, &c, &SolveOptions::with_kappa(5)).unwrap();
        assert!(basis.diagnostics.max_constraint_violation <= 1e-8);
        assert!(basis.diagnostics.max_orthogonality_loss <= 1e-8);
    }

    #[test]
    fn fully_constrained_space_is_degenerate() {
        let l = laplacian(&path(2).unwrap());
        let cols = vec![
            ConstraintColumn::from_dense(&[1.0, 0.0], Provenance::DegreeSum).unwrap(),
            ConstraintColumn::from_dense(&[0.0, 1.0], Provenance::DegreeSum).unwrap(),
        ];
        let c = ConstraintMatrix::new(2, cols).unwrap();
        assert_eq!(
            solve(&l, &c, &SolveOptions::with_kappa(2)).unwrap_err(),
            Error::DegenerateStart {
                attempts: MAX_START_ATTEMPTS
            }
        );
    }

    #[test]
    fn low_rank_identity_and_zero() {
        // simple spectrum, so one Krylov sequence spans everything
        let l = laplacian(&path(5).unwrap());
        let basis = solve(&l, &ConstraintMatrix::empty(5), &SolveOptions::with_kappa(5)).unwrap();
        let rebuilt = basis.low_rank(|r| r).to_dense().unwrap();
        assert!((rebuilt - l.to_dense()).norm() <= 1e-8);
        let zero = basis.low_rank(|_| 0.0).apply(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(zero.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn dump_round_trip_is_exact() {
        let l = laplacian(&cycle(6).unwrap());
        let opts = SolveOptions {
            steps: 8,
            kappa_target: 8,
            ..Default::default()
        };
        let basis = solve(&l, &ConstraintMatrix::empty(6), &opts).unwrap();
        let back = ConstrainedEigenbasis::parse_dump(&basis.to_dump()).unwrap();
        assert_eq!(back.values, basis.values);
        assert_eq!(back.vectors, basis.vectors);
        assert_eq!(back.kappa_effective, basis.kappa_effective);
        assert_eq!(back.diagnostics.lanczos_steps, basis.diagnostics.lanczos_steps);
    }

    #[test]
    fn argument_checks() {
        let l = laplacian(&path(3).unwrap());
        let p = Projector::identity(3);
        assert!(constrained_lanczos(&l, &p, &[1.0, 0.0, 0.0], 0, 1e-10).is_err());
        assert!(constrained_lanczos(&l, &p, &[1.0, 0.0], 2, 1e-10).is_err());
        assert!(constrained_lanczos(&l, &p, &[0.0; 3], 2, 1e-10).is_err());
    }
}
