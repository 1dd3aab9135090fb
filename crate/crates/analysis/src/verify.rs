//! Numerical checks of the low-rank Lanczos bound and the first-order
//! eigenvalue perturbation estimate against dense eigensolves.

use std::fmt::{self, Write as _};

use llwlc_core::generators::random_connected;
use llwlc_core::lanczos::{constrained_lanczos, start_vector};
use llwlc_core::{laplacian, Projector, TridiagonalMatrix};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dense::descending_eigen;
use crate::error::{AnalysisError, Result};

/// Largest matrix handled by the dense checks.
pub const DENSE_CAP: usize = 128;
/// Allowed negative slack.
pub const SLACK_TOL: f64 = 1e-8;
/// Accepted range for the discrepancy ratio when the scale drops 10×.
pub const SCALING_RANGE: (f64, f64) = (50.0, 200.0);

const COS_FLOOR: f64 = 1e-10;
const GAP_FLOOR: f64 = 1e-9;

/// `T_d(x)` by the three-term recurrence.
pub fn chebyshev(d: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if d == 0 {
        return prev;
    }
    for _ in 1..d {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

#[derive(Debug, Clone, PartialEq)]
pub enum CheckStatus {
    Holds,
    Violated,
    Inconclusive(String),
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckStatus::Holds => f.write_str("holds"),
            CheckStatus::Violated => f.write_str("violated"),
            CheckStatus::Inconclusive(why) => write!(f, "inconclusive ({why})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub n: usize,
    pub j: usize,
    pub kappa: usize,
    /// `‖L − QTQᵀ‖²_F`.
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub status: CheckStatus,
}

fn dense_dim_check(l: &DMatrix<f64>) -> Result<usize> {
    let n = l.nrows();
    if n != l.ncols() || n == 0 || n > DENSE_CAP {
        return Err(AnalysisError::InvalidArgument(format!(
            "dense checks need a square matrix of order 1..={DENSE_CAP}, got {}x{}",
            l.nrows(),
            l.ncols()
        )));
    }
    Ok(n)
}

fn lanczos_lhs(l: &DMatrix<f64>, nu: &[f64], kappa: usize) -> Result<f64> {
    let n = l.nrows();
    let eps = 1e-10 * l.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max).max(1.0);
    let run = constrained_lanczos(l, &Projector::identity(n), nu, kappa, eps)?;
    let q = DMatrix::from_fn(n, run.q.len(), |r, c| run.q[c][r]);
    let t = run.t.to_dense();
    Ok((l - &q * t * q.transpose()).norm_squared())
}

/// Both sides of the low-rank bound for a `κ`-step run from `ν` with split `j`.
/// Eigenvalues are taken in descending order.
pub fn theorem2_check(l: &DMatrix<f64>, nu: &[f64], kappa: usize, j: usize) -> Result<BoundReport> {
    let n = dense_dim_check(l)?;
    if nu.len() != n {
        return Err(llwlc_core::Error::Dimension {
            expected: n,
            got: nu.len(),
        }
        .into());
    }
    if !(1 < j && j < n && kappa > j && kappa <= n) {
        return Err(AnalysisError::InvalidArgument(format!(
            "need 1 < j < n and j < kappa <= n (n={n}, j={j}, kappa={kappa})"
        )));
    }
    let nu_norm = nu.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu_norm == 0.0 {
        return Err(AnalysisError::InvalidArgument("zero start vector".into()));
    }
    let nu_unit = DVector::from_iterator(n, nu.iter().map(|x| x / nu_norm));
    let lhs = lanczos_lhs(l, nu, kappa)?;

    let (lam, u) = descending_eigen(l);
    let last = lam[n - 1];
    let report = |rhs: f64, status: CheckStatus| BoundReport {
        n,
        j,
        kappa,
        lhs,
        rhs,
        slack: rhs - lhs,
        status,
    };
    let scale = lam.iter().fold(1.0f64, |m, v| m.max(v.abs()));

    let mut prod = 1.0;
    for k in 0..j - 1 {
        let den = lam[k] - lam[j - 1];
        if den.abs() <= GAP_FLOOR * scale {
            return Ok(report(
                f64::NAN,
                CheckStatus::Inconclusive("repeated eigenvalue".into()),
            ));
        }
        prod *= (lam[k] - last) / den;
    }

    let mut rhs: f64 = lam[j..].iter().map(|x| x * x).sum();
    let mut captured = 0.0;
    for i in 0..j {
        let c = u.column(i).dot(&nu_unit);
        captured += c * c;
        if c.abs() <= COS_FLOOR {
            return Ok(report(
                f64::NAN,
                CheckStatus::Inconclusive(format!("cos(nu, u_{}) = 0", i + 1)),
            ));
        }
        let gap_den = lam[i + 1] - last;
        if gap_den.abs() <= GAP_FLOOR * scale {
            return Ok(report(
                f64::NAN,
                CheckStatus::Inconclusive(format!("gamma_{} undefined", i + 1)),
            ));
        }
        let gamma = (lam[i] - lam[i + 1]) / gap_den;
        let sin = (1.0 - captured).max(0.0).sqrt();
        let term = sin * prod / (c.abs() * chebyshev(kappa - (i + 1), 1.0 + 2.0 * gamma));
        rhs += lam[i] * lam[i] * term * term;
    }
    let status = if rhs - lhs >= -SLACK_TOL {
        CheckStatus::Holds
    } else {
        CheckStatus::Violated
    };
    Ok(report(rhs, status))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport {
    pub scale: f64,
    /// `λ̃ − λ` for the smallest eigenvalue.
    pub shift: f64,
    pub estimate: f64,
    pub discrepancy: f64,
    pub status: CheckStatus,
}

/// First-order estimate of the smallest-eigenvalue shift of `L + scale·E`.
pub fn theorem1_check(l: &DMatrix<f64>, e: &TridiagonalMatrix, scale: f64) -> Result<PerturbationReport> {
    let n = dense_dim_check(l)?;
    if e.dim() != n {
        return Err(llwlc_core::Error::Dimension {
            expected: n,
            got: e.dim(),
        }
        .into());
    }
    let (lam, u) = descending_eigen(l);
    let u0 = u.column(n - 1);
    let mut estimate = 0.0;
    for i in 0..n {
        estimate += e.alphas[i] * u0[i] * u0[i];
    }
    for i in 0..n - 1 {
        estimate += 2.0 * e.betas[i] * u0[i] * u0[i + 1];
    }
    estimate *= scale;

    let perturbed = l + e.to_dense() * scale;
    let (lam_p, _) = descending_eigen(&perturbed);
    let shift = lam_p[n - 1] - lam[n - 1];
    let spread = lam.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let status = if n > 1 && (lam[n - 2] - lam[n - 1]).abs() <= GAP_FLOOR * spread {
        CheckStatus::Inconclusive("smallest eigenvalue not simple".into())
    } else {
        CheckStatus::Holds
    };
    Ok(PerturbationReport {
        scale,
        shift,
        estimate,
        discrepancy: (shift - estimate).abs(),
        status,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub coarse: PerturbationReport,
    pub fine: PerturbationReport,
    /// Coarse over fine discrepancy; about 100 for a second-order remainder.
    pub ratio: f64,
    pub status: CheckStatus,
}

/// Runs the perturbation check at `scale` and `scale / 10`.
pub fn theorem1_scaling(l: &DMatrix<f64>, e: &TridiagonalMatrix, scale: f64) -> Result<ScalingReport> {
    let coarse = theorem1_check(l, e, scale)?;
    let fine = theorem1_check(l, e, scale / 10.0)?;
    let ratio = coarse.discrepancy / fine.discrepancy;
    let status = match (&coarse.status, &fine.status) {
        (CheckStatus::Inconclusive(w), _) | (_, CheckStatus::Inconclusive(w)) => CheckStatus::Inconclusive(w.clone()),
        _ if ratio >= SCALING_RANGE.0 && ratio <= SCALING_RANGE.1 => CheckStatus::Holds,
        _ => CheckStatus::Violated,
    };
    Ok(ScalingReport {
        coarse,
        fine,
        ratio,
        status,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub bound_cases: usize,
    pub perturbation_cases: usize,
    pub perturbation_scale: f64,
    /// Test hook: adds `lhs_inflation · max(rhs, 1)` to every bound lhs.
    pub lhs_inflation: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            bound_cases: 50,
            perturbation_cases: 10,
            perturbation_scale: 1e-4,
            lhs_inflation: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCase {
    pub case: usize,
    pub graph_seed: u64,
    pub report: BoundReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingCase {
    pub case: usize,
    pub graph_seed: u64,
    pub report: ScalingReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySummary {
    pub bounds: Vec<BoundCase>,
    pub scalings: Vec<ScalingCase>,
}

fn bound_case(opts: &VerifyOptions, case: usize) -> Result<BoundCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (case as u64).wrapping_mul(0xA24B_AED4_963E_E407));
    let n = rng.gen_range(16..=64);
    let p = rng.gen_range(0.1..0.4);
    let graph_seed = rng.gen();
    let g = random_connected(n, p, graph_seed)?;
    let l = laplacian(&g).to_dense();
    let j = rng.gen_range(2..=(n - 2).min(10));
    let kappa = rng.gen_range(j + 1..=n);
    let nu = start_vector(n, rng.gen());
    let mut report = theorem2_check(&l, &nu, kappa, j)?;
    if opts.lhs_inflation != 0.0 && report.rhs.is_finite() {
        report.lhs += opts.lhs_inflation * report.rhs.max(1.0);
        report.slack = report.rhs - report.lhs;
        if report.slack < -SLACK_TOL {
            report.status = CheckStatus::Violated;
        }
    }
    Ok(BoundCase {
        case,
        graph_seed,
        report,
    })
}

fn scaling_case(opts: &VerifyOptions, case: usize) -> Result<ScalingCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(!opts.seed ^ (case as u64).wrapping_mul(0x9FB2_1C65_1E98_DF25));
    let n = rng.gen_range(16..=32);
    let graph_seed = rng.gen();
    let g = random_connected(n, rng.gen_range(0.15..0.4), graph_seed)?;
    let alphas = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let betas = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let e = TridiagonalMatrix::new(alphas, betas)?;
    let report = theorem1_scaling(&laplacian(&g).to_dense(), &e, opts.perturbation_scale)?;
    Ok(ScalingCase {
        case,
        graph_seed,
        report,
    })
}

/// Runs both corpora; cases are independent and evaluated in parallel.
pub fn run_verification(opts: &VerifyOptions) -> Result<VerifySummary> {
    let bounds = (0..opts.bound_cases)
        .into_par_iter()
        .map(|c| bound_case(opts, c))
        .collect::<Result<Vec<_>>>()?;
    let scalings = (0..opts.perturbation_cases)
        .into_par_iter()
        .map(|c| scaling_case(opts, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(VerifySummary { bounds, scalings })
}

impl VerifySummary {
    pub fn violations(&self) -> usize {
        self.bounds
            .iter()
            .filter(|b| b.report.status == CheckStatus::Violated)
            .count()
            + self
                .scalings
                .iter()
                .filter(|s| s.report.status == CheckStatus::Violated)
                .count()
    }

    pub fn inconclusive(&self) -> usize {
        self.bounds
            .iter()
            .filter(|b| matches!(b.report.status, CheckStatus::Inconclusive(_)))
            .count()
            + self
                .scalings
                .iter()
                .filter(|s| matches!(s.report.status, CheckStatus::Inconclusive(_)))
                .count()
    }

    pub fn min_slack(&self) -> f64 {
        self.bounds
            .iter()
            .filter(|b| !matches!(b.report.status, CheckStatus::Inconclusive(_)))
            .map(|b| b.report.slack)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for b in &self.bounds {
            let r = &b.report;
            let _ = write!(
                out,
                "[theorem2 case={}]\ngraph_seed={}\nn={}\nj={}\nkappa={}\nlhs={:e}\nrhs={:e}\nslack={:e}\nstatus={}\n\n",
                b.case, b.graph_seed, r.n, r.j, r.kappa, r.lhs, r.rhs, r.slack, r.status
            );
        }
        for s in &self.scalings {
            let r = &s.report;
            let _ = write!(
                out,
                "[theorem1 case={}]\ngraph_seed={}\nscale={:e}\nshift={:e}\nestimate={:e}\ndiscrepancy={:e}\nfine_scale={:e}\nfine_discrepancy={:e}\nratio={:e}\nstatus={}\n\n",
                s.case,
                s.graph_seed,
                r.coarse.scale,
                r.coarse.shift,
                r.coarse.estimate,
                r.coarse.discrepancy,
                r.fine.scale,
                r.fine.discrepancy,
                r.ratio,
                r.status
            );
        }
        let _ = writeln!(
            out,
            "violations={} inconclusive={} min_slack={:e}",
            self.violations(),
            self.inconclusive(),
            self.min_slack()
        );
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,case,graph_seed,n,j,kappa,lhs,rhs,slack,ratio,status\n");
        for b in &self.bounds {
            let r = &b.report;
            let _ = writeln!(
                out,
                "theorem2,{},{},{},{},{},{:e},{:e},{:e},,{}",
                b.case, b.graph_seed, r.n, r.j, r.kappa, r.lhs, r.rhs, r.slack, r.status
            );
        }
        for s in &self.scalings {
            let _ = writeln!(
                out,
                "theorem1,{},{},,,,{:e},,,{:e},{}",
                s.case, s.graph_seed, s.report.coarse.discrepancy, s.report.ratio, s.report.status
            );
        }
        out
    }
}
