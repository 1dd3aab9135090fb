//! Constrained spectral signatures of whole graphs.
//!
//! A signature is a multiset of Ritz-value multisets, one per configuration
//! element (an edge's enclosing subgraph, or a deleted vertex). Elements are
//! kept in canonical (sorted) order so two signatures can be compared without
//! fixing a node or edge order.

use std::cmp::Ordering;
use std::fmt::Write as _;

use llwlc_core::{
    extract_enclosing_subgraph, laplacian, neumann_constraints, solve, stochastic_select, vertex_deleted_column,
    ConstraintMatrix, ExtractOptions, Graph, SolveOptions,
};
use rayon::prelude::*;

use crate::error::{AnalysisError, Result};

/// Rounding grid for Ritz values in signatures.
pub const SIGNATURE_TOL: f64 = 1e-6;

/// Seed of the Lanczos start vector for every signature solve.
pub const SIGNATURE_SEED: u64 = 0x5EED;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignaturePolicy {
    /// Neumann boundary + degree-sum constraints on every edge's 2-hop enclosing subgraph.
    NeumannPerEdge,
    /// One solve per vertex `v` on the Laplacian of `G - v`, constrained by the
    /// vertex-deleted degree column of `v`.
    VertexDeletedAll,
    /// As above, for `k` vertices sampled with `seed`.
    VertexDeletedSample { k: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignatureElement {
    pub id: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSignature {
    pub order: usize,
    pub elements: Vec<SignatureElement>,
}

fn round_to_grid(x: f64) -> f64 {
    let r = (x / SIGNATURE_TOL).round() * SIGNATURE_TOL;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn cmp_values(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

impl SpectralSignature {
    /// Element values are rounded, sorted and zero padded to `kappa`, like the `R` of an eigenbasis.
    fn new(order: usize, kappa: usize, mut elements: Vec<SignatureElement>) -> Self {
        for e in &mut elements {
            e.values.iter_mut().for_each(|v| *v = round_to_grid(*v));
            e.values.sort_by(f64::total_cmp);
            e.values.resize(kappa.max(e.values.len()), 0.0);
        }
        elements.sort_by(|a, b| cmp_values(&a.values, &b.values).then_with(|| a.id.cmp(&b.id)));
        Self { order, elements }
    }

    /// Largest aligned difference; `∞` when the element counts differ.
    pub fn gap(&self, other: &Self) -> f64 {
        if self.order != other.order || self.elements.len() != other.elements.len() {
            return f64::INFINITY;
        }
        let mut gap: f64 = 0.0;
        for (a, b) in self.elements.iter().zip(&other.elements) {
            if a.values.len() != b.values.len() {
                return f64::INFINITY;
            }
            for (x, y) in a.values.iter().zip(&b.values) {
                gap = gap.max((x - y).abs());
            }
        }
        gap
    }

    /// One line per element: `element_id: v1 v2 ... vκ`.
    pub fn report(&self) -> String {
        let mut out = String::new();
        for e in &self.elements {
            let vals: Vec<String> = e.values.iter().map(|v| format!("{v:.6}")).collect();
            let _ = writeln!(out, "{}: {}", e.id, vals.join(" "));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    Distinguished { gap: f64 },
    Indistinguishable,
}

impl Verdict {
    /// Gaps of at least half a grid step count as a difference.
    pub fn from_gap(gap: f64) -> Self {
        if gap >= 0.5 * SIGNATURE_TOL {
            Verdict::Distinguished { gap }
        } else {
            Verdict::Indistinguishable
        }
    }

    pub fn is_distinguished(&self) -> bool {
        matches!(self, Verdict::Distinguished { .. })
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Distinguished { gap } => write!(f, "DISTINGUISHED gap={gap:.6e}"),
            Verdict::Indistinguishable => f.write_str("INDISTINGUISHABLE"),
        }
    }
}

// The Krylov space is run to exhaustion so the retained values do not depend on
// node order; only the κ smallest are kept.
fn solve_opts(dim: usize, kappa: usize) -> SolveOptions {
    SolveOptions {
        steps: dim.max(1),
        kappa_target: kappa,
        seed: SIGNATURE_SEED,
        ..Default::default()
    }
}

// A trivial null space leaves nothing to solve; that is an empty multiset.
fn values_or_empty(
    res: std::result::Result<llwlc_core::ConstrainedEigenbasis, llwlc_core::Error>,
) -> std::result::Result<Vec<f64>, llwlc_core::Error> {
    match res {
        Ok(b) => Ok(b.effective_values().to_vec()),
        Err(llwlc_core::Error::DegenerateStart { .. }) => Ok(Vec::new()),
        Err(e) => Err(e),
    }
}

/// Effective Ritz values of the Neumann-constrained solve on the enclosing subgraph of `(u, v)`.
pub fn neumann_pair_values(g: &Graph, u: usize, v: usize, kappa: usize) -> Result<Vec<f64>> {
    let element = || format!("edge {u}-{v}");
    let sub =
        extract_enclosing_subgraph(g, u, v, ExtractOptions::default()).map_err(|source| AnalysisError::Element {
            element: element(),
            source,
        })?;
    let c = neumann_constraints(&sub);
    values_or_empty(solve(&laplacian(sub.graph()), &c, &solve_opts(sub.len(), kappa))).map_err(|source| {
        AnalysisError::Element {
            element: element(),
            source,
        }
    })
}

/// Effective Ritz values for the deck element of vertex `v`.
pub fn vertex_deleted_values(g: &Graph, v: usize, kappa: usize) -> Result<Vec<f64>> {
    let element = || format!("vertex {v}");
    let n = g.node_count();
    let c = match vertex_deleted_column(g, v) {
        Ok(col) => ConstraintMatrix::new(n, vec![col])?,
        Err(_) => ConstraintMatrix::empty(n),
    };
    values_or_empty(solve(&laplacian(&g.isolate(v)), &c, &solve_opts(n, kappa))).map_err(|source| {
        AnalysisError::Element {
            element: element(),
            source,
        }
    })
}

pub fn llwlc_signature(g: &Graph, policy: SignaturePolicy, kappa: usize) -> Result<SpectralSignature> {
    if kappa == 0 {
        return Err(AnalysisError::InvalidArgument("kappa must be positive".into()));
    }
    let elements: Vec<SignatureElement> = match policy {
        SignaturePolicy::NeumannPerEdge => g
            .edges()
            .par_iter()
            .map(|&(u, v)| {
                Ok(SignatureElement {
                    id: format!("edge {u}-{v}"),
                    values: neumann_pair_values(g, u, v, kappa)?,
                })
            })
            .collect::<Result<_>>()?,
        SignaturePolicy::VertexDeletedAll | SignaturePolicy::VertexDeletedSample { .. } => {
            let vertices = match policy {
                SignaturePolicy::VertexDeletedSample { k, seed } => stochastic_select(g.node_count(), k, seed)?,
                _ => (0..g.node_count()).collect(),
            };
            vertices
                .par_iter()
                .map(|&v| {
                    Ok(SignatureElement {
                        id: format!("vertex {v}"),
                        values: vertex_deleted_values(g, v, kappa)?,
                    })
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(SpectralSignature::new(g.node_count(), kappa, elements))
}

/// Signature gap between two graphs under the same policy.
pub fn compare(g1: &Graph, g2: &Graph, policy: SignaturePolicy, kappa: usize) -> Result<Verdict> {
    let a = llwlc_signature(g1, policy, kappa)?;
    let b = llwlc_signature(g2, policy, kappa)?;
    Ok(Verdict::from_gap(a.gap(&b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use llwlc_core::generators::{cycle, disjoint_union, path};

    #[test]
    fn identical_graphs_identical_signatures() {
        let g = path(5).unwrap();
        let a = llwlc_signature(&g, SignaturePolicy::NeumannPerEdge, 4).unwrap();
        let b = llwlc_signature(&g.clone(), SignaturePolicy::NeumannPerEdge, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.gap(&b), 0.0);
    }

    #[test]
    fn six_cycle_vs_two_triangles() {
        let c6 = cycle(6).unwrap();
        let two = disjoint_union(&cycle(3).unwrap(), &cycle(3).unwrap());
        let v = compare(&c6, &two, SignaturePolicy::NeumannPerEdge, 4).unwrap();
        assert!(v.is_distinguished(), "{v}");
    }

    #[test]
    fn shape_mismatch_is_infinite() {
        let a = SpectralSignature::new(3, 2, vec![]);
        let b = SpectralSignature::new(4, 2, vec![]);
        assert_eq!(a.gap(&b), f64::INFINITY);
    }

    #[test]
    fn rounding_and_report() {
        let s = SpectralSignature::new(
            2,
            3,
            vec![SignatureElement {
                id: "edge 0-1".into(),
                values: vec![2.0000000004, -1e-15],
            }],
        );
        assert_eq!(s.elements[0].values, vec![0.0, 2.0, 0.0]);
        assert_eq!(s.report(), "edge 0-1: 0.000000 2.000000 0.000000\n");
        assert_eq!(Verdict::from_gap(0.0).to_string(), "INDISTINGUISHABLE");
        assert!(Verdict::from_gap(0.25).to_string().starts_with("DISTINGUISHED gap=2.5"));
    }

    #[test]
    fn zero_kappa_rejected() {
        assert!(llwlc_signature(&path(3).unwrap(), SignaturePolicy::VertexDeletedAll, 0).is_err());
    }
}
