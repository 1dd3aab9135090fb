//! Constraint matrices `C` whose columns encode homogeneous conditions `Cᵀ f = 0`.
//!
//! Three column families are supported:
//!
//! * **Neumann boundary**: for every edge between the one-hop set `S` and the
//!   boundary `δS` of an enclosing subgraph, `+1` on the `S` end and `-1` on the
//!   boundary end, so the column sums the differences `f(y) - f(x)` across the
//!   vertex boundary.
//! * **Degree sum**: parent-graph degrees on a node set, giving a degree-weighted
//!   zero-mean condition.
//! * **Vertex deleted**: parent-graph degrees on every node except the deleted
//!   ones, which carry zero.
//!
//! The text dump written by [`ConstraintMatrix::to_dump`] is
//!
//! ```text
//! <n> <l>
//! <col> <row> <value>      one line per nonzero
//! # col <i> <provenance>   one line per column
//! ```

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::projector::IncrementalQr;
use crate::subgraph::EnclosingSubgraph;

/// Relative tolerance on the `R` diagonal used to drop dependent columns.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    NeumannBoundary,
    DegreeSum,
    /// Nodes zeroed out of the degree column.
    VertexDeleted(Vec<usize>),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::NeumannBoundary => f.write_str("neumann"),
            Provenance::DegreeSum => f.write_str("degree_sum"),
            Provenance::VertexDeleted(vs) => {
                let ids: Vec<String> = vs.iter().map(usize::to_string).collect();
                write!(f, "vertex_deleted {}", ids.join(","))
            }
        }
    }
}

impl std::str::FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "neumann" => Ok(Provenance::NeumannBoundary),
            "degree_sum" => Ok(Provenance::DegreeSum),
            _ => {
                let ids = s
                    .strip_prefix("vertex_deleted")
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown provenance {s:?}")))?;
                let ids = ids
                    .trim()
                    .split(',')
                    .filter(|t| !t.is_empty())
                    .map(|t| {
                        t.parse::<usize>()
                            .map_err(|_| Error::InvalidArgument(format!("bad node id {t:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Provenance::VertexDeleted(ids))
            }
        }
    }
}

/// One sparse column of `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintColumn {
    /// Sorted by row, nonzero values only.
    entries: Vec<(usize, f64)>,
    provenance: Provenance,
}

impl ConstraintColumn {
    pub fn new(entries: BTreeMap<usize, f64>, provenance: Provenance) -> Result<Self> {
        let entries: Vec<_> = entries.into_iter().filter(|&(_, v)| v != 0.0).collect();
        if entries.is_empty() {
            return Err(Error::EmptyConstraint(format!(
                "{provenance} column has no nonzero entry"
            )));
        }
        Ok(Self { entries, provenance })
    }

    pub fn from_dense(values: &[f64], provenance: Provenance) -> Result<Self> {
        Self::new(values.iter().copied().enumerate().collect(), provenance)
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn get(&self, row: usize) -> f64 {
        self.entries
            .binary_search_by_key(&row, |&(r, _)| r)
            .map_or(0.0, |k| self.entries[k].1)
    }

    pub fn max_row(&self) -> usize {
        self.entries.last().map_or(0, |&(r, _)| r)
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for &(r, v) in &self.entries {
            out[r] = v;
        }
        out
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.entries.iter().map(|&(r, v)| v * x[r]).sum()
    }

    /// Re-indexes rows through `map` (e.g. subgraph local index to parent id).
    pub fn reindexed(&self, map: impl Fn(usize) -> usize) -> Self {
        let mut entries: Vec<_> = self.entries.iter().map(|&(r, v)| (map(r), v)).collect();
        entries.sort_by_key(|&(r, _)| r);
        Self {
            entries,
            provenance: self.provenance.clone(),
        }
    }
}

/// Tall matrix `C ∈ R^{n×l}` stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMatrix {
    n: usize,
    columns: Vec<ConstraintColumn>,
}

impl ConstraintMatrix {
    pub fn new(n: usize, columns: Vec<ConstraintColumn>) -> Result<Self> {
        if columns.len() > n {
            return Err(Error::InvalidArgument(format!(
                "{} constraints exceed dimension {n}",
                columns.len()
            )));
        }
        if let Some(c) = columns.iter().find(|c| c.max_row() >= n) {
            return Err(Error::Dimension {
                expected: n,
                got: c.max_row() + 1,
            });
        }
        Ok(Self { n, columns })
    }

    pub fn empty(n: usize) -> Self {
        Self { n, columns: Vec::new() }
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn columns(&self) -> &[ConstraintColumn] {
        &self.columns
    }

    /// `Cᵀ x`.
    pub fn transpose_apply(&self, x: &[f64]) -> Vec<f64> {
        self.columns.iter().map(|c| c.dot(x)).collect()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.columns.len());
        for (j, c) in self.columns.iter().enumerate() {
            for &(r, v) in c.entries() {
                m[(r, j)] = v;
            }
        }
        m
    }

    pub fn to_dump(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.columns.len());
        for (j, c) in self.columns.iter().enumerate() {
            for &(r, v) in c.entries() {
                let _ = writeln!(out, "{j} {r} {v:e}");
            }
        }
        for (j, c) in self.columns.iter().enumerate() {
            let _ = writeln!(out, "# col {j} {}", c.provenance());
        }
        out
    }

    pub fn parse_dump(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let parse_err = |line: usize, msg: &str| Error::Parse {
            line,
            msg: msg.to_string(),
        };
        let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(hl, "bad header")))
            .collect::<Result<_>>()?;
        let [n, l] = dims[..] else {
            return Err(parse_err(hl, "header must be \"n l\""));
        };
        let mut entries = vec![BTreeMap::new(); l];
        let mut provenance = vec![None; l];
        for (no, line) in lines {
            if let Some(rest) = line.strip_prefix("# col") {
                let rest = rest.trim();
                let (idx, prov) = rest.split_once(' ').unwrap_or((rest, ""));
                let idx: usize = idx.parse().map_err(|_| parse_err(no, "bad column id"))?;
                *provenance
                    .get_mut(idx)
                    .ok_or_else(|| parse_err(no, "column id out of range"))? = Some(prov.parse()?);
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let [c, r, v] = toks[..] else {
                return Err(parse_err(no, "expected \"col row value\""));
            };
            let c: usize = c.parse().map_err(|_| parse_err(no, "bad column"))?;
            let r: usize = r.parse().map_err(|_| parse_err(no, "bad row"))?;
            let v: f64 = v.parse().map_err(|_| parse_err(no, "bad value"))?;
            entries
                .get_mut(c)
                .ok_or_else(|| parse_err(no, "column out of range"))?
                .insert(r, v);
        }
        let columns = entries
            .into_iter()
            .zip(provenance)
            .map(|(e, p)| ConstraintColumn::new(e, p.unwrap_or(Provenance::DegreeSum)))
            .collect::<Result<Vec<_>>>()?;
        ConstraintMatrix::new(n, columns)
    }
}

/// Signed cross-edge incidence counts between `S` and `δS`, over local indices.
pub fn neumann_boundary_column(sub: &EnclosingSubgraph) -> Result<ConstraintColumn> {
    let mut entries = BTreeMap::new();
    for (s, b) in sub.cross_edges() {
        *entries.entry(s).or_insert(0.0) += 1.0;
        *entries.entry(b).or_insert(0.0) -= 1.0;
    }
    if entries.is_empty() {
        return Err(Error::EmptyConstraint(format!(
            "no edges between the one-hop set and the boundary for query {:?}",
            sub.query()
        )));
    }
    ConstraintColumn::new(entries, Provenance::NeumannBoundary)
}

/// Parent-graph degrees on `node_set` (local indices).
pub fn degree_sum_column(sub: &EnclosingSubgraph, node_set: &[usize]) -> Result<ConstraintColumn> {
    if node_set.is_empty() {
        return Err(Error::EmptyConstraint("empty node set".into()));
    }
    let degrees = sub.parent_degrees();
    let mut entries = BTreeMap::new();
    for &x in node_set {
        let d = *degrees.get(x).ok_or(Error::Dimension {
            expected: degrees.len(),
            got: x + 1,
        })?;
        entries.insert(x, d as f64);
    }
    ConstraintColumn::new(entries, Provenance::DegreeSum)
}

fn degrees_without(degrees: &[usize], deleted: &[usize]) -> Result<ConstraintColumn> {
    if let Some(&bad) = deleted.iter().find(|&&v| v >= degrees.len()) {
        return Err(Error::InvalidArgument(format!(
            "deleted node {bad} outside [0, {})",
            degrees.len()
        )));
    }
    let entries = degrees
        .iter()
        .enumerate()
        .filter(|(u, _)| !deleted.contains(u))
        .map(|(u, &d)| (u, d as f64))
        .collect();
    let mut sorted = deleted.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    ConstraintColumn::new(entries, Provenance::VertexDeleted(sorted))
}

/// Degree vector of `g` with position `v` zeroed.
pub fn vertex_deleted_column(g: &Graph, v: usize) -> Result<ConstraintColumn> {
    degrees_without(&g.degrees(), &[v])
}

/// Degree vector of `g` with every node of `deleted` zeroed.
pub fn deleted_set_column(g: &Graph, deleted: &[usize]) -> Result<ConstraintColumn> {
    degrees_without(&g.degrees(), deleted)
}

/// Vertex-deleted column over a subgraph's local indices with parent degrees.
pub fn subgraph_vertex_deleted_column(sub: &EnclosingSubgraph, v_local: usize) -> Result<ConstraintColumn> {
    degrees_without(sub.parent_degrees(), &[v_local])
}

/// `k` distinct vertices of `[0, n)`, uniform without replacement, fixed by `seed`.
pub fn stochastic_select(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("sample size {k} must lie in [1, {n}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, n, k).into_vec())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assembled {
    pub matrix: ConstraintMatrix,
    /// Input positions of the dropped columns.
    pub dropped: Vec<usize>,
}

/// Keeps columns in order, dropping any whose new `R` diagonal falls below
/// `rank_tol` times the largest one so far.
pub fn assemble(columns: Vec<ConstraintColumn>, n: usize, rank_tol: f64) -> Result<Assembled> {
    if let Some(c) = columns.iter().find(|c| c.max_row() >= n) {
        return Err(Error::Dimension {
            expected: n,
            got: c.max_row() + 1,
        });
    }
    let mut qr = IncrementalQr::new(n);
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (i, col) in columns.into_iter().enumerate() {
        if qr.try_push(&col.to_dense(n), rank_tol).is_some() {
            kept.push(col);
        } else {
            dropped.push(i);
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyConstraintMatrix { dropped: dropped.len() });
    }
    Ok(Assembled {
        matrix: ConstraintMatrix::new(n, kept)?,
        dropped,
    })
}

fn assemble_or_empty(cols: Vec<ConstraintColumn>, n: usize) -> ConstraintMatrix {
    assemble(cols, n, DEFAULT_RANK_TOL)
        .map(|a| a.matrix)
        .unwrap_or_else(|_| ConstraintMatrix::empty(n))
}

/// Neumann boundary and degree-sum (over `S`) columns of an enclosing
/// subgraph. Empty or dependent columns are skipped, so `C` may be empty.
pub fn neumann_constraints(sub: &EnclosingSubgraph) -> ConstraintMatrix {
    let mut cols = Vec::with_capacity(2);
    cols.extend(neumann_boundary_column(sub).ok());
    cols.extend(degree_sum_column(sub, sub.one_hop()).ok());
    assemble_or_empty(cols, sub.len())
}

/// `k` subgraph vertex-deleted columns for vertices drawn with `seed`
/// (clamped to the subgraph size); empty or dependent columns are skipped.
pub fn vertex_deleted_constraints(sub: &EnclosingSubgraph, k: usize, seed: u64) -> Result<ConstraintMatrix> {
    let n = sub.len();
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let picks = stochastic_select(n, k.min(n), seed)?;
    let cols = picks
        .iter()
        .filter_map(|&v| subgraph_vertex_deleted_column(sub, v).ok())
        .collect();
    Ok(assemble_or_empty(cols, n))
}
