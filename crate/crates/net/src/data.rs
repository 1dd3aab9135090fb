//! Link instances: enclosing subgraph, constrained eigenbasis and node features.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use llwlc_core::{
    extract_enclosing_subgraph, laplacian, neumann_constraints, solve, vertex_deleted_constraints,
    ConstrainedEigenbasis, ConstraintMatrix, Diagnostics, EnclosingSubgraph, Error as CoreError, ExtractOptions, Graph,
    SolveOptions,
};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{NetError, Result};
use crate::model::INPUT_DIM;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintPolicy {
    None,
    Neumann,
    /// `k` vertex-deleted columns, redrawn every epoch during training.
    VertexDeleted {
        k: usize,
    },
}

impl fmt::Display for ConstraintPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintPolicy::None => f.write_str("none"),
            ConstraintPolicy::Neumann => f.write_str("neumann"),
            ConstraintPolicy::VertexDeleted { k } => write!(f, "vdel:{k}"),
        }
    }
}

impl FromStr for ConstraintPolicy {
    type Err = NetError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "neumann" => Ok(Self::Neumann),
            _ => s
                .strip_prefix("vdel:")
                .and_then(|k| k.parse().ok())
                .filter(|&k| k > 0)
                .map(|k| Self::VertexDeleted { k })
                .ok_or_else(|| NetError::InvalidArgument(format!("unknown policy {s:?}"))),
        }
    }
}

impl ConstraintPolicy {
    pub fn is_stochastic(&self) -> bool {
        matches!(self, ConstraintPolicy::VertexDeleted { .. })
    }
}

/// Per node: query indicator, hop one-hot (0, 1, 2+), `ln(1 + degree)` in the subgraph.
pub fn node_features(sub: &EnclosingSubgraph) -> DMatrix<f64> {
    let g = sub.graph();
    DMatrix::from_fn(sub.len(), INPUT_DIM, |i, c| {
        let hop = sub.hop_labels()[i];
        match c {
            0 => f64::from(u8::from(i < 2)),
            1..=3 => f64::from(u8::from(hop.min(2) == c - 1)),
            _ => (g.degree(i) as f64).ln_1p(),
        }
    })
}

pub fn instance_constraints(sub: &EnclosingSubgraph, policy: ConstraintPolicy, seed: u64) -> Result<ConstraintMatrix> {
    Ok(match policy {
        ConstraintPolicy::None => ConstraintMatrix::empty(sub.len()),
        ConstraintPolicy::Neumann => neumann_constraints(sub),
        ConstraintPolicy::VertexDeleted { k } => vertex_deleted_constraints(sub, k, seed)?,
    })
}

fn zero_basis(n: usize, kappa: usize) -> ConstrainedEigenbasis {
    ConstrainedEigenbasis {
        vectors: DMatrix::zeros(n, kappa),
        values: vec![0.0; kappa],
        kappa_effective: 0,
        diagnostics: Diagnostics::default(),
    }
}

/// Constrained eigenbasis of the subgraph Laplacian. A trivial null space
/// yields an all-zero basis, which the network treats as "no spectrum".
pub fn instance_basis(
    sub: &EnclosingSubgraph,
    c: &ConstraintMatrix,
    kappa: usize,
    seed: u64,
) -> Result<ConstrainedEigenbasis> {
    let opts = SolveOptions {
        steps: kappa,
        kappa_target: kappa,
        seed,
        ..Default::default()
    };
    match solve(&laplacian(sub.graph()), c, &opts) {
        Ok(b) => Ok(b),
        Err(CoreError::DegenerateStart { .. }) => Ok(zero_basis(sub.len(), kappa)),
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Clone)]
pub struct LinkInstance {
    pub query: (usize, usize),
    pub sub: EnclosingSubgraph,
    pub basis: ConstrainedEigenbasis,
    pub x0: DMatrix<f64>,
    pub label: f64,
}

impl LinkInstance {
    pub fn build(
        g: &Graph,
        u: usize,
        v: usize,
        label: f64,
        policy: ConstraintPolicy,
        kappa: usize,
        seed: u64,
    ) -> Result<Self> {
        let sub = extract_enclosing_subgraph(g, u, v, ExtractOptions::default())?;
        let c = instance_constraints(&sub, policy, seed)?;
        let basis = instance_basis(&sub, &c, kappa, seed)?;
        let x0 = node_features(&sub);
        Ok(Self {
            query: (u, v),
            sub,
            basis,
            x0,
            label,
        })
    }

    /// Recomputes the eigenbasis with freshly drawn constraints.
    pub fn resample(&mut self, policy: ConstraintPolicy, kappa: usize, seed: u64) -> Result<()> {
        let c = instance_constraints(&self.sub, policy, seed)?;
        self.basis = instance_basis(&self.sub, &c, kappa, seed)?;
        Ok(())
    }
}

/// Labeled query pairs: held-out edges are removed from `observed`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSplit {
    pub observed: Graph,
    pub train: Vec<(usize, usize, f64)>,
    pub test: Vec<(usize, usize, f64)>,
}

pub const MIN_TEST_POSITIVES: usize = 2;
pub const MIN_TRAIN_POSITIVES: usize = 4;

/// Holds out `round(test_frac · |E|)` edges as test positives and pairs every
/// positive with a uniform non-edge of `g` as a negative.
pub fn split_links(g: &Graph, test_frac: f64, seed: u64) -> Result<LinkSplit> {
    if !(test_frac > 0.0 && test_frac < 1.0) {
        return Err(NetError::InvalidArgument(format!(
            "split {test_frac} must lie in (0, 1)"
        )));
    }
    let m = g.edge_count();
    let n_test = (test_frac * m as f64).round() as usize;
    let n_train = m.saturating_sub(n_test);
    if n_test < MIN_TEST_POSITIVES || n_train < MIN_TRAIN_POSITIVES {
        return Err(NetError::InvalidArgument(format!(
            "graph with {m} edges is too small for split {test_frac}: {n_test} test and {n_train} training positives \
             (need at least {MIN_TEST_POSITIVES} and {MIN_TRAIN_POSITIVES})"
        )));
    }
    let n = g.node_count();
    let non_edges = n * (n - 1) / 2 - m;
    if non_edges < m {
        return Err(NetError::InvalidArgument(format!(
            "only {non_edges} non-edges for {m} negatives"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = g.edges().to_vec();
    edges.shuffle(&mut rng);
    let negatives = sample_non_edges(g, m, &mut rng);

    let (test_pos, train_pos) = edges.split_at(n_test);
    let (test_neg, train_neg) = negatives.split_at(n_test);
    let observed = Graph::new(n, train_pos.iter().copied())?;
    let label = |pairs: &[(usize, usize)], y: f64| pairs.iter().map(move |&(a, b)| (a, b, y)).collect::<Vec<_>>();
    let mut train = label(train_pos, 1.0);
    train.extend(label(train_neg, 0.0));
    let mut test = label(test_pos, 1.0);
    test.extend(label(test_neg, 0.0));
    Ok(LinkSplit { observed, train, test })
}

fn sample_non_edges(g: &Graph, count: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let n = g.node_count();
    let total = n * (n - 1) / 2 - g.edge_count();
    if 2 * count > total {
        let mut all: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .filter(|&(a, b)| !g.has_edge(a, b))
            .collect();
        all.shuffle(rng);
        all.truncate(count);
        return all;
    }
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        let pair = (a.min(b), a.max(b));
        if a != b && !g.has_edge(a, b) && seen.insert(pair) {
            out.push(pair);
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct LinkDataset {
    pub train: Vec<LinkInstance>,
    pub test: Vec<LinkInstance>,
}

/// Seed of the constraint draw and start vector for instance `idx`.
pub fn instance_seed(seed: u64, epoch: u64, idx: usize) -> u64 {
    seed ^ epoch.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (idx as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

fn build_all(
    g: &Graph,
    pairs: &[(usize, usize, f64)],
    policy: ConstraintPolicy,
    kappa: usize,
    seed: u64,
) -> Result<Vec<LinkInstance>> {
    pairs
        .par_iter()
        .enumerate()
        .map(|(i, &(u, v, y))| LinkInstance::build(g, u, v, y, policy, kappa, instance_seed(seed, 0, i)))
        .collect()
}

pub fn build_dataset(split: &LinkSplit, policy: ConstraintPolicy, kappa: usize, seed: u64) -> Result<LinkDataset> {
    if kappa == 0 {
        return Err(NetError::InvalidArgument("kappa must be positive".into()));
    }
    Ok(LinkDataset {
        train: build_all(&split.observed, &split.train, policy, kappa, seed)?,
        test: build_all(&split.observed, &split.test, policy, kappa, !seed)?,
    })
}

/// `deg(u) · deg(v)` in the observed graph.
pub fn degree_product_scores(observed: &Graph, pairs: &[(usize, usize, f64)]) -> Vec<f64> {
    pairs
        .iter()
        .map(|&(u, v, _)| (observed.degree(u) * observed.degree(v)) as f64)
        .collect()
}
