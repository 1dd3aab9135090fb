//! Named graph families used by tests, the expressivity harness and the CLI.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Stochastic block model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmParams {
    pub block_sizes: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
}

impl SbmParams {
    /// Two equal blocks.
    pub fn two_block(n: usize, p_in: f64, p_out: f64) -> Self {
        Self {
            block_sizes: vec![n / 2, n - n / 2],
            p_in,
            p_out,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NamedGraph {
    Cycle(usize),
    Path(usize),
    Complete(usize),
    /// Center 0 with `k` leaves.
    Star(usize),
    Rook4x4,
    Shrikhande,
    DisjointUnion(Box<NamedGraph>, Box<NamedGraph>),
    Sbm(SbmParams, u64),
    ErdosRenyi {
        n: usize,
        p: f64,
        seed: u64,
    },
    /// The 10-node graph of the worked constraint examples, relabeled so that
    /// the query pair is (0, 1), the one-hop set is {2, 3} and the boundary is {4, 5}.
    ConstraintExample,
}

pub fn make_named_graph(name: &NamedGraph) -> Result<Graph> {
    match name {
        NamedGraph::Cycle(k) => cycle(*k),
        NamedGraph::Path(k) => path(*k),
        NamedGraph::Complete(k) => Ok(complete(*k)),
        NamedGraph::Star(k) => Ok(star(*k)),
        NamedGraph::Rook4x4 => Ok(rook4x4()),
        NamedGraph::Shrikhande => Ok(shrikhande()),
        NamedGraph::DisjointUnion(a, b) => Ok(disjoint_union(&make_named_graph(a)?, &make_named_graph(b)?)),
        NamedGraph::Sbm(params, seed) => sbm(params, *seed),
        NamedGraph::ErdosRenyi { n, p, seed } => erdos_renyi(*n, *p, *seed),
        NamedGraph::ConstraintExample => Ok(constraint_example()),
    }
}

pub fn cycle(k: usize) -> Result<Graph> {
    if k < 3 {
        return Err(Error::InvalidArgument(format!("cycle needs k >= 3, got {k}")));
    }
    Graph::new(k, (0..k).map(|i| (i, (i + 1) % k)))
}

pub fn path(k: usize) -> Result<Graph> {
    if k == 0 {
        return Err(Error::InvalidArgument("path needs k >= 1".into()));
    }
    Graph::new(k, (1..k).map(|i| (i - 1, i)))
}

pub fn complete(k: usize) -> Graph {
    Graph::new(k, (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b)))).expect("valid")
}

pub fn star(k: usize) -> Graph {
    Graph::new(k + 1, (1..=k).map(|leaf| (0, leaf))).expect("valid")
}

/// K4 □ K4: cells of a 4×4 board adjacent when they share a row or column.
pub fn rook4x4() -> Graph {
    let mut edges = Vec::new();
    for a in 0..16 {
        for b in a + 1..16 {
            if a / 4 == b / 4 || a % 4 == b % 4 {
                edges.push((a, b));
            }
        }
    }
    Graph::new(16, edges).expect("valid")
}

/// Cayley graph on Z4 × Z4 with connection set {±(1,0), ±(0,1), ±(1,1)}.
pub fn shrikhande() -> Graph {
    const GENERATORS: [(usize, usize); 6] = [(1, 0), (3, 0), (0, 1), (0, 3), (1, 1), (3, 3)];
    let mut edges = Vec::new();
    for x in 0..4 {
        for y in 0..4 {
            for (dx, dy) in GENERATORS {
                let a = 4 * x + y;
                let b = 4 * ((x + dx) % 4) + (y + dy) % 4;
                edges.push((a, b));
            }
        }
    }
    Graph::new(16, edges).expect("valid")
}

/// Nodes of `b` are shifted by `a.node_count()`.
pub fn disjoint_union(a: &Graph, b: &Graph) -> Graph {
    let off = a.node_count();
    Graph::new(
        off + b.node_count(),
        a.edges()
            .iter()
            .copied()
            .chain(b.edges().iter().map(|&(x, y)| (x + off, y + off))),
    )
    .expect("valid")
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")))
    }
}

pub fn sbm(params: &SbmParams, seed: u64) -> Result<Graph> {
    check_probability(params.p_in)?;
    check_probability(params.p_out)?;
    if params.block_sizes.is_empty() || params.block_sizes.contains(&0) {
        return Err(Error::InvalidArgument("block sizes must be positive".into()));
    }
    let block: Vec<usize> = params
        .block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| std::iter::repeat(b).take(size))
        .collect();
    let n = block.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let p = if block[a] == block[b] {
                params.p_in
            } else {
                params.p_out
            };
            if rng.gen::<f64>() < p {
                edges.push((a, b));
            }
        }
    }
    Graph::new(n, edges)
}

pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    check_probability(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen::<f64>() < p {
                edges.push((a, b));
            }
        }
    }
    Graph::new(n, edges)
}

/// First connected draw of `erdos_renyi(n, p, ·)` over seeds derived from `seed`.
pub fn random_connected(n: usize, p: f64, seed: u64) -> Result<Graph> {
    for k in 0..1000u64 {
        let g = erdos_renyi(n, p, seed.wrapping_mul(1000).wrapping_add(k))?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::InvalidArgument(format!("no connected draw for n={n}, p={p}")))
}

/// Sparse random graph with `n * avg_degree / 2` edges sampled uniformly,
/// in time linear in the edge count.
pub fn sparse_random(n: usize, avg_degree: f64, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two nodes".into()));
    }
    let target = (n as f64 * avg_degree / 2.0).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = (0..target).filter_map(|_| {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        (a != b).then_some((a, b))
    });
    Graph::new(n, edges.collect::<Vec<_>>())
}

pub fn constraint_example() -> Graph {
    // 0,1 query; 2,3 one hop; 4,5 boundary; 6..9 outside the enclosing subgraph
    Graph::new(
        10,
        [
            (0, 1),
            (0, 2),
            (1, 3),
            (2, 4),
            (3, 5),
            (4, 6),
            (6, 7),
            (7, 8),
            (8, 9),
            (5, 9),
        ],
    )
    .expect("valid")
}

impl FromStr for NamedGraph {
    type Err = Error;

    /// Accepts `cycle:6`, `path:3`, `complete:4`, `star:3`, `rook4x4`,
    /// `shrikhande`, `example`, `union:cycle:3+cycle:3`,
    /// `sbm:<n>:<p_in>:<p_out>:<seed>` and `er:<n>:<p>:<seed>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown graph name {s:?}"));
        if let Some(rest) = s.strip_prefix("union:") {
            let (a, b) = rest.split_once('+').ok_or_else(bad)?;
            return Ok(NamedGraph::DisjointUnion(Box::new(a.parse()?), Box::new(b.parse()?)));
        }
        let parts: Vec<&str> = s.split(':').collect();
        let int = |i: usize| -> Result<usize> { parts.get(i).and_then(|p| p.parse().ok()).ok_or_else(bad) };
        let real = |i: usize| -> Result<f64> { parts.get(i).and_then(|p| p.parse().ok()).ok_or_else(bad) };
        let seed = |i: usize| -> Result<u64> { parts.get(i).and_then(|p| p.parse().ok()).ok_or_else(bad) };
        Ok(match parts[0] {
            "cycle" => NamedGraph::Cycle(int(1)?),
            "path" => NamedGraph::Path(int(1)?),
            "complete" => NamedGraph::Complete(int(1)?),
            "star" => NamedGraph::Star(int(1)?),
            "rook4x4" => NamedGraph::Rook4x4,
            "shrikhande" => NamedGraph::Shrikhande,
            "example" => NamedGraph::ConstraintExample,
            "sbm" => NamedGraph::Sbm(SbmParams::two_block(int(1)?, real(2)?, real(3)?), seed(4)?),
            "er" => NamedGraph::ErdosRenyi {
                n: int(1)?,
                p: real(2)?,
                seed: seed(3)?,
            },
            _ => return Err(bad()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn degree_scan(g: &Graph) -> Vec<usize> {
        let mut deg = vec![0; g.node_count()];
        for &(a, b) in g.edges() {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    #[test]
    fn rook_and_shrikhande_are_6_regular_on_48_edges() {
        for g in [rook4x4(), shrikhande()] {
            assert_eq!(g.node_count(), 16);
            assert_eq!(g.edge_count(), 48);
            assert!(degree_scan(&g).iter().all(|&d| d == 6));
        }
    }

    /// Both are srg(16, 6, 2, 2): adjacent pairs share 2 neighbors, non-adjacent pairs share 2.
    #[test]
    fn strongly_regular_parameters_match() {
        for g in [rook4x4(), shrikhande()] {
            for a in 0..16 {
                for b in a + 1..16 {
                    let common = g.neighbors(a).iter().filter(|x| g.has_edge(b, **x)).count();
                    assert_eq!(common, 2, "pair ({a},{b})");
                }
            }
        }
    }

    #[test]
    fn six_cycle_vs_two_triangles() {
        let c6 = cycle(6).unwrap();
        let two = disjoint_union(&cycle(3).unwrap(), &cycle(3).unwrap());
        for g in [&c6, &two] {
            assert_eq!(g.node_count(), 6);
            assert_eq!(g.edge_count(), 6);
            assert!(g.degrees().iter().all(|&d| d == 2));
        }
        assert!(c6.is_connected());
        assert_eq!(two.component_count(), 2);
    }

    #[test]
    fn names_parse() {
        let g = make_named_graph(&"union:cycle:3+cycle:3".parse().unwrap()).unwrap();
        assert_eq!(g.node_count(), 6);
        assert_eq!(make_named_graph(&"star:3".parse().unwrap()).unwrap().degree(0), 3);
        assert!("hypercube".parse::<NamedGraph>().is_err());
        assert!(erdos_renyi(5, 1.5, 0).is_err());
    }

    #[test]
    fn sbm_is_deterministic() {
        let p = SbmParams::two_block(40, 0.3, 0.05);
        assert_eq!(sbm(&p, 7).unwrap(), sbm(&p, 7).unwrap());
        assert_ne!(sbm(&p, 7).unwrap(), sbm(&p, 8).unwrap());
    }
}
