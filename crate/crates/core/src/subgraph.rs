//! k-hop enclosing subgraphs around a query node pair.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtractOptions {
    pub hops: usize,
    /// Drop the query edge before the BFS and from the induced subgraph.
    pub remove_query_edge: bool,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            hops: 2,
            remove_query_edge: true,
        }
    }
}

/// Induced subgraph on all nodes within `hops` of the query pair.
///
/// Local indices are ordered `u, v`, then the one-hop set `S` by ascending
/// parent index, then the two-hop boundary `δS` likewise, then any farther
/// layers by (hop, parent index).
#[derive(Debug, Clone, PartialEq)]
pub struct EnclosingSubgraph {
    query: (usize, usize),
    nodes: Vec<usize>,
    hop: Vec<usize>,
    one_hop: Vec<usize>,
    boundary: Vec<usize>,
    local: HashMap<usize, usize>,
    graph: Graph,
    parent_degrees: Vec<usize>,
    query_edge_removed: bool,
}

pub fn extract_enclosing_subgraph(g: &Graph, u: usize, v: usize, opts: ExtractOptions) -> Result<EnclosingSubgraph> {
    let n = g.node_count();
    if u == v {
        return Err(Error::InvalidQuery {
            u,
            v,
            msg: "query nodes must differ".into(),
        });
    }
    if u >= n || v >= n {
        return Err(Error::InvalidQuery {
            u,
            v,
            msg: format!("node outside [0, {n})"),
        });
    }
    if opts.hops == 0 {
        return Err(Error::InvalidArgument("hop count must be at least 1".into()));
    }
    let skip = |a: usize, b: usize| opts.remove_query_edge && ((a, b) == (u, v) || (a, b) == (v, u));

    let mut dist: HashMap<usize, usize> = HashMap::from([(u, 0), (v, 0)]);
    let mut queue = VecDeque::from([u, v]);
    while let Some(x) = queue.pop_front() {
        let d = dist[&x];
        if d == opts.hops {
            continue;
        }
        for &y in g.neighbors(x) {
            if skip(x, y) || dist.contains_key(&y) {
                continue;
            }
            dist.insert(y, d + 1);
            queue.push_back(y);
        }
    }

    let mut rest: Vec<(usize, usize)> = dist
        .iter()
        .filter(|(&x, _)| x != u && x != v)
        .map(|(&x, &d)| (d, x))
        .collect();
    rest.sort_unstable();
    let mut nodes = vec![u, v];
    nodes.extend(rest.iter().map(|&(_, x)| x));
    let hop: Vec<usize> = nodes.iter().map(|x| dist[x]).collect();
    let local: HashMap<usize, usize> = nodes.iter().enumerate().map(|(i, &x)| (x, i)).collect();

    let mut edges = Vec::new();
    for (i, &x) in nodes.iter().enumerate() {
        for &y in g.neighbors(x) {
            if let Some(&j) = local.get(&y) {
                if i < j && !skip(x, y) {
                    edges.push((i, j));
                }
            }
        }
    }
    let graph = Graph::new(nodes.len(), edges)?;
    let one_hop = (0..nodes.len()).filter(|&i| hop[i] == 1).collect();
    let boundary = (0..nodes.len()).filter(|&i| hop[i] == 2).collect();
    let parent_degrees = nodes.iter().map(|&x| g.degree(x)).collect();

    Ok(EnclosingSubgraph {
        query: (u, v),
        nodes,
        hop,
        one_hop,
        boundary,
        local,
        graph,
        parent_degrees,
        query_edge_removed: opts.remove_query_edge && g.has_edge(u, v),
    })
}

impl EnclosingSubgraph {
    pub fn query(&self) -> (usize, usize) {
        self.query
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Parent ids in local order.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn hop_labels(&self) -> &[usize] {
        &self.hop
    }

    /// Local indices of `S`.
    pub fn one_hop(&self) -> &[usize] {
        &self.one_hop
    }

    /// Local indices of `δS`.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn parent_id(&self, local: usize) -> usize {
        self.nodes[local]
    }

    pub fn local_index(&self, parent: usize) -> Option<usize> {
        self.local.get(&parent).copied()
    }

    /// Induced graph over local indices (query edge removed when requested).
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// Degrees in the parent graph, by local index.
    pub fn parent_degrees(&self) -> &[usize] {
        &self.parent_degrees
    }

    pub fn query_edge_removed(&self) -> bool {
        self.query_edge_removed
    }

    /// `(s, b)` local index pairs of edges between `S` and `δS`.
    pub fn cross_edges(&self) -> Vec<(usize, usize)> {
        self.graph
            .edges()
            .iter()
            .filter_map(|&(a, b)| match (self.hop[a], self.hop[b]) {
                (1, 2) => Some((a, b)),
                (2, 1) => Some((b, a)),
                _ => None,
            })
            .collect()
    }
}
