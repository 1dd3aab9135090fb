//! Simple undirected graphs and the plain-text edge-list format.
//!
//! The edge-list format is line oriented:
//!
//! ```text
//! # n=4
//! 0 1
//! 1 2   # trailing comments are allowed
//! 2 3
//! ```
//!
//! The optional `# n=<count>` header fixes the node count (isolated trailing
//! nodes are otherwise invisible). Any other line starting with `#` is a
//! comment. Reversed and repeated edges collapse to one; self-loops are rejected.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// An immutable simple undirected graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    /// Sorted, each pair stored as `(min, max)`.
    edges: Vec<(usize, usize)>,
    /// Sorted neighbor lists.
    adj: Vec<Vec<usize>>,
    features: Option<DMatrix<f64>>,
}

impl Graph {
    /// Builds a graph from an edge iterator. Duplicate and reversed pairs are
    /// merged, self-loops and out-of-range endpoints are errors.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) has an endpoint outside [0, {n})"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Self {
            n,
            edges,
            adj,
            features: None,
        })
    }

    /// Graph with no edges.
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
            features: None,
        }
    }

    /// Attaches an `n × d` node feature matrix.
    pub fn with_features(mut self, features: DMatrix<f64>) -> Result<Self> {
        if features.nrows() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: features.nrows(),
            });
        }
        self.features = Some(features);
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a < self.n && self.adj[a].binary_search(&b).is_ok()
    }

    pub fn features(&self) -> Option<&DMatrix<f64>> {
        self.features.as_ref()
    }

    /// Copy of this graph with one edge removed (no-op if absent).
    pub fn without_edge(&self, a: usize, b: usize) -> Self {
        let key = (a.min(b), a.max(b));
        let mut g =
            Graph::new(self.n, self.edges.iter().copied().filter(|&e| e != key)).expect("subset of a valid edge set");
        g.features = self.features.clone();
        g
    }

    /// Copy of this graph with all edges incident to `v` removed; `v` stays as
    /// an isolated node so indices are preserved.
    pub fn isolate(&self, v: usize) -> Self {
        Graph::new(self.n, self.edges.iter().copied().filter(|&(a, b)| a != v && b != v))
            .expect("subset of a valid edge set")
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: perm.len(),
            });
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidArgument("not a permutation".into()));
            }
        }
        Graph::new(self.n, self.edges.iter().map(|&(a, b)| (perm[a], perm[b])))
    }

    /// Number of connected components (isolated nodes count).
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            stack.push(s);
            while let Some(x) = stack.pop() {
                for &y in &self.adj[x] {
                    if !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.n > 0 && self.component_count() == 1
    }

    /// Serializes to the edge-list format with an explicit `# n=` header.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# n={}\n", self.n);
        for &(a, b) in &self.edges {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }
}

/// Parses the edge-list text format described in the module docs.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut declared: Option<usize> = None;
    let mut edges = Vec::new();
    let mut max_node: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(count) = rest.trim().strip_prefix("n=") {
                let n = count.trim().parse::<usize>().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("bad node count {:?}", count.trim()),
                })?;
                declared = Some(n);
            }
            continue;
        }
        let body = line.split('#').next().unwrap_or("");
        let mut tokens = body.split_whitespace();
        let mut next = |what: &str| -> Result<usize> {
            let tok = tokens.next().ok_or_else(|| Error::Parse {
                line: line_no,
                msg: format!("missing {what} endpoint"),
            })?;
            tok.parse::<usize>().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("expected a non-negative integer, found {tok:?}"),
            })
        };
        let a = next("first")?;
        let b = next("second")?;
        if tokens.next().is_some() {
            return Err(Error::Parse {
                line: line_no,
                msg: "more than two tokens".into(),
            });
        }
        if a == b {
            return Err(Error::InvalidGraph(format!("self-loop at node {a} (line {line_no})")));
        }
        max_node = Some(max_node.map_or(a.max(b), |m: usize| m.max(a).max(b)));
        edges.push((a, b));
    }

    let inferred = max_node.map_or(0, |m| m + 1);
    let n = match declared {
        Some(n) if n < inferred => {
            return Err(Error::InvalidGraph(format!(
                "header declares n={n} but node {} appears",
                inferred - 1
            )))
        }
        Some(n) => n,
        None => inferred,
    };
    Graph::new(n, edges)
}

/// Parses a whitespace-separated numeric matrix, one row per node.
pub fn parse_features(text: &str, n: usize) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|_| Error::Parse {
                    line: idx + 1,
                    msg: format!("bad number {t:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: rows.len(),
        });
    }
    let d = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_lines() {
        let g = parse_edge_list("0 1\n1 2").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn six_cycle_from_lines() {
        let text: String = (0..6).map(|i| format!("{} {}\n", i, (i + 1) % 6)).collect();
        let g = parse_edge_list(&text).unwrap();
        assert_eq!(g.node_count(), 6);
        assert!(g.degrees().iter().all(|&d| d == 2));
    }

    #[test]
    fn malformed_token_reports_line() {
        match parse_edge_list("0 zero") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        match parse_edge_list("0 1\n\n# c\n2") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn self_loop_rejected() {
        assert!(matches!(parse_edge_list("0 1\n2 2"), Err(Error::InvalidGraph(_))));
    }

    #[test]
    fn duplicates_and_reversals_collapse() {
        let g = parse_edge_list("0 1\n1 0\n0 1\n").unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn header_count_and_comments() {
        let g = parse_edge_list("# n=5\n0 1 # edge\n# comment\n").unwrap();
        assert_eq!(g.node_count(), 5);
        assert_eq!(g.degree(4), 0);
        assert!(parse_edge_list("# n=2\n0 3").is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = parse_edge_list("# n=6\n0 1\n3 2\n").unwrap();
        assert_eq!(parse_edge_list(&g.to_edge_list()).unwrap(), g);
    }

    #[test]
    fn features_sidecar() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let x = parse_features("1 2\n3 4\n", 2).unwrap();
        let g = g.with_features(x).unwrap();
        assert_eq!(g.features().unwrap()[(1, 0)], 3.0);
        assert!(parse_features("1 2\n3\n", 2).is_err());
        assert!(parse_features("1 2\n", 2).is_err());
    }

    #[test]
    fn components() {
        let g = Graph::new(5, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(g.component_count(), 3);
        assert!(!g.is_connected());
    }
}
