//! Constrained spectral graph primitives.
//!
//! * [`graph`], [`generators`]: simple undirected graphs, edge-list parsing and named families.
//! * [`laplacian`]: sparse combinatorial Laplacian `L = D - A`.
//! * [`subgraph`]: k-hop enclosing subgraphs around a query pair.
//! * [`constraints`]: Neumann boundary, degree-sum and vertex-deleted constraint columns.
//! * [`projector`], [`lanczos`], [`tridiag`]: Lanczos iteration in the null space of `Cᵀ`.

pub mod constraints;
pub mod error;
pub mod generators;
pub mod graph;
pub mod lanczos;
pub mod laplacian;
pub mod projector;
pub mod subgraph;
pub mod tridiag;

pub use constraints::{
    assemble, degree_sum_column, deleted_set_column, neumann_boundary_column, neumann_constraints, stochastic_select,
    vertex_deleted_column, vertex_deleted_constraints, Assembled, ConstraintColumn, ConstraintMatrix, Provenance,
    DEFAULT_RANK_TOL,
};
pub use error::{Error, Result};
pub use generators::{make_named_graph, NamedGraph, SbmParams};
pub use graph::{parse_edge_list, parse_features, Graph};
pub use lanczos::{
    constrained_lanczos, make_eigenbasis, solve, ConstrainedEigenbasis, Diagnostics, LowRankOperator, SolveOptions,
};
pub use laplacian::{laplacian, Laplacian, SymmetricOperator};
pub use projector::{build_projector, Projector};
pub use subgraph::{extract_enclosing_subgraph, EnclosingSubgraph, ExtractOptions};
pub use tridiag::{tridiagonal_evd, TridiagonalMatrix};
