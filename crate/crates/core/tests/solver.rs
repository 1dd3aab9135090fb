mod common;

use common::{constrained_spectrum, distinct, random_connected, sorted_eigenvalues};
use llwlc_core::constraints::subgraph_vertex_deleted_column;
use llwlc_core::generators::{cycle, disjoint_union, rook4x4, shrikhande, star};
use llwlc_core::{
    assemble, build_projector, degree_sum_column, extract_enclosing_subgraph, laplacian, neumann_boundary_column,
    solve, stochastic_select, vertex_deleted_column, ConstraintColumn, ConstraintMatrix, ExtractOptions, Graph,
    SolveOptions, DEFAULT_RANK_TOL,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn exhaustive(n: usize) -> SolveOptions {
    SolveOptions {
        steps: n,
        kappa_target: n,
        ..Default::default()
    }
}

fn assert_matches_distinct(ritz: &[f64], oracle: &[f64], tol: f64) {
    let want = distinct(oracle, 1e-8);
    assert_eq!(ritz.len(), want.len(), "ritz {ritz:?}\noracle {want:?}");
    for (a, b) in ritz.iter().zip(&want) {
        assert!((a - b).abs() <= tol, "ritz {a} vs oracle {b}");
    }
}

#[test]
fn laplacian_null_multiplicity_counts_components() {
    let graphs = vec![
        cycle(6).unwrap(),
        disjoint_union(&cycle(3).unwrap(), &cycle(3).unwrap()),
        star(5),
        rook4x4(),
        shrikhande(),
        Graph::new(7, [(0, 1), (2, 3)]).unwrap(),
        random_connected(40, 0.1, 3),
    ];
    for g in graphs {
        let l = laplacian(&g);
        for i in 0..g.node_count() {
            assert_eq!(l.row(i).map(|(_, v)| v).sum::<f64>(), 0.0);
            for (j, v) in l.row(i) {
                assert_eq!(l.get(j, i), v);
            }
        }
        let zeros = sorted_eigenvalues(&l.to_dense())
            .iter()
            .filter(|v| v.abs() < 1e-9)
            .count();
        assert_eq!(zeros, g.component_count());
    }
}

#[test]
fn unconstrained_matches_dense_spectrum() {
    for seed in 0..10 {
        let g = random_connected(12 + 5 * seed as usize, 0.25, seed);
        let l = laplacian(&g);
        let basis = solve(
            &l,
            &ConstraintMatrix::empty(g.node_count()),
            &exhaustive(g.node_count()),
        )
        .unwrap();
        assert_matches_distinct(basis.effective_values(), &sorted_eigenvalues(&l.to_dense()), 1e-6);
    }
}

#[test]
fn six_cycle_neumann_matches_null_space_oracle() {
    let g = cycle(6).unwrap();
    let sub = extract_enclosing_subgraph(&g, 0, 1, ExtractOptions::default()).unwrap();
    let cols = vec![
        neumann_boundary_column(&sub).unwrap(),
        degree_sum_column(&sub, sub.one_hop()).unwrap(),
    ];
    let c = assemble(cols, sub.len(), DEFAULT_RANK_TOL).unwrap().matrix;
    let l = laplacian(sub.graph());
    let basis = solve(&l, &c, &exhaustive(sub.len())).unwrap();
    assert!(basis.diagnostics.max_constraint_violation <= 1e-8);
    assert_matches_distinct(basis.effective_values(), &constrained_spectrum(&l.to_dense(), &c), 1e-6);
}

#[test]
fn constrained_matches_oracle_on_random_corpus() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..30 {
        let n = rng.gen_range(10..40);
        let g = random_connected(n, rng.gen_range(0.1..0.4), 500 + case);
        let (l, c) = if case % 2 == 0 {
            let k = rng.gen_range(1..4);
            let picks = stochastic_select(n, k, case).unwrap();
            let cols = picks.iter().map(|&v| vertex_deleted_column(&g, v).unwrap()).collect();
            (laplacian(&g), assemble(cols, n, DEFAULT_RANK_TOL).unwrap().matrix)
        } else {
            let (a, b) = g.edges()[rng.gen_range(0..g.edge_count())];
            let sub = extract_enclosing_subgraph(&g, a, b, ExtractOptions::default()).unwrap();
            let mut cols = Vec::new();
            cols.extend(neumann_boundary_column(&sub).ok());
            cols.extend(degree_sum_column(&sub, sub.one_hop()).ok());
            cols.extend(subgraph_vertex_deleted_column(&sub, 0).ok());
            (
                laplacian(sub.graph()),
                assemble(cols, sub.len(), DEFAULT_RANK_TOL).unwrap().matrix,
            )
        };
        let m = l.n();
        let basis = solve(&l, &c, &exhaustive(m)).unwrap();
        assert!(basis.diagnostics.max_constraint_violation <= 1e-8);
        assert!(basis.diagnostics.max_orthogonality_loss <= 1e-8);
        assert_matches_distinct(basis.effective_values(), &constrained_spectrum(&l.to_dense(), &c), 1e-6);
    }
}

#[test]
fn converged_residuals_are_small() {
    let g = random_connected(30, 0.2, 8);
    let l = laplacian(&g);
    let col = vertex_deleted_column(&g, 4).unwrap();
    let c = ConstraintMatrix::new(30, vec![col]).unwrap();
    let basis = solve(&l, &c, &exhaustive(30)).unwrap();
    let norm2 = sorted_eigenvalues(&l.to_dense()).last().copied().unwrap();
    for r in &basis.diagnostics.residuals {
        assert!(*r <= 1e-6 * norm2, "residual {r}");
    }
}

#[test]
fn zero_padding_keeps_constraints() {
    let g = cycle(6).unwrap();
    let sub = extract_enclosing_subgraph(&g, 0, 1, ExtractOptions::default()).unwrap();
    let c = ConstraintMatrix::new(6, vec![neumann_boundary_column(&sub).unwrap()]).unwrap();
    let basis = solve(&laplacian(sub.graph()), &c, &SolveOptions::with_kappa(10)).unwrap();
    assert!(basis.kappa_effective <= 5);
    assert_eq!(basis.kappa(), 10);
    assert!(basis.values[basis.kappa_effective..].iter().all(|&v| v == 0.0));
}

fn arb_graph() -> impl Strategy<Value = Graph> {
    (4usize..24, 0.1f64..0.6, any::<u64>())
        .prop_map(|(n, p, seed)| llwlc_core::generators::erdos_renyi(n, p, seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projector_is_idempotent_and_in_null_space(g in arb_graph(), k in 1usize..4, seed in any::<u64>()) {
        prop_assume!(g.edge_count() > 0);
        let n = g.node_count();
        let picks = stochastic_select(n, k.min(n), seed).unwrap();
        let cols: Vec<ConstraintColumn> = picks.iter().filter_map(|&v| vertex_deleted_column(&g, v).ok()).collect();
        let Ok(asm) = assemble(cols, n, DEFAULT_RANK_TOL) else { return Ok(()); };
        let p = build_projector(&asm.matrix).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let pb = p.apply(&b);
            let ppb = p.apply(&pb);
            let drift = pb.iter().zip(&ppb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            prop_assert!(drift <= 1e-10);
            let scale = asm.matrix.columns().iter().map(|c| c.entries().iter().map(|e| e.1.abs()).sum::<f64>()).fold(1.0, f64::max);
            for x in asm.matrix.transpose_apply(&pb) {
                prop_assert!(x.abs() <= 1e-8 * scale);
            }
        }
    }

    #[test]
    fn assemble_is_idempotent_and_deterministic(g in arb_graph(), k in 1usize..6, seed in any::<u64>()) {
        let n = g.node_count();
        let picks = stochastic_select(n, k.min(n), seed).unwrap();
        let mut cols: Vec<ConstraintColumn> = picks.iter().filter_map(|&v| vertex_deleted_column(&g, v).ok()).collect();
        cols.extend(cols.first().cloned());
        let first = assemble(cols.clone(), n, DEFAULT_RANK_TOL);
        prop_assert_eq!(&first, &assemble(cols, n, DEFAULT_RANK_TOL));
        if let Ok(a) = first {
            let again = assemble(a.matrix.columns().to_vec(), n, DEFAULT_RANK_TOL).unwrap();
            prop_assert!(again.dropped.is_empty());
            prop_assert_eq!(again.matrix, a.matrix);
        }
    }

    #[test]
    fn vertex_deleted_is_degree_scan_with_hole(g in arb_graph(), v in 0usize..24) {
        let n = g.node_count();
        let v = v % n;
        let mut scan = vec![0.0; n];
        for &(a, b) in g.edges() {
            scan[a] += 1.0;
            scan[b] += 1.0;
        }
        scan[v] = 0.0;
        match vertex_deleted_column(&g, v) {
            Ok(c) => prop_assert_eq!(c.to_dense(n), scan),
            Err(_) => prop_assert!(scan.iter().all(|&x| x == 0.0)),
        }
    }

    #[test]
    fn subgraph_invariants(g in arb_graph(), a in 0usize..24, b in 0usize..24) {
        let n = g.node_count();
        let (u, v) = (a % n, b % n);
        prop_assume!(u != v);
        let sub = extract_enclosing_subgraph(&g, u, v, ExtractOptions::default()).unwrap();
        prop_assert_eq!(&sub.nodes()[..2], &[u, v]);
        prop_assert_eq!(&sub.hop_labels()[..2], &[0, 0]);
        prop_assert!(sub.hop_labels().iter().all(|&h| h <= 2));
        let s: Vec<usize> = sub.one_hop().iter().map(|&i| sub.parent_id(i)).collect();
        for &bl in sub.boundary() {
            let x = sub.parent_id(bl);
            prop_assert!(!s.contains(&x));
            prop_assert!(!g.has_edge(x, u) && !g.has_edge(x, v));
            prop_assert!(s.iter().any(|&y| g.has_edge(x, y)));
        }
        if let Ok(c) = neumann_boundary_column(&sub) {
            // each cross edge adds +1 and -1, so the column is orthogonal to 1
            prop_assert_eq!(c.entries().iter().map(|e| e.1).sum::<f64>(), 0.0);
            for &(row, val) in c.entries() {
                match sub.hop_labels()[row] {
                    1 => prop_assert!(val > 0.0),
                    2 => prop_assert!(val < 0.0),
                    _ => prop_assert!(false, "entry outside S ∪ δS"),
                }
            }
        }
    }
}
