use llwlc_analysis::dense::{constrained_spectrum, distinct};
use llwlc_analysis::signature::vertex_deleted_values;
use llwlc_analysis::{
    c6_pair_orbits, compare, llwlc_signature, orbit_pair_experiment, wl1_distinguish, wl1_refine, SignaturePolicy,
    Verdict,
};
use llwlc_core::generators::{cycle, disjoint_union, erdos_renyi, random_connected, rook4x4, shrikhande};
use llwlc_core::{
    extract_enclosing_subgraph, laplacian, neumann_constraints, vertex_deleted_column, ConstraintMatrix,
    ExtractOptions, Graph,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn oracle_values(l: &nalgebra::DMatrix<f64>, c: &ConstraintMatrix, kappa: usize) -> Vec<f64> {
    let mut d = distinct(&constrained_spectrum(l, c), 1e-8);
    d.truncate(kappa);
    d.resize(kappa, 0.0);
    d
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len(), "{a:?} vs {b:?}");
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
    }
}

#[test]
fn six_cycle_witness() {
    let c6 = cycle(6).unwrap();
    let two = disjoint_union(&cycle(3).unwrap(), &cycle(3).unwrap());
    assert!(!wl1_distinguish(&c6, &two));
    let v = compare(&c6, &two, SignaturePolicy::NeumannPerEdge, 4).unwrap();
    assert!(matches!(v, Verdict::Distinguished { gap } if gap > 1e-6), "{v}");
}

#[test]
fn neumann_elements_match_oracle() {
    for g in [
        cycle(6).unwrap(),
        disjoint_union(&cycle(3).unwrap(), &cycle(3).unwrap()),
    ] {
        let sig = llwlc_signature(&g, SignaturePolicy::NeumannPerEdge, 4).unwrap();
        let mut want: Vec<Vec<f64>> = g
            .edges()
            .iter()
            .map(|&(u, v)| {
                let sub = extract_enclosing_subgraph(&g, u, v, ExtractOptions::default()).unwrap();
                let c = neumann_constraints(&sub);
                oracle_values(&laplacian(sub.graph()).to_dense(), &c, 4)
            })
            .collect();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (e, w) in sig.elements.iter().zip(&want) {
            assert_close(&e.values, w, 1e-6);
        }
    }
}

#[test]
fn rook_shrikhande_witness() {
    let (rook, shr) = (rook4x4(), shrikhande());
    assert!(!wl1_distinguish(&rook, &shr));
    let v = compare(&rook, &shr, SignaturePolicy::VertexDeletedAll, 8).unwrap();
    assert!(matches!(v, Verdict::Distinguished { gap } if gap > 1e-6), "{v}");

    for g in [&rook, &shr] {
        let sig = llwlc_signature(g, SignaturePolicy::VertexDeletedAll, 8).unwrap();
        let c = ConstraintMatrix::new(16, vec![vertex_deleted_column(g, 0).unwrap()]).unwrap();
        let want = oracle_values(&laplacian(&g.isolate(0)).to_dense(), &c, 8);
        // vertex-transitive: every deck element has the same spectrum
        for e in &sig.elements {
            assert_close(&e.values, &want, 1e-6);
        }
    }
}

#[test]
fn graph_against_itself() {
    let g = random_connected(12, 0.3, 1).unwrap();
    for policy in [SignaturePolicy::NeumannPerEdge, SignaturePolicy::VertexDeletedAll] {
        assert_eq!(compare(&g, &g, policy, 6).unwrap(), Verdict::Indistinguishable);
    }
}

#[test]
fn sampled_deck_is_deterministic() {
    let g = random_connected(20, 0.2, 3).unwrap();
    let p = SignaturePolicy::VertexDeletedSample { k: 5, seed: 7 };
    let a = llwlc_signature(&g, p, 6).unwrap();
    assert_eq!(a.elements.len(), 5);
    assert_eq!(a, llwlc_signature(&g, p, 6).unwrap());
}

#[test]
fn c6_orbits() {
    let r = orbit_pair_experiment(&cycle(6).unwrap(), &c6_pair_orbits(), None).unwrap();
    assert!(r.max_within <= 1e-10, "{}", r.to_text());
    assert!(r.min_between > 1e-6, "{}", r.to_text());
}

#[test]
fn errors_name_the_element() {
    let err = vertex_deleted_values(&Graph::empty(0), 0, 3).unwrap_err();
    assert!(err.to_string().starts_with("vertex 0:"), "{err}");
}

fn permuted(g: &Graph, rng: &mut ChaCha8Rng) -> Graph {
    let mut perm: Vec<usize> = (0..g.node_count()).collect();
    perm.shuffle(rng);
    g.permute(&perm).unwrap()
}

#[test]
fn signatures_invariant_under_relabeling() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let graphs = [
        random_connected(10, 0.35, 5).unwrap(),
        random_connected(14, 0.25, 6).unwrap(),
        cycle(7).unwrap(),
    ];
    for g in &graphs {
        for policy in [SignaturePolicy::NeumannPerEdge, SignaturePolicy::VertexDeletedAll] {
            let base = llwlc_signature(g, policy, 5).unwrap();
            for _ in 0..50 {
                let h = permuted(g, &mut rng);
                let sig = llwlc_signature(&h, policy, 5).unwrap();
                assert_eq!(base.gap(&sig), 0.0, "{policy:?}");
            }
        }
    }
}

#[test]
fn wl_distinguishable_implies_signature_distinguishable() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    for _ in 0..200 {
        let n = rng.gen_range(4..=20);
        let p = rng.gen_range(0.15..0.5);
        let a = erdos_renyi(n, p, rng.gen()).unwrap();
        // same order and size half the time so the comparison is not decided by counts
        let b = if rng.gen_bool(0.5) {
            let mut h = erdos_renyi(n, p, rng.gen()).unwrap();
            while h.edge_count() != a.edge_count() {
                h = erdos_renyi(n, p, rng.gen()).unwrap();
            }
            h
        } else {
            erdos_renyi(n, p, rng.gen()).unwrap()
        };
        if wl1_distinguish(&a, &b) {
            checked += 1;
            let v = compare(&a, &b, SignaturePolicy::NeumannPerEdge, 10).unwrap();
            assert!(v.is_distinguished(), "n={n} {a:?} {b:?}");
        }
    }
    assert!(checked > 100);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn refinement_is_stable_and_canonical(n in 1usize..20, p in 0.0f64..0.6, seed in any::<u64>(), pseed in any::<u64>()) {
        let g = erdos_renyi(n, p, seed).unwrap();
        let part = wl1_refine(&g);
        let h = permuted(&g, &mut ChaCha8Rng::seed_from_u64(pseed));
        let other = wl1_refine(&h);
        prop_assert_eq!(part.histogram().len(), other.histogram().len());
        let mut a = part.histogram();
        let mut b = other.histogram();
        a.sort_unstable();
        b.sort_unstable();
        prop_assert_eq!(a, b);
        prop_assert!(!wl1_distinguish(&g, &h));
    }
}
