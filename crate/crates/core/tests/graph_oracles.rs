use ddeg::oracles::{self, HomKind};
use ddeg::{Error, Graph, VertexSet};
use proptest::prelude::*;

fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n, 0.0f64..=1.0, any::<u64>()).prop_map(|(n, p, seed)| Graph::gnp(n, p, seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn complement_keeps_diversity_off_the_pair(g in arb_graph(64), a in any::<usize>(), b in any::<usize>()) {
        let n = g.n();
        prop_assume!(n >= 2);
        let (u, v) = (a % n, b % n);
        prop_assume!(u != v);
        let h = g.complement();
        let mut rest = g.vertices();
        rest.remove(u);
        rest.remove(v);
        prop_assert_eq!(g.diversity(u, v, &rest).unwrap(), h.diversity(u, v, &rest).unwrap());
        // the u and v coordinates both flip with the edge uv
        let full = g.div(u, v) as i64 - h.div(u, v) as i64;
        prop_assert_eq!(full, if g.has_edge(u, v) { 2 } else { -2 });
    }

    #[test]
    fn diversity_is_a_metric(g in arb_graph(48), a in any::<usize>(), b in any::<usize>(), c in any::<usize>(), mask in any::<u64>()) {
        let n = g.n();
        let (x, y, z) = (a % n, b % n, c % n);
        let s = VertexSet::from_vertices(n, (0..n).filter(|i| mask >> (i % 64) & 1 == 1)).unwrap();
        prop_assert!(g.div_in(x, z, &s) <= g.div_in(x, y, &s) + g.div_in(y, z, &s));
        prop_assert_eq!(g.div_in(x, y, &s), g.div_in(y, x, &s));
        prop_assert_eq!(g.div_in(x, x, &s), 0);
    }

    #[test]
    fn edge_list_round_trip(g in arb_graph(40)) {
        let back = Graph::parse_edge_list(&g.to_edge_list()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn oracle_symmetry_and_degree_bound(g in arb_graph(10)) {
        let h = g.complement();
        let f = oracles::f_exact(&g).unwrap();
        prop_assert!(f.verify(&g));
        prop_assert_eq!(f.value, oracles::f_exact(&h).unwrap().value);
        prop_assert!(f.value <= g.max_degree() + 1);
        let hom = oracles::hom_exact(&g).unwrap();
        prop_assert!(hom.verify(&g));
        prop_assert_eq!(hom.value, oracles::hom_exact(&h).unwrap().value);
    }

    #[test]
    fn greedy_witnesses_verify(g in arb_graph(60), seed in any::<u64>()) {
        let w = oracles::f_lower_greedy(&g, 2, seed).unwrap();
        prop_assert!(w.verify(&g));
        prop_assert!(w.value >= 1);
        prop_assert!(w.value <= g.max_degree() + 1);
    }
}

#[test]
fn gnp_is_reproducible() {
    for seed in 0..5 {
        assert_eq!(Graph::gnp(300, 0.3, seed).unwrap(), Graph::gnp(300, 0.3, seed).unwrap());
    }
    assert_ne!(Graph::gnp(300, 0.3, 0).unwrap(), Graph::gnp(300, 0.3, 1).unwrap());
}

#[test]
fn loader_rejects_malformed_input() {
    for text in ["3 1\n0 0\n", "3 2\n0 1\n1 0\n", "3 1\n0 3\n", "3 2\n0 1\n", "x\n"] {
        let e = Graph::parse_edge_list(text).unwrap_err();
        assert!(e.is_precondition(), "{text:?}: {e}");
    }
}

#[test]
fn file_round_trip() {
    let g = Graph::gnp(50, 0.2, 11).unwrap();
    let path = std::env::temp_dir().join(format!("ddeg-graph-{}.txt", std::process::id()));
    g.write(&path).unwrap();
    assert_eq!(Graph::read(&path).unwrap(), g);
    std::fs::remove_file(&path).ok();
    assert!(matches!(Graph::read("/nonexistent/ddeg.txt"), Err(Error::Io(_))));
}

#[test]
fn hom_of_complete_and_empty() {
    for n in 1..=12 {
        let r = oracles::hom_exact(&Graph::complete(n)).unwrap();
        assert_eq!((r.value, r.kind), (n, HomKind::Clique));
        assert_eq!(oracles::hom_exact(&Graph::empty(n)).unwrap().value, n);
    }
}

#[test]
fn hom_window_on_random_graphs() {
    for n in [16usize, 32, 64] {
        let l = (n as f64).log2();
        for seed in 0..50 {
            let h = oracles::hom_exact(&Graph::gnp(n, 0.5, seed).unwrap()).unwrap().value as f64;
            assert!(h >= l / 2.0 && h <= 2.0 * l + 2.0, "n = {n}, seed = {seed}: {h}");
        }
    }
}

#[test]
fn f_exact_small_families() {
    // a path on n >= 4 vertices reaches degrees 0, 1, 2 at most
    assert_eq!(oracles::f_exact(&Graph::path(8)).unwrap().value, 3);
    assert_eq!(oracles::f_exact(&Graph::complete(7)).unwrap().value, 1);
    assert_eq!(oracles::f_exact(&Graph::star(6)).unwrap().value, 2);
    assert!(oracles::f_exact(&Graph::empty(21)).unwrap_err().is_precondition());
}

#[test]
fn regularized_sets_certify() {
    for seed in 0..5 {
        let g = Graph::gnp(200, 0.05 + 0.1 * seed as f64, seed).unwrap();
        let a = oracles::regularize(&g).unwrap();
        assert!(!a.is_empty());
        assert!(oracles::regularization_certified(&g, &a));
    }
}
