mod common;

use common::*;
use proptest::prelude::*;
use truncated_hitting::graph::{Duplicates, Edge};
use truncated_hitting::{
    write_shards, DanglingPolicy, Graph, ProbabilityVector, ShardedTransition, TransitionMatrix,
};

fn arb_distribution(n: usize) -> impl Strategy<Value = ProbabilityVector> {
    prop::collection::vec(0.0..1.0f64, n).prop_map(|mut w| {
        w[0] += 1e-3;
        ProbabilityVector::from_weights(&w).unwrap()
    })
}

fn matrix_and_distribution(
    max_n: usize,
) -> impl Strategy<Value = (TransitionMatrix, ProbabilityVector)> {
    arb_matrix(max_n).prop_flat_map(|p| {
        let n = p.n();
        (Just(p), arb_distribution(n))
    })
}

proptest! {
    #[test]
    fn step_preserves_mass((p, x) in matrix_and_distribution(12)) {
        let q = p.apply_transposed(&x).unwrap();
        prop_assert!((q.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(q.as_slice().iter().all(|&v| (0.0..=1.0 + 1e-12).contains(&v)));
    }

    #[test]
    fn repeated_steps_give_rows_of_powers(p in arb_matrix(6), t in 0usize..8) {
        let n = p.n();
        let powers = dense_powers(&p, t + 1);
        for i in 0..n {
            let mut x = ProbabilityVector::delta(n, i).unwrap();
            for _ in 0..t {
                x = p.apply_transposed(&x).unwrap();
            }
            prop_assert!(max_abs_diff(x.as_slice(), &powers[t][i * n..(i + 1) * n]) < 1e-10);
        }
    }

    #[test]
    fn rows_are_scale_invariant(
        n in 2usize..8,
        raw in prop::collection::vec((0u32..8, 0u32..8, 0.1..5.0f64), 1..40),
        scale in prop::collection::vec(0.01..100.0f64, 8),
    ) {
        let edges: Vec<Edge> = raw
            .iter()
            .map(|&(u, v, w)| Edge::new(u % n as u32, v % n as u32, w))
            .collect();
        let scaled: Vec<Edge> = edges
            .iter()
            .map(|e| Edge::new(e.src, e.dst, e.weight * scale[e.src as usize]))
            .collect();
        let a = Graph::new(n, edges, Duplicates::Merge).unwrap();
        let b = Graph::new(n, scaled, Duplicates::Merge).unwrap();
        let pa = TransitionMatrix::from_graph(&a, DanglingPolicy::SelfLoop).unwrap();
        let pb = TransitionMatrix::from_graph(&b, DanglingPolicy::SelfLoop).unwrap();
        prop_assert!(max_abs_diff(&pa.to_dense(), &pb.to_dense()) < 1e-12);
        for u in 0..n {
            let s: f64 = pa.row(u).1.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(pa.row(u).1.iter().all(|&x| x > 0.0 && x <= 1.0));
        }
    }

    #[test]
    fn edge_list_round_trips(p in arb_generated(2, 30)) {
        let edges = p
            .entries()
            .map(|(u, v, w)| Edge::new(u, v, w))
            .collect();
        let g = Graph::new(p.n(), edges, Duplicates::Reject).unwrap();
        let mut text = Vec::new();
        g.write_to(&mut text).unwrap();
        let back = Graph::read_edge_list(&text[..], std::path::Path::new("mem"), Duplicates::Reject).unwrap();
        prop_assert_eq!(back, g);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sharded_step_matches_memory((p, x) in matrix_and_distribution(40), shards in 1usize..6) {
        let dir = tempfile::tempdir().unwrap();
        let sharded = write_shards(&p, shards.min(p.n()), dir.path()).unwrap();
        let a = p.apply_transposed(&x).unwrap();
        let b = sharded.apply_transposed(&x).unwrap();
        prop_assert!(max_rel_diff(a.as_slice(), b.as_slice()) < 1e-12);

        let reopened = ShardedTransition::open(dir.path()).unwrap();
        prop_assert_eq!(reopened.to_matrix().unwrap(), p);
    }
}
