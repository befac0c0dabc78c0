mod common;

use common::*;
use proptest::prelude::*;
use truncated_hitting::exact::exact_first_passage;
use truncated_hitting::sampling::ReturnProbEstimate;
use truncated_hitting::{
    generate, hitting_via_sampled_diagonal, sample_return_probabilities, write_shards,
    DanglingPolicy, Error, GenSpec, Model, ShardedTransition, TransitionMatrix,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn estimates_are_frequencies(p in arb_matrix(10), walks in 1u64..60, seed in any::<u64>(), t in 1usize..8) {
        let est = sample_return_probabilities(&p, t, walks, seed).unwrap();
        for j in 0..p.n() {
            prop_assert_eq!(est.get(j, 0), 1.0);
            for s in 0..t {
                let x = est.get(j, s);
                let k = x * walks as f64;
                prop_assert!((0.0..=1.0).contains(&x));
                prop_assert!((k - k.round()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn exact_diagonals_reproduce_first_passage(p in arb_matrix(15), t in 1usize..11) {
        let est = ReturnProbEstimate::exact(&p, t).unwrap();
        for s in [0, p.n() - 1] {
            let a = hitting_via_sampled_diagonal(&p, s, t, &est).unwrap();
            let b = exact_first_passage(&p, s, t).unwrap();
            prop_assert!(max_abs_diff(&a.values, &b.values) < 1e-10);
        }
    }

    #[test]
    fn sampled_hitting_stays_in_range(p in arb_matrix(10), seed in any::<u64>(), t in 1usize..10) {
        let est = sample_return_probabilities(&p, t, 20, seed).unwrap();
        let h = hitting_via_sampled_diagonal(&p, 0, t, &est).unwrap();
        prop_assert!(h.values.iter().all(|&x| (0.0..=t as f64 + 1e-9).contains(&x)));
    }
}

#[test]
fn sampled_diagonals_give_accurate_hitting_times() {
    let g = generate(&GenSpec::new(Model::Sp1, 100, 1000, 17)).unwrap();
    let p = TransitionMatrix::from_graph(&g, DanglingPolicy::Reject).unwrap();
    let est = sample_return_probabilities(&p, 10, 2000, 99).unwrap();
    let mut total = 0.0;
    let mut count = 0;
    for s in 0..10 {
        let a = hitting_via_sampled_diagonal(&p, s, 10, &est).unwrap();
        let b = exact_first_passage(&p, s, 10).unwrap();
        for j in (0..p.n()).filter(|&j| j != s) {
            total += ((a.values[j] - b.values[j]) / b.values[j]).abs();
            count += 1;
        }
    }
    let mean = total / count as f64;
    assert!(mean < 0.05, "mean relative error {mean}");
}

#[test]
fn streaming_backend_cannot_sample() {
    let p = TransitionMatrix::from_dense(2, &[0.5; 4]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_shards(&p, 1, dir.path()).unwrap();
    let op = ShardedTransition::open(dir.path()).unwrap();
    let err = sample_return_probabilities(&op, 4, 10, 0).unwrap_err();
    assert!(matches!(err, Error::Unsupported(_)));
}
