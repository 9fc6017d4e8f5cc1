mod common;

use common::*;
use kavd::knn_query::{KnnConfig, KnnQueryStructure};
use kavd::PointSet;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn refined_answer_in_band(seed in 0u64..10_000, n in 1usize..300, d in 1usize..4, eps in 0.05f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ps = PointSet::normalize(&random_points(&mut rng, n, d, 1.0), None).unwrap();
        let s = KnnQueryStructure::build(&ps, seed).unwrap();
        for _ in 0..10 {
            let q = query_near(&mut rng, &ps);
            let k = rng.gen_range(1..=n);
            let a = s.knn_distance(&q, k, eps).unwrap();
            let dk = brute_dk(&ps, &q, k);
            prop_assert!(in_band(a.beta, dk, (1.0 + eps) * dk), "beta {} d_k {}", a.beta, dk);
            prop_assert!(a.lower <= dk * (1.0 + SLACK));
            let dw = euclid(&q, ps.point(a.witness));
            prop_assert!(in_band(dw, (1.0 - eps) * dk, (1.0 + eps) * dk));
            let r = s.rough_knn_distance(&q, k).unwrap();
            prop_assert!(r >= dk * (1.0 - SLACK));
        }
    }

    #[test]
    fn weighted_answer_in_band(seed in 0u64..10_000, n in 2usize..150, frac in 0.01f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ws: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
        let total: f64 = ws.iter().sum();
        prop_assume!(total > 0.0);
        let ps = PointSet::normalize(&random_points(&mut rng, n, 2, 1.0), Some(&ws)).unwrap();
        let s = KnnQueryStructure::build(&ps, seed).unwrap();
        let tau = frac * total;
        let eps = 0.2;
        let q = query_near(&mut rng, &ps);
        let a = s.knn_distance_weighted(&q, tau, eps).unwrap();
        let dt = brute_weighted(&ps, &q, tau);
        prop_assert!(in_band(a.beta, dt, (1.0 + eps) * dt), "beta {} d_tau {}", a.beta, dt);
    }
}

#[test]
fn pruning_does_not_change_answers() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let ps = PointSet::normalize(&random_points(&mut rng, 400, 2, 1.0), None).unwrap();
    let on = KnnQueryStructure::build_with(&ps, KnnConfig { seed: 3, ..KnnConfig::default() }).unwrap();
    let off = KnnQueryStructure::build_with(&ps, KnnConfig { seed: 3, prune: false, ..KnnConfig::default() }).unwrap();
    for _ in 0..300 {
        let q = query_near(&mut rng, &ps);
        let k = rng.gen_range(1..=400);
        let a = on.knn_distance(&q, k, 0.2).unwrap();
        let b = off.knn_distance(&q, k, 0.2).unwrap();
        assert_eq!(a.beta, b.beta);
        assert_eq!(a.witness, b.witness);
    }
}

#[test]
fn trace_brackets_the_answer() {
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let ps = PointSet::normalize(&random_points(&mut rng, 200, 3, 1.0), None).unwrap();
    let s = KnnQueryStructure::build(&ps, 1).unwrap();
    let q = query_near(&mut rng, &ps);
    let dk = brute_dk(&ps, &q, 20);
    let mut trace = Vec::new();
    s.knn_distance_traced(&q, 20, 0.1, &mut trace).unwrap();
    assert!(!trace.is_empty());
    for &(lo, hi) in &trace {
        assert!(lo <= dk * (1.0 + SLACK) && dk <= hi * (1.0 + SLACK), "[{lo}, {hi}] misses {dk}");
    }
}

#[test]
fn duplicates_and_errors() {
    let ps = PointSet::normalize(&vec![vec![1.0, 1.0]; 10], None).unwrap();
    let s = KnnQueryStructure::build(&ps, 0).unwrap();
    let a = s.knn_distance(ps.point(0), 10, 0.1).unwrap();
    assert_eq!(a.beta, 0.0);
    assert!(s.knn_distance(ps.point(0), 11, 0.1).is_err());
    assert!(s.knn_distance(ps.point(0), 1, 0.0).is_err());
    assert!(s.knn_distance(&[0.5], 1, 0.1).is_err());
}
