mod common;

use common::*;
use kavd::oracle::{exact_density, exact_knn_distance, exact_weighted_distance, report, sorted_distances, tail_start};
use kavd::{Error, PointSet};
use proptest::prelude::*;

fn set_from(coords: Vec<f64>, d: usize) -> PointSet {
    PointSet::from_coords(d, coords, None).unwrap()
}

proptest! {
    #[test]
    fn knn_matches_sort(coords in prop::collection::vec(-5.0f64..5.0, 2..120), q in prop::collection::vec(-5.0f64..5.0, 2), kf in 0.0f64..1.0) {
        let n = coords.len() / 2;
        let ps = set_from(coords[..2 * n].to_vec(), 2);
        let k = 1 + (kf * (n - 1) as f64) as usize;
        prop_assert_eq!(exact_knn_distance(&ps, &q, k).unwrap(), brute_dk(&ps, &q, k));
        prop_assert_eq!(sorted_distances(&ps, &q), brute_sorted(&ps, &q));
    }

    #[test]
    fn weighted_matches_scan(ws in prop::collection::vec(0.0f64..3.0, 3..60), frac in 0.01f64..1.0) {
        let n = ws.len();
        let coords: Vec<f64> = (0..n).flat_map(|i| [(i as f64 * 0.37).sin(), (i as f64 * 1.1).cos()]).collect();
        let total: f64 = ws.iter().sum();
        prop_assume!(total > 0.0);
        let ps = PointSet::from_coords(2, coords, Some(ws)).unwrap();
        let tau = frac * total;
        let q = [0.1, -0.2];
        prop_assert_eq!(exact_weighted_distance(&ps, &q, tau).unwrap(), brute_weighted(&ps, &q, tau));
    }

    #[test]
    fn tail_never_exceeds_full(k in 1usize..200, eps in 0.01f64..1.0, p in 0.25f64..3.0) {
        let n = k + 5;
        let coords: Vec<f64> = (0..n).map(|i| i as f64 * 0.01).collect();
        let ps = set_from(coords, 1);
        let v = exact_density(&ps, &[-0.3], k, eps, &|x: f64| x.powf(p)).unwrap();
        prop_assert!(v.tail <= v.full);
        prop_assert!((v.mean * k as f64 - v.full).abs() <= 1e-9 * v.full.max(1.0));
        let s = tail_start(k, eps);
        prop_assert!(s >= 1 && s <= k);
    }
}

#[test]
fn unit_weights_agree_with_counts() {
    let ps = set_from((0..40).map(|i| (i * i % 17) as f64).collect(), 2);
    for k in 1..=20 {
        let q = [3.0, 4.0];
        assert_eq!(exact_weighted_distance(&ps, &q, k as f64).unwrap(), exact_knn_distance(&ps, &q, k).unwrap());
    }
}

#[test]
fn report_collects_prefix() {
    let ps = set_from(vec![0.0, 1.0, 3.0, 6.0], 1);
    let r = report(&ps, &[0.0], 3, 0.5, &|x| x).unwrap();
    assert_eq!(r.per_index, vec![0.0, 1.0, 3.0]);
    assert_eq!(r.dk, 3.0);
    assert_eq!(r.density.full, 4.0);
}

#[test]
fn bad_rank_is_rejected() {
    let ps = set_from(vec![0.0, 1.0], 1);
    assert!(matches!(exact_knn_distance(&ps, &[0.0], 0), Err(Error::InvalidArgument(_))));
    assert!(matches!(exact_knn_distance(&ps, &[0.0], 3), Err(Error::InvalidArgument(_))));
    assert!(matches!(exact_knn_distance(&ps, &[0.0, 1.0], 1), Err(Error::DimensionMismatch { .. })));
}
