mod common;

use common::*;
use kavd::quorum::{quorum_cluster, quorum_cluster_weighted};
use kavd::PointSet;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Smallest radius of a ball centered at a remaining point that holds `k` remaining points.
fn brute_centered(ps: &PointSet, remaining: &[usize], k: usize) -> f64 {
    remaining
        .iter()
        .map(|&c| {
            let mut d: Vec<f64> = remaining.iter().map(|&j| euclid(ps.point(c), ps.point(j))).collect();
            d.sort_by(f64::total_cmp);
            d[k - 1]
        })
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn clusters_partition_and_approximate(seed in 0u64..1000, k in 1usize..12, rounds in 1usize..10) {
        let n = k * rounds;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ps = PointSet::normalize(&random_points(&mut rng, n, 2, 1.0), None).unwrap();
        let qc = quorum_cluster(&ps, k).unwrap();
        prop_assert_eq!(qc.len(), rounds);
        let mut seen = vec![false; n];
        let mut remaining: Vec<usize> = (0..n).collect();
        for c in &qc.clusters {
            prop_assert_eq!(c.members.len(), k);
            for &m in &c.members {
                prop_assert!(!seen[m]);
                seen[m] = true;
                prop_assert!(euclid(&c.center, ps.point(m)) <= c.radius * (1.0 + SLACK) + 1e-15);
            }
            let rho = brute_centered(&ps, &remaining, k);
            prop_assert!(in_band(c.round_radius, rho / 2.0, 2.0 * rho) || (rho == 0.0 && c.round_radius == 0.0),
                "round radius {} vs {}", c.round_radius, rho);
            remaining.retain(|i| !c.members.contains(i));
        }
        prop_assert!(seen.iter().all(|&s| s));
        let asg = qc.assignment(n);
        prop_assert!(asg.iter().all(|a| a.is_some()));
    }

    #[test]
    fn weighted_clusters_reach_tau(ws in prop::collection::vec(0.1f64..4.0, 4..60), frac in 0.05f64..0.5) {
        let n = ws.len();
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let ps = PointSet::normalize(&random_points(&mut rng, n, 2, 1.0), Some(&ws)).unwrap();
        let total: f64 = ws.iter().sum();
        let tau = frac * total;
        let qc = quorum_cluster_weighted(&ps, tau).unwrap();
        let mut count = 0;
        for c in &qc.clusters {
            let w: f64 = c.members.iter().map(|&m| ws[m]).sum();
            prop_assert!(w >= tau * (1.0 - SLACK));
            count += c.members.len();
        }
        prop_assert_eq!(count, n);
    }
}

#[test]
fn invalid_inputs() {
    let ps = PointSet::normalize(&[vec![0.0], vec![1.0], vec![2.0]], None).unwrap();
    assert!(quorum_cluster(&ps, 2).is_err());
    assert!(quorum_cluster(&ps, 0).is_err());
    assert!(quorum_cluster(&ps.pad_to_multiple(2).unwrap(), 2).is_ok());
    assert!(quorum_cluster_weighted(&ps, 4.0).is_err());
    assert!(quorum_cluster_weighted(&ps, 0.0).is_err());
}

#[test]
fn csv_lists_every_round() {
    let ps = PointSet::normalize(&[vec![0.0, 0.0], vec![0.0, 1.0], vec![5.0, 5.0], vec![5.0, 6.0]], None).unwrap();
    let qc = quorum_cluster(&ps, 2).unwrap();
    let csv = qc.to_csv();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("round,c0,c1,radius,member_indices"));
}
