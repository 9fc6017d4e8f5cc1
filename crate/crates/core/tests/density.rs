mod common;

use common::*;
use kavd::density::{build_density, coreset_estimate, coreset_indices, power_growth_constant, DensityStructure, SlowGrowFunction};
use kavd::{Error, PointSet};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tail_from(k: usize, eps: f64) -> usize {
    ((k as f64 * eps / 8.0).ceil() as usize).max(1)
}

proptest! {
    #[test]
    fn coreset_covers_tail_once(k in 1usize..5000, eps in 0.01f64..=1.0) {
        let cs = coreset_indices(k, eps).unwrap();
        let start = tail_from(k, eps);
        prop_assert_eq!(cs.total_weight(), k - start + 1);
        prop_assert_eq!(cs.indices[0], start);
        prop_assert!(cs.indices.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(*cs.indices.last().unwrap() <= k);
        // O(log(k) / eps) indices
        prop_assert!(cs.len() as f64 <= 40.0 * ((k as f64).ln() + 1.0) / eps + 1.0);
    }

    #[test]
    fn coreset_band_for_any_increasing_sequence(
        k in 1usize..600,
        eps in 0.05f64..=1.0,
        steps in prop::collection::vec((0.0f64..1.0, 0.0f64..100.0), 1..6),
    ) {
        // a sum of step functions is increasing with arbitrary jumps
        let g: Vec<f64> = (1..=k)
            .map(|i| steps.iter().filter(|(at, _)| i as f64 >= at * k as f64).map(|(_, h)| h).sum::<f64>() + 1e-3)
            .collect();
        let cs = coreset_indices(k, eps).unwrap();
        let samples: Vec<f64> = cs.indices.iter().map(|&i| g[i - 1]).collect();
        let est = coreset_estimate(&cs, &samples).unwrap();
        let tail: f64 = g[tail_from(k, eps) - 1..].iter().sum();
        prop_assert!(in_band(tail, (1.0 - eps / 4.0) * est, (1.0 + eps / 4.0) * est), "tail {} est {}", tail, est);
    }

    #[test]
    fn power_constant_is_tight(p in 0.1f64..6.0, e in 0.001f64..=1.0) {
        let c = power_growth_constant(p);
        prop_assert!((1.0 + e / c).powf(p) <= 1.0 + e + 1e-12);
        prop_assert!((1.0 - e / c).powf(p) >= 1.0 - e - 1e-12);
    }
}

#[test]
fn estimate_requires_monotone_samples() {
    let cs = coreset_indices(50, 0.5).unwrap();
    let mut g: Vec<f64> = (0..cs.len()).map(|i| i as f64).collect();
    g.swap(0, 1);
    assert!(matches!(coreset_estimate(&cs, &g), Err(Error::ContractViolation(_))));
    assert!(coreset_estimate(&cs, &g[1..]).is_err());
}

#[test]
fn function_tags() {
    assert_eq!(SlowGrowFunction::parse("l1").unwrap().tag(), "l1");
    assert_eq!(SlowGrowFunction::parse("l2sq").unwrap().eval(3.0), 9.0);
    assert_eq!(SlowGrowFunction::parse("pow:0.5").unwrap().eval(4.0), 2.0);
    for bad in ["exp", "pow:", "pow:-1", "pow:x"] {
        assert!(matches!(SlowGrowFunction::parse(bad), Err(Error::InvalidFunction(_))), "{bad}");
    }
    let exp = SlowGrowFunction::custom("exp", 1.0, |x: f64| (50.0 * x).exp()).unwrap();
    assert!(exp.audit(0.25, 2).is_err());
}

fn small_instance(seed: u64, n: usize) -> (Vec<Vec<f64>>, PointSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = random_points(&mut rng, n, 2, 20.0);
    let ps = PointSet::normalize(&raw, None).unwrap();
    (raw, ps)
}

#[test]
fn density_band_against_brute_force() {
    for (p, tag) in [(1.0, "l1"), (2.0, "l2sq"), (0.5, "pow:0.5")] {
        let (_, ps) = small_instance(21, 96);
        let (k, eps) = (8, 0.5);
        let ds = build_density(&ps, k, eps, SlowGrowFunction::parse(tag).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..300 {
            let q = query_near(&mut rng, &ps);
            let xi = ds.query(&q).unwrap();
            let sorted = brute_sorted(&ps, &q);
            let full: f64 = sorted[..k].iter().map(|x: &f64| x.powf(p)).sum();
            assert!(in_band(full, (1.0 - eps) * xi, (1.0 + eps) * xi), "{tag}: D {full} xi {xi}");
            let vals = ds.values(&q).unwrap();
            assert_eq!(vals.len(), ds.coreset().len());
            for (&i, &z) in ds.coreset().indices.iter().zip(&vals) {
                let di = sorted[i - 1];
                assert!(in_band(z, di, (1.0 + ds.sketch_eps()) * di), "z_{i} = {z} vs {di}");
            }
        }
    }
}

#[test]
fn input_units_and_round_trip() {
    let (raw, ps) = small_instance(23, 64);
    let (k, eps) = (6, 0.5);
    let ds = build_density(&ps, k, eps, SlowGrowFunction::power(1.0).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..200 {
        let q: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..22.0)).collect();
        let xi = ds.query_input(&q).unwrap();
        let mut d: Vec<f64> = raw.iter().map(|p| euclid(p, &q)).collect();
        d.sort_by(f64::total_cmp);
        let full: f64 = d[..k].iter().sum();
        assert!(full >= (1.0 - eps) * xi * (1.0 - 1e-9) && full <= (1.0 + eps) * xi * (1.0 + 1e-9), "{full} {xi}");
    }
    let mut buf = Vec::new();
    ds.write(&mut buf).unwrap();
    let back = DensityStructure::read(buf.as_slice()).unwrap();
    assert_eq!(back.k(), k);
    assert_eq!(back.function().tag(), "l1");
    assert_eq!(back.cell_count(), ds.cell_count());
    for _ in 0..100 {
        let q = query_near(&mut rng, &ps);
        assert_eq!(back.query(&q).unwrap(), ds.query(&q).unwrap());
    }
}

#[test]
fn invalid_requests() {
    let (_, ps) = small_instance(25, 20);
    let f = SlowGrowFunction::power(1.0).unwrap();
    assert!(build_density(&ps, 0, 0.5, f.clone()).is_err());
    assert!(build_density(&ps, 21, 0.5, f.clone()).is_err());
    assert!(build_density(&ps, 4, 1.0, f.clone()).is_err());
    let ds = build_density(&ps, 4, 0.5, f).unwrap();
    assert!(matches!(ds.query(&[2.0, 0.5]), Err(Error::OutOfDomain(_))));
    assert!(matches!(ds.values(&[0.5]), Err(Error::DimensionMismatch { .. })));
}
