mod common;

use common::*;
use kavd::sampling::{
    clipped_weight, dnu_distance, relative_sample_size, sampled_density, sampled_kann, SampleSpec, SampledKnn,
    WellBehavedDescriptor, DEFAULT_C,
};
use kavd::{Error, PointSet};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// For every data point, the other points in order of distance with tie groups marked.
struct BallRanges {
    order: Vec<Vec<u32>>,
    /// `ends[c][i]` is true when position `i` closes a group of equal distances.
    ends: Vec<Vec<bool>>,
}

impl BallRanges {
    fn new(ps: &PointSet) -> Self {
        let n = ps.len();
        let mut order = Vec::with_capacity(n);
        let mut ends = Vec::with_capacity(n);
        for c in 0..n {
            let d: Vec<f64> = (0..n).map(|j| euclid(ps.point(c), ps.point(j))).collect();
            let mut o: Vec<u32> = (0..n as u32).collect();
            o.sort_by(|&a, &b| d[a as usize].total_cmp(&d[b as usize]));
            let e = (0..n).map(|i| i + 1 == n || d[o[i] as usize] != d[o[i + 1] as usize]).collect();
            order.push(o);
            ends.push(e);
        }
        BallRanges { order, ends }
    }

    /// Checks `|p_R - s_R| <= eps max(p_R, rho)` for every closed ball centered at a data
    /// point with another data point on its boundary.
    fn relative_approximation(&self, sample: &[usize], rho: f64, eps: f64) -> bool {
        let n = self.order.len();
        let mut mult = vec![0u32; n];
        for &j in sample {
            mult[j] += 1;
        }
        let m = sample.len() as f64;
        for (o, e) in self.order.iter().zip(&self.ends) {
            let mut hits = 0u32;
            for i in 0..n {
                hits += mult[o[i] as usize];
                if e[i] {
                    let pr = (i + 1) as f64 / n as f64;
                    let sr = hits as f64 / m;
                    if (pr - sr).abs() > eps * pr.max(rho) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

#[test]
fn default_constant_gives_relative_approximations() {
    let (n, k, eps, phi) = (2000, 64, 0.7, 0.01);
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let ps = PointSet::normalize(&random_points(&mut rng, n, 2, 1.0), None).unwrap();
    let rho = k as f64 / n as f64;
    let trials = 200;
    let ranges = BallRanges::new(&ps);
    let mut good = 0;
    for seed in 0..trials {
        let s = sampled_kann(&ps, k, eps, phi, seed).unwrap();
        assert!(!s.is_exact(), "sample of {} is the whole set", s.sample_size());
        good += ranges.relative_approximation(s.sample(), rho, eps) as usize;
    }
    let frac = good as f64 / trials as f64;
    assert!(frac >= 0.99, "only {good} of {trials} samples were relative approximations");
}

#[test]
fn exact_path_when_sample_covers_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ps = PointSet::normalize(&random_points(&mut rng, 60, 2, 1.0), None).unwrap();
    let s = sampled_kann(&ps, 6, 0.2, 0.1, 3).unwrap();
    assert!(s.is_exact());
    assert_eq!(s.rank_for(6), 6);
    for _ in 0..200 {
        let q = query_near(&mut rng, &ps);
        let (v, w) = s.query(&q).unwrap();
        let dk = brute_dk(&ps, &q, 6);
        assert!(in_band(v, dk, 1.2 * dk));
        assert!(in_band(euclid(&q, ps.point(w)), 0.8 * dk, 1.2 * dk));
    }
    let f = WellBehavedDescriptor::new(|x| 1.0 + x, 64.0).unwrap();
    let g = sampled_density(&ps, 6, f, 0.2, 0.1, 3).unwrap();
    assert_eq!(g.sample_size(), 60);
    assert_eq!(g.kprime(), 6);
    let q = [0.5, 0.5];
    let exact: f64 = brute_sorted(&ps, &q)[..6].iter().map(|x| 1.0 + x).sum::<f64>() / 6.0;
    assert!((g.query(&q).unwrap() - exact).abs() <= 1e-12 * exact);
}

fn rank_band(t: usize, eps: f64, n: usize) -> (usize, usize) {
    let lo = (((1.0 - eps) * t as f64 + 1e-9).floor() as usize).max(1);
    let hi = (((1.0 + eps) * t as f64 - 1e-9).ceil() as usize).min(n);
    (lo, hi)
}

#[test]
fn larger_ranks_through_the_same_handle() {
    let (n, k, eps, phi) = (4000, 200, 0.35, 0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let ps = PointSet::normalize(&random_points(&mut rng, n, 2, 1.0), None).unwrap();
    let t = 2 * k;
    let (lo, hi) = rank_band(t, eps, n);
    let seeds = 20;
    let mut good = 0;
    for seed in 0..seeds {
        let s = sampled_kann(&ps, k, eps, phi, seed).unwrap();
        assert!(!s.is_exact());
        let mut ok = true;
        for _ in 0..50 {
            let q = query_near(&mut rng, &ps);
            let (_, w) = s.query_rank(&q, t).unwrap();
            let ds = brute_sorted(&ps, &q);
            let dw = euclid(&q, ps.point(w));
            ok &= in_band(dw, (1.0 - eps) * ds[lo - 1], (1.0 + eps) * ds[hi - 1]);
            // the ball through the exact k'-th sample point holds (1 +- eps) t points
            let mut sd: Vec<f64> = s.sample().iter().map(|&i| euclid(&q, ps.point(i))).collect();
            sd.sort_by(f64::total_cmp);
            let r = sd[s.rank_for(t) - 1];
            let c = ds.partition_point(|&x| x <= r);
            ok &= c >= lo && c <= hi;
        }
        good += ok as usize;
    }
    assert!(good as f64 >= (1.0 - phi) * seeds as f64, "{good} of {seeds} seeds");
}

#[test]
fn constant_function_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let ps = PointSet::normalize(&random_points(&mut rng, 4000, 2, 1.0), None).unwrap();
    let f = WellBehavedDescriptor::new(|_| 1.0, 1.0).unwrap();
    let g = sampled_density(&ps, 400, f, 0.3, 0.1, 0).unwrap();
    assert!(g.sample_size() < 4000);
    for _ in 0..20 {
        assert_eq!(g.query(&query_near(&mut rng, &ps)).unwrap(), 1.0);
    }
}

#[test]
fn root_mean_square_through_square_estimate() {
    let (n, k, eps, phi) = (4000, 400, 0.3, 0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let ps = PointSet::normalize(&random_points(&mut rng, n, 2, 1.0), None).unwrap();
    let seeds = 20;
    let mut good = 0;
    for seed in 0..seeds {
        let f = WellBehavedDescriptor::new(|x| x * x, 64.0).unwrap();
        let g = sampled_density(&ps, k, f, eps, phi, seed).unwrap();
        let mut ok = true;
        for _ in 0..50 {
            let q = query_near(&mut rng, &ps);
            let f1 = (brute_sorted(&ps, &q)[..k].iter().map(|x| x * x).sum::<f64>() / k as f64).sqrt();
            let est = g.query(&q).unwrap().sqrt();
            ok &= (est - f1).abs() <= eps * f1;
        }
        good += ok as usize;
    }
    assert!(good as f64 >= (1.0 - phi) * seeds as f64, "{good} of {seeds} seeds");
}

#[test]
fn audit_rejects_fast_growth() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let ps = PointSet::normalize(&random_points(&mut rng, 2000, 2, 1.0), None).unwrap();
    let f = WellBehavedDescriptor::new(|x| (1e4 * x).exp(), 2.0).unwrap();
    assert!(matches!(sampled_density(&ps, 200, f, 0.3, 0.1, 0), Err(Error::InvalidFunction(_))));
}

#[test]
fn coarse_parameters_are_reported() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let ps = PointSet::normalize(&random_points(&mut rng, 2000, 2, 1.0), None).unwrap();
    assert!(matches!(SampledKnn::build(&ps, 1, 0.9, 0.5, 0, 1e-3), Err(Error::ParametersTooCoarse(_))));
    assert!(sampled_kann(&ps, 0, 0.3, 0.1, 0).is_err());
    assert!(sampled_kann(&ps, 10, 0.3, 1.0, 0).is_err());
}

#[test]
fn clipped_weight_normalizes_at_anchor() {
    let (n, k) = (1000, 50);
    let anchor = 0.2;
    let scale = k as f64 / n as f64 / anchor;
    let f = move |x: f64| scale * x;
    assert!((clipped_weight(anchor, anchor, n, k, &f) - 1.0).abs() < 1e-12);
    assert_eq!(clipped_weight(anchor * 1.01, anchor, n, k, &f), 0.0);
}

#[test]
fn mean_of_clipped_weights_is_the_density() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let (n, k) = (500, 40);
    let ps = PointSet::normalize(&random_points(&mut rng, n, 2, 1.0), None).unwrap();
    let q = query_near(&mut rng, &ps);
    let ds = brute_sorted(&ps, &q);
    let r = ds[k - 1];
    let f = |x: f64| x * x;
    let via_h: f64 = ds.iter().map(|&d| clipped_weight(d, r, n, k, &f)).sum::<f64>() / n as f64;
    let direct: f64 = ds[..k].iter().map(|&d| f(d)).sum::<f64>() / k as f64;
    assert!((via_h - direct).abs() <= 1e-12 * direct);
}

proptest! {
    #[test]
    fn dnu_is_a_symmetric_bounded_gap(r in 0.0f64..10.0, s in 0.0f64..10.0, nu in 1e-6f64..5.0) {
        let d = dnu_distance(r, s, nu);
        prop_assert_eq!(d, dnu_distance(s, r, nu));
        prop_assert!((0.0..1.0).contains(&d));
        prop_assert_eq!(dnu_distance(r, r, nu), 0.0);
    }

    #[test]
    fn sample_size_formula(rho in 0.001f64..1.0, eps in 0.05f64..0.95, phi in 0.001f64..0.5, d in 1usize..5) {
        let spec = SampleSpec::balls(rho, eps, phi, d);
        prop_assert_eq!(spec.c, DEFAULT_C);
        let m = relative_sample_size(&spec, usize::MAX).unwrap();
        let want = DEFAULT_C * (d + 1) as f64 / (eps * eps * rho) * ((1.0 / rho).ln() + (1.0 / phi).ln());
        prop_assert_eq!(m, want.ceil().max(1.0) as usize);
        prop_assert!(relative_sample_size(&spec, 10).unwrap() <= 10);
    }
}
