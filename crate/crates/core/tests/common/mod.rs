#![allow(dead_code)]

use kavd::PointSet;
use rand::Rng;

pub const SLACK: f64 = 1e-12;

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// All distances from `q`, ascending.
pub fn brute_sorted(ps: &PointSet, q: &[f64]) -> Vec<f64> {
    let mut d: Vec<f64> = (0..ps.len()).map(|i| euclid(ps.point(i), q)).collect();
    d.sort_by(f64::total_cmp);
    d
}

pub fn brute_dk(ps: &PointSet, q: &[f64], k: usize) -> f64 {
    brute_sorted(ps, q)[k - 1]
}

/// Smallest r whose closed ball around `q` holds weight at least `tau`.
pub fn brute_weighted(ps: &PointSet, q: &[f64], tau: f64) -> f64 {
    let mut d: Vec<(f64, f64)> = (0..ps.len()).map(|i| (euclid(ps.point(i), q), ps.weight(i))).collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    for (r, w) in d {
        acc += w;
        if acc >= tau {
            return r;
        }
    }
    f64::INFINITY
}

pub fn in_band(x: f64, lo: f64, hi: f64) -> bool {
    x >= lo * (1.0 - SLACK) && x <= hi * (1.0 + SLACK)
}

pub fn random_points(rng: &mut impl Rng, n: usize, d: usize, span: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| span * rng.gen::<f64>()).collect()).collect()
}

/// A query in `[0,1]^d`, half the time near the normalized data.
pub fn query_near(rng: &mut impl Rng, ps: &PointSet) -> Vec<f64> {
    let d = ps.dim();
    if rng.gen_bool(0.5) {
        (0..d).map(|_| rng.gen()).collect()
    } else {
        let w = 1.0 / ps.len() as f64;
        (0..d).map(|_| 0.5 - w + 3.0 * w * rng.gen::<f64>()).collect()
    }
}
