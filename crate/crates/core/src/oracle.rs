//! Exact brute-force reference values. Everything here sorts or scans the full
//! input; nothing shares distance code with the approximate structures beyond
//! plain coordinate access.

use std::time::{Duration, Instant};

use crate::error::{invalid, Error, Result};
use crate::geom::PointSet;

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        let t = a[i] - b[i];
        s += t * t;
    }
    s.sqrt()
}

fn check_dim(ps: &PointSet, q: &[f64]) -> Result<()> {
    if q.len() != ps.dim() {
        return Err(Error::DimensionMismatch { expected: ps.dim(), found: q.len(), line: None });
    }
    Ok(())
}

/// Ascending distances from `q` to every non-synthetic point.
pub fn sorted_distances(ps: &PointSet, q: &[f64]) -> Vec<f64> {
    let mut ds: Vec<f64> =
        (0..ps.len()).filter(|&i| !ps.is_synthetic(i)).map(|i| euclid(ps.point(i), q)).collect();
    ds.sort_by(f64::total_cmp);
    ds
}

/// `d_k(P, q)` over the non-synthetic points.
pub fn exact_knn_distance(ps: &PointSet, q: &[f64], k: usize) -> Result<f64> {
    Ok(exact_knn_with_distances(ps, q, k)?.0)
}

/// `d_k(P, q)` plus the sorted distance array it was read from.
pub fn exact_knn_with_distances(ps: &PointSet, q: &[f64], k: usize) -> Result<(f64, Vec<f64>)> {
    check_dim(ps, q)?;
    let ds = sorted_distances(ps, q);
    if k == 0 || k > ds.len() {
        return invalid(format!("k = {k} outside [1, {}]", ds.len()));
    }
    Ok((ds[k - 1], ds))
}

/// Smallest `r` such that the closed ball `ball(q, r)` holds weight at least `tau`.
pub fn exact_weighted_distance(ps: &PointSet, q: &[f64], tau: f64) -> Result<f64> {
    check_dim(ps, q)?;
    if !(tau > 0.0) {
        return invalid("tau must be positive");
    }
    let mut pairs: Vec<(f64, f64)> = (0..ps.len())
        .filter(|&i| !ps.is_synthetic(i))
        .map(|i| (euclid(ps.point(i), q), ps.weight(i)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    for (d, w) in pairs {
        acc += w;
        if acc >= tau {
            return Ok(d);
        }
    }
    invalid(format!("tau = {tau} exceeds the total weight {acc}"))
}

/// Exact density values at one query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityValues {
    /// `sum_{i=1..k} f(d_i)`.
    pub full: f64,
    /// The same sum with the indices below `ceil(k eps / 8)` dropped.
    pub tail: f64,
    /// `full / k`.
    pub mean: f64,
}

/// First index kept by the tail-dropped sum: `max(1, ceil(k eps / 8))`.
pub fn tail_start(k: usize, eps: f64) -> usize {
    ((k as f64 * eps / 8.0).ceil() as usize).max(1)
}

pub fn exact_density(ps: &PointSet, q: &[f64], k: usize, eps: f64, f: &dyn Fn(f64) -> f64) -> Result<DensityValues> {
    let (_, ds) = exact_knn_with_distances(ps, q, k)?;
    let start = tail_start(k, eps);
    let mut full = 0.0;
    let mut tail = 0.0;
    for (i, &d) in ds[..k].iter().enumerate() {
        let v = f(d);
        full += v;
        if i + 1 >= start {
            tail += v;
        }
    }
    Ok(DensityValues { full, tail, mean: full / k as f64 })
}

/// `min over remaining p` of the distance from `p` to its `k`-th nearest remaining point,
/// `p` itself counting as its first neighbor. Synthetic points participate.
pub fn centered_kball_radius(ps: &PointSet, remaining: &[usize], k: usize) -> Result<f64> {
    if k == 0 || k > remaining.len() {
        return invalid(format!("k = {k} outside [1, {}]", remaining.len()));
    }
    let mut best = f64::INFINITY;
    let mut ds = Vec::with_capacity(remaining.len());
    for &p in remaining {
        ds.clear();
        ds.extend(remaining.iter().map(|&u| euclid(ps.point(p), ps.point(u))));
        ds.sort_by(f64::total_cmp);
        best = best.min(ds[k - 1]);
    }
    Ok(best)
}

/// Weighted analogue of [`centered_kball_radius`]: the smallest radius of a ball centered at a
/// remaining point holding remaining weight at least `tau`.
pub fn centered_weighted_radius(ps: &PointSet, remaining: &[usize], tau: f64) -> Result<f64> {
    let total: f64 = remaining.iter().map(|&i| ps.weight(i)).sum();
    if !(tau > 0.0) || tau > total {
        return invalid(format!("tau = {tau} outside (0, {total}]"));
    }
    let mut best = f64::INFINITY;
    let mut pairs = Vec::with_capacity(remaining.len());
    for &p in remaining {
        pairs.clear();
        pairs.extend(remaining.iter().map(|&u| (euclid(ps.point(p), ps.point(u)), ps.weight(u))));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = 0.0;
        for &(d, w) in &pairs {
            acc += w;
            if acc >= tau {
                best = best.min(d);
                break;
            }
        }
    }
    Ok(best)
}

/// Exact values at one query, as emitted by the `oracle` subcommand.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub query: Vec<f64>,
    pub dk: f64,
    pub density: DensityValues,
    /// `d_1, ..., d_k`.
    pub per_index: Vec<f64>,
    pub elapsed: Duration,
}

pub fn report(ps: &PointSet, q: &[f64], k: usize, eps: f64, f: &dyn Fn(f64) -> f64) -> Result<OracleReport> {
    let t = Instant::now();
    let (dk, ds) = exact_knn_with_distances(ps, q, k)?;
    let density = exact_density(ps, q, k, eps, f)?;
    Ok(OracleReport { query: q.to_vec(), dk, density, per_index: ds[..k].to_vec(), elapsed: t.elapsed() })
}
