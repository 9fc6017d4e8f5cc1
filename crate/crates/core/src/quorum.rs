//! Quorum clustering: repeatedly remove a near-smallest ball covering `k`
//! (or weight `tau`) of the remaining points.
//!
//! Each round takes the remaining point whose `k`-th nearest remaining neighbor
//! is closest, and the ball centered there through that neighbor. Its radius
//! `rho*` satisfies `rho*/2 <= opt <= rho*`, so the ball is a 2-approximation of
//! the smallest ball holding `k` remaining points.

use std::collections::HashMap;

use crate::error::{invalid, Result};
use crate::geom::{dist, exp2i, PointSet, DEFAULT_MIN_LEVEL};

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub center: Vec<f64>,
    pub radius: f64,
    /// Member point indices, nearest to the center first.
    pub members: Vec<usize>,
    /// Point the round was centered on.
    pub center_point: usize,
    /// `rho*` of the round: the radius before any perturbation or leftover merge.
    pub round_radius: f64,
    /// Offset added to the first center coordinate to keep centers distinct (0 if none).
    pub jitter: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuorumClustering {
    pub clusters: Vec<Cluster>,
    pub k: Option<usize>,
    pub tau: Option<f64>,
    /// Number of trailing points folded into the last cluster because their weight was below `tau`.
    pub leftover: usize,
}

impl QuorumClustering {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Cluster index of every point.
    pub fn assignment(&self, n: usize) -> Vec<Option<usize>> {
        let mut a = vec![None; n];
        for (i, c) in self.clusters.iter().enumerate() {
            for &m in &c.members {
                a[m] = Some(i);
            }
        }
        a
    }

    /// CSV dump `round,center...,radius,member_indices` (members separated by `;`).
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        if let Some(c) = self.clusters.first() {
            let d = c.center.len();
            let cols: Vec<String> = (0..d).map(|i| format!("c{i}")).collect();
            s.push_str(&format!("round,{},radius,member_indices\n", cols.join(",")));
        }
        for (i, c) in self.clusters.iter().enumerate() {
            let center: Vec<String> = c.center.iter().map(|x| format!("{x:?}")).collect();
            let members: Vec<String> = c.members.iter().map(|m| m.to_string()).collect();
            s.push_str(&format!("{i},{},{:?},{}\n", center.join(","), c.radius, members.join(";")));
        }
        s
    }
}

/// Unit-weight clustering into `n / k` clusters of exactly `k` points.
pub fn quorum_cluster(ps: &PointSet, k: usize) -> Result<QuorumClustering> {
    let n = ps.len();
    if k == 0 || k > n {
        return invalid(format!("k = {k} outside [1, {n}]"));
    }
    if !n.is_multiple_of(k) {
        return invalid(format!("k = {k} does not divide n = {n}; pad the set first"));
    }
    let weights = vec![1.0; n];
    let mut q = cluster_core(ps, &weights, k as f64, DEFAULT_MIN_LEVEL);
    q.k = Some(k);
    Ok(q)
}

/// Clusters of member weight at least `tau`; a final remainder lighter than `tau` joins the last cluster.
pub fn quorum_cluster_weighted(ps: &PointSet, tau: f64) -> Result<QuorumClustering> {
    let total: f64 = ps.weights().iter().sum();
    if !(tau > 0.0) || !tau.is_finite() {
        return invalid("tau must be positive and finite");
    }
    if tau > total {
        return invalid(format!("tau = {tau} exceeds the total weight {total}"));
    }
    let mut q = cluster_core(ps, ps.weights(), tau, DEFAULT_MIN_LEVEL);
    q.tau = Some(tau);
    Ok(q)
}

struct Neighbors {
    /// `(distance, index)` ascending; the point itself first among ties at 0.
    list: Vec<(f64, u32)>,
    cap: usize,
    /// The list held every point that was remaining when it was built.
    complete: bool,
}

fn reached(acc: f64, tau: f64) -> bool {
    acc >= tau - 1e-12 * tau
}

fn cluster_core(ps: &PointSet, w: &[f64], tau: f64, min_level: i32) -> QuorumClustering {
    let n = ps.len();
    let mean_w = (w.iter().sum::<f64>() / n as f64).max(f64::MIN_POSITIVE);
    let base_cap = ((2.0 * tau / mean_w).ceil() as usize + 16).min(n);
    let mut removed = vec![false; n];
    let mut remaining = n;
    let mut remaining_weight: f64 = w.iter().sum();

    let rebuild = |p: usize, cap: usize, removed: &[bool]| -> Neighbors {
        let pp = ps.point(p);
        let mut all: Vec<(f64, u32)> =
            (0..n).filter(|&u| !removed[u]).map(|u| (dist(pp, ps.point(u)), u as u32)).collect();
        let key = |a: &(f64, u32)| (a.0, a.1 != p as u32, a.1);
        let cap = cap.min(all.len());
        let complete = cap == all.len();
        if cap < all.len() {
            all.select_nth_unstable_by(cap, |a, b| key(a).partial_cmp(&key(b)).unwrap());
            all.truncate(cap + 1);
        }
        all.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        all.truncate(cap.max(1));
        Neighbors { list: all, cap, complete }
    };

    let mut nbrs: Vec<Neighbors> = (0..n).map(|p| rebuild(p, base_cap, &removed)).collect();

    // Radius of the smallest centered ball at p holding weight tau among remaining points.
    let radius_of = |p: usize, nb: &mut Neighbors, removed: &[bool]| -> f64 {
        loop {
            let mut acc = 0.0;
            for &(d, u) in &nb.list {
                if removed[u as usize] {
                    continue;
                }
                acc += w[u as usize];
                if reached(acc, tau) {
                    return d;
                }
            }
            if nb.complete {
                // Every remaining point is listed; the remainder is lighter than tau.
                return f64::INFINITY;
            }
            *nb = rebuild(p, (nb.cap * 2).max(base_cap), removed);
        }
    };

    let mut rad: Vec<f64> = vec![0.0; n];
    for p in 0..n {
        rad[p] = radius_of(p, &mut nbrs[p], &removed);
    }

    let mut clusters: Vec<Cluster> = Vec::new();
    let mut seen_centers: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut leftover = 0;
    while remaining > 0 {
        if !reached(remaining_weight, tau) {
            // Fold the light remainder into the last cluster.
            let rest: Vec<usize> = (0..n).filter(|&u| !removed[u]).collect();
            leftover = rest.len();
            if let Some(last) = clusters.last_mut() {
                for &u in &rest {
                    last.radius = last.radius.max(dist(&last.center, ps.point(u)));
                    last.members.push(u);
                }
            }
            break;
        }
        let mut best = usize::MAX;
        for p in 0..n {
            if !removed[p] && (best == usize::MAX || rad[p] < rad[best]) {
                best = p;
            }
        }
        let radius = rad[best];
        let mut members = Vec::new();
        let mut acc = 0.0;
        for &(_, u) in &nbrs[best].list {
            if removed[u as usize] {
                continue;
            }
            members.push(u as usize);
            acc += w[u as usize];
            if reached(acc, tau) {
                break;
            }
        }
        for &m in &members {
            removed[m] = true;
            remaining_weight -= w[m];
        }
        remaining -= members.len();

        let mut center = ps.point(best).to_vec();
        let bits: Vec<u64> = center.iter().map(|x| x.to_bits()).collect();
        let repeats = seen_centers.entry(bits).or_insert(0);
        let jitter = *repeats as f64 * exp2i(min_level);
        *repeats += 1;
        center[0] += jitter;
        let cover = members.iter().map(|&m| dist(&center, ps.point(m))).fold(0.0, f64::max);
        clusters.push(Cluster {
            center,
            radius: if jitter == 0.0 { radius } else { cover.max(radius) },
            members: members.clone(),
            center_point: best,
            round_radius: radius,
            jitter,
        });

        for p in 0..n {
            if removed[p] {
                continue;
            }
            let pp = ps.point(p);
            if members.iter().any(|&m| dist(pp, ps.point(m)) <= rad[p]) {
                rad[p] = radius_of(p, &mut nbrs[p], &removed);
            }
        }
    }
    QuorumClustering { clusters, k: None, tau: None, leftover }
}
