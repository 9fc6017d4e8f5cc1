//! Linear-space structure answering `(1+eps)`-approximate `k`-th nearest
//! neighbor distance queries with `k` and `eps` chosen at query time.
//!
//! A randomly shifted compressed quadtree gives a rough bound `R` with
//! `d_k <= R`; a level-by-level sweep over distance intervals then narrows the
//! answer until every live cell is small relative to the lower bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cquadtree::{CompressedQuadtree, Frame, NodeId};
use crate::error::{invalid, Error, Result};
use crate::geom::{dist, PointSet, DEFAULT_MIN_LEVEL};

#[derive(Debug, Clone, PartialEq)]
pub struct KnnConfig {
    /// Confidence exponent of the rough phase.
    pub c: f64,
    pub seed: u64,
    pub min_level: i32,
    /// Physically drop cells outside `[lo, hi]`. Turning it off keeps them (marked dead),
    /// which must not change any answer.
    pub prune: bool,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig { c: 3.0, seed: 0, min_level: DEFAULT_MIN_LEVEL, prune: true }
    }
}

/// Result of a refined query.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnAnswer {
    /// Upper bound with `d_k <= beta <= (1 + eps / 8) d_k`.
    pub beta: f64,
    /// Index (in the structure's point set) of a point at distance within `(1 +- eps/8) d_k`.
    pub witness: usize,
    /// Lower bound `lo <= d_k` at termination.
    pub lower: f64,
    /// Largest frontier seen during the sweep.
    pub max_frontier: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct KnnQueryStructure {
    ps: PointSet,
    tree: CompressedQuadtree,
    config: KnnConfig,
    total_weight: f64,
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    node: NodeId,
    /// Set for the single-point entries a merged leaf expands into.
    point: Option<usize>,
    lo: f64,
    hi: f64,
    w: f64,
    diam: f64,
    level: i32,
    dead: bool,
}

#[inline]
fn reached(acc: f64, target: f64) -> bool {
    acc >= target - 1e-12 * target.abs()
}

impl KnnQueryStructure {
    pub fn build(ps: &PointSet, seed: u64) -> Result<Self> {
        Self::build_with(ps, KnnConfig { seed, ..KnnConfig::default() })
    }

    /// Builds over the non-synthetic points of `ps`. The tree domain covers `[0,1]^d`
    /// and the bounding box of the points.
    pub fn build_with(ps: &PointSet, config: KnnConfig) -> Result<Self> {
        let real = ps.real_indices();
        if real.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !(config.c > 2.0) {
            return invalid("the rough-phase exponent c must exceed 2");
        }
        let d = ps.dim();
        let mut lo = vec![0.0f64; d];
        let mut hi = vec![1.0f64; d];
        for &i in &real {
            let p = ps.point(i);
            for j in 0..d {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
        let span = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let b: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..=0.5)).collect();
        let frame = Frame::shifted(&lo, span, &b);
        let tree = CompressedQuadtree::from_points_in(ps, &real, frame, config.min_level)?;
        let total_weight = tree.node(tree.root()).weight;
        Ok(KnnQueryStructure { ps: ps.clone(), tree, config, total_weight })
    }

    pub fn tree(&self) -> &CompressedQuadtree {
        &self.tree
    }

    pub fn points(&self) -> &PointSet {
        &self.ps
    }

    pub fn config(&self) -> &KnnConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.tree.node(self.tree.root()).count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    fn check_query(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.ps.dim() {
            return Err(Error::DimensionMismatch { expected: self.ps.dim(), found: q.len(), line: None });
        }
        if q.iter().any(|x| !x.is_finite()) {
            return invalid("query has a non-finite coordinate");
        }
        Ok(())
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.len() {
            return invalid(format!("k = {k} outside [1, {}]", self.len()));
        }
        Ok(())
    }

    fn rough(&self, q: &[f64], target: f64) -> Result<f64> {
        let path = self.tree.locate_path(q)?;
        // Weights decrease along the path; find the last node still holding `target`.
        let pos = path.partition_point(|&v| reached(self.tree.node(v).weight, target));
        let v = path[pos.max(1) - 1];
        let bbox = self.tree.node(v).bbox.as_ref().expect("nonempty node has a box");
        Ok(bbox.max_dist(q))
    }

    /// `R >= d_k(P, q)`: distance from `q` to the furthest corner of the box of the lowest
    /// node on the location path holding at least `k` points.
    pub fn rough_knn_distance(&self, q: &[f64], k: usize) -> Result<f64> {
        self.check_query(q)?;
        self.check_k(k)?;
        self.rough(q, k as f64)
    }

    /// Weighted analogue of [`Self::rough_knn_distance`].
    pub fn rough_weighted_distance(&self, q: &[f64], tau: f64) -> Result<f64> {
        self.check_query(q)?;
        self.check_tau(tau)?;
        self.rough(q, tau)
    }

    fn check_tau(&self, tau: f64) -> Result<()> {
        if !(tau > 0.0) || !reached(self.total_weight, tau) {
            return invalid(format!("tau = {tau} outside (0, {}]", self.total_weight));
        }
        Ok(())
    }

    fn check_eps(eps: f64) -> Result<()> {
        if !(eps > 0.0 && eps <= 1.0) {
            return invalid(format!("eps = {eps} outside (0, 1]"));
        }
        Ok(())
    }

    /// `(beta, witness)` with `d_k <= beta <= (1+eps) d_k` and the witness inside the
    /// `(1 +- eps) d_k` band.
    pub fn knn_distance(&self, q: &[f64], k: usize, eps: f64) -> Result<KnnAnswer> {
        self.check_query(q)?;
        self.check_k(k)?;
        Self::check_eps(eps)?;
        self.refine(q, k as f64, eps, None)
    }

    /// Weighted analogue: `d_tau` is the smallest radius whose ball holds weight `tau`.
    pub fn knn_distance_weighted(&self, q: &[f64], tau: f64, eps: f64) -> Result<KnnAnswer> {
        self.check_query(q)?;
        self.check_tau(tau)?;
        Self::check_eps(eps)?;
        self.refine(q, tau, eps, None)
    }

    /// Same as [`Self::knn_distance`] and records `(lo_i, hi_i)` after every iteration.
    pub fn knn_distance_traced(&self, q: &[f64], k: usize, eps: f64, trace: &mut Vec<(f64, f64)>) -> Result<KnnAnswer> {
        self.check_query(q)?;
        self.check_k(k)?;
        Self::check_eps(eps)?;
        self.refine(q, k as f64, eps, Some(trace))
    }

    fn entry(&self, q: &[f64], v: NodeId) -> Entry {
        let n = self.tree.node(v);
        let b = n.bbox.as_ref().expect("nonempty node has a box");
        Entry {
            node: v,
            point: None,
            lo: b.min_dist(q),
            hi: b.max_dist(q),
            w: n.weight,
            diam: b.diameter(),
            level: n.cube.level(),
            dead: false,
        }
    }

    fn refine(&self, q: &[f64], target: f64, eps: f64, mut trace: Option<&mut Vec<(f64, f64)>>) -> Result<KnnAnswer> {
        let r = self.rough(q, target)?;
        let scale = self.tree.frame().scale;

        // Seed: cells of side >= R that meet ball(q, R).
        let mut frontier: Vec<Entry> = Vec::new();
        let mut stack = vec![self.tree.root()];
        while let Some(v) = stack.pop() {
            let e = self.entry(q, v);
            if e.lo > r {
                continue;
            }
            let n = self.tree.node(v);
            let children_large = n.children.iter().all(|&c| self.tree.node(c).cube.side() / scale >= r);
            if !n.is_leaf() && children_large {
                stack.extend(n.children.iter().copied());
            } else {
                frontier.push(e);
            }
        }

        let mut residual = target;
        let mut max_frontier = 0;
        let mut iterations = 0;
        let mut order: Vec<usize> = Vec::new();
        let (mut lo, mut hi);
        loop {
            iterations += 1;
            // hi: smallest x with the weight of cells entirely within x reaching the residual.
            hi = threshold(&frontier, &mut order, residual, |e| e.hi).min(r);
            // lo: smallest x with the weight of cells touching ball(q, x) reaching the residual.
            lo = threshold(&frontier, &mut order, residual, |e| e.lo);
            if let Some(t) = trace.as_deref_mut() {
                t.push((lo, hi));
            }
            for e in frontier.iter_mut() {
                if e.dead {
                    continue;
                }
                if e.hi < lo || e.lo > hi {
                    e.dead = true;
                }
            }
            if self.config.prune {
                let mut removed_left = 0.0;
                frontier.retain(|e| {
                    if !e.dead {
                        return true;
                    }
                    if e.hi < lo {
                        removed_left += e.w;
                    }
                    false
                });
                residual -= removed_left;
            }
            max_frontier = max_frontier.max(frontier.iter().filter(|e| !e.dead).count());
            if hi <= 0.0 {
                break;
            }
            let limit = eps / 8.0 * lo;
            let expandable = |e: &Entry| !e.dead && e.diam > limit && e.point.is_none();
            let sweep = frontier.iter().filter(|e| expandable(e)).map(|e| e.level).max();
            let Some(sweep) = sweep else { break };
            let mut next = Vec::with_capacity(frontier.len() * 2);
            for e in frontier.drain(..) {
                if !(expandable(&e) && e.level == sweep) {
                    next.push(e);
                    continue;
                }
                let n = self.tree.node(e.node);
                if n.is_leaf() {
                    // Distinct points merged at the minimum level: list them individually.
                    for &p in &n.points {
                        let x = dist(q, self.ps.point(p));
                        next.push(Entry {
                            node: e.node,
                            point: Some(p),
                            lo: x,
                            hi: x,
                            w: self.ps.weight(p),
                            diam: 0.0,
                            level: e.level,
                            dead: false,
                        });
                    }
                } else {
                    for &c in &n.children {
                        next.push(self.entry(q, c));
                    }
                }
            }
            frontier = next;
        }

        // Representative distances: the residual-th one is the witness.
        let mut reps: Vec<(f64, f64, usize)> = frontier
            .iter()
            .filter(|e| !e.dead || !self.config.prune && e.lo <= hi)
            .map(|e| {
                let p = e.point.unwrap_or_else(|| self.tree.node(e.node).rep.expect("nonempty node"));
                (dist(q, self.ps.point(p)), e.w, p)
            })
            .collect();
        reps.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
        let mut acc = 0.0;
        let mut witness = reps.last().map(|x| x.2);
        let goal = if self.config.prune { residual } else { target };
        for &(_, w, p) in &reps {
            acc += w;
            if reached(acc, goal) {
                witness = Some(p);
                break;
            }
        }
        let witness = witness.ok_or_else(|| Error::ContractViolation("empty frontier".into()))?;
        Ok(KnnAnswer { beta: hi, witness, lower: lo, max_frontier, iterations })
    }
}

/// Smallest value `x = key(e)` such that the entries with `key <= x` weigh at least `target`.
fn threshold(frontier: &[Entry], order: &mut Vec<usize>, target: f64, key: impl Fn(&Entry) -> f64) -> f64 {
    order.clear();
    order.extend(0..frontier.len());
    order.sort_by(|&a, &b| key(&frontier[a]).total_cmp(&key(&frontier[b])));
    let mut acc = 0.0;
    for &i in order.iter() {
        acc += frontier[i].w;
        if reached(acc, target) {
            return key(&frontier[i]);
        }
    }
    order.last().map_or(0.0, |&i| key(&frontier[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_is_exact() {
        let ps = PointSet::from_coords(2, vec![0.6, 0.55], None).unwrap();
        let s = KnnQueryStructure::build(&ps, 1).unwrap();
        let q = [0.1, 0.2];
        let d = dist(&q, ps.point(0));
        assert_eq!(s.rough_knn_distance(&q, 1).unwrap(), d);
        let a = s.knn_distance(&q, 1, 0.5).unwrap();
        assert_eq!(a.beta, d);
        assert_eq!(a.witness, 0);
    }

    #[test]
    fn coincident_query_returns_zero() {
        let ps = PointSet::from_coords(1, vec![0.5, 0.5, 0.7], None).unwrap();
        let s = KnnQueryStructure::build(&ps, 3).unwrap();
        let a = s.knn_distance(&[0.5], 2, 0.1).unwrap();
        assert_eq!(a.beta, 0.0);
        assert!(a.witness < 2);
    }

    #[test]
    fn rejects_bad_parameters() {
        let ps = PointSet::from_coords(1, vec![0.5, 0.6], None).unwrap();
        let s = KnnQueryStructure::build(&ps, 0).unwrap();
        assert!(s.knn_distance(&[0.5], 3, 0.1).is_err());
        assert!(s.knn_distance(&[0.5], 1, 0.0).is_err());
        assert!(s.knn_distance(&[0.5, 0.1], 1, 0.1).is_err());
        assert!(s.knn_distance(&[7.0], 1, 0.1).is_err());
        assert!(s.knn_distance_weighted(&[0.5], 2.5, 0.1).is_err());
    }

    #[test]
    fn weighted_heavy_point() {
        let ps = PointSet::from_coords(1, vec![0.5, 0.9], Some(vec![5.0, 1.0])).unwrap();
        let s = KnnQueryStructure::build(&ps, 0).unwrap();
        let a = s.knn_distance_weighted(&[0.2], 5.0, 0.1).unwrap();
        assert!((a.beta - 0.3).abs() < 1e-12);
        assert_eq!(a.witness, 0);
    }
}
