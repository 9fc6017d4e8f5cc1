//! The `(1+eps, k)` approximate Voronoi sketch.
//!
//! Build: quorum clusters, grid cells around every cluster at geometrically
//! growing scales (`X`), a base-layer AVD of the lifted clusters (`S`), and
//! their overlay. Every cell with a nonempty region then gets a record, and a
//! cell whose record cannot be certified for the whole cube is split.
//!
//! Query: the smallest cell containing `q` answers
//! `min(dist(q, c_X) + r_X, adknn + dist(q, rep))`.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::avd::point_avd::{AvdMode, PointAvd};
use crate::avd::clusters_for;
use crate::cquadtree::{overlay, CompressedQuadtree, Frame, NodeId};
use crate::error::{invalid, Error, Result};
use crate::geom::{cells_intersecting_ball, dist, exp2i, Ball, CanonicalCube, PointSet, Transform, DEFAULT_MIN_LEVEL};
use crate::knn_query::{KnnConfig, KnnQueryStructure};

/// What the sketch approximates: `d_k` or the weighted `d_tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Count(usize),
    Weight(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KavdConfig {
    /// Grid fineness around clusters: cell width `(eps / (zeta1 d)) 2^j r`.
    pub zeta1: f64,
    /// Accuracy of the base-layer AVD of lifted clusters, as a fraction of `eps`.
    pub avd_ratio: f64,
    pub min_level: i32,
    /// Seed of the shifted quadtree answering the per-cell distance queries.
    pub seed: u64,
    /// Also certify that the returned witness lies in the `(1 +- eps)` band.
    pub certify_witness: bool,
    /// Upper limit on the number of cell records.
    pub max_cells: usize,
    pub parallel: bool,
}

impl Default for KavdConfig {
    fn default() -> Self {
        KavdConfig {
            zeta1: 1.0,
            avd_ratio: 0.125,
            min_level: DEFAULT_MIN_LEVEL,
            seed: 0,
            certify_witness: true,
            max_cells: 4_000_000,
            parallel: true,
        }
    }
}

/// Per-cell data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellRecord {
    /// Cluster whose lifted point the base-layer AVD assigns to the cell.
    pub rep_x: u32,
    /// Real member of that cluster.
    pub pnt_rep_x: u32,
    /// `d_k(rep) <= adknn <= (1 + eps/4) d_k(rep)` where `rep` is the cube center.
    pub adknn: f64,
    pub knnrep: u32,
    /// False when the cell reached the minimum level before it could be certified.
    pub certified: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KavdStats {
    pub clusters: usize,
    pub x_cells: usize,
    pub s_cells: usize,
    pub nodes: usize,
    /// Cells holding a record; the size measure of the sketch.
    pub cells: usize,
    pub uncertified: usize,
    pub refine_rounds: usize,
}

#[derive(Debug, Clone)]
pub struct KAvdSketch {
    pub(crate) dim: usize,
    pub(crate) target: Target,
    pub(crate) eps: f64,
    pub(crate) transform: Transform,
    pub(crate) n: usize,
    pub(crate) centers: Vec<f64>,
    pub(crate) radii: Vec<f64>,
    pub(crate) tree: CompressedQuadtree,
    pub(crate) records: Vec<Option<CellRecord>>,
    pub(crate) stats: KavdStats,
}

pub fn build_kavd(ps: &PointSet, k: usize, eps: f64) -> Result<KAvdSketch> {
    KAvdSketch::build(ps, Target::Count(k), eps, &KavdConfig::default())
}

pub fn build_kavd_weighted(ps: &PointSet, tau: f64, eps: f64) -> Result<KAvdSketch> {
    KAvdSketch::build(ps, Target::Weight(tau), eps, &KavdConfig::default())
}

struct Builder<'a> {
    ps: &'a PointSet,
    padded: &'a PointSet,
    members: Vec<Vec<usize>>,
    centers: &'a [f64],
    radii: &'a [f64],
    by_radius: Vec<usize>,
    knn: KnnQueryStructure,
    target: Target,
    eps: f64,
    dim: usize,
    certify_witness: bool,
    case_c: bool,
    /// Clusters of radius at most `tiny * lower` cannot spoil the first term.
    tiny: f64,
}

impl Builder<'_> {
    fn center(&self, i: usize) -> &[f64] {
        &self.centers[i * self.dim..(i + 1) * self.dim]
    }

    fn record(&self, cube: &CanonicalCube, x: usize) -> Result<(CellRecord, bool)> {
        let eps = self.eps;
        let z = cube.center();
        let delta = cube.half_diagonal();
        let ans = match self.target {
            Target::Count(k) => self.knn.knn_distance(&z, k, eps / 4.0)?,
            Target::Weight(t) => self.knn.knn_distance_weighted(&z, t, eps / 4.0)?,
        };
        let wk = ans.witness;
        let d_wk = dist(&z, self.ps.point(wk));
        let adknn = ans.beta.max(d_wk);
        let lower = ans.lower.max(ans.beta / (1.0 + eps / 4.0));

        let (cx, rx) = (self.center(x), self.radii[x]);
        let t1z = dist(&z, cx) + rx;
        let upper = t1z.min(adknn) + delta;
        let low = (lower - delta).max(0.0);
        let small = self.tiny * low;

        let mut ok = upper <= (1.0 + eps) * low;
        if !ok && self.case_c && rx <= small {
            // Every cluster that can reach within `upper` of the cube is tiny.
            ok = self
                .by_radius
                .iter()
                .take_while(|&&i| self.radii[i] > small)
                .all(|&i| cube.min_dist(self.center(i)) - self.radii[i] > upper);
        }

        let member = self.members[x]
            .iter()
            .copied()
            .filter(|&m| !self.padded.is_synthetic(m))
            .map(|m| (dist(&z, self.padded.point(m)), m))
            .max_by(|a, b| a.0.total_cmp(&b.0));
        if ok && self.certify_witness {
            // Lower bounds below hold at every q of the cube since d_k(q) <= upper.
            let w1_ok = match member {
                Some((dm, _)) => rx <= eps * low / 2.0 || dm - delta >= (1.0 - eps) * upper,
                None => false,
            };
            let wk_ok = d_wk - delta >= (1.0 - eps) * upper || (w1_ok && member.map(|m| m.1) == Some(wk));
            let t1_can_win = t1z - delta <= adknn + delta;
            let t2_can_win = adknn < t1z + delta;
            ok = (!t1_can_win || w1_ok) && (!t2_can_win || wk_ok);
        }
        let pnt = member.map(|m| m.1).unwrap_or(wk);
        let rec = CellRecord {
            rep_x: x as u32,
            pnt_rep_x: pnt as u32,
            adknn,
            knnrep: wk as u32,
            certified: true,
        };
        Ok((rec, ok))
    }
}

impl KAvdSketch {
    pub fn build(ps: &PointSet, target: Target, eps: f64, config: &KavdConfig) -> Result<KAvdSketch> {
        if !(eps > 0.0 && eps <= 0.5) {
            return invalid(format!("eps = {eps} outside (0, 1/2]"));
        }
        if !(config.zeta1 > 0.0) || !config.zeta1.is_finite() {
            return invalid("zeta1 must be positive");
        }
        if !(config.avd_ratio > 0.0 && config.avd_ratio < 1.0) {
            return invalid("avd_ratio must lie in (0, 1)");
        }
        if let Target::Weight(t) = target {
            if !(t > 0.0) {
                return invalid("tau must be positive");
            }
        }
        let d = ps.dim();
        let min_level = config.min_level;
        let (padded, clustering) = clusters_for(ps, target)?;
        let m = clustering.len();
        let mut centers = Vec::with_capacity(m * d);
        let mut radii = Vec::with_capacity(m);
        for c in &clustering.clusters {
            centers.extend_from_slice(&c.center);
            radii.push(c.radius);
        }

        // X: grid cells around every cluster at scales 2^j r.
        let floor = exp2i(min_level);
        let jmax = ((32.0 / eps).log2() + 1.0).ceil() as i32;
        let mut x_cells: HashSet<CanonicalCube> = HashSet::new();
        for (i, c) in clustering.clusters.iter().enumerate() {
            if radii[i] == 0.0 {
                // Coincident members: one minimal-level cell at the center.
                let ball = Ball::new(c.center.clone(), 0.0)?;
                x_cells.extend(cells_intersecting_ball(&ball, floor, min_level)?);
                continue;
            }
            let r_eff = radii[i].max(floor);
            for j in 0..=jmax {
                let big = exp2i(j) * r_eff;
                let psi = (eps / (config.zeta1 * d as f64) * big).max(floor);
                let ball = Ball::new(c.center.clone(), big)?;
                x_cells.extend(cells_intersecting_ball(&ball, psi, min_level)?);
            }
        }
        let x_list: Vec<(CanonicalCube, Option<u64>)> = x_cells.into_iter().map(|c| (c, None)).collect();
        let x_tree = CompressedQuadtree::from_cubes(d, &x_list, Frame::identity(d))?;

        // S: base-layer AVD of the lifted clusters.
        let sites: Vec<Vec<f64>> = clustering
            .clusters
            .iter()
            .map(|c| {
                let mut s = c.center.clone();
                s.push(c.radius);
                s
            })
            .collect();
        let a = config.avd_ratio * eps;
        let avd = PointAvd::build(&sites, a, AvdMode::BaseLayer, min_level)?;

        let ov = overlay(&x_tree, avd.tree())?;
        let mut tree = ov.tree;
        let s_tree = avd.tree();
        let mut site: Vec<Option<u32>> = ov
            .from_b
            .iter()
            .map(|u| u.and_then(|u| s_tree.node(u).payload).map(|s| s as u32))
            .collect();

        let knn = KnnQueryStructure::build_with(ps, KnnConfig { seed: config.seed, ..KnnConfig::default() })?;
        let mut by_radius: Vec<usize> = (0..m).collect();
        by_radius.sort_by(|&a, &b| radii[b].total_cmp(&radii[a]));
        let builder = Builder {
            ps,
            padded: &padded,
            members: clustering.clusters.iter().map(|c| c.members.clone()).collect(),
            centers: &centers,
            radii: &radii,
            by_radius,
            knn,
            target,
            eps,
            dim: d,
            certify_witness: config.certify_witness,
            case_c: avd.uncertified() == 0,
            tiny: (eps - a) / (3.0 + 2.0 * a),
        };

        let mut records: Vec<Option<CellRecord>> = vec![None; tree.len()];
        let mut pending: Vec<NodeId> =
            (0..tree.len()).filter(|&v| site[v].is_some() && !tree.region_is_empty(v)).collect();
        let mut stats = KavdStats {
            clusters: m,
            x_cells: x_list.len(),
            s_cells: avd.cells().len(),
            ..KavdStats::default()
        };
        let mut live = 0usize;
        while !pending.is_empty() {
            stats.refine_rounds += 1;
            let work = |&v: &NodeId| -> Result<(NodeId, CellRecord, bool)> {
                let x = site[v].expect("pending cells lie under a base-layer cell") as usize;
                let (rec, ok) = builder.record(&tree.node(v).cube, x)?;
                Ok((v, rec, ok))
            };
            let results: Vec<(NodeId, CellRecord, bool)> = if config.parallel {
                pending.par_iter().map(work).collect::<Result<_>>()?
            } else {
                pending.iter().map(work).collect::<Result<_>>()?
            };
            pending.clear();
            for (v, mut rec, ok) in results {
                if ok || tree.node(v).cube.level() <= min_level {
                    if !ok {
                        rec.certified = false;
                        stats.uncertified += 1;
                    }
                    records[v] = Some(rec);
                    live += 1;
                    continue;
                }
                for c in tree.split(v) {
                    site.push(site[v]);
                    records.push(None);
                    debug_assert_eq!(site.len(), c + 1);
                    if !tree.region_is_empty(c) {
                        pending.push(c);
                    }
                }
            }
            if live + pending.len() > config.max_cells {
                return Err(Error::ResourceExhausted(format!(
                    "more than {} cells; raise max_cells or eps",
                    config.max_cells
                )));
            }
        }
        stats.nodes = tree.len();
        stats.cells = live;
        Ok(KAvdSketch {
            dim: d,
            target,
            eps,
            transform: ps.transform().clone(),
            n: ps.real_count(),
            centers,
            radii,
            tree,
            records,
            stats,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn target(&self) -> Target {
        self.target
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    /// Number of real input points.
    pub fn input_len(&self) -> usize {
        self.n
    }

    pub fn stats(&self) -> &KavdStats {
        &self.stats
    }

    pub fn tree(&self) -> &CompressedQuadtree {
        &self.tree
    }

    pub fn cluster_count(&self) -> usize {
        self.radii.len()
    }

    pub fn cluster_center(&self, i: usize) -> &[f64] {
        &self.centers[i * self.dim..(i + 1) * self.dim]
    }

    pub fn cluster_radius(&self, i: usize) -> f64 {
        self.radii[i]
    }

    /// Cells with records as `(cube, record)`.
    pub fn cells(&self) -> impl Iterator<Item = (&CanonicalCube, &CellRecord)> + '_ {
        self.records
            .iter()
            .enumerate()
            .filter_map(move |(v, r)| r.as_ref().map(|r| (&self.tree.node(v).cube, r)))
    }

    /// The cell answering `q` and its record.
    pub fn locate_cell(&self, q: &[f64]) -> Result<(NodeId, &CellRecord)> {
        if q.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: q.len(), line: None });
        }
        if q.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::OutOfDomain(format!("query {q:?} outside [0,1]^{}", self.dim)));
        }
        let v = self.tree.locate(q)?;
        let rec = self.records[v]
            .as_ref()
            .ok_or_else(|| Error::ContractViolation(format!("cell {v} has no record")))?;
        Ok((v, rec))
    }

    /// `(value, witness)` in normalized units; `d_k(q) <= value <= (1+eps) d_k(q)`.
    pub fn query(&self, q: &[f64]) -> Result<(f64, usize)> {
        let (v, rec) = self.locate_cell(q)?;
        let x = rec.rep_x as usize;
        let t1 = dist(q, self.cluster_center(x)) + self.radii[x];
        let t2 = rec.adknn + dist(q, &self.tree.node(v).cube.center());
        if t1 <= t2 {
            Ok((t1, rec.pnt_rep_x as usize))
        } else {
            Ok((t2, rec.knnrep as usize))
        }
    }

    /// Query in input coordinates; the value is returned in input units.
    pub fn query_input(&self, raw: &[f64]) -> Result<(f64, usize)> {
        let q = self.transform.to_normalized(raw);
        let (v, w) = self.query(&q)?;
        Ok((self.transform.distance_to_input(v), w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::exact_knn_distance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_set(n: usize, seed: u64) -> PointSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen(), rng.gen()]).collect();
        PointSet::normalize(&pts, None).unwrap()
    }

    #[test]
    fn single_cluster_band() {
        let ps = random_set(8, 1);
        let sk = build_kavd(&ps, 8, 0.25).unwrap();
        assert_eq!(sk.cluster_count(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let q = vec![rng.gen(), rng.gen()];
            let (v, _) = sk.query(&q).unwrap();
            let dk = exact_knn_distance(&ps, &q, 8).unwrap();
            assert!(v >= dk && v <= 1.25 * dk, "{v} vs {dk}");
        }
    }

    #[test]
    fn rejects_bad_eps_and_queries() {
        let ps = random_set(16, 3);
        assert!(build_kavd(&ps, 4, 0.0).is_err());
        assert!(build_kavd(&ps, 4, 0.75).is_err());
        let sk = build_kavd(&ps, 4, 0.5).unwrap();
        assert!(matches!(sk.query(&[1.5, 0.2]), Err(Error::OutOfDomain(_))));
        assert!(sk.query(&[0.5]).is_err());
    }

    #[test]
    fn coincident_points() {
        let pts = vec![vec![0.3, 0.3]; 6];
        let ps = PointSet::normalize(&pts, None).unwrap();
        let sk = build_kavd(&ps, 3, 0.25).unwrap();
        // The jittered second center can only be separated at the last level.
        assert!(sk.stats().uncertified <= 256);
        assert!(sk.query(&[0.5, 0.5]).unwrap().0 <= 1e-15);
        let (v, _) = sk.query(&[0.1, 0.9]).unwrap();
        let dk = exact_knn_distance(&ps, &[0.1, 0.9], 3).unwrap();
        assert!(v >= dk && v <= 1.25 * dk);
    }
}
