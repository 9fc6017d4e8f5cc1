//! Quadtree approximate Voronoi diagram of a small point set.
//!
//! A cube stops splitting once one site is certified as a `(1+eps)`-nearest
//! neighbor for every point of the cube: either all corners share the same
//! exact nearest site (the closed Voronoi cell is convex), or the cube is small
//! next to the distance from its center to the nearest site.

use crate::cquadtree::{CompressedQuadtree, Frame};
use crate::error::{invalid, Error, Result};
use crate::geom::{check_finite, dist2, CanonicalCube, DEFAULT_MIN_LEVEL};

/// Which query region the diagram has to serve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AvdMode {
    /// Queries anywhere in `[0,1]^D`.
    Full,
    /// Queries on the face `x_D = 0` only; cells are the `(D-1)`-dimensional base faces.
    BaseLayer,
}

#[derive(Debug, Clone)]
pub struct PointAvd {
    sites: Vec<Vec<f64>>,
    eps: f64,
    mode: AvdMode,
    cells: Vec<(CanonicalCube, u32)>,
    tree: CompressedQuadtree,
    uncertified: usize,
}

/// Diagram over `points` in `[0,1]^D` (sites may lie outside).
pub fn build_point_avd(points: &[Vec<f64>], eps: f64) -> Result<PointAvd> {
    PointAvd::build(points, eps, AvdMode::Full, DEFAULT_MIN_LEVEL)
}

struct Ctx<'a> {
    sites: &'a [Vec<f64>],
    eps: f64,
    mode: AvdMode,
    min_level: i32,
}

impl Ctx<'_> {
    /// Squared distance from a query point given in cell coordinates to a site.
    fn d2(&self, x: &[f64], s: &[f64]) -> f64 {
        match self.mode {
            AvdMode::Full => dist2(x, s),
            AvdMode::BaseLayer => {
                let last = s[x.len()];
                dist2(x, &s[..x.len()]) + last * last
            }
        }
    }

    fn cube_bounds2(&self, c: &CanonicalCube, s: &[f64]) -> (f64, f64) {
        let d = c.dim();
        let extra = if self.mode == AvdMode::BaseLayer { s[d] * s[d] } else { 0.0 };
        let lo = c.min_dist2(&s[..d]) + extra;
        let hi = c.max_dist(&s[..d]).powi(2) + extra;
        (lo, hi)
    }

    fn nearest(&self, x: &[f64], cand: &[u32]) -> u32 {
        let mut best = cand[0];
        let mut bd = self.d2(x, &self.sites[best as usize]);
        for &s in &cand[1..] {
            let v = self.d2(x, &self.sites[s as usize]);
            if v < bd {
                bd = v;
                best = s;
            }
        }
        best
    }

    /// Returns the site if `c` can be a cell, otherwise `None`. Also filters `cand`.
    fn certify(&self, c: &CanonicalCube, cand: &mut Vec<u32>) -> Option<u32> {
        let mut best_hi = f64::INFINITY;
        let bounds: Vec<(f64, f64)> = cand.iter().map(|&s| self.cube_bounds2(c, &self.sites[s as usize])).collect();
        for b in &bounds {
            best_hi = best_hi.min(b.1);
        }
        let mut i = 0;
        cand.retain(|_| {
            let keep = bounds[i].0 <= best_hi;
            i += 1;
            keep
        });
        if cand.len() == 1 {
            return Some(cand[0]);
        }
        let z = c.center();
        let a = self.nearest(&z, cand);
        let da = self.d2(&z, &self.sites[a as usize]).sqrt();
        let delta = c.half_diagonal();
        if delta * (2.0 + self.eps) <= self.eps * da {
            return Some(a);
        }
        let sa = &self.sites[a as usize];
        let all_corners = c.corners().iter().all(|x| {
            let va = self.d2(x, sa);
            cand.iter().all(|&s| va <= self.d2(x, &self.sites[s as usize]))
        });
        if all_corners {
            return Some(a);
        }
        if c.level() <= self.min_level {
            return None;
        }
        None
    }
}

impl PointAvd {
    pub fn build(points: &[Vec<f64>], eps: f64, mode: AvdMode, min_level: i32) -> Result<PointAvd> {
        if points.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !(eps > 0.0 && eps < 1.0) {
            return invalid(format!("eps = {eps} outside (0, 1)"));
        }
        let big_d = points[0].len();
        let cell_dim = match mode {
            AvdMode::Full => big_d,
            AvdMode::BaseLayer => big_d.checked_sub(1).filter(|&d| d >= 1).ok_or_else(|| {
                Error::InvalidArgument("base-layer diagram needs sites of dimension at least 2".into())
            })?,
        };
        for p in points {
            if p.len() != big_d {
                return Err(Error::DimensionMismatch { expected: big_d, found: p.len(), line: None });
            }
            check_finite(p, "site")?;
        }
        let ctx = Ctx { sites: points, eps, mode, min_level };
        let mut cells = Vec::new();
        let mut uncertified = 0;
        let mut stack: Vec<(CanonicalCube, Vec<u32>)> =
            vec![(CanonicalCube::root(cell_dim), (0..points.len() as u32).collect())];
        while let Some((c, mut cand)) = stack.pop() {
            match ctx.certify(&c, &mut cand) {
                Some(s) => cells.push((c, s)),
                None if c.level() <= min_level => {
                    let s = ctx.nearest(&c.center(), &cand);
                    uncertified += 1;
                    cells.push((c, s));
                }
                None => {
                    for o in (0..1usize << cell_dim).rev() {
                        stack.push((c.child(o), cand.clone()));
                    }
                }
            }
        }
        let with_payload: Vec<(CanonicalCube, Option<u64>)> =
            cells.iter().map(|(c, s)| (c.clone(), Some(*s as u64))).collect();
        let tree = CompressedQuadtree::from_cubes(cell_dim, &with_payload, Frame::identity(cell_dim))?;
        Ok(PointAvd { sites: points.to_vec(), eps, mode, cells, tree, uncertified })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn mode(&self) -> AvdMode {
        self.mode
    }

    pub fn sites(&self) -> &[Vec<f64>] {
        &self.sites
    }

    /// Leaf cells with their assigned site; they tile the query region.
    pub fn cells(&self) -> &[(CanonicalCube, u32)] {
        &self.cells
    }

    pub fn tree(&self) -> &CompressedQuadtree {
        &self.tree
    }

    /// Cells that hit the minimum level before they could be certified.
    pub fn uncertified(&self) -> usize {
        self.uncertified
    }

    /// Site assigned to the smallest cell containing `q`. In base-layer mode `q` may be
    /// given with or without its zero last coordinate.
    pub fn query(&self, q: &[f64]) -> Result<usize> {
        let d = self.tree.dim();
        let q = match self.mode {
            AvdMode::BaseLayer if q.len() == d + 1 => &q[..d],
            _ => q,
        };
        let v = self.tree.locate(q)?;
        self.tree
            .node(v)
            .payload
            .map(|s| s as usize)
            .ok_or_else(|| Error::ContractViolation("query landed outside every cell".into()))
    }

    /// Cells whose low face lies on `x_D = 0`, projected to `R^{D-1}`.
    pub fn clip_to_base(&self) -> Vec<(CanonicalCube, u32)> {
        match self.mode {
            AvdMode::BaseLayer => self.cells.clone(),
            AvdMode::Full => self
                .cells
                .iter()
                .filter(|(c, _)| *c.corner().last().unwrap() == 0)
                .map(|(c, s)| {
                    let corner = &c.corner()[..c.dim() - 1];
                    (CanonicalCube::new(c.level(), corner.iter().copied().collect::<crate::geom::Lattice>()).unwrap(), *s)
                })
                .collect(),
        }
    }
}
