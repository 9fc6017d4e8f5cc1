//! Geometric primitives: points, the product norm on lifted points, canonical
//! grids and cubes, and normalization of raw input.

use smallvec::SmallVec;

use crate::error::{invalid, Error, Result};

/// Finest lattice depth. Lattice keys are integers in `[0, 2^MAX_DEPTH)`.
pub const MAX_DEPTH: i32 = 62;
/// Default minimum cube level (side `2^-52`, the mantissa depth of an `f64` in `[1/2, 1)`).
pub const DEFAULT_MIN_LEVEL: i32 = -52;
/// Coordinate used for every padding point.
pub const SYNTHETIC_COORD: f64 = 4.0;

/// Integer lattice coordinates, inline for `d <= 4`.
pub type Lattice = SmallVec<[u64; 4]>;

pub(crate) fn check_finite(xs: &[f64], what: &str) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        invalid(format!("{what} has a non-finite coordinate"))
    }
}

/// A point of `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return invalid("a point needs at least one coordinate");
        }
        check_finite(&coords, "point")?;
        Ok(Point(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

#[inline]
pub fn euclid_norm(u: &[f64]) -> f64 {
    u.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `sqrt(u_1^2 + ... + u_d^2) + |u_{d+1}|` for a vector of `R^{d+1}`.
pub fn product_norm(u: &[f64]) -> Result<f64> {
    if u.len() < 2 {
        return invalid("product norm needs at least two components");
    }
    check_finite(u, "product-norm argument")?;
    let (head, last) = u.split_at(u.len() - 1);
    Ok(euclid_norm(head) + last[0].abs())
}

/// Product-norm distance between the lifted query `(q, 0)` and the lifted ball `(c, r)`.
#[inline]
pub fn lifted_dist(q: &[f64], c: &[f64], r: f64) -> f64 {
    dist(q, c) + r.abs()
}

/// A ball of `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        check_finite(&center, "ball center")?;
        if !(radius >= 0.0) || !radius.is_finite() {
            return invalid("ball radius must be finite and nonnegative");
        }
        Ok(Ball { center, radius })
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        dist(&self.center, p) <= self.radius
    }

    pub fn lift(&self) -> LiftedPoint {
        LiftedPoint { base: self.center.clone(), last: self.radius }
    }
}

/// A ball `(c, r)` seen as the point `(c, r)` of `R^{d+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedPoint {
    pub base: Vec<f64>,
    pub last: f64,
}

impl LiftedPoint {
    pub fn new(base: Vec<f64>, last: f64) -> Result<Self> {
        check_finite(&base, "lifted point")?;
        if !(last >= 0.0) || !last.is_finite() {
            return invalid("lifted coordinate must be finite and nonnegative");
        }
        Ok(LiftedPoint { base, last })
    }

    /// The query point `(q, 0)`.
    pub fn query(q: &[f64]) -> Self {
        LiftedPoint { base: q.to_vec(), last: 0.0 }
    }

    pub fn coords(&self) -> Vec<f64> {
        let mut v = self.base.clone();
        v.push(self.last);
        v
    }

    pub fn product_dist(&self, other: &LiftedPoint) -> f64 {
        dist(&self.base, &other.base) + (self.last - other.last).abs()
    }
}

/// Lattice id `floor(p_i / width)` of the half-open grid cell containing `p`.
pub fn grid_cell(p: &[f64], width: f64) -> Result<Vec<i64>> {
    if !(width > 0.0) || !width.is_finite() {
        return invalid("grid width must be positive and finite");
    }
    check_finite(p, "point")?;
    p.iter()
        .map(|&x| {
            let c = (x / width).floor();
            if c.abs() >= 9.0e18 {
                invalid("grid index overflows i64")
            } else {
                Ok(c as i64)
            }
        })
        .collect()
}

/// Low corner of the grid cell with lattice id `cell`.
pub fn grid_cell_corner(cell: &[i64], width: f64) -> Vec<f64> {
    cell.iter().map(|&c| c as f64 * width).collect()
}

#[inline]
pub(crate) fn exp2i(level: i32) -> f64 {
    f64::powi(2.0, level)
}

/// Largest `l` with `2^l <= x`, for finite `x > 0`.
pub fn floor_log2(x: f64) -> i32 {
    let mut l = x.log2().floor() as i32;
    while exp2i(l) > x {
        l -= 1;
    }
    while exp2i(l + 1) <= x {
        l += 1;
    }
    l
}

/// Finest-depth lattice key of a point of `[0,1]^d`; `x = 1` lands in the last cell.
pub fn point_key(p: &[f64]) -> Result<Lattice> {
    let top = 1u64 << MAX_DEPTH;
    let scale = exp2i(MAX_DEPTH);
    let mut key = Lattice::with_capacity(p.len());
    for &x in p {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutOfDomain(format!("coordinate {x} is outside [0, 1]")));
        }
        let v = (x * scale).floor() as u64;
        key.push(v.min(top - 1));
    }
    Ok(key)
}

/// A power-of-two grid cell nested in `[0,1]^d`: side `2^level`, low corner `corner * 2^level`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalCube {
    level: i32,
    corner: Lattice,
}

impl CanonicalCube {
    pub fn new(level: i32, corner: impl Into<Lattice>) -> Result<Self> {
        let corner = corner.into();
        if !(-MAX_DEPTH..=0).contains(&level) {
            return invalid(format!("cube level {level} outside [-{MAX_DEPTH}, 0]"));
        }
        if corner.is_empty() {
            return invalid("cube needs at least one dimension");
        }
        let n = 1u64 << (-level);
        if corner.iter().any(|&c| c >= n) {
            return invalid("cube corner outside the unit cube");
        }
        Ok(CanonicalCube { level, corner })
    }

    /// The unit cube `[0,1]^d`.
    pub fn root(dim: usize) -> Self {
        CanonicalCube { level: 0, corner: smallvec::smallvec![0; dim] }
    }

    /// The cube at `level` that contains the finest-depth `key`.
    pub fn containing_key(key: &[u64], level: i32) -> Self {
        let sh = (MAX_DEPTH + level) as u32;
        CanonicalCube { level, corner: key.iter().map(|&k| k >> sh).collect() }
    }

    /// The cube at `level` containing `p` (half-open convention, clamped at `x = 1`).
    pub fn containing_point(p: &[f64], level: i32) -> Result<Self> {
        if !(-MAX_DEPTH..=0).contains(&level) {
            return invalid(format!("cube level {level} outside [-{MAX_DEPTH}, 0]"));
        }
        Ok(Self::containing_key(&point_key(p)?, level))
    }

    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn corner(&self) -> &[u64] {
        &self.corner
    }

    pub fn dim(&self) -> usize {
        self.corner.len()
    }

    pub fn side(&self) -> f64 {
        exp2i(self.level)
    }

    /// Finest-depth key of the low corner.
    pub fn key(&self) -> Lattice {
        let sh = (MAX_DEPTH + self.level) as u32;
        self.corner.iter().map(|&c| c << sh).collect()
    }

    pub fn low(&self, i: usize) -> f64 {
        self.corner[i] as f64 * self.side()
    }

    pub fn low_corner(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.low(i)).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        let s = self.side();
        self.corner.iter().map(|&c| (c as f64 + 0.5) * s).collect()
    }

    pub fn half_diagonal(&self) -> f64 {
        0.5 * self.side() * (self.dim() as f64).sqrt()
    }

    pub fn diameter(&self) -> f64 {
        self.side() * (self.dim() as f64).sqrt()
    }

    /// True if `other` is nested in (or equal to) `self`.
    pub fn contains(&self, other: &CanonicalCube) -> bool {
        if self.level < other.level || self.dim() != other.dim() {
            return false;
        }
        let sh = (self.level - other.level) as u32;
        self.corner.iter().zip(&other.corner).all(|(&a, &b)| (b >> sh) == a)
    }

    /// True if the finest-depth `key` lies in the half-open cube.
    pub fn contains_key(&self, key: &[u64]) -> bool {
        let sh = (MAX_DEPTH + self.level) as u32;
        self.corner.iter().zip(key).all(|(&c, &k)| (k >> sh) == c)
    }

    pub fn disjoint(&self, other: &CanonicalCube) -> bool {
        !self.contains(other) && !other.contains(self)
    }

    pub fn parent(&self) -> Option<CanonicalCube> {
        if self.level >= 0 {
            return None;
        }
        Some(CanonicalCube { level: self.level + 1, corner: self.corner.iter().map(|&c| c >> 1).collect() })
    }

    /// Child cube in orthant `o`; bit `i` of `o` selects the upper half along axis `i`.
    pub fn child(&self, o: usize) -> CanonicalCube {
        CanonicalCube {
            level: self.level - 1,
            corner: self.corner.iter().enumerate().map(|(i, &c)| (c << 1) | ((o >> i) & 1) as u64).collect(),
        }
    }

    /// Orthant of `self` holding the strictly smaller cube `inner`.
    pub fn orthant_of(&self, inner: &CanonicalCube) -> usize {
        debug_assert!(inner.level < self.level);
        let sh = (self.level - 1 - inner.level) as u32;
        inner.corner.iter().enumerate().fold(0, |o, (i, &c)| o | ((((c >> sh) & 1) as usize) << i))
    }

    /// Orthant of `self` holding the finest-depth `key`.
    pub fn orthant_of_key(&self, key: &[u64]) -> usize {
        let sh = (MAX_DEPTH + self.level - 1) as u32;
        key.iter().enumerate().fold(0, |o, (i, &k)| o | ((((k >> sh) & 1) as usize) << i))
    }

    /// Squared distance from `p` to the closed cube.
    pub fn min_dist2(&self, p: &[f64]) -> f64 {
        let s = self.side();
        let mut acc = 0.0;
        for (i, &x) in p.iter().enumerate() {
            let lo = self.corner[i] as f64 * s;
            let hi = lo + s;
            let d = if x < lo { lo - x } else if x > hi { x - hi } else { 0.0 };
            acc += d * d;
        }
        acc
    }

    pub fn min_dist(&self, p: &[f64]) -> f64 {
        self.min_dist2(p).sqrt()
    }

    /// Distance from `p` to the furthest point of the closed cube.
    pub fn max_dist(&self, p: &[f64]) -> f64 {
        let s = self.side();
        let mut acc = 0.0;
        for (i, &x) in p.iter().enumerate() {
            let lo = self.corner[i] as f64 * s;
            let d = (x - lo).abs().max((lo + s - x).abs());
            acc += d * d;
        }
        acc.sqrt()
    }

    pub fn intersects_ball(&self, c: &[f64], r: f64) -> bool {
        self.min_dist2(c) <= r * r
    }

    /// The `2^d` corner points.
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let s = self.side();
        (0..1usize << d)
            .map(|o| (0..d).map(|i| (self.corner[i] + ((o >> i) & 1) as u64) as f64 * s).collect())
            .collect()
    }

    /// Smallest canonical cube containing both cubes.
    pub fn common_ancestor(&self, other: &CanonicalCube) -> CanonicalCube {
        let ka = self.key();
        let kb = other.key();
        let mut high = -1i32;
        for (a, b) in ka.iter().zip(&kb) {
            let x = a ^ b;
            if x != 0 {
                high = high.max(63 - x.leading_zeros() as i32);
            }
        }
        let level = (high + 1 - MAX_DEPTH).max(self.level).max(other.level);
        CanonicalCube::containing_key(&ka, level)
    }
}

/// Every canonical cube of side `2^floor(log2 psi)` whose closed cube meets the closed ball `b`.
///
/// Cubes are restricted to `[0,1]^d`; widths `psi >= 1` give the unit cube itself.
pub fn cells_intersecting_ball(b: &Ball, psi: f64, min_level: i32) -> Result<Vec<CanonicalCube>> {
    if !(psi > 0.0) || !psi.is_finite() {
        return invalid("psi must be positive and finite");
    }
    check_finite(&b.center, "ball center")?;
    let level = floor_log2(psi).min(0);
    if level < min_level || level < -MAX_DEPTH {
        return Err(Error::ResolutionExhausted { level, min_level });
    }
    let d = b.center.len();
    let s = exp2i(level);
    let top = (1u64 << (-level)) - 1;
    let r = b.radius;
    let mut lo = Vec::with_capacity(d);
    let mut hi = Vec::with_capacity(d);
    for &c in &b.center {
        if c + r < 0.0 || c - r > 1.0 {
            return Ok(Vec::new());
        }
        let a = ((c - r) / s).floor().max(0.0) as u64;
        let z = ((c + r) / s).floor().max(0.0) as u64;
        lo.push(a.min(top));
        hi.push(z.min(top));
    }
    let mut out = Vec::new();
    let mut cur: Lattice = lo.iter().copied().collect();
    loop {
        let cube = CanonicalCube { level, corner: cur.clone() };
        if cube.intersects_ball(&b.center, r) {
            out.push(cube);
        }
        let mut i = 0;
        loop {
            if i == d {
                return Ok(out);
            }
            if cur[i] < hi[i] {
                cur[i] += 1;
                break;
            }
            cur[i] = lo[i];
            i += 1;
        }
    }
}

/// Affine map from normalized space back to input space: `raw = origin + scale * (x - 1/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transform {
    pub scale: f64,
    pub origin: Vec<f64>,
}

impl Transform {
    pub fn identity(dim: usize) -> Self {
        Transform { scale: 1.0, origin: vec![0.5; dim] }
    }

    /// Translation `t` of the equivalent form `raw = scale * x + t`.
    pub fn translation(&self) -> Vec<f64> {
        self.origin.iter().map(|o| o - 0.5 * self.scale).collect()
    }

    pub fn to_input(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.origin).map(|(x, o)| o + self.scale * (x - 0.5)).collect()
    }

    pub fn to_normalized(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter().zip(&self.origin).map(|(r, o)| 0.5 + (r - o) / self.scale).collect()
    }

    pub fn distance_to_input(&self, d: f64) -> f64 {
        d * self.scale
    }
}

/// A normalized point collection with weights and padding flags.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    synthetic: Vec<bool>,
    transform: Transform,
}

impl PointSet {
    /// Wraps coordinates that are already in normalized space (identity transform).
    pub fn from_coords(dim: usize, coords: Vec<f64>, weights: Option<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be at least 1");
        }
        if coords.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !coords.len().is_multiple_of(dim) {
            return invalid("coordinate count is not a multiple of the dimension");
        }
        check_finite(&coords, "point set")?;
        let n = coords.len() / dim;
        let weights = match weights {
            Some(w) => {
                if w.len() != n {
                    return invalid("weight count differs from point count");
                }
                check_weights(&w)?;
                w
            }
            None => vec![1.0; n],
        };
        Ok(PointSet { dim, coords, weights, synthetic: vec![false; n], transform: Transform::identity(dim) })
    }

    pub fn from_points(points: &[Vec<f64>], weights: Option<Vec<f64>>) -> Result<Self> {
        let dim = check_dims(points)?;
        Self::from_coords(dim, points.concat(), weights)
    }

    /// Scales and translates raw points into `[1/2, 1/2 + 1/n]^d`.
    pub fn normalize(points: &[Vec<f64>], weights: Option<&[f64]>) -> Result<Self> {
        let dim = check_dims(points)?;
        for p in points {
            check_finite(p, "point")?;
        }
        let n = points.len();
        let mut lo = points[0].clone();
        let mut hi = points[0].clone();
        for p in points {
            for i in 0..dim {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        let extent = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
        let transform = if extent > 0.0 {
            Transform { scale: extent * n as f64, origin: lo }
        } else {
            Transform { scale: 1.0, origin: lo }
        };
        let top = 0.5 + 1.0 / n as f64;
        let mut coords = Vec::with_capacity(n * dim);
        for p in points {
            coords.extend(transform.to_normalized(p).into_iter().map(|x| x.clamp(0.5, top)));
        }
        let weights = match weights {
            Some(w) => {
                if w.len() != n {
                    return invalid("weight count differs from point count");
                }
                check_weights(w)?;
                w.to_vec()
            }
            None => vec![1.0; n],
        };
        Ok(PointSet { dim, coords, weights, synthetic: vec![false; n], transform })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_synthetic(&self, i: usize) -> bool {
        self.synthetic[i]
    }

    pub fn synthetic_mask(&self) -> &[bool] {
        &self.synthetic
    }

    pub fn real_count(&self) -> usize {
        self.synthetic.iter().filter(|s| !**s).count()
    }

    pub fn real_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.synthetic[i]).collect()
    }

    /// Total weight of the non-synthetic points.
    pub fn total_weight(&self) -> f64 {
        (0..self.len()).filter(|&i| !self.synthetic[i]).map(|i| self.weights[i]).sum()
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    pub fn with_transform(mut self, transform: Transform) -> Self {
        self.transform = transform;
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    /// New set holding the listed points (repetitions allowed), same transform.
    pub fn subset(&self, idx: &[usize]) -> PointSet {
        let mut coords = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            coords.extend_from_slice(self.point(i));
        }
        PointSet {
            dim: self.dim,
            coords,
            weights: idx.iter().map(|&i| self.weights[i]).collect(),
            synthetic: idx.iter().map(|&i| self.synthetic[i]).collect(),
            transform: self.transform.clone(),
        }
    }

    /// Appends `(k - n mod k) mod k` synthetic points at `SYNTHETIC_COORD`.
    pub fn pad_to_multiple(&self, k: usize) -> Result<PointSet> {
        if k < 1 {
            return invalid("k must be at least 1");
        }
        let n = self.len();
        let extra = (k - n % k) % k;
        let mut out = self.clone();
        for _ in 0..extra {
            out.coords.extend(std::iter::repeat_n(SYNTHETIC_COORD, self.dim));
            out.weights.push(1.0);
            out.synthetic.push(true);
        }
        Ok(out)
    }
}

fn check_dims(points: &[Vec<f64>]) -> Result<usize> {
    let first = points.first().ok_or(Error::EmptyInput)?;
    let dim = first.len();
    if dim == 0 {
        return invalid("dimension must be at least 1");
    }
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: p.len(), line: Some(i + 1) });
        }
    }
    Ok(dim)
}

fn check_weights(w: &[f64]) -> Result<()> {
    if w.iter().all(|x| x.is_finite() && *x >= 0.0) {
        Ok(())
    } else {
        invalid("weights must be finite and nonnegative")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_norm_examples() {
        assert_eq!(product_norm(&[3.0, 4.0, 5.0]).unwrap(), 10.0);
        assert_eq!(product_norm(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!(product_norm(&[1.0, f64::NAN]).is_err());
        assert!(product_norm(&[1.0]).is_err());
    }

    #[test]
    fn grid_cell_examples() {
        assert_eq!(grid_cell(&[0.77, 0.30], 0.25).unwrap(), vec![3, 1]);
        assert_eq!(grid_cell_corner(&[3, 1], 0.25), vec![0.75, 0.25]);
        assert_eq!(grid_cell(&[0.5], 0.25).unwrap(), vec![2]);
        assert!(grid_cell(&[0.5], 0.0).is_err());
    }

    #[test]
    fn cube_nesting_and_orthants() {
        let root = CanonicalCube::root(2);
        let c = root.child(3).child(0);
        assert_eq!(c.level(), -2);
        assert_eq!(c.corner(), &[2, 2]);
        assert!(root.contains(&c));
        assert_eq!(root.orthant_of(&c), 3);
        assert_eq!(c.parent().unwrap().parent().unwrap(), root);
        assert!(c.disjoint(&root.child(0)));
        let a = root.child(1).child(2);
        assert_eq!(a.common_ancestor(&root.child(1).child(3)), root.child(1));
        assert_eq!(a.common_ancestor(&c), root);
        assert_eq!(a.common_ancestor(&a), a);
    }

    #[test]
    fn containing_point_clamps_upper_face() {
        let c = CanonicalCube::containing_point(&[1.0, 0.5], -2).unwrap();
        assert_eq!(c.corner(), &[3, 2]);
        assert!(CanonicalCube::containing_point(&[1.5, 0.5], -2).is_err());
    }

    #[test]
    fn ball_cells_single_and_interval() {
        let root = CanonicalCube::root(2);
        let cell = root.child(0).child(3);
        let b = Ball::new(cell.center(), 0.1).unwrap();
        assert_eq!(cells_intersecting_ball(&b, 0.25, -52).unwrap(), vec![cell]);

        let b = Ball::new(vec![0.5], 0.3).unwrap();
        let cells = cells_intersecting_ball(&b, 0.25, -52).unwrap();
        let ids: Vec<u64> = cells.iter().map(|c| c.corner()[0]).collect();
        assert_eq!(ids, vec![0, 1, 2, 3]);

        assert!(matches!(
            cells_intersecting_ball(&b, 1e-20, -52),
            Err(Error::ResolutionExhausted { .. })
        ));
    }

    #[test]
    fn normalize_single_and_pair() {
        let ps = PointSet::normalize(&[vec![3.0, -7.0]], None).unwrap();
        assert_eq!(ps.point(0), &[0.5, 0.5]);
        assert_eq!(ps.transform().to_input(ps.point(0)), vec![3.0, -7.0]);

        let ps = PointSet::normalize(&[vec![0.0], vec![10.0]], None).unwrap();
        assert_eq!(ps.point(0), &[0.5]);
        assert_eq!(ps.point(1), &[1.0]);
    }

    #[test]
    fn normalize_rejects_bad_input() {
        assert!(matches!(PointSet::normalize(&[], None), Err(Error::EmptyInput)));
        assert!(matches!(
            PointSet::normalize(&[vec![1.0, 2.0], vec![1.0]], None),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn padding_counts() {
        let raw: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let ps = PointSet::normalize(&raw, None).unwrap();
        assert_eq!(ps.pad_to_multiple(5).unwrap().len(), 10);
        let p = ps.pad_to_multiple(4).unwrap();
        assert_eq!(p.len(), 12);
        assert!(p.is_synthetic(10) && p.is_synthetic(11) && !p.is_synthetic(9));
        assert_eq!(p.point(11), &[SYNTHETIC_COORD]);
        assert_eq!(p.real_count(), 10);
        assert!(ps.pad_to_multiple(0).is_err());
    }
}
