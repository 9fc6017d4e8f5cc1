//! Distance-based density `D_{f,k}(q) = sum_{i<=k} f(d_i(q))`.
//!
//! The small prefix of indices is dropped, the remaining indices are thinned to
//! a weighted geometric subset, and one approximate Voronoi sketch per kept
//! index supplies `z_i ~ d_i(q)`. All sketch trees are located at once through
//! their overlay.

use std::io::{Read, Write};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use rayon::prelude::*;

use crate::avd::format::{read_header, read_kavd_body, write_header, write_kavd_body, SketchKind};
use crate::avd::{KAvdSketch, KavdConfig, Target};
use crate::cquadtree::{locate_all, SimultaneousLocator};
use crate::error::{invalid, Error, Result};
use crate::geom::{dist, PointSet, Transform};
use crate::oracle::{exact_knn_with_distances, tail_start};

/// Monotone `f` with its growth constant `c`.
#[derive(Clone)]
pub struct SlowGrowFunction {
    tag: String,
    c: f64,
    /// Exponent when `f(x) = x^p`; used to invert the growth bound exactly.
    power: Option<f64>,
    f: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for SlowGrowFunction {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("SlowGrowFunction").field("tag", &self.tag).field("c", &self.c).finish()
    }
}

/// Smallest `c` with `(1 + e/c)^p <= 1 + e` and `(1 - e/c)^p >= 1 - e` for all `e` in `(0, 1]`.
pub fn power_growth_constant(p: f64) -> f64 {
    if p <= 1.0 {
        1.0
    } else {
        1.0 / (2f64.powf(1.0 / p) - 1.0)
    }
}

impl SlowGrowFunction {
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::InvalidFunction(format!("pow:{p} is not increasing")));
        }
        let tag = if p == 1.0 {
            "l1".to_string()
        } else if p == 2.0 {
            "l2sq".to_string()
        } else {
            format!("pow:{p}")
        };
        Ok(SlowGrowFunction {
            tag,
            c: power_growth_constant(p),
            power: Some(p),
            f: std::sync::Arc::new(move |x: f64| x.powf(p)),
        })
    }

    pub fn custom(tag: &str, c: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(c > 0.0) {
            return invalid("growth constant must be positive");
        }
        Ok(SlowGrowFunction { tag: tag.to_string(), c, power: None, f: std::sync::Arc::new(f) })
    }

    /// `l1`, `l2sq` or `pow:<p>`.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "l1" => Self::power(1.0),
            "l2sq" => Self::power(2.0),
            _ => match s.strip_prefix("pow:") {
                Some(p) => Self::power(
                    p.parse::<f64>().map_err(|_| Error::InvalidFunction(format!("bad exponent in {s:?}")))?,
                ),
                None => Err(Error::InvalidFunction(format!("unknown function {s:?}; use l1, l2sq or pow:<p>"))),
            },
        }
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn growth_constant(&self) -> f64 {
        self.c
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    /// Checks monotonicity and the growth bounds at 64 log-spaced points of `[1e-6, sqrt(d)]`.
    pub fn audit(&self, eps: f64, d: usize) -> Result<()> {
        let hi = (d as f64).sqrt();
        let (a, b) = (1e-6f64.ln(), hi.ln());
        let mut prev = f64::NEG_INFINITY;
        for i in 0..64 {
            let x = (a + (b - a) * i as f64 / 63.0).exp();
            let fx = self.eval(x);
            let lo = self.eval((1.0 - eps / self.c) * x);
            let up = self.eval((1.0 + eps / self.c) * x);
            if !fx.is_finite() || fx < 0.0 || fx < prev {
                return Err(Error::InvalidFunction(format!("{} is not monotone at x = {x:e}", self.tag)));
            }
            if lo < (1.0 - eps) * fx * (1.0 - 1e-12) || up > (1.0 + eps) * fx * (1.0 + 1e-12) {
                return Err(Error::InvalidFunction(format!(
                    "{} grows too fast at x = {x:e} for eps = {eps} with c = {}",
                    self.tag, self.c
                )));
            }
            prev = fx;
        }
        Ok(())
    }

    /// Largest `eta` with `f((1 + eta) x) <= (1 + e) f(x)` guaranteed.
    fn stretch_for(&self, e: f64) -> f64 {
        match self.power {
            Some(p) => (1.0 + e).powf(1.0 / p) - 1.0,
            None => e / self.c,
        }
    }
}

/// Indices `I` and integer weights with `sum w = k - i0 + 1`; index `I[j]` stands for
/// `I[j] .. I[j] + w[j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexCoreset {
    pub indices: Vec<usize>,
    pub weights: Vec<usize>,
}

impl IndexCoreset {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn total_weight(&self) -> usize {
        self.weights.iter().sum()
    }
}

/// Blocks ending at `k` whose length grows like `delta (k - t + 1)` away from `k`, with
/// `delta = (eps/4) / (1 + eps/4)`. Each block is represented by its lowest index, so the
/// estimate never exceeds the tail sum and loses at most a `delta` fraction of it.
pub fn coreset_indices(k: usize, eps: f64) -> Result<IndexCoreset> {
    let q = eps / 4.0;
    coreset_with_step(k, eps, q / (1.0 + q))
}

fn coreset_with_step(k: usize, eps: f64, delta: f64) -> Result<IndexCoreset> {
    if k == 0 {
        return invalid("k must be at least 1");
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return invalid(format!("eps = {eps} outside (0, 1]"));
    }
    let i0 = tail_start(k, eps).min(k);
    let mut indices = Vec::new();
    let mut weights = Vec::new();
    let mut t = k;
    loop {
        let len = ((delta * (k - t + 1) as f64).floor() as usize).max(1);
        let b = (t + 1).saturating_sub(len).max(i0);
        indices.push(b);
        weights.push(t - b + 1);
        if b == i0 {
            break;
        }
        t = b - 1;
    }
    indices.reverse();
    weights.reverse();
    Ok(IndexCoreset { indices, weights })
}

/// `sum w_i g_i` for samples `g_i` taken at the coreset indices.
pub fn coreset_estimate(cs: &IndexCoreset, g: &[f64]) -> Result<f64> {
    if g.len() != cs.len() {
        return invalid(format!("{} samples for {} indices", g.len(), cs.len()));
    }
    if g.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::ContractViolation("coreset samples are not monotone".into()));
    }
    Ok(cs.weights.iter().zip(g).map(|(&w, &x)| w as f64 * x).sum())
}

/// How the per-index sketch accuracy is derived from `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaMode {
    /// Sketch accuracy `eps / (4c)`.
    Literal,
    /// The largest accuracy whose error still closes the `(1 +- eps)` chain.
    Tight,
}

#[derive(Debug, Clone)]
pub struct DensityConfig {
    pub alpha: AlphaMode,
    pub kavd: KavdConfig,
    /// Queries used to validate the coreset band at build time.
    pub audit_queries: usize,
}

impl Default for DensityConfig {
    fn default() -> Self {
        DensityConfig {
            alpha: AlphaMode::Tight,
            kavd: KavdConfig { certify_witness: false, zeta1: 0.25, avd_ratio: 0.5, ..KavdConfig::default() },
            audit_queries: 64,
        }
    }
}

pub struct DensityStructure {
    k: usize,
    eps: f64,
    sketch_eps: f64,
    f: SlowGrowFunction,
    coreset: IndexCoreset,
    sketches: Vec<KAvdSketch>,
    locator: SimultaneousLocator,
}

pub fn build_density(ps: &PointSet, k: usize, eps: f64, f: SlowGrowFunction) -> Result<DensityStructure> {
    DensityStructure::build(ps, k, eps, f, &DensityConfig::default())
}

/// Tail sum and coreset estimate of `f(d_i)` for one sorted distance array.
fn band_holds(cs: &IndexCoreset, ds: &[f64], k: usize, eps: f64, f: &SlowGrowFunction) -> bool {
    let start = tail_start(k, eps);
    let ad: f64 = ds[start - 1..k].iter().map(|&x| f.eval(x)).sum();
    let g: Vec<f64> = cs.indices.iter().map(|&i| f.eval(ds[i - 1])).collect();
    let est: f64 = cs.weights.iter().zip(&g).map(|(&w, &x)| w as f64 * x).sum();
    let slack = 1e-12 * est.abs();
    (1.0 - eps / 4.0) * est <= ad + slack && ad <= (1.0 + eps / 4.0) * est + slack
}

impl DensityStructure {
    pub fn build(ps: &PointSet, k: usize, eps: f64, f: SlowGrowFunction, config: &DensityConfig) -> Result<Self> {
        if k == 0 || k > ps.real_count() {
            return invalid(format!("k = {k} outside [1, {}]", ps.real_count()));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return invalid(format!("eps = {eps} outside (0, 1)"));
        }
        f.audit(eps, ps.dim())?;

        // Coreset, validated on exact distance sequences; the block step is halved on failure.
        let audit: Vec<Vec<f64>> = audit_queries(ps, config.audit_queries);
        let seqs: Vec<Vec<f64>> =
            audit.iter().map(|q| exact_knn_with_distances(ps, q, k).map(|r| r.1)).collect::<Result<_>>()?;
        let mut step = eps / (4.0 + eps);
        let mut coreset = coreset_with_step(k, eps, step)?;
        let mut tries = 0;
        while !seqs.iter().all(|ds| band_holds(&coreset, ds, k, eps, &f)) {
            tries += 1;
            if tries > 3 {
                return Err(Error::ContractViolation("index coreset fails its band on the audit queries".into()));
            }
            step /= 2.0;
            coreset = coreset_with_step(k, eps, step)?;
        }

        let sketch_eps = match config.alpha {
            AlphaMode::Literal => eps / (4.0 * f.growth_constant()),
            AlphaMode::Tight => {
                let e = (1.0 - eps / 4.0) / (1.0 - eps) - 1.0;
                f.stretch_for(e)
            }
        }
        .min(0.5);
        let sketches: Vec<KAvdSketch> = coreset
            .indices
            .par_iter()
            .map(|&i| KAvdSketch::build(ps, Target::Count(i), sketch_eps, &config.kavd))
            .collect::<Result<_>>()?;
        let trees: Vec<_> = sketches.iter().map(|s| s.tree()).collect();
        let locator = locate_all(&trees)?;
        Ok(DensityStructure { k, eps, sketch_eps, f, coreset, sketches, locator })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn sketch_eps(&self) -> f64 {
        self.sketch_eps
    }

    pub fn function(&self) -> &SlowGrowFunction {
        &self.f
    }

    pub fn coreset(&self) -> &IndexCoreset {
        &self.coreset
    }

    pub fn sketches(&self) -> &[KAvdSketch] {
        &self.sketches
    }

    /// Total cell records over all sketches.
    pub fn cell_count(&self) -> usize {
        self.sketches.iter().map(|s| s.stats().cells).sum()
    }

    /// `z_i` for every coreset index from one simultaneous location, before monotone repair.
    pub fn values(&self, q: &[f64]) -> Result<Vec<f64>> {
        let d = self.sketches[0].dim();
        if q.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: q.len(), line: None });
        }
        if q.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::OutOfDomain(format!("query {q:?} outside [0,1]^{d}")));
        }
        let nodes = self.locator.locate(q)?;
        self.sketches.iter().zip(nodes).map(|(s, v)| s.value_at(v, q)).collect()
    }

    /// `xi` with `(1 - eps) xi <= D_{f,k}(q) <= (1 + eps) xi`.
    pub fn query(&self, q: &[f64]) -> Result<f64> {
        self.estimate(q, 1.0)
    }

    /// Query in input coordinates, with `f` applied to input-unit distances.
    pub fn query_input(&self, raw: &[f64]) -> Result<f64> {
        let t = self.transform();
        self.estimate(&t.to_normalized(raw), t.scale)
    }

    fn estimate(&self, q: &[f64], scale: f64) -> Result<f64> {
        let mut z = self.values(q)?;
        for i in 1..z.len() {
            z[i] = z[i].max(z[i - 1]);
        }
        let g: Vec<f64> = z.iter().map(|&x| self.f.eval(scale * x)).collect();
        coreset_estimate(&self.coreset, &g)
    }

    pub fn transform(&self) -> &Transform {
        self.sketches[0].transform()
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        write_header(&mut w, SketchKind::Density)?;
        w.write_u64::<LE>(self.k as u64)?;
        w.write_f64::<LE>(self.eps)?;
        w.write_f64::<LE>(self.sketch_eps)?;
        let tag = self.f.tag().as_bytes();
        w.write_u32::<LE>(tag.len() as u32)?;
        w.write_all(tag)?;
        w.write_u64::<LE>(self.coreset.len() as u64)?;
        for (&i, &wt) in self.coreset.indices.iter().zip(&self.coreset.weights) {
            w.write_u64::<LE>(i as u64)?;
            w.write_u64::<LE>(wt as u64)?;
        }
        for s in &self.sketches {
            write_kavd_body(&mut w, s)?;
        }
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        match read_header(&mut r)? {
            SketchKind::Density => {}
            k => return Err(Error::Format(format!("expected a density structure, found {k:?}"))),
        }
        let k = r.read_u64::<LE>()? as usize;
        let eps = r.read_f64::<LE>()?;
        let sketch_eps = r.read_f64::<LE>()?;
        let len = r.read_u32::<LE>()? as usize;
        if len > 256 {
            return Err(Error::Format("function tag too long".into()));
        }
        let mut tag = vec![0u8; len];
        r.read_exact(&mut tag)?;
        let tag = String::from_utf8(tag).map_err(|_| Error::Format("function tag is not UTF-8".into()))?;
        let f = SlowGrowFunction::parse(&tag)?;
        let m = r.read_u64::<LE>()? as usize;
        if m == 0 || m > k.max(1) {
            return Err(Error::Format(format!("bad coreset size {m}")));
        }
        let mut indices = Vec::with_capacity(m);
        let mut weights = Vec::with_capacity(m);
        for _ in 0..m {
            indices.push(r.read_u64::<LE>()? as usize);
            weights.push(r.read_u64::<LE>()? as usize);
        }
        let sketches: Vec<KAvdSketch> = (0..m).map(|_| read_kavd_body(&mut r)).collect::<Result<_>>()?;
        let trees: Vec<_> = sketches.iter().map(|s| s.tree()).collect();
        let locator = locate_all(&trees)?;
        Ok(DensityStructure { k, eps, sketch_eps, f, coreset: IndexCoreset { indices, weights }, sketches, locator })
    }
}

/// Data points plus a deterministic spread of points around them.
fn audit_queries(ps: &PointSet, count: usize) -> Vec<Vec<f64>> {
    let real = ps.real_indices();
    let d = ps.dim();
    let mut out = Vec::with_capacity(count);
    for j in 0..count {
        let p = ps.point(real[(j * 7919) % real.len()]);
        let other = ps.point(real[(j * 104_729 + 1) % real.len()]);
        let t = (j % 4) as f64 / 3.0;
        let q: Vec<f64> = (0..d).map(|i| p[i] + t * (other[i] - p[i])).collect();
        out.push(q);
    }
    out
}

impl KAvdSketch {
    /// Value of the cell `v` at `q`; equals [`KAvdSketch::query`] when `v` is the located cell.
    pub fn value_at(&self, v: usize, q: &[f64]) -> Result<f64> {
        let rec = self.records[v]
            .as_ref()
            .ok_or_else(|| Error::ContractViolation(format!("cell {v} has no record")))?;
        let x = rec.rep_x as usize;
        let t1 = dist(q, self.cluster_center(x)) + self.radii[x];
        let t2 = rec.adknn + dist(q, &self.tree.node(v).cube.center());
        Ok(t1.min(t2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coreset_small_cases() {
        let cs = coreset_indices(8, 1.0).unwrap();
        assert_eq!(cs.indices[0], 1);
        assert_eq!(*cs.indices.last().unwrap(), 8);
        assert_eq!(cs.total_weight(), 8);
        let cs = coreset_indices(100, 0.2).unwrap();
        assert_eq!(cs.total_weight(), 98);
        let g: Vec<f64> = cs.indices.iter().map(|&i| i as f64).collect();
        let est = coreset_estimate(&cs, &g).unwrap();
        assert!((est - 5147.0).abs() <= 0.05 * 5147.0);
        let ones = vec![1.0; cs.len()];
        assert_eq!(coreset_estimate(&cs, &ones).unwrap(), 98.0);
    }

    #[test]
    fn step_sequences_stay_in_band() {
        let (k, eps) = (400, 0.2);
        let cs = coreset_indices(k, eps).unwrap();
        let i0 = tail_start(k, eps);
        for jump in i0..=k {
            let g: Vec<f64> = (1..=k).map(|i| if i >= jump { 1.0 } else { 0.0 }).collect();
            let exact: f64 = g[i0 - 1..].iter().sum();
            let sampled: Vec<f64> = cs.indices.iter().map(|&i| g[i - 1]).collect();
            let est = coreset_estimate(&cs, &sampled).unwrap();
            assert!(est <= exact && exact <= (1.0 + eps / 4.0) * est, "jump {jump}: {est} vs {exact}");
        }
    }

    #[test]
    fn growth_constants() {
        assert_eq!(power_growth_constant(1.0), 1.0);
        assert!((power_growth_constant(2.0) - (1.0 + 2f64.sqrt())).abs() < 1e-12);
        SlowGrowFunction::power(2.0).unwrap().audit(0.25, 2).unwrap();
        SlowGrowFunction::power(1.0).unwrap().audit(1.0, 3).unwrap();
        let e = SlowGrowFunction::custom("exp", 1.0, f64::exp).unwrap();
        assert!(matches!(e.audit(0.1, 2), Err(Error::InvalidFunction(_))));
        assert!(SlowGrowFunction::parse("pow:0").is_err());
        assert!(SlowGrowFunction::parse("cube").is_err());
        assert_eq!(SlowGrowFunction::parse("pow:1.5").unwrap().tag(), "pow:1.5");
    }

    #[test]
    fn non_monotone_samples_rejected() {
        let cs = coreset_indices(4, 1.0).unwrap();
        let g = vec![3.0, 1.0, 2.0, 4.0][..cs.len()].to_vec();
        assert!(coreset_estimate(&cs, &g).is_err());
    }
}
