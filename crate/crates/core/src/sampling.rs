//! Estimators that query a uniform random sample instead of the full set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::geom::{dist2, PointSet, Transform};
use crate::knn_query::{KnnConfig, KnnQueryStructure};
use crate::oracle::exact_knn_with_distances;

/// Default sizing multiplier.
pub const DEFAULT_C: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSpec {
    pub rho: f64,
    pub eps: f64,
    pub phi: f64,
    pub vc_dim: f64,
    pub c: f64,
}

impl SampleSpec {
    /// Ball ranges in `R^d`.
    pub fn balls(rho: f64, eps: f64, phi: f64, d: usize) -> Self {
        SampleSpec { rho, eps, phi, vc_dim: (d + 1) as f64, c: DEFAULT_C }
    }

    /// Ring complements, used by the density estimator.
    pub fn rings(rho: f64, eps: f64, phi: f64, d: usize) -> Self {
        SampleSpec { rho, eps, phi, vc_dim: 2.0 * (d + 1) as f64, c: DEFAULT_C }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return invalid(format!("rho = {} outside (0, 1]", self.rho));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return invalid(format!("eps = {} outside (0, 1)", self.eps));
        }
        if !(self.phi > 0.0 && self.phi < 1.0) {
            return invalid(format!("phi = {} outside (0, 1)", self.phi));
        }
        if !(self.vc_dim > 0.0 && self.c > 0.0) {
            return invalid("vc_dim and c must be positive");
        }
        Ok(())
    }
}

/// `ceil(C vc / (eps^2 rho) (ln(1/rho) + ln(1/phi)))`, capped at `n`.
pub fn relative_sample_size(spec: &SampleSpec, n: usize) -> Result<usize> {
    spec.validate()?;
    let m = spec.c * spec.vc_dim / (spec.eps * spec.eps * spec.rho) * ((1.0 / spec.rho).ln() + (1.0 / spec.phi).ln());
    Ok((m.ceil().max(1.0) as usize).min(n))
}

/// `|r - s| / (r + s + nu)`.
pub fn dnu_distance(r: f64, s: f64, nu: f64) -> f64 {
    (r - s).abs() / (r + s + nu)
}

/// `(n/k) f(dist)` inside radius `r`, zero outside.
pub fn clipped_weight(dist_qu: f64, r: f64, n: usize, k: usize, f: &dyn Fn(f64) -> f64) -> f64 {
    if dist_qu <= r {
        n as f64 / k as f64 * f(dist_qu)
    } else {
        0.0
    }
}

/// Draws `m` indices with replacement, or all of them in order when `m >= n`.
fn draw(real: &[usize], m: usize, seed: u64) -> Vec<usize> {
    if m >= real.len() {
        return real.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m).map(|_| real[rng.gen_range(0..real.len())]).collect()
}

/// `(1 + eps, (1 +- eps) k)` nearest neighbor through a random sample.
#[derive(Debug, Clone)]
pub struct SampledKnn {
    n: usize,
    k: usize,
    eps: f64,
    sample: Vec<usize>,
    knn: KnnQueryStructure,
    transform: Transform,
}

pub fn sampled_kann(ps: &PointSet, k: usize, eps: f64, phi: f64, seed: u64) -> Result<SampledKnn> {
    SampledKnn::build(ps, k, eps, phi, seed, DEFAULT_C)
}

impl SampledKnn {
    pub fn build(ps: &PointSet, k: usize, eps: f64, phi: f64, seed: u64, c: f64) -> Result<Self> {
        let real = ps.real_indices();
        let n = real.len();
        if k == 0 || k > n {
            return invalid(format!("k = {k} outside [1, {n}]"));
        }
        let spec = SampleSpec { c, ..SampleSpec::balls(k as f64 / n as f64, eps, phi, ps.dim()) };
        let m = relative_sample_size(&spec, n)?;
        let sample = draw(&real, m, seed);
        let sub = ps.subset(&sample);
        let knn = KnnQueryStructure::build_with(&sub, KnnConfig { seed, ..KnnConfig::default() })?;
        let out = SampledKnn { n, k, eps, sample, knn, transform: ps.transform().clone() };
        if out.rank_for(k) == 0 {
            return Err(Error::ParametersTooCoarse(format!("k' = 0 for a sample of {}", out.sample.len())));
        }
        Ok(out)
    }

    pub fn sample_size(&self) -> usize {
        self.sample.len()
    }

    /// Indices (into the input set) of the sample, with repetitions.
    pub fn sample(&self) -> &[usize] {
        &self.sample
    }

    pub fn dim(&self) -> usize {
        self.transform.origin.len()
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    pub fn is_exact(&self) -> bool {
        self.sample.len() == self.n
    }

    /// Rank in the sample standing for rank `t` in the input, `round(t m / n)`.
    pub fn rank_for(&self, t: usize) -> usize {
        if self.is_exact() {
            t
        } else {
            (t as f64 * self.sample.len() as f64 / self.n as f64).round() as usize
        }
    }

    /// `(distance estimate, witness)` for rank `k`.
    pub fn query(&self, q: &[f64]) -> Result<(f64, usize)> {
        self.query_rank(q, self.k)
    }

    /// Same handle answering for any rank `t >= k`.
    pub fn query_rank(&self, q: &[f64], t: usize) -> Result<(f64, usize)> {
        let kp = self.rank_for(t).min(self.sample.len());
        if kp == 0 {
            return Err(Error::ParametersTooCoarse(format!("rank {t} maps to 0 in the sample")));
        }
        let a = self.knn.knn_distance(q, kp, self.eps)?;
        Ok((a.beta, self.sample[a.witness]))
    }
}

/// `f` with its well-behavedness constant.
#[derive(Clone)]
pub struct WellBehavedDescriptor {
    pub f: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub zeta2: f64,
}

impl std::fmt::Debug for WellBehavedDescriptor {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("WellBehavedDescriptor").field("zeta2", &self.zeta2).finish()
    }
}

impl WellBehavedDescriptor {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static, zeta2: f64) -> Result<Self> {
        if !(zeta2 >= 1.0) {
            return invalid("zeta2 must be at least 1");
        }
        Ok(WellBehavedDescriptor { f: std::sync::Arc::new(f), zeta2 })
    }

    /// Checks `f(d_{3k/2}) <= zeta2 f(d_{k/4})` at every audit query.
    pub fn audit(&self, ps: &PointSet, k: usize, queries: &[Vec<f64>]) -> Result<()> {
        let hi = (3 * k).div_ceil(2).min(ps.real_count());
        let lo = (k / 4).max(1);
        for q in queries {
            let (_, ds) = exact_knn_with_distances(ps, q, hi)?;
            let (a, b) = ((self.f)(ds[hi - 1]), (self.f)(ds[lo - 1]));
            if a > self.zeta2 * b {
                return Err(Error::InvalidFunction(format!(
                    "f(d_{hi}) = {a:e} exceeds zeta2 * f(d_{lo}) = {:e} at {q:?}",
                    self.zeta2 * b
                )));
            }
        }
        Ok(())
    }
}

/// `G(q)`: mean of `f` over the `k'` nearest sample points.
#[derive(Debug, Clone)]
pub struct SampledDensity {
    n: usize,
    k: usize,
    kprime: usize,
    coords: Vec<f64>,
    dim: usize,
    f: WellBehavedDescriptor,
}

pub fn sampled_density(
    ps: &PointSet,
    k: usize,
    f: WellBehavedDescriptor,
    eps: f64,
    phi: f64,
    seed: u64,
) -> Result<SampledDensity> {
    SampledDensity::build(ps, k, f, eps, phi, seed, DEFAULT_C)
}

impl SampledDensity {
    pub fn build(
        ps: &PointSet,
        k: usize,
        f: WellBehavedDescriptor,
        eps: f64,
        phi: f64,
        seed: u64,
        c: f64,
    ) -> Result<Self> {
        let real = ps.real_indices();
        let n = real.len();
        if k == 0 || k > n {
            return invalid(format!("k = {k} outside [1, {n}]"));
        }
        let audit: Vec<Vec<f64>> = (0..16).map(|j| ps.point(real[(j * 7919) % n]).to_vec()).collect();
        f.audit(ps, k, &audit)?;
        let spec = SampleSpec { c, ..SampleSpec::rings(k as f64 / n as f64, eps, phi, ps.dim()) };
        let m = relative_sample_size(&spec, n)?;
        let sample = draw(&real, m, seed);
        let kprime = if m >= n { k } else { (k as f64 * m as f64 / n as f64).round() as usize };
        if kprime == 0 {
            return Err(Error::ParametersTooCoarse(format!("k' = 0 for a sample of {m}")));
        }
        let mut coords = Vec::with_capacity(m * ps.dim());
        for &i in &sample {
            coords.extend_from_slice(ps.point(i));
        }
        Ok(SampledDensity { n, k, kprime, coords, dim: ps.dim(), f })
    }

    pub fn sample_size(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn kprime(&self) -> usize {
        self.kprime
    }

    pub fn input_len(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn query(&self, q: &[f64]) -> Result<f64> {
        if q.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: q.len(), line: None });
        }
        let mut d2: Vec<f64> = self.coords.chunks_exact(self.dim).map(|p| dist2(p, q)).collect();
        let kp = self.kprime;
        if kp < d2.len() {
            d2.select_nth_unstable_by(kp - 1, f64::total_cmp);
        }
        let sum: f64 = d2[..kp].iter().map(|&x| (self.f.f)(x.sqrt())).sum();
        Ok(sum / kp as f64)
    }
}
