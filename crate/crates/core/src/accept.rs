//! Acceptance suites, runnable by name from the CLI and from the `acceptance` test target.
//!
//! Every suite draws its instances from fixed seeds and compares against [`crate::oracle`].

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::avd::{build_kavd, ConstantFactor};
use crate::cquadtree::{locate_all, CompressedQuadtree};
use crate::density::{build_density, coreset_estimate, coreset_indices, SlowGrowFunction};
use crate::error::{invalid, Result};
use crate::geom::{dist, euclid_norm, product_norm, PointSet};
use crate::knn_query::{KnnConfig, KnnQueryStructure};
use crate::oracle::{centered_kball_radius, exact_density, exact_knn_distance, sorted_distances, tail_start};
use crate::quorum::quorum_cluster;
use crate::sampling::{sampled_density, sampled_kann, WellBehavedDescriptor};

/// Relative slack for comparisons between independently rounded sums of square roots.
const ROUND: f64 = 1e-12;

/// Suite names in criterion order.
pub const SUITES: [&str; 12] = [
    "const-band",
    "kavd-band",
    "space-trend",
    "knn-query",
    "rough",
    "density",
    "coreset",
    "tail-drop",
    "locate-all",
    "quorum",
    "sampling",
    "norm-laws",
];

#[derive(Debug, Clone)]
pub struct Outcome {
    /// 1-based criterion number.
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{:>2}] {:<12} {}  {} ({:.1}s)",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

/// Runs one suite; an internal error counts as a failure with the error as detail.
pub fn run(name: &str) -> Result<Outcome> {
    let Some(pos) = SUITES.iter().position(|&s| s == name) else {
        return invalid(format!("unknown suite {name:?}; known: all, {}", SUITES.join(", ")));
    };
    let t = Instant::now();
    let res = match pos {
        0 => const_band(),
        1 => kavd_band(),
        2 => space_trend(),
        3 => knn_query(),
        4 => rough(),
        5 => density(),
        6 => coreset(),
        7 => tail_drop(),
        8 => locate(),
        9 => quorum(),
        10 => sampling(),
        _ => norm_laws(),
    };
    let (passed, detail) = match res {
        Ok(x) => x,
        Err(e) => (false, format!("error: {e}")),
    };
    Ok(Outcome { id: pos + 1, name: SUITES[pos], passed, detail, elapsed: t.elapsed() })
}

/// `all` or a single suite name.
pub fn run_named(name: &str) -> Result<Vec<Outcome>> {
    if name == "all" {
        SUITES.iter().map(|s| run(s)).collect()
    } else {
        Ok(vec![run(name)?])
    }
}

type Check = Result<(bool, String)>;

pub fn uniform_points(rng: &mut impl Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.gen()).collect()).collect()
}

/// Two equal Gaussian blobs centered at `(0.3, ..)` and `(0.7, ..)` with deviation 0.05.
pub fn two_gaussians(rng: &mut impl Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    let g = Normal::new(0.0, 0.05).expect("valid deviation");
    (0..n)
        .map(|i| {
            let c = if i % 2 == 0 { 0.3 } else { 0.7 };
            (0..d).map(|_| c + g.sample(rng)).collect()
        })
        .collect()
}

/// A fifth of the queries uniform in `[0,1]^d`, the rest in the data box widened by half its
/// extent on each side.
pub fn mixed_query(rng: &mut impl Rng, ps: &PointSet, i: usize) -> Vec<f64> {
    let d = ps.dim();
    if i.is_multiple_of(5) {
        return (0..d).map(|_| rng.gen()).collect();
    }
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for j in ps.real_indices() {
        for (a, &x) in ps.point(j).iter().enumerate() {
            lo[a] = lo[a].min(x);
            hi[a] = hi[a].max(x);
        }
    }
    (0..d)
        .map(|a| {
            let w = hi[a] - lo[a];
            (lo[a] - 0.5 * w + 2.0 * w * rng.gen::<f64>()).clamp(0.0, 1.0)
        })
        .collect()
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    x >= lo * (1.0 - ROUND) && x <= hi * (1.0 + ROUND)
}

fn const_band() -> Check {
    let t = Instant::now();
    let cap = 10.0 * std::f64::consts::SQRT_2;
    let (mut viol, mut worst) = (0usize, 1.0f64);
    for d in [2, 3] {
        for k in [8, 32] {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + (d * 64 + k) as u64);
            let ps = PointSet::normalize(&uniform_points(&mut rng, 512, d), None)?;
            let cf = ConstantFactor::build(&ps, k, 7)?;
            for i in 0..1000 {
                let q = mixed_query(&mut rng, &ps, i);
                let (v, _) = cf.query(&q)?;
                let dk = exact_knn_distance(&ps, &q, k)?;
                worst = worst.max(v / dk);
                viol += !within(v, dk, cap * dk) as usize;
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Ok((viol == 0 && secs < 30.0, format!("violations {viol}, worst v/d_k {worst:.3} (cap {cap:.3}), {secs:.1}s")))
}

fn kavd_band() -> Check {
    let t = Instant::now();
    let mut viol = 0usize;
    let (mut worst_v, mut worst_w) = (0.0f64, 0.0f64);
    for (name, gauss) in [("uniform", false), ("gauss", true)] {
        let mut rng = ChaCha8Rng::seed_from_u64(if gauss { 202 } else { 201 });
        let pts = if gauss { two_gaussians(&mut rng, 1024, 2) } else { uniform_points(&mut rng, 1024, 2) };
        let ps = PointSet::normalize(&pts, None)?;
        for k in [16, 64] {
            for eps in [0.5, 0.25, 0.1] {
                let sk = build_kavd(&ps, k, eps)?;
                let mut bad = 0;
                for i in 0..2000 {
                    let q = mixed_query(&mut rng, &ps, i);
                    let (v, w) = sk.query(&q)?;
                    let dk = exact_knn_distance(&ps, &q, k)?;
                    let dw = dist(&q, ps.point(w));
                    worst_v = worst_v.max(v / dk - 1.0);
                    worst_w = worst_w.max((dw / dk - 1.0).abs());
                    bad += (!within(v, dk, (1.0 + eps) * dk) || !within(dw, (1.0 - eps) * dk, (1.0 + eps) * dk)) as usize;
                }
                if bad > 0 {
                    eprintln!("kavd-band: {name} k={k} eps={eps}: {bad} violations");
                }
                viol += bad;
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Ok((
        viol == 0 && secs < 300.0,
        format!("violations {viol}, worst v/d_k-1 {worst_v:.4}, worst |w/d_k-1| {worst_w:.4}, {secs:.1}s"),
    ))
}

fn space_trend() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let ps = PointSet::normalize(&uniform_points(&mut rng, 4096, 2), None)?;
    let counts: Vec<usize> =
        [8, 32, 128].iter().map(|&k| build_kavd(&ps, k, 0.25).map(|s| s.stats().cells)).collect::<Result<_>>()?;
    let decreasing = counts.windows(2).all(|w| w[1] < w[0]);
    let ratio = counts[0] as f64 / counts[2] as f64;
    Ok((decreasing && ratio >= 4.0, format!("cells {counts:?}, count(8)/count(128) = {ratio:.2} (need >= 4)")))
}

/// `log2 n + eps^(1-d)`.
pub fn frontier_scale(n: usize, eps: f64, d: usize) -> f64 {
    (n as f64).log2() + eps.powi(1 - d as i32)
}

fn knn_query() -> Check {
    let (mut viol, mut fitted) = (0usize, 0.0f64);
    for d in [2, 3] {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + d as u64);
        let ps = PointSet::normalize(&uniform_points(&mut rng, 500, d), None)?;
        let s = KnnQueryStructure::build(&ps, 11)?;
        for i in 0..1000 {
            let q = mixed_query(&mut rng, &ps, i);
            let k = rng.gen_range(1..=500);
            let eps = rng.gen_range(0.05..=1.0);
            let a = s.knn_distance(&q, k, eps)?;
            let dk = exact_knn_distance(&ps, &q, k)?;
            let dw = dist(&q, ps.point(a.witness));
            viol += (!within(a.beta, dk, (1.0 + eps) * dk) || !within(dw, (1.0 - eps) * dk, (1.0 + eps) * dk)) as usize;
            fitted = fitted.max(a.max_frontier as f64 / frontier_scale(500, eps, d));
        }
    }
    Ok((viol == 0 && fitted <= 16.0, format!("violations {viol}, fitted frontier constant {fitted:.3} (cap 16)")))
}

fn rough() -> Check {
    let n = 1000usize;
    let bound = (n as f64).powi(3);
    let (mut below, mut within_poly, mut total) = (0usize, 0usize, 0usize);
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let ps = PointSet::normalize(&uniform_points(&mut rng, n, 2), None)?;
        let s = KnnQueryStructure::build_with(&ps, KnnConfig { c: 3.0, seed, ..KnnConfig::default() })?;
        for i in 0..500 {
            let q = mixed_query(&mut rng, &ps, i);
            let k = rng.gen_range(1..=n);
            let r = s.rough_knn_distance(&q, k)?;
            let dk = exact_knn_distance(&ps, &q, k)?;
            total += 1;
            below += (r < dk) as usize;
            within_poly += (r <= bound * dk) as usize;
        }
    }
    let frac = within_poly as f64 / total as f64;
    Ok((below == 0 && frac >= 0.99, format!("R < d_k: {below}, fraction R <= n^3 d_k: {frac:.4}")))
}

/// Instances shared by the density and tail-drop suites.
fn density_instance(p: f64) -> Result<(PointSet, Vec<Vec<f64>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(600 + p as u64);
    let ps = PointSet::normalize(&uniform_points(&mut rng, 256, 2), None)?;
    let qs = (0..1000).map(|i| mixed_query(&mut rng, &ps, i)).collect();
    Ok((ps, qs))
}

fn density() -> Check {
    let (k, eps) = (16, 0.25);
    let mut viol = 0usize;
    let mut worst = 0.0f64;
    let mut sizes = Vec::new();
    for p in [1.0, 2.0] {
        let (ps, qs) = density_instance(p)?;
        let f = SlowGrowFunction::power(p)?;
        let ds = build_density(&ps, k, eps, f.clone())?;
        sizes.push(ds.coreset().len());
        for q in &qs {
            let xi = ds.query(q)?;
            let d = exact_density(&ps, q, k, eps, &|x| f.eval(x))?.full;
            worst = worst.max((d / xi - 1.0).abs());
            viol += !within(d, (1.0 - eps) * xi, (1.0 + eps) * xi) as usize;
        }
    }
    let cap = 40.0 * (k as f64).ln() / eps;
    let small = sizes.iter().all(|&s| s as f64 <= cap);
    Ok((
        viol == 0 && small,
        format!("violations {viol}, worst |D/xi-1| {worst:.4}, coreset sizes {sizes:?} (cap {cap:.0})"),
    ))
}

fn coreset() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(700);
    let mut viol = 0usize;
    for _ in 0..500 {
        let n = rng.gen_range(32..=512);
        let d = rng.gen_range(2..=3);
        let pts = if rng.gen() { uniform_points(&mut rng, n, d) } else { two_gaussians(&mut rng, n, d) };
        let ps = PointSet::normalize(&pts, None)?;
        let k = rng.gen_range(1..=n);
        let eps = rng.gen_range(0.05..=1.0);
        let p = [0.5, 1.0, 2.0][rng.gen_range(0..3)];
        let which = rng.gen_range(0..5);
        let q = mixed_query(&mut rng, &ps, which);
        let ds = sorted_distances(&ps, &q);
        let cs = coreset_indices(k, eps)?;
        let g: Vec<f64> = cs.indices.iter().map(|&i| ds[i - 1].powf(p)).collect();
        let est = coreset_estimate(&cs, &g)?;
        let ad: f64 = ds[tail_start(k, eps) - 1..k].iter().map(|x| x.powf(p)).sum();
        viol += !within(ad, (1.0 - eps / 4.0) * est, (1.0 + eps / 4.0) * est) as usize;
    }
    let cs = coreset_indices(100, 0.2)?;
    let g: Vec<f64> = cs.indices.iter().map(|&i| i as f64).collect();
    let est = coreset_estimate(&cs, &g)?;
    let closed = (est - 5147.0).abs() <= 0.05 * 5147.0;
    Ok((viol == 0 && closed, format!("violations {viol} of 500, sum 3..100 estimated as {est} (exact 5147)")))
}

fn tail_drop() -> Check {
    let (k, eps) = (16, 0.25);
    let mut viol = 0usize;
    let mut count = 0usize;
    for p in [1.0, 2.0] {
        let (ps, qs) = density_instance(p)?;
        for q in &qs {
            let v = exact_density(&ps, q, k, eps, &|x: f64| x.powf(p))?;
            count += 1;
            viol += !(v.tail <= v.full && v.full <= (1.0 + eps / 4.0) * v.tail) as usize;
        }
    }
    Ok((viol == 0, format!("violations {viol} of {count}")))
}

fn locate() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(900);
    let (mut mismatch, mut color_mismatch, mut trials) = (0usize, 0usize, 0usize);
    for _ in 0..100 {
        let count = rng.gen_range(2..=6);
        let mut sets = Vec::new();
        for _ in 0..count {
            let n = rng.gen_range(5..=200);
            let pts = if rng.gen() { uniform_points(&mut rng, n, 2) } else { two_gaussians(&mut rng, n, 2) };
            sets.push(PointSet::from_coords(
                2,
                pts.into_iter().flatten().map(|x: f64| x.clamp(0.0, 1.0)).collect(),
                None,
            )?);
        }
        let trees: Vec<CompressedQuadtree> = sets.iter().map(|s| CompressedQuadtree::from_points(s, None)).collect::<Result<_>>()?;
        let refs: Vec<&CompressedQuadtree> = trees.iter().collect();
        let loc = locate_all(&refs)?;
        for j in 0..100 {
            let q: Vec<f64> = if j % 4 == 0 {
                let s = &sets[rng.gen_range(0..count)];
                s.point(rng.gen_range(0..s.len())).to_vec()
            } else {
                vec![rng.gen(), rng.gen()]
            };
            trials += 1;
            let got = loc.locate(&q)?;
            let want: Vec<usize> = trees.iter().map(|t| t.locate(&q)).collect::<Result<_>>()?;
            mismatch += (got != want) as usize;

            let path = loc.tree().locate_path(&q)?;
            let mut scan = vec![None; count];
            for &v in &path {
                for &c in &loc.tree().node(v).colors {
                    scan[c as usize] = Some(v);
                }
            }
            let w = *path.last().expect("path holds the root");
            color_mismatch += (loc.index().lowest_colored_ancestors(w)? != scan) as usize;
        }
    }
    Ok((
        mismatch == 0 && color_mismatch == 0,
        format!("{trials} trials, locate mismatches {mismatch}, color-index mismatches {color_mismatch}"),
    ))
}

fn quorum() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let (mut viol, mut rounds) = (0usize, 0usize);
    let mut worst = 1.0f64;
    for inst in 0..50 {
        let k = rng.gen_range(1..=40);
        let r = if inst == 0 { 2000 / k } else { rng.gen_range(2..=(600 / k).max(2)) };
        let n = k * r;
        let pts = if inst % 2 == 0 { uniform_points(&mut rng, n, 2) } else { two_gaussians(&mut rng, n, 2) };
        let ps = PointSet::normalize(&pts, None)?;
        let qc = quorum_cluster(&ps, k)?;
        let mut remaining: Vec<usize> = (0..n).collect();
        for c in &qc.clusters {
            let rho = centered_kball_radius(&ps, &remaining, k)?;
            let ri = c.round_radius;
            rounds += 1;
            if rho > 0.0 {
                worst = worst.max(ri / rho).max(rho / ri);
            }
            viol += !(ri >= rho / 2.0 * (1.0 - ROUND) && ri <= 2.0 * rho * (1.0 + ROUND)) as usize;
            remaining.retain(|i| !c.members.contains(i));
        }
    }
    Ok((viol == 0, format!("violations {viol} over {rounds} rounds, worst ratio {worst:.3}")))
}

/// `P(X <= x)` for `X ~ Binomial(n, p)`.
pub fn binomial_cdf(x: usize, n: usize, p: f64) -> f64 {
    let mut term = (1.0 - p).powi(n as i32);
    let mut acc = term;
    for i in 0..x.min(n) {
        term *= (n - i) as f64 / (i + 1) as f64 * p / (1.0 - p);
        acc += term;
    }
    acc.min(1.0)
}

/// Index bounds `floor((1 - eps) k)` and `ceil((1 + eps) k)`, guarded against rounding.
pub fn rank_band(k: usize, eps: f64, n: usize) -> (usize, usize) {
    let lo = (((1.0 - eps) * k as f64 + 1e-9).floor() as usize).max(1);
    let hi = (((1.0 + eps) * k as f64 - 1e-9).ceil() as usize).min(n);
    (lo, hi)
}

fn sampling() -> Check {
    let t = Instant::now();
    let (n, k, eps, phi) = (4000, 400, 0.3, 0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(1100);
    let ps = PointSet::normalize(&uniform_points(&mut rng, n, 2), None)?;
    let (lo, hi) = rank_band(k, eps, n);
    let (mut good, mut good_k, mut good_d) = (0usize, 0usize, 0usize);
    let seeds = 50;
    for seed in 0..seeds as u64 {
        let sk = sampled_kann(&ps, k, eps, phi, seed)?;
        let sd = sampled_density(&ps, k, WellBehavedDescriptor::new(|x| x * x, 64.0)?, eps, phi, seed)?;
        let mut qr = ChaCha8Rng::seed_from_u64(2000 + seed);
        let (mut ok_k, mut ok_d) = (true, true);
        for i in 0..100 {
            let q = mixed_query(&mut qr, &ps, i);
            let ds = sorted_distances(&ps, &q);
            let (_, w) = sk.query(&q)?;
            let dw = dist(&q, ps.point(w));
            ok_k &= within(dw, (1.0 - eps) * ds[lo - 1], (1.0 + eps) * ds[hi - 1]);
            let f: f64 = ds[..k].iter().map(|x| x * x).sum::<f64>() / k as f64;
            ok_d &= (f - sd.query(&q)?).abs() <= eps * f;
        }
        good_k += ok_k as usize;
        good_d += ok_d as usize;
        good += (ok_k && ok_d) as usize;
    }
    let frac = good as f64 / seeds as f64;
    // Fail only when `good` is significantly below the nominal 1 - phi rate.
    let pval = binomial_cdf(good, seeds, 1.0 - phi);
    let secs = t.elapsed().as_secs_f64();
    Ok((
        (frac >= 1.0 - phi || pval >= 0.01) && secs < 600.0,
        format!(
            "seeds passing {good}/{seeds} (kann {good_k}, density {good_d}), binomial p {pval:.3}, m = {}, {secs:.1}s",
            sampled_kann(&ps, k, eps, phi, 0)?.sample_size()
        ),
    ))
}

fn norm_laws() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1200);
    let (mut bad_norm, mut bad_lip) = (0usize, 0usize);
    for i in 0..100_000 {
        let d = 1 + i % 4;
        let scale = 10f64.powi(rng.gen_range(-6..=3));
        let u: Vec<f64> = (0..=d).map(|_| scale * (2.0 * rng.gen::<f64>() - 1.0)).collect();
        let e = euclid_norm(&u);
        let p = product_norm(&u)?;
        bad_norm += !(e <= p * (1.0 + ROUND) && p <= std::f64::consts::SQRT_2 * e * (1.0 + ROUND)) as usize;
    }
    // d_k is 1-Lipschitz: |d_k(q) - d_k(u)| <= |q - u|.
    for _ in 0..100_000 {
        let n = rng.gen_range(2..=40);
        let d = rng.gen_range(1..=3);
        let ps = PointSet::from_points(&uniform_points(&mut rng, n, d), None)?;
        let k = rng.gen_range(1..=n);
        let q: Vec<f64> = (0..d).map(|_| rng.gen()).collect();
        let u: Vec<f64> = q.iter().map(|x| x + 0.1 * (2.0 * rng.gen::<f64>() - 1.0)).collect();
        let a = exact_knn_distance(&ps, &q, k)?;
        let b = exact_knn_distance(&ps, &u, k)?;
        bad_lip += ((a - b).abs() > dist(&q, &u) + 1e-12) as usize;
    }
    Ok((bad_norm == 0 && bad_lip == 0, format!("norm sandwich violations {bad_norm}, Lipschitz violations {bad_lip} (1e5 each)")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_cdf_matches_small_cases() {
        assert!((binomial_cdf(0, 3, 0.5) - 0.125).abs() < 1e-15);
        assert!((binomial_cdf(1, 3, 0.5) - 0.5).abs() < 1e-15);
        assert!((binomial_cdf(3, 3, 0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_suite() {
        assert!(run("nope").is_err());
    }

    #[test]
    fn rank_band_is_exact_on_round_products() {
        assert_eq!(rank_band(400, 0.3, 4000), (280, 520));
        assert_eq!(rank_band(10, 0.5, 12), (5, 12));
    }
}
