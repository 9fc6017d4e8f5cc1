//! Batch frontend: build and query sketches, run the exact oracle, sampling trials and the
//! acceptance suites.
//!
//! Exit codes: 0 success, 2 invalid input or parameters, 3 contract violation (under
//! `--oracle` or a failing acceptance suite), 4 I/O or unreadable sketch file.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use kavd::accept::{mixed_query, rank_band, run_named};
use kavd::avd::format::{read_header, read_kavd_body, read_point_set, write_header, write_kavd, write_point_set, SketchKind};
use kavd::avd::{ConstantFactor, KAvdSketch, KavdConfig, Target};
use kavd::density::{DensityConfig, DensityStructure, SlowGrowFunction};
use kavd::geom::{dist, Transform};
use kavd::io::{read_points, RawPoints};
use kavd::knn_query::KnnQueryStructure;
use kavd::oracle::{exact_density, exact_knn_distance, exact_weighted_distance, report, sorted_distances};
use kavd::sampling::{SampledDensity, SampledKnn, WellBehavedDescriptor, DEFAULT_C};
use kavd::{Error, PointSet, Result};

#[derive(Parser)]
#[command(name = "kavd", version, about = "Sketches for k-th nearest neighbor distance and density queries")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a sketch from a point file and save it.
    Build(BuildArgs),
    /// Answer a batch of queries from a saved sketch.
    Query(QueryArgs),
    /// Exact values by brute force.
    Oracle(OracleArgs),
    /// Repeated sampling estimators against the oracle.
    Sample(SampleArgs),
    /// Run acceptance suites by name (`all` runs every suite).
    Accept(AcceptArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Kavd,
    Knnq,
    Const,
    Density,
    Sample,
}

#[derive(Args)]
struct BuildArgs {
    /// Point file: one point per line, optional `w=<weight>`.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "kavd")]
    kind: Kind,
    #[arg(long, conflicts_with = "tau")]
    k: Option<usize>,
    /// Weight target, for weighted KAVD sketches.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    /// Density function: l1, l2sq or pow:<p>.
    #[arg(long, default_value = "l1")]
    f: String,
    #[arg(long, default_value_t = 0.1)]
    phi: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    sketch: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    /// Point file the sketch was built from; adds exact values and checks the contract.
    #[arg(long)]
    oracle: Option<PathBuf>,
    /// Clamp out-of-domain queries into the domain instead of reporting them.
    #[arg(long)]
    clamp: bool,
    /// Rank for `knnq` sketches (defaults to the build-time k for other kinds).
    #[arg(long)]
    k: Option<usize>,
    /// Accuracy for `knnq` sketches.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    input: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long, default_value = "l1")]
    f: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    input: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0.3)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    phi: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Audit queries per trial; drawn around the data when no query file is given.
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AcceptArgs {
    #[arg(long, default_value = "all")]
    suite: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Build(a) => cmd_build(a),
        Cmd::Query(a) => cmd_query(a),
        Cmd::Oracle(a) => cmd_oracle(a),
        Cmd::Sample(a) => cmd_sample(a),
        Cmd::Accept(a) => cmd_accept(a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ContractViolation(_) => 3,
        Error::Io(_) | Error::Format(_) => 4,
        _ => 2,
    }
}

fn load_points(path: &Path) -> Result<RawPoints> {
    let raw = read_points(BufReader::new(File::open(path)?))?;
    if raw.points.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(raw)
}

fn normalized(raw: &RawPoints) -> Result<PointSet> {
    PointSet::normalize(&raw.points, raw.weights.as_deref())
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

/// `# kavd <version> <command> key=value ...`
fn config_header(w: &mut dyn Write, command: &str, fields: &[(&str, String)]) -> Result<()> {
    let kv: Vec<String> = fields.iter().map(|(k, v)| format!("{k}={v}")).collect();
    writeln!(w, "# kavd {} {command} {}", env!("CARGO_PKG_VERSION"), kv.join(" "))?;
    Ok(())
}

fn opt<T: std::fmt::Display>(x: &Option<T>) -> String {
    x.as_ref().map_or("-".into(), |v| v.to_string())
}

fn validate_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("eps = {eps} outside (0, 1)")));
    }
    Ok(())
}

/// Point sets and parameters of the kinds that are rebuilt on load.
fn write_rebuildable(w: &mut impl Write, kind: SketchKind, ps: &PointSet, a: &BuildArgs, k: usize) -> Result<()> {
    write_header(w, kind)?;
    write_point_set(w, ps)?;
    w.write_u64::<LE>(k as u64)?;
    w.write_f64::<LE>(a.eps)?;
    w.write_f64::<LE>(a.phi)?;
    w.write_u64::<LE>(a.seed)?;
    Ok(())
}

fn cmd_build(a: BuildArgs) -> Result<ExitCode> {
    validate_eps(a.eps)?;
    let raw = load_points(&a.input)?;
    let ps = normalized(&raw)?;
    let n = ps.real_count();
    let k = match (a.k, a.tau) {
        (Some(k), _) => k,
        (None, Some(_)) if a.kind == Kind::Kavd => 0,
        (None, Some(_)) => return Err(Error::InvalidArgument("--tau is only supported by --kind kavd".into())),
        (None, None) if a.kind == Kind::Knnq => 1,
        (None, None) => return Err(Error::InvalidArgument("--k (or --tau) is required".into())),
    };
    if a.tau.is_none() && (k == 0 || k > n) {
        return Err(Error::InvalidArgument(format!("k = {k} outside [1, {n}]")));
    }
    let t = Instant::now();
    let mut w = BufWriter::new(File::create(&a.out)?);
    let cells = match a.kind {
        Kind::Kavd => {
            let target = a.tau.map_or(Target::Count(k), Target::Weight);
            let sk = KAvdSketch::build(&ps, target, a.eps, &KavdConfig { seed: a.seed, ..KavdConfig::default() })?;
            write_kavd(&mut w, &sk)?;
            sk.stats().cells
        }
        Kind::Density => {
            let f = SlowGrowFunction::parse(&a.f)?;
            let mut config = DensityConfig::default();
            config.kavd.seed = a.seed;
            let ds = DensityStructure::build(&ps, k, a.eps, f, &config)?;
            ds.write(&mut w)?;
            ds.cell_count()
        }
        Kind::Knnq => {
            KnnQueryStructure::build(&ps, a.seed)?;
            write_rebuildable(&mut w, SketchKind::KnnQuery, &ps, &a, k)?;
            0
        }
        Kind::Const => {
            ConstantFactor::build(&ps, k, a.seed)?;
            write_rebuildable(&mut w, SketchKind::ConstantFactor, &ps, &a, k)?;
            0
        }
        Kind::Sample => {
            let s = SampledKnn::build(&ps, k, a.eps, a.phi, a.seed, DEFAULT_C)?;
            write_rebuildable(&mut w, SketchKind::Sample, &ps, &a, k)?;
            s.sample_size()
        }
    };
    w.flush()?;
    drop(w);
    let bytes = std::fs::metadata(&a.out)?.len();
    let mut out = std::io::stdout().lock();
    config_header(
        &mut out,
        "build",
        &[
            ("input", a.input.display().to_string()),
            ("kind", a.kind.to_possible_value().expect("named").get_name().to_string()),
            ("k", opt(&a.k)),
            ("tau", opt(&a.tau)),
            ("eps", a.eps.to_string()),
            ("f", a.f.clone()),
            ("phi", a.phi.to_string()),
            ("seed", a.seed.to_string()),
        ],
    )?;
    writeln!(out, "n,d,cells,bytes,seconds")?;
    writeln!(out, "{n},{},{cells},{bytes},{:.3}", ps.dim(), t.elapsed().as_secs_f64())?;
    Ok(ExitCode::SUCCESS)
}

/// A loaded sketch of any kind.
enum Loaded {
    Kavd(KAvdSketch),
    Density(DensityStructure),
    Knnq { knn: KnnQueryStructure, k: usize, eps: f64 },
    Const(ConstantFactor, usize),
    Sample(SampledKnn, usize, f64),
}

struct Rebuilt {
    ps: PointSet,
    k: usize,
    eps: f64,
    phi: f64,
    seed: u64,
}

fn read_rebuildable(r: &mut impl Read) -> Result<Rebuilt> {
    let ps = read_point_set(r)?;
    Ok(Rebuilt {
        ps,
        k: r.read_u64::<LE>()? as usize,
        eps: r.read_f64::<LE>()?,
        phi: r.read_f64::<LE>()?,
        seed: r.read_u64::<LE>()?,
    })
}

fn load_sketch(path: &Path) -> Result<(Loaded, Transform, usize)> {
    let mut r = BufReader::new(File::open(path)?);
    let loaded = match read_header(&mut r)? {
        SketchKind::Kavd => Loaded::Kavd(read_kavd_body(&mut r)?),
        SketchKind::Density => {
            // `DensityStructure::read` expects the header.
            drop(r);
            Loaded::Density(DensityStructure::read(BufReader::new(File::open(path)?))?)
        }
        SketchKind::KnnQuery => {
            let b = read_rebuildable(&mut r)?;
            Loaded::Knnq { knn: KnnQueryStructure::build(&b.ps, b.seed)?, k: b.k, eps: b.eps }
        }
        SketchKind::ConstantFactor => {
            let b = read_rebuildable(&mut r)?;
            Loaded::Const(ConstantFactor::build(&b.ps, b.k, b.seed)?, b.k)
        }
        SketchKind::Sample => {
            let b = read_rebuildable(&mut r)?;
            Loaded::Sample(SampledKnn::build(&b.ps, b.k, b.eps, b.phi, b.seed, DEFAULT_C)?, b.k, b.eps)
        }
    };
    let (t, d) = match &loaded {
        Loaded::Kavd(s) => (s.transform().clone(), s.dim()),
        Loaded::Density(s) => (s.transform().clone(), s.sketches()[0].dim()),
        Loaded::Knnq { knn, .. } => (knn.points().transform().clone(), knn.points().dim()),
        Loaded::Const(c, _) => (c.transform().clone(), c.dim()),
        Loaded::Sample(s, _, _) => (s.transform().clone(), s.dim()),
    };
    Ok((loaded, t, d))
}

/// One answered query in input units.
/// Query point, answer, and `(exact, within contract)` when an oracle is given.
type Row = (Vec<f64>, Option<Answer>, Option<(f64, bool)>);

struct Answer {
    value: f64,
    witness: Option<usize>,
}

fn answer(l: &Loaded, t: &Transform, q: &[f64], k: usize, eps: f64) -> Result<Answer> {
    let s = t.scale;
    Ok(match l {
        Loaded::Kavd(sk) => {
            let (v, w) = sk.query(q)?;
            Answer { value: v * s, witness: Some(w) }
        }
        Loaded::Density(ds) => Answer { value: ds.query_input(&t.to_input(q))?, witness: None },
        Loaded::Knnq { knn, .. } => {
            let a = knn.knn_distance(q, k, eps)?;
            Answer { value: a.beta * s, witness: Some(a.witness) }
        }
        Loaded::Const(c, _) => {
            let (v, w) = c.query(q)?;
            Answer { value: v * s, witness: Some(w) }
        }
        Loaded::Sample(sk, _, _) => {
            let (v, w) = sk.query(q)?;
            Answer { value: v * s, witness: Some(w) }
        }
    })
}

/// Exact value in input units and whether the answer meets its contract.
fn check(l: &Loaded, ps: &PointSet, q: &[f64], a: &Answer, k: usize, eps: f64) -> Result<(f64, bool)> {
    let s = ps.transform().scale;
    let slack = 1e-12;
    let within = |x: f64, lo: f64, hi: f64| x >= lo * (1.0 - slack) && x <= hi * (1.0 + slack);
    let wdist = |w: usize| dist(q, ps.point(w)) * s;
    Ok(match l {
        Loaded::Kavd(sk) => {
            let e = sk.eps();
            let exact = match sk.target() {
                Target::Count(k) => exact_knn_distance(ps, q, k)?,
                Target::Weight(tau) => exact_weighted_distance(ps, q, tau)?,
            } * s;
            let w = wdist(a.witness.expect("kavd witness"));
            (exact, within(a.value, exact, (1.0 + e) * exact) && within(w, (1.0 - e) * exact, (1.0 + e) * exact))
        }
        Loaded::Density(ds) => {
            let f = ds.function().clone();
            let exact = exact_density(ps, q, ds.k(), ds.eps(), &|x| f.eval(x * s))?.full;
            let e = ds.eps();
            (exact, within(exact, (1.0 - e) * a.value, (1.0 + e) * a.value))
        }
        Loaded::Knnq { .. } => {
            let exact = exact_knn_distance(ps, q, k)? * s;
            let w = wdist(a.witness.expect("knn witness"));
            (exact, within(a.value, exact, (1.0 + eps) * exact) && within(w, (1.0 - eps) * exact, (1.0 + eps) * exact))
        }
        Loaded::Const(_, k) => {
            let exact = exact_knn_distance(ps, q, *k)? * s;
            (exact, within(a.value, exact, 10.0 * std::f64::consts::SQRT_2 * exact))
        }
        Loaded::Sample(_, k, e) => {
            let ds = sorted_distances(ps, q);
            let (lo, hi) = rank_band(*k, *e, ds.len());
            let w = wdist(a.witness.expect("sample witness"));
            (ds[*k - 1] * s, within(w, (1.0 - e) * ds[lo - 1] * s, (1.0 + e) * ds[hi - 1] * s))
        }
    })
}

fn cmd_query(a: QueryArgs) -> Result<ExitCode> {
    let (loaded, t, d) = load_sketch(&a.sketch)?;
    let (k, eps) = match &loaded {
        Loaded::Knnq { k, eps, .. } => (a.k.unwrap_or(*k), a.eps.unwrap_or(*eps)),
        _ => {
            if a.k.is_some() || a.eps.is_some() {
                return Err(Error::InvalidArgument("--k and --eps apply to knnq sketches only".into()));
            }
            (0, 0.0)
        }
    };
    if let Loaded::Knnq { knn, .. } = &loaded {
        if k == 0 || k > knn.len() {
            return Err(Error::InvalidArgument(format!("k = {k} outside [1, {}]", knn.len())));
        }
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidArgument(format!("eps = {eps} outside (0, 1]")));
        }
    }
    let raw = read_points(BufReader::new(File::open(&a.queries)?))?;
    if let Some(p) = raw.points.iter().position(|p| p.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: raw.points[p].len(), line: Some(raw.lines[p]) });
    }
    let oracle = match &a.oracle {
        Some(path) => {
            let ps = normalized(&load_points(path)?)?;
            if ps.dim() != d || ps.transform() != &t {
                return Err(Error::InvalidArgument("the oracle point file does not match the sketch".into()));
            }
            Some(ps)
        }
        None => None,
    };

    let rows: Vec<Result<Row>> = raw
        .points
        .par_iter()
        .zip(raw.lines.par_iter())
        .map(|(p, &line)| {
            let mut q = t.to_normalized(p);
            if q.iter().any(|x| !(0.0..=1.0).contains(x)) {
                if !a.clamp {
                    eprintln!("warning: line {line}: query outside the domain");
                    return Ok((p.clone(), None, None));
                }
                eprintln!("warning: line {line}: query clamped into the domain");
                q.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
            }
            let ans = answer(&loaded, &t, &q, k, eps)?;
            let chk = match &oracle {
                Some(ps) => Some(check(&loaded, ps, &q, &ans, k, eps)?),
                None => None,
            };
            Ok((p.clone(), Some(ans), chk))
        })
        .collect();

    let mut out = output(&a.out)?;
    config_header(
        &mut *out,
        "query",
        &[
            ("sketch", a.sketch.display().to_string()),
            ("queries", a.queries.display().to_string()),
            ("oracle", opt(&a.oracle.as_ref().map(|p| p.display()))),
            ("clamp", a.clamp.to_string()),
            ("k", opt(&a.k)),
            ("eps", opt(&a.eps)),
        ],
    )?;
    let qcols: Vec<String> = (0..d).map(|i| format!("q{i}")).collect();
    write!(out, "line,{},value,witness", qcols.join(","))?;
    if oracle.is_some() {
        write!(out, ",oracle,ratio")?;
    }
    writeln!(out)?;
    let mut violations = 0usize;
    for (row, &line) in rows.into_iter().zip(&raw.lines) {
        let (p, ans, chk) = row?;
        let qs: Vec<String> = p.iter().map(|x| x.to_string()).collect();
        let (v, w) = match &ans {
            Some(x) => (x.value.to_string(), opt(&x.witness)),
            None => ("NaN".into(), String::new()),
        };
        write!(out, "{line},{},{v},{w}", qs.join(","))?;
        if oracle.is_some() {
            match (chk, &ans) {
                (Some((exact, ok)), Some(x)) => {
                    violations += !ok as usize;
                    write!(out, ",{exact},{}", x.value / exact)?;
                }
                _ => write!(out, ",NaN,NaN")?,
            }
        }
        writeln!(out)?;
    }
    out.flush()?;
    if violations > 0 {
        return Err(Error::ContractViolation(format!("{violations} answers outside their band")));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(a: OracleArgs) -> Result<ExitCode> {
    validate_eps(a.eps)?;
    let f = SlowGrowFunction::parse(&a.f)?;
    let pts = load_points(&a.input)?;
    let ps = PointSet::from_points(&pts.points, pts.weights.clone())?;
    let raw = read_points(BufReader::new(File::open(&a.queries)?))?;
    let mut out = output(&a.out)?;
    config_header(
        &mut *out,
        "oracle",
        &[
            ("input", a.input.display().to_string()),
            ("queries", a.queries.display().to_string()),
            ("k", a.k.to_string()),
            ("eps", a.eps.to_string()),
            ("f", a.f.clone()),
        ],
    )?;
    writeln!(out, "line,d_k,density,tail_density,mean_density,distances,micros")?;
    for (p, &line) in raw.points.iter().zip(&raw.lines) {
        if p.len() != ps.dim() {
            return Err(Error::DimensionMismatch { expected: ps.dim(), found: p.len(), line: Some(line) });
        }
        let r = report(&ps, p, a.k, a.eps, &|x| f.eval(x))?;
        let ds: Vec<String> = r.per_index.iter().map(|x| x.to_string()).collect();
        writeln!(
            out,
            "{line},{},{},{},{},{},{}",
            r.dk,
            r.density.full,
            r.density.tail,
            r.density.mean,
            ds.join(";"),
            r.elapsed.as_micros()
        )?;
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sample(a: SampleArgs) -> Result<ExitCode> {
    let ps = normalized(&load_points(&a.input)?)?;
    let n = ps.real_count();
    let queries: Vec<Vec<f64>> = match &a.queries {
        Some(p) => {
            let raw = read_points(BufReader::new(File::open(p)?))?;
            raw.points.iter().map(|x| ps.transform().to_normalized(x)).collect()
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed ^ 0x5eed);
            (0..a.count).map(|i| mixed_query(&mut rng, &ps, i)).collect()
        }
    };
    let (lo, hi) = rank_band(a.k, a.eps, n);
    let mut out = output(&a.out)?;
    config_header(
        &mut *out,
        "sample",
        &[
            ("input", a.input.display().to_string()),
            ("k", a.k.to_string()),
            ("eps", a.eps.to_string()),
            ("phi", a.phi.to_string()),
            ("seed", a.seed.to_string()),
            ("trials", a.trials.to_string()),
            ("c", DEFAULT_C.to_string()),
        ],
    )?;
    writeln!(out, "trial,seed,m,kprime,queries,kann_violations,density_violations,density_max_rel_err,ok")?;
    for trial in 0..a.trials {
        let seed = a.seed + trial as u64;
        let sk = SampledKnn::build(&ps, a.k, a.eps, a.phi, seed, DEFAULT_C)?;
        let sd = SampledDensity::build(&ps, a.k, WellBehavedDescriptor::new(|x| x * x, 64.0)?, a.eps, a.phi, seed, DEFAULT_C)?;
        let (mut bad_k, mut bad_d, mut worst) = (0usize, 0usize, 0.0f64);
        for q in &queries {
            let ds = sorted_distances(&ps, q);
            let (_, w) = sk.query(q)?;
            let dw = dist(q, ps.point(w));
            bad_k += !(dw >= (1.0 - a.eps) * ds[lo - 1] && dw <= (1.0 + a.eps) * ds[hi - 1]) as usize;
            let f: f64 = ds[..a.k].iter().map(|x| x * x).sum::<f64>() / a.k as f64;
            let err = (sd.query(q)? - f).abs() / f;
            worst = worst.max(err);
            bad_d += (err > a.eps) as usize;
        }
        writeln!(
            out,
            "{trial},{seed},{},{},{},{bad_k},{bad_d},{worst},{}",
            sk.sample_size(),
            sk.rank_for(a.k),
            queries.len(),
            bad_k == 0 && bad_d == 0
        )?;
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_accept(a: AcceptArgs) -> Result<ExitCode> {
    let outcomes = run_named(&a.suite)?;
    let mut out = std::io::stdout().lock();
    config_header(&mut out, "accept", &[("suite", a.suite.clone())])?;
    writeln!(out, "criterion,suite,result,seconds,detail")?;
    let mut failed = 0;
    for o in &outcomes {
        failed += !o.passed as usize;
        writeln!(
            out,
            "{},{},{},{:.2},\"{}\"",
            o.id,
            o.name,
            if o.passed { "pass" } else { "fail" },
            o.elapsed.as_secs_f64(),
            o.detail.replace('"', "'")
        )?;
    }
    out.flush()?;
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(3) })
}
