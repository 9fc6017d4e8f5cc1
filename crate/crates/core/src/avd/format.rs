//! Versioned little-endian container for sketches.
//!
//! Every file starts with `b"KAVD"`, a `u32` version and a kind byte. A KAVD body
//! stores the header fields, the clusters and then every tree node in DFS order
//! with its optional cell record. Structures that are cheap to rebuild store
//! their points and parameters instead.

use std::io::{Read, Write};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::avd::kavd::{CellRecord, KAvdSketch, KavdStats, Target};
use crate::cquadtree::{CompressedQuadtree, Frame};
use crate::error::{Error, Result};
use crate::geom::{CanonicalCube, Lattice, PointSet, Transform};

pub const MAGIC: &[u8; 4] = b"KAVD";
pub const VERSION: u32 = 1;

/// Payload stored after the header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SketchKind {
    Kavd = 0,
    Density = 1,
    KnnQuery = 2,
    ConstantFactor = 3,
    Sample = 4,
}

impl SketchKind {
    fn from_u8(b: u8) -> Result<Self> {
        Ok(match b {
            0 => SketchKind::Kavd,
            1 => SketchKind::Density,
            2 => SketchKind::KnnQuery,
            3 => SketchKind::ConstantFactor,
            4 => SketchKind::Sample,
            _ => return Err(Error::Format(format!("unknown sketch kind {b}"))),
        })
    }
}

pub fn write_header<W: Write>(w: &mut W, kind: SketchKind) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LE>(VERSION)?;
    w.write_u8(kind as u8)?;
    Ok(())
}

pub fn read_header<R: Read>(r: &mut R) -> Result<SketchKind> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a sketch file (bad magic)".into()));
    }
    let version = r.read_u32::<LE>()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}, expected {VERSION}")));
    }
    SketchKind::from_u8(r.read_u8()?)
}

fn write_f64s<W: Write>(w: &mut W, xs: &[f64]) -> Result<()> {
    for &x in xs {
        w.write_f64::<LE>(x)?;
    }
    Ok(())
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; n];
    r.read_f64_into::<LE>(&mut out)?;
    Ok(out)
}

fn read_len<R: Read>(r: &mut R, limit: u64) -> Result<usize> {
    let n = r.read_u64::<LE>()?;
    if n > limit {
        return Err(Error::Format(format!("length {n} exceeds {limit}")));
    }
    Ok(n as usize)
}

const MAX_LEN: u64 = 1 << 32;

pub(crate) fn write_transform<W: Write>(w: &mut W, t: &Transform) -> Result<()> {
    w.write_f64::<LE>(t.scale)?;
    write_f64s(w, &t.origin)
}

pub(crate) fn read_transform<R: Read>(r: &mut R, d: usize) -> Result<Transform> {
    let scale = r.read_f64::<LE>()?;
    let origin = read_f64s(r, d)?;
    Ok(Transform { scale, origin })
}

/// Points, weights, padding flags and transform.
pub fn write_point_set<W: Write>(w: &mut W, ps: &PointSet) -> Result<()> {
    w.write_u32::<LE>(ps.dim() as u32)?;
    w.write_u64::<LE>(ps.len() as u64)?;
    write_f64s(w, ps.coords())?;
    write_f64s(w, ps.weights())?;
    for &s in ps.synthetic_mask() {
        w.write_u8(s as u8)?;
    }
    write_transform(w, ps.transform())
}

pub fn read_point_set<R: Read>(r: &mut R) -> Result<PointSet> {
    let d = r.read_u32::<LE>()? as usize;
    if d == 0 || d > 64 {
        return Err(Error::Format(format!("bad dimension {d}")));
    }
    let n = read_len(r, MAX_LEN)?;
    let coords = read_f64s(r, n * d)?;
    let weights = read_f64s(r, n)?;
    let mut synthetic = vec![0u8; n];
    r.read_exact(&mut synthetic)?;
    let transform = read_transform(r, d)?;
    let base = PointSet::from_coords(d, coords, Some(weights))?;
    let real: Vec<usize> = (0..n).filter(|&i| synthetic[i] == 0).collect();
    let ps = if real.len() == n { base } else { base.subset(&real) };
    Ok(ps.with_transform(transform))
}

fn write_target<W: Write>(w: &mut W, t: Target) -> Result<()> {
    match t {
        Target::Count(k) => {
            w.write_u8(0)?;
            w.write_u64::<LE>(k as u64)?;
        }
        Target::Weight(tau) => {
            w.write_u8(1)?;
            w.write_f64::<LE>(tau)?;
        }
    }
    Ok(())
}

fn read_target<R: Read>(r: &mut R) -> Result<Target> {
    match r.read_u8()? {
        0 => Ok(Target::Count(r.read_u64::<LE>()? as usize)),
        1 => Ok(Target::Weight(r.read_f64::<LE>()?)),
        f => Err(Error::Format(format!("bad target flag {f}"))),
    }
}

pub fn write_kavd_body<W: Write>(w: &mut W, sk: &KAvdSketch) -> Result<()> {
    let d = sk.dim;
    w.write_u32::<LE>(d as u32)?;
    write_target(w, sk.target)?;
    w.write_f64::<LE>(sk.eps)?;
    w.write_u64::<LE>(sk.n as u64)?;
    write_transform(w, &sk.transform)?;
    w.write_u64::<LE>(sk.radii.len() as u64)?;
    write_f64s(w, &sk.centers)?;
    write_f64s(w, &sk.radii)?;
    let st = &sk.stats;
    for x in [st.clusters, st.x_cells, st.s_cells, st.nodes, st.cells, st.uncertified, st.refine_rounds] {
        w.write_u64::<LE>(x as u64)?;
    }
    let order = sk.tree.dfs_order();
    w.write_u64::<LE>(order.len() as u64)?;
    for v in order {
        let cube = &sk.tree.node(v).cube;
        w.write_i32::<LE>(cube.level())?;
        for &c in cube.corner() {
            w.write_u64::<LE>(c)?;
        }
        match &sk.records[v] {
            None => w.write_u8(0)?,
            Some(rec) => {
                w.write_u8(1)?;
                w.write_u32::<LE>(rec.rep_x)?;
                w.write_u32::<LE>(rec.pnt_rep_x)?;
                w.write_f64::<LE>(rec.adknn)?;
                w.write_u32::<LE>(rec.knnrep)?;
                w.write_u8(rec.certified as u8)?;
            }
        }
    }
    Ok(())
}

pub fn read_kavd_body<R: Read>(r: &mut R) -> Result<KAvdSketch> {
    let d = r.read_u32::<LE>()? as usize;
    if d == 0 || d > 64 {
        return Err(Error::Format(format!("bad dimension {d}")));
    }
    let target = read_target(r)?;
    let eps = r.read_f64::<LE>()?;
    let n = r.read_u64::<LE>()? as usize;
    let transform = read_transform(r, d)?;
    let m = read_len(r, MAX_LEN)?;
    let centers = read_f64s(r, m * d)?;
    let radii = read_f64s(r, m)?;
    let mut st = [0usize; 7];
    for x in st.iter_mut() {
        *x = r.read_u64::<LE>()? as usize;
    }
    let stats = KavdStats {
        clusters: st[0],
        x_cells: st[1],
        s_cells: st[2],
        nodes: st[3],
        cells: st[4],
        uncertified: st[5],
        refine_rounds: st[6],
    };
    let count = read_len(r, MAX_LEN)?;
    let mut cubes = Vec::with_capacity(count);
    let mut recs = Vec::with_capacity(count);
    for _ in 0..count {
        let level = r.read_i32::<LE>()?;
        let mut corner = Lattice::new();
        for _ in 0..d {
            corner.push(r.read_u64::<LE>()?);
        }
        let cube = CanonicalCube::new(level, corner).map_err(|e| Error::Format(format!("bad cube: {e}")))?;
        let rec = match r.read_u8()? {
            0 => None,
            1 => {
                let rep_x = r.read_u32::<LE>()?;
                let pnt_rep_x = r.read_u32::<LE>()?;
                let adknn = r.read_f64::<LE>()?;
                let knnrep = r.read_u32::<LE>()?;
                let certified = r.read_u8()? != 0;
                if rep_x as usize >= m {
                    return Err(Error::Format(format!("record names cluster {rep_x} of {m}")));
                }
                Some(CellRecord { rep_x, pnt_rep_x, adknn, knnrep, certified })
            }
            f => return Err(Error::Format(format!("bad record flag {f}"))),
        };
        cubes.push((cube, None));
        recs.push(rec);
    }
    let tree = CompressedQuadtree::from_cubes(d, &cubes, Frame::identity(d))?;
    if tree.len() != count {
        return Err(Error::Format(format!("node list rebuilt into {} nodes, expected {count}", tree.len())));
    }
    let mut records = vec![None; count];
    for ((cube, _), rec) in cubes.iter().zip(recs) {
        let v = tree.find(cube).expect("rebuilt tree holds every listed cube");
        records[v] = rec;
    }
    Ok(KAvdSketch { dim: d, target, eps, transform, n, centers, radii, tree, records, stats })
}

pub fn write_kavd<W: Write>(mut w: W, sk: &KAvdSketch) -> Result<()> {
    write_header(&mut w, SketchKind::Kavd)?;
    write_kavd_body(&mut w, sk)
}

pub fn read_kavd<R: Read>(mut r: R) -> Result<KAvdSketch> {
    match read_header(&mut r)? {
        SketchKind::Kavd => read_kavd_body(&mut r),
        k => Err(Error::Format(format!("expected a KAVD sketch, found {k:?}"))),
    }
}
