//! C ABI over the `kavd` sketches.
//!
//! Every function returns a [`KavdStatus`]; results come back through out-pointers.
//! Handles are opaque and must be released with the matching `*_free` function.
//! Coordinates and distances are in input units. After a failure,
//! [`kavd_last_error_message`] describes it on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kavd::avd::format::{read_kavd, write_kavd};
use kavd::avd::{build_kavd, build_kavd_weighted, KAvdSketch};
use kavd::density::{build_density, DensityStructure, SlowGrowFunction};
use kavd::oracle::exact_knn_distance;
use kavd::{Error, PointSet};

/// Status codes returned by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KavdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    EmptyInput = 3,
    DimensionMismatch = 4,
    Parse = 5,
    OutOfDomain = 6,
    InvalidFunction = 7,
    ContractViolation = 8,
    ParametersTooCoarse = 9,
    ResolutionExhausted = 10,
    ResourceExhausted = 11,
    Format = 12,
    Io = 13,
    Panic = 14,
}

/// A normalized point set.
pub struct KavdPointSet {
    inner: PointSet,
}

/// An approximate Voronoi sketch for `d_k` (or the weighted `d_tau`).
pub struct KavdSketch {
    inner: KAvdSketch,
}

/// A distance-based density structure.
pub struct KavdDensity {
    inner: DensityStructure,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> KavdStatus {
    match e {
        Error::InvalidArgument(_) => KavdStatus::InvalidArgument,
        Error::EmptyInput => KavdStatus::EmptyInput,
        Error::DimensionMismatch { .. } => KavdStatus::DimensionMismatch,
        Error::Parse { .. } => KavdStatus::Parse,
        Error::ResolutionExhausted { .. } => KavdStatus::ResolutionExhausted,
        Error::OutOfDomain(_) => KavdStatus::OutOfDomain,
        Error::InvalidFunction(_) => KavdStatus::InvalidFunction,
        Error::ContractViolation(_) => KavdStatus::ContractViolation,
        Error::ParametersTooCoarse(_) => KavdStatus::ParametersTooCoarse,
        Error::ResourceExhausted(_) => KavdStatus::ResourceExhausted,
        Error::Format(_) => KavdStatus::Format,
        Error::Io(_) => KavdStatus::Io,
    }
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> KavdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KavdStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("{what} is null"));
            KavdStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            KavdStatus::Panic
        }
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn nonnull<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    // SAFETY: callers pass either null or a pointer obtained from this library.
    unsafe { p.as_ref() }.ok_or(Failure::Null(what))
}

fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    // SAFETY: the caller guarantees `len` readable doubles at `p`.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

fn path<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null("path"));
    }
    // SAFETY: the caller passes a nul-terminated string.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure::Lib(Error::InvalidArgument("path is not UTF-8".into())))
}

fn write_out<T>(out: *mut T, v: T, what: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    // SAFETY: checked non-null; the caller owns the storage.
    unsafe { out.write(v) };
    Ok(())
}

fn check_dim(q: &[f64], d: usize) -> Result<(), Failure> {
    if q.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: q.len(), line: None }.into());
    }
    Ok(())
}

/// Message of the last failure on this thread, or null. Valid until the next call that fails.
#[no_mangle]
pub extern "C" fn kavd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn kavd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Normalizes `n` points of dimension `dim` stored row-major in `coords`.
/// `weights` may be null for unit weights.
///
/// # Safety
/// `coords` must hold `n * dim` doubles and `weights`, if not null, `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn kavd_point_set_new(
    coords: *const f64,
    n: usize,
    dim: usize,
    weights: *const f64,
    out: *mut *mut KavdPointSet,
) -> KavdStatus {
    guard(|| {
        if n == 0 || dim == 0 {
            return Err(Error::EmptyInput.into());
        }
        let len = n.checked_mul(dim).ok_or(Error::InvalidArgument("n * dim overflows".into()))?;
        let flat = slice(coords, len, "coords")?;
        let pts: Vec<Vec<f64>> = flat.chunks_exact(dim).map(|c| c.to_vec()).collect();
        let w = if weights.is_null() { None } else { Some(slice(weights, n, "weights")?) };
        let ps = PointSet::normalize(&pts, w)?;
        write_out(out, Box::into_raw(Box::new(KavdPointSet { inner: ps })), "out")
    })
}

/// # Safety
/// `ps` must be null or a handle from [`kavd_point_set_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kavd_point_set_free(ps: *mut KavdPointSet) {
    if !ps.is_null() {
        drop(Box::from_raw(ps));
    }
}

/// # Safety
/// `ps` must be a live point set handle.
#[no_mangle]
pub unsafe extern "C" fn kavd_point_set_len(ps: *const KavdPointSet, out: *mut usize) -> KavdStatus {
    guard(|| write_out(out, nonnull(ps, "point set")?.inner.real_count(), "out"))
}

/// Exact `d_k` at `q` by brute force.
///
/// # Safety
/// `ps` must be a live handle and `q` must hold `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn kavd_exact_knn_distance(
    ps: *const KavdPointSet,
    q: *const f64,
    dim: usize,
    k: usize,
    out: *mut f64,
) -> KavdStatus {
    guard(|| {
        let ps = &nonnull(ps, "point set")?.inner;
        let q = slice(q, dim, "query")?;
        check_dim(q, ps.dim())?;
        let t = ps.transform();
        let d = exact_knn_distance(ps, &t.to_normalized(q), k)?;
        write_out(out, t.distance_to_input(d), "out")
    })
}

/// Builds a `(1 + eps, k)` sketch; `eps` in `(0, 1/2]`.
///
/// # Safety
/// `ps` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn kavd_sketch_build(
    ps: *const KavdPointSet,
    k: usize,
    eps: f64,
    out: *mut *mut KavdSketch,
) -> KavdStatus {
    guard(|| {
        let sk = build_kavd(&nonnull(ps, "point set")?.inner, k, eps)?;
        write_out(out, Box::into_raw(Box::new(KavdSketch { inner: sk })), "out")
    })
}

/// Weighted variant: approximates the smallest radius holding weight `tau`.
///
/// # Safety
/// `ps` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn kavd_sketch_build_weighted(
    ps: *const KavdPointSet,
    tau: f64,
    eps: f64,
    out: *mut *mut KavdSketch,
) -> KavdStatus {
    guard(|| {
        let sk = build_kavd_weighted(&nonnull(ps, "point set")?.inner, tau, eps)?;
        write_out(out, Box::into_raw(Box::new(KavdSketch { inner: sk })), "out")
    })
}

/// Approximate distance and the index of a witness point.
///
/// # Safety
/// `sk` must be a live handle and `q` must hold `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn kavd_sketch_query(
    sk: *const KavdSketch,
    q: *const f64,
    dim: usize,
    value: *mut f64,
    witness: *mut usize,
) -> KavdStatus {
    guard(|| {
        let sk = &nonnull(sk, "sketch")?.inner;
        let q = slice(q, dim, "query")?;
        check_dim(q, sk.dim())?;
        let (v, w) = sk.query_input(q)?;
        write_out(value, v, "value")?;
        if !witness.is_null() {
            write_out(witness, w, "witness")?;
        }
        Ok(())
    })
}

/// Number of cells holding a record.
///
/// # Safety
/// `sk` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn kavd_sketch_cell_count(sk: *const KavdSketch, out: *mut usize) -> KavdStatus {
    guard(|| write_out(out, nonnull(sk, "sketch")?.inner.stats().cells, "out"))
}

/// # Safety
/// `sk` must be a live handle and `file` a nul-terminated path.
#[no_mangle]
pub unsafe extern "C" fn kavd_sketch_save(sk: *const KavdSketch, file: *const c_char) -> KavdStatus {
    guard(|| {
        let sk = &nonnull(sk, "sketch")?.inner;
        let f = File::create(path(file)?).map_err(Error::from)?;
        write_kavd(BufWriter::new(f), sk)?;
        Ok(())
    })
}

/// # Safety
/// `file` must be a nul-terminated path.
#[no_mangle]
pub unsafe extern "C" fn kavd_sketch_load(file: *const c_char, out: *mut *mut KavdSketch) -> KavdStatus {
    guard(|| {
        let f = File::open(path(file)?).map_err(Error::from)?;
        let sk = read_kavd(BufReader::new(f))?;
        write_out(out, Box::into_raw(Box::new(KavdSketch { inner: sk })), "out")
    })
}

/// # Safety
/// `sk` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kavd_sketch_free(sk: *mut KavdSketch) {
    if !sk.is_null() {
        drop(Box::from_raw(sk));
    }
}

/// Builds a density structure for `f` given as `l1`, `l2sq` or `pow:<p>`.
///
/// # Safety
/// `ps` must be a live handle and `f` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn kavd_density_build(
    ps: *const KavdPointSet,
    k: usize,
    eps: f64,
    f: *const c_char,
    out: *mut *mut KavdDensity,
) -> KavdStatus {
    guard(|| {
        let ps = &nonnull(ps, "point set")?.inner;
        if f.is_null() {
            return Err(Failure::Null("function tag"));
        }
        let tag = CStr::from_ptr(f)
            .to_str()
            .map_err(|_| Error::InvalidFunction("function tag is not UTF-8".into()))?;
        let ds = build_density(ps, k, eps, SlowGrowFunction::parse(tag)?)?;
        write_out(out, Box::into_raw(Box::new(KavdDensity { inner: ds })), "out")
    })
}

/// `xi` with `(1 - eps) xi <= sum_{i <= k} f(d_i(q)) <= (1 + eps) xi`.
///
/// # Safety
/// `ds` must be a live handle and `q` must hold `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn kavd_density_query(
    ds: *const KavdDensity,
    q: *const f64,
    dim: usize,
    value: *mut f64,
) -> KavdStatus {
    guard(|| {
        let ds = &nonnull(ds, "density")?.inner;
        let q = slice(q, dim, "query")?;
        check_dim(q, ds.transform().origin.len())?;
        write_out(value, ds.query_input(q)?, "value")
    })
}

/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kavd_density_free(ds: *mut KavdDensity) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}
