//! C ABI for `cbir-core`.
//!
//! Handles (`CbirImage`, `CbirDb`, `CbirResults`) are opaque and owned by the
//! caller once returned; release each with its `*_free` function. Every
//! fallible call returns a [`CbirStatus`]; on failure a description is kept
//! per thread and can be read with [`cbir_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cbir_core::features::{EntropyScope, FeatureVector};
use cbir_core::index::{IndexDb, IndexError, IndexRecord};
use cbir_core::raster::{decode_pgm, encode_pgm, GrayImage};
use cbir_core::segment::{Connectivity, SegmentConfig};
use cbir_core::{query, Error};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CbirStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DecodeError = 3,
    NoRegion = 4,
    FeatureError = 5,
    DuplicateId = 6,
    NotFound = 7,
    InvalidRecord = 8,
    MalformedDb = 9,
    OutOfRange = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CbirEntropyScope {
    Foreground = 0,
    Whole = 1,
}

/// Segmentation settings; pass NULL to functions taking one for the defaults
/// (threshold 1, 8-connectivity, minimum area 4).
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct CbirSegmentConfig {
    pub threshold: u8,
    /// 4 or 8.
    pub connectivity: u32,
    pub min_area: usize,
}

/// Entropy in bits, the seven invariants and their signed log10 scaling.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CbirFeatures {
    pub entropy: f64,
    pub phi: [f64; 7],
    pub psi: [f64; 7],
}

/// One query match. The strings are owned by the `CbirResults` they came
/// from and stay valid until it is freed.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct CbirMatch {
    pub id: *const c_char,
    pub source: *const c_char,
    pub distance: f64,
    pub entropy_gap: f64,
}

pub struct CbirImage(GrayImage);

pub struct CbirDb(IndexDb);

pub struct CbirResults(Vec<(CString, CString, f64, f64)>);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Failure(CbirStatus, String);

impl Failure {
    fn new(status: CbirStatus, msg: impl Into<String>) -> Self {
        Self(status, msg.into())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Raster(_) => CbirStatus::DecodeError,
            Error::Index(ie) => return Failure::from(ie.clone()),
            Error::Segment(_) | Error::Feature(_) => CbirStatus::FeatureError,
            Error::Synth(_) => CbirStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<IndexError> for Failure {
    fn from(e: IndexError) -> Self {
        let status = match e {
            IndexError::DuplicateId(_) => CbirStatus::DuplicateId,
            IndexError::NotFound(_) => CbirStatus::NotFound,
            IndexError::InvalidRecord(_) => CbirStatus::InvalidRecord,
            IndexError::BadMagic | IndexError::MalformedRecord { .. } => CbirStatus::MalformedDb,
        };
        Failure(status, e.to_string())
    }
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CbirStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CbirStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CbirStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::new(CbirStatus::NullPointer, format!("{what} is NULL")))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::new(CbirStatus::NullPointer, format!("{what} is NULL")))
}

unsafe fn bytes<'a>(data: *const u8, len: usize) -> Result<&'a [u8], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(Failure::new(CbirStatus::NullPointer, "data is NULL"));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn string(p: *const c_char, what: &str) -> Result<String, Failure> {
    if p.is_null() {
        return Err(Failure::new(CbirStatus::NullPointer, format!("{what} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Failure::new(CbirStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn boxed_bytes(v: Vec<u8>) -> (*mut u8, usize) {
    let b = v.into_boxed_slice();
    let len = b.len();
    (Box::into_raw(b) as *mut u8, len)
}

/// Message describing the last failure on this thread, or an empty string.
/// Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cbir_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Decodes a P2 or P5 PGM buffer.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cbir_image_decode(data: *const u8, len: usize, out: *mut *mut CbirImage) -> CbirStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let img = decode_pgm(bytes(data, len)?).map_err(|e| Failure::new(CbirStatus::DecodeError, e.to_string()))?;
        *out = Box::into_raw(Box::new(CbirImage(img)));
        Ok(())
    })
}

/// Copies a row-major 8-bit buffer of `width * height` pixels.
///
/// # Safety
/// `pixels` must point to `width * height` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cbir_image_from_pixels(
    width: usize,
    height: usize,
    pixels: *const u8,
    out: *mut *mut CbirImage,
) -> CbirStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let n = width
            .checked_mul(height)
            .ok_or_else(|| Failure::new(CbirStatus::InvalidArgument, "width * height overflows"))?;
        let px = bytes(pixels, n)?.to_vec();
        let img = GrayImage::new(width, height, px).map_err(|e| Failure::new(CbirStatus::InvalidArgument, e.to_string()))?;
        *out = Box::into_raw(Box::new(CbirImage(img)));
        Ok(())
    })
}

/// # Safety
/// `img` must be NULL or a live image handle.
#[no_mangle]
pub unsafe extern "C" fn cbir_image_width(img: *const CbirImage) -> usize {
    img.as_ref().map_or(0, |i| i.0.width())
}

/// # Safety
/// `img` must be NULL or a live image handle.
#[no_mangle]
pub unsafe extern "C" fn cbir_image_height(img: *const CbirImage) -> usize {
    img.as_ref().map_or(0, |i| i.0.height())
}

/// Encodes as binary P5 (`binary != 0`) or plain P2. Release the buffer with
/// [`cbir_bytes_free`].
///
/// # Safety
/// `img` must be a live image handle; `out_data` and `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cbir_image_encode(
    img: *const CbirImage,
    binary: i32,
    out_data: *mut *mut u8,
    out_len: *mut usize,
) -> CbirStatus {
    guard(|| {
        let img = deref(img, "img")?;
        let (od, ol) = (deref_mut(out_data, "out_data")?, deref_mut(out_len, "out_len")?);
        (*od, *ol) = boxed_bytes(encode_pgm(&img.0, binary != 0));
        Ok(())
    })
}

/// # Safety
/// `img` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cbir_image_free(img: *mut CbirImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

fn segment_config(cfg: Option<&CbirSegmentConfig>) -> Result<SegmentConfig, Failure> {
    let Some(c) = cfg else {
        return Ok(SegmentConfig::default());
    };
    let connectivity = Connectivity::try_from(c.connectivity).map_err(|e| Failure::new(CbirStatus::InvalidArgument, e.to_string()))?;
    Ok(SegmentConfig {
        threshold: c.threshold,
        connectivity,
        min_area: c.min_area,
    })
}

fn to_c(f: &FeatureVector) -> CbirFeatures {
    CbirFeatures {
        entropy: f.entropy,
        phi: f.phi,
        psi: f.psi,
    }
}

fn scope(s: CbirEntropyScope) -> EntropyScope {
    match s {
        CbirEntropyScope::Foreground => EntropyScope::Foreground,
        CbirEntropyScope::Whole => EntropyScope::Whole,
    }
}

/// Features of the largest segmented region. Returns `NoRegion` when nothing
/// is segmented.
///
/// # Safety
/// `img` must be a live image handle, `config` NULL or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cbir_image_features(
    img: *const CbirImage,
    config: *const CbirSegmentConfig,
    entropy_scope: CbirEntropyScope,
    out: *mut CbirFeatures,
) -> CbirStatus {
    guard(|| {
        let img = deref(img, "img")?;
        let out = deref_mut(out, "out")?;
        let cfg = segment_config(config.as_ref())?;
        let (_, f) = cbir_core::largest_region_features(&img.0, &cfg, scope(entropy_scope))?
            .ok_or_else(|| Failure::new(CbirStatus::NoRegion, "no region found"))?;
        *out = to_c(&f);
        Ok(())
    })
}

/// Number of segmented regions, and their features in region order when
/// `out` is non-NULL with room for `capacity` entries. Returns `OutOfRange`
/// (with `*count` set) when `capacity` is too small.
///
/// # Safety
/// `img` must be a live image handle, `config` NULL or readable, `out` NULL or
/// writable for `capacity` entries, `count` writable.
#[no_mangle]
pub unsafe extern "C" fn cbir_image_region_features(
    img: *const CbirImage,
    config: *const CbirSegmentConfig,
    entropy_scope: CbirEntropyScope,
    out: *mut CbirFeatures,
    capacity: usize,
    count: *mut usize,
) -> CbirStatus {
    guard(|| {
        let img = deref(img, "img")?;
        let count = deref_mut(count, "count")?;
        let cfg = segment_config(config.as_ref())?;
        let regions = cbir_core::region_features(&img.0, &cfg, scope(entropy_scope))?;
        *count = regions.len();
        if out.is_null() {
            return Ok(());
        }
        if capacity < regions.len() {
            return Err(Failure::new(CbirStatus::OutOfRange, format!("{} regions, capacity {capacity}", regions.len())));
        }
        for (i, (_, f)) in regions.iter().enumerate() {
            *out.add(i) = to_c(f);
        }
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn cbir_db_new() -> *mut CbirDb {
    Box::into_raw(Box::new(CbirDb(IndexDb::new())))
}

/// Parses a database in the `CBIRIDX 1` format.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cbir_db_load(data: *const u8, len: usize, out: *mut *mut CbirDb) -> CbirStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let db = IndexDb::load(bytes(data, len)?)?;
        *out = Box::into_raw(Box::new(CbirDb(db)));
        Ok(())
    })
}

/// Serializes the database. Release the buffer with [`cbir_bytes_free`].
///
/// # Safety
/// `db` must be a live handle; `out_data` and `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cbir_db_save(db: *const CbirDb, out_data: *mut *mut u8, out_len: *mut usize) -> CbirStatus {
    guard(|| {
        let db = deref(db, "db")?;
        let (od, ol) = (deref_mut(out_data, "out_data")?, deref_mut(out_len, "out_len")?);
        (*od, *ol) = boxed_bytes(db.0.save());
        Ok(())
    })
}

/// Appends a record built from `features` (entropy and phi; psi is derived).
///
/// # Safety
/// `db` must be a live handle; `id` and `source` NUL-terminated strings;
/// `features` readable.
#[no_mangle]
pub unsafe extern "C" fn cbir_db_add(
    db: *mut CbirDb,
    id: *const c_char,
    source: *const c_char,
    features: *const CbirFeatures,
) -> CbirStatus {
    guard(|| {
        let db = deref_mut(db, "db")?;
        let f = deref(features, "features")?;
        let rec = IndexRecord::new(string(id, "id")?, string(source, "source")?, &FeatureVector::new(f.entropy, f.phi));
        db.0.add(rec)?;
        Ok(())
    })
}

/// # Safety
/// `db` must be a live handle; `id` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cbir_db_remove(db: *mut CbirDb, id: *const c_char) -> CbirStatus {
    guard(|| {
        let db = deref_mut(db, "db")?;
        db.0.remove(&string(id, "id")?)?;
        Ok(())
    })
}

/// # Safety
/// `db` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cbir_db_len(db: *const CbirDb) -> usize {
    db.as_ref().map_or(0, |d| d.0.len())
}

/// # Safety
/// `db` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cbir_db_free(db: *mut CbirDb) {
    if !db.is_null() {
        drop(Box::from_raw(db));
    }
}

/// The `k` best matches within `tau` bits of the template's entropy, ranked
/// by distance and then id. A negative or NaN `tau` is rejected.
///
/// # Safety
/// `db` must be a live handle, `template_features` readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cbir_db_query(
    db: *const CbirDb,
    template_features: *const CbirFeatures,
    tau: f64,
    k: usize,
    out: *mut *mut CbirResults,
) -> CbirStatus {
    guard(|| {
        let db = deref(db, "db")?;
        let f = deref(template_features, "template_features")?;
        let out = deref_mut(out, "out")?;
        if tau.is_nan() || tau < 0.0 {
            return Err(Failure::new(CbirStatus::InvalidArgument, format!("tau must be non-negative, got {tau}")));
        }
        let template = FeatureVector::new(f.entropy, f.phi);
        let cstr = |s: String| CString::new(s).map_err(|_| Failure::new(CbirStatus::InvalidRecord, "string contains NUL"));
        let rows = query::query(&db.0, &template, tau, k)
            .into_iter()
            .map(|r| Ok((cstr(r.id)?, cstr(r.source)?, r.distance, r.entropy_gap)))
            .collect::<Result<Vec<_>, Failure>>()?;
        *out = Box::into_raw(Box::new(CbirResults(rows)));
        Ok(())
    })
}

/// # Safety
/// `res` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cbir_results_len(res: *const CbirResults) -> usize {
    res.as_ref().map_or(0, |r| r.0.len())
}

/// # Safety
/// `res` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cbir_results_get(res: *const CbirResults, index: usize, out: *mut CbirMatch) -> CbirStatus {
    guard(|| {
        let res = deref(res, "res")?;
        let out = deref_mut(out, "out")?;
        let (id, source, distance, entropy_gap) = res
            .0
            .get(index)
            .ok_or_else(|| Failure::new(CbirStatus::OutOfRange, format!("index {index} of {}", res.0.len())))?;
        *out = CbirMatch {
            id: id.as_ptr(),
            source: source.as_ptr(),
            distance: *distance,
            entropy_gap: *entropy_gap,
        };
        Ok(())
    })
}

/// # Safety
/// `res` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cbir_results_free(res: *mut CbirResults) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Releases a buffer returned by an `*_encode` or `*_save` call.
///
/// # Safety
/// `data` and `len` must be exactly as returned, and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cbir_bytes_free(data: *mut u8, len: usize) {
    if !data.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(data, len)));
    }
}
