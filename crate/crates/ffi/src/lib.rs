//! C ABI over the shapeflow library.
//!
//! Objects are opaque handles created by `sf_*_new`-style functions and
//! released with the matching `sf_*_free`. Every fallible call returns an
//! [`SfStatus`]; on failure the message is available from
//! [`sf_last_error_message`] on the same thread. Panics never cross the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use shapeflow::capmeasure::FunctionalSpec;
use shapeflow::cli::run_cli;
use shapeflow::flow_shape::{ball_flow_reference, evaluate_shape_functional};
use shapeflow::grid::{rasterize, set_distances, GridDomain, Primitive, ShapeMask};
use shapeflow::Error;

/// Status codes of fallible calls.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SolverFailure = 3,
    InvariantViolation = 4,
    Io = 5,
    Panic = 6,
}

/// Grid over a box (opaque).
pub struct SfDomain(GridDomain);

/// Shape mask on a grid (opaque).
pub struct SfMask(ShapeMask);

/// Set distances between two masks; `fraenkel` is NaN when undefined.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SfSetDistances {
    pub hausdorff: f64,
    pub hausdorff_complement: f64,
    pub oriented_l2: f64,
    pub characteristic: f64,
    pub fraenkel: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> SfStatus {
    match e {
        Error::IterationLimit { .. } => SfStatus::SolverFailure,
        Error::Invariant(_) => SfStatus::InvariantViolation,
        Error::Io { .. } => SfStatus::Io,
        _ => SfStatus::InvalidArgument,
    }
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), SfStatus>) -> SfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SfStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            SfStatus::Panic
        }
    }
}

fn fail(e: Error) -> SfStatus {
    set_error(&e.to_string());
    status_of(&e)
}

fn null(what: &str) -> SfStatus {
    set_error(&format!("null pointer: {what}"));
    SfStatus::NullPointer
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, SfStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, SfStatus> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, SfStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(&format!("{what} is not UTF-8"));
        SfStatus::InvalidArgument
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread (empty after a success).
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn sf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Square domain `[lo, hi]²` with `n` cells per axis.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn sf_domain_square(lo: f64, hi: f64, n: usize, out_domain: *mut *mut SfDomain) -> SfStatus {
    guard(|| {
        let o = out(out_domain, "out_domain")?;
        let d = GridDomain::square(lo, hi, n).map_err(fail)?;
        *o = Box::into_raw(Box::new(SfDomain(d)));
        Ok(())
    })
}

/// Releases a domain; null is ignored.
///
/// # Safety
/// `domain` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sf_domain_free(domain: *mut SfDomain) {
    if !domain.is_null() {
        drop(Box::from_raw(domain));
    }
}

/// Rasterizes the disk of radius `r` centered at `(cx, cy)`.
///
/// # Safety
/// `domain` must be a live handle and `out_mask` writable.
#[no_mangle]
pub unsafe extern "C" fn sf_mask_disk(
    domain: *const SfDomain,
    cx: f64,
    cy: f64,
    r: f64,
    out_mask: *mut *mut SfMask,
) -> SfStatus {
    guard(|| {
        let d = deref(domain, "domain")?;
        let o = out(out_mask, "out_mask")?;
        let m = rasterize(&Primitive::ball(&[cx, cy], r), &d.0).map_err(fail)?;
        *o = Box::into_raw(Box::new(SfMask(m)));
        Ok(())
    })
}

/// Rasterizes a primitive given as JSON (the configuration format).
///
/// # Safety
/// `domain` must be a live handle, `json` a NUL-terminated string and
/// `out_mask` writable.
#[no_mangle]
pub unsafe extern "C" fn sf_mask_from_json(
    domain: *const SfDomain,
    json: *const c_char,
    out_mask: *mut *mut SfMask,
) -> SfStatus {
    guard(|| {
        let d = deref(domain, "domain")?;
        let text = string(json, "json")?;
        let o = out(out_mask, "out_mask")?;
        let p: Primitive = serde_json::from_str(text).map_err(|e| fail(Error::Json(e)))?;
        let m = rasterize(&p, &d.0).map_err(fail)?;
        *o = Box::into_raw(Box::new(SfMask(m)));
        Ok(())
    })
}

/// Releases a mask; null is ignored.
///
/// # Safety
/// `mask` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sf_mask_free(mask: *mut SfMask) {
    if !mask.is_null() {
        drop(Box::from_raw(mask));
    }
}

/// Number of cells inside the mask.
///
/// # Safety
/// `mask` must be a live handle and `count` writable.
#[no_mangle]
pub unsafe extern "C" fn sf_mask_count(mask: *const SfMask, count: *mut usize) -> SfStatus {
    guard(|| {
        let m = deref(mask, "mask")?;
        *out(count, "count")? = m.0.count();
        Ok(())
    })
}

/// Lebesgue measure of the mask.
///
/// # Safety
/// `mask` must be a live handle and `volume` writable.
#[no_mangle]
pub unsafe extern "C" fn sf_mask_volume(mask: *const SfMask, volume: *mut f64) -> SfStatus {
    guard(|| {
        let m = deref(mask, "mask")?;
        *out(volume, "volume")? = m.0.volume();
        Ok(())
    })
}

/// First Dirichlet eigenvalue of the mask.
///
/// # Safety
/// `mask` must be a live handle and `lambda1` writable.
#[no_mangle]
pub unsafe extern "C" fn sf_lambda1(mask: *const SfMask, lambda1: *mut f64) -> SfStatus {
    guard(|| {
        let m = deref(mask, "mask")?;
        let o = out(lambda1, "lambda1")?;
        *o = evaluate_shape_functional(&m.0, &FunctionalSpec::lambda(1)).map_err(fail)?;
        Ok(())
    })
}

/// Torsion energy `−∫ w` of the mask.
///
/// # Safety
/// `mask` must be a live handle and `energy` writable.
#[no_mangle]
pub unsafe extern "C" fn sf_torsion_energy(mask: *const SfMask, energy: *mut f64) -> SfStatus {
    guard(|| {
        let m = deref(mask, "mask")?;
        let o = out(energy, "energy")?;
        *o = evaluate_shape_functional(&m.0, &FunctionalSpec::energy()).map_err(fail)?;
        Ok(())
    })
}

/// All set distances between two masks on the same domain.
///
/// # Safety
/// `a` and `b` must be live handles and `result` writable.
#[no_mangle]
pub unsafe extern "C" fn sf_set_distances(a: *const SfMask, b: *const SfMask, result: *mut SfSetDistances) -> SfStatus {
    guard(|| {
        let (a, b) = (deref(a, "a")?, deref(b, "b")?);
        let o = out(result, "result")?;
        let s = set_distances(&a.0, &b.0).map_err(fail)?;
        *o = SfSetDistances {
            hausdorff: s.hausdorff,
            hausdorff_complement: s.hausdorff_complement,
            oriented_l2: s.oriented_l2,
            characteristic: s.characteristic,
            fraenkel: s.fraenkel.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Closed-form radius of the ball flow of `λ₁` at time `t`.
///
/// # Safety
/// `radius` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_ball_flow_reference(r0: f64, dim: usize, t: f64, radius: *mut f64) -> SfStatus {
    guard(|| {
        let o = out(radius, "radius")?;
        *o = ball_flow_reference(r0, dim, t).map_err(fail)?;
        Ok(())
    })
}

/// Runs a command-line command; returns its exit code (0, 2, 3 or 4), or
/// -1 for null or non-UTF-8 arguments. `seed` is used when `has_seed` is
/// nonzero.
///
/// # Safety
/// `command`, `config_path` and `out_dir` must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn sf_run_command(
    command: *const c_char,
    config_path: *const c_char,
    out_dir: *const c_char,
    seed: u64,
    has_seed: c_int,
) -> c_int {
    let mut code = -1;
    let status = guard(|| {
        let cmd = string(command, "command")?;
        let cfg = string(config_path, "config_path")?;
        let dir = string(out_dir, "out_dir")?;
        code = run_cli(cmd, Path::new(cfg), Path::new(dir), (has_seed != 0).then_some(seed));
        Ok(())
    });
    if status == SfStatus::Ok {
        code
    } else {
        -1
    }
}
