//! C ABI over the array-design library.
//!
//! Arrays live behind an opaque `CrtArray` handle. Every call returns a
//! `CrtStatus`; on failure the message is available from
//! `crt_last_error_message` on the same thread. Strings handed out by the
//! library must be released with `crt_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use crt_array::cli::design_from_config;
use crt_array::coarray::{difference_coarray, fragility, hole_free_check};
use crt_array::config::RunConfig;
use crt_array::designs::{build, DesignKind, SensorArray};
use crt_array::{Error, QuadInt, RingSpec};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnsupportedPrime = 3,
    UnsupportedRing = 4,
    InvalidDesign = 5,
    InvalidInput = 6,
    Overflow = 7,
    IndexOutOfRange = 8,
    Panic = 9,
}

/// Opaque sensor array.
pub struct CrtArray {
    inner: SensorArray,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: CrtStatus, msg: impl Into<String>) -> CrtStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> CrtStatus {
    let status = match &e {
        Error::InvalidArgument(_) => CrtStatus::InvalidArgument,
        Error::UnsupportedPrime { .. } => CrtStatus::UnsupportedPrime,
        Error::UnsupportedRing(_) => CrtStatus::UnsupportedRing,
        Error::InvalidDesign(_) => CrtStatus::InvalidDesign,
        Error::InvalidInput(_) => CrtStatus::InvalidInput,
        Error::Overflow(_) => CrtStatus::Overflow,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> CrtStatus) -> CrtStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(CrtStatus::Panic, "internal panic"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, CrtStatus> {
    if p.is_null() {
        return Err(fail(CrtStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(CrtStatus::InvalidInput, format!("{what} is not UTF-8")))
}

unsafe fn array_arg<'a>(h: *const CrtArray) -> Result<&'a SensorArray, CrtStatus> {
    h.as_ref()
        .map(|a| &a.inner)
        .ok_or_else(|| fail(CrtStatus::NullPointer, "array handle is null"))
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! try_lib {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return from_error(e),
        }
    };
}

fn ring(b: i64, c: i64) -> Result<RingSpec, CrtStatus> {
    RingSpec::new(b, c).map_err(from_error)
}

fn out_handle(out: *mut *mut CrtArray, arr: SensorArray) -> CrtStatus {
    // SAFETY: callers checked `out` for null
    unsafe { *out = Box::into_raw(Box::new(CrtArray { inner: arr })) };
    CrtStatus::Ok
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn crt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy of the calling thread's last error message, or NULL if the last
/// call succeeded. Free with `crt_string_free`.
#[no_mangle]
pub extern "C" fn crt_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn crt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Whether `m = m_a + m_b q` and `n = n_a + n_b q` generate coprime ideals
/// of `Z[q]/(q² + B q + C)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crt_is_coprime(
    ring_b: i64,
    ring_c: i64,
    m_a: i64,
    m_b: i64,
    n_a: i64,
    n_b: i64,
    out: *mut bool,
) -> CrtStatus {
    guard(|| {
        if out.is_null() {
            return fail(CrtStatus::NullPointer, "out is null");
        }
        let r = try_status!(ring(ring_b, ring_c));
        let v = try_lib!(r.is_coprime(QuadInt::new(m_a, m_b), QuadInt::new(n_a, n_b)));
        *out = v;
        CrtStatus::Ok
    })
}

/// Builds a prime-indexed design (`hscrt`, `t_array`, `spinner`, `z2_cross`,
/// `a2_cross`) over the ring `(B, C)`.
///
/// # Safety
/// `kind` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crt_design_new(
    kind: *const c_char,
    ring_b: i64,
    ring_c: i64,
    p: u64,
    out: *mut *mut CrtArray,
) -> CrtStatus {
    guard(|| {
        if out.is_null() {
            return fail(CrtStatus::NullPointer, "out is null");
        }
        let kind: DesignKind = try_lib!(try_status!(str_arg(kind, "kind")).parse());
        let r = try_status!(ring(ring_b, ring_c));
        out_handle(out, try_lib!(build(kind, r, p)))
    })
}

/// Builds any design from `key=value` lines, as in the command-line config
/// (`kind`, `ring`, `p`, `generators`, `n1`, `n2`, `sensors`, `pitch`).
///
/// # Safety
/// `config` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crt_design_from_config(
    config: *const c_char,
    out: *mut *mut CrtArray,
) -> CrtStatus {
    guard(|| {
        if out.is_null() {
            return fail(CrtStatus::NullPointer, "out is null");
        }
        let text = try_status!(str_arg(config, "config"));
        let cfg = try_lib!(RunConfig::parse(text));
        out_handle(out, try_lib!(design_from_config(&cfg)).0)
    })
}

/// Releases an array. NULL is ignored.
///
/// # Safety
/// `h` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn crt_array_free(h: *mut CrtArray) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Number of sensors.
///
/// # Safety
/// `h` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crt_array_len(h: *const CrtArray, out: *mut usize) -> CrtStatus {
    guard(|| {
        let a = try_status!(array_arg(h));
        if out.is_null() {
            return fail(CrtStatus::NullPointer, "out is null");
        }
        *out = a.len();
        CrtStatus::Ok
    })
}

/// Lattice coordinates of sensor `index` (sensors are sorted).
///
/// # Safety
/// `h` must be a live handle; `x` and `y` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn crt_array_sensor(
    h: *const CrtArray,
    index: usize,
    x: *mut i64,
    y: *mut i64,
) -> CrtStatus {
    guard(|| {
        let a = try_status!(array_arg(h));
        if x.is_null() || y.is_null() {
            return fail(CrtStatus::NullPointer, "output pointer is null");
        }
        let Some(&[u, v]) = a.sensors.get(index) else {
            return fail(
                CrtStatus::IndexOutOfRange,
                format!("sensor {index} of {}", a.len()),
            );
        };
        *x = u;
        *y = v;
        CrtStatus::Ok
    })
}

/// Physical position of sensor `index` in wavelengths.
///
/// # Safety
/// `h` must be a live handle; `x` and `y` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn crt_array_position(
    h: *const CrtArray,
    index: usize,
    x: *mut f64,
    y: *mut f64,
) -> CrtStatus {
    guard(|| {
        let a = try_status!(array_arg(h));
        if x.is_null() || y.is_null() {
            return fail(CrtStatus::NullPointer, "output pointer is null");
        }
        let Some(&u) = a.sensors.get(index) else {
            return fail(
                CrtStatus::IndexOutOfRange,
                format!("sensor {index} of {}", a.len()),
            );
        };
        let [px, py] = try_lib!(a.ring.embed(u));
        *x = a.pitch * px;
        *y = a.pitch * py;
        CrtStatus::Ok
    })
}

/// JSON serialisation of the array. Free with `crt_string_free`.
///
/// # Safety
/// `h` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crt_array_to_json(h: *const CrtArray, out: *mut *mut c_char) -> CrtStatus {
    guard(|| {
        let a = try_status!(array_arg(h));
        if out.is_null() {
            return fail(CrtStatus::NullPointer, "out is null");
        }
        let text = match serde_json::to_string(a) {
            Ok(t) => t,
            Err(e) => return fail(CrtStatus::InvalidInput, e.to_string()),
        };
        *out = CString::new(text).expect("JSON has no NUL").into_raw();
        CrtStatus::Ok
    })
}

/// Fragility as the fraction `essential / total`.
///
/// # Safety
/// `h` must be a live handle; the outputs valid pointers.
#[no_mangle]
pub unsafe extern "C" fn crt_array_fragility(
    h: *const CrtArray,
    essential: *mut u64,
    total: *mut u64,
) -> CrtStatus {
    guard(|| {
        let a = try_status!(array_arg(h));
        if essential.is_null() || total.is_null() {
            return fail(CrtStatus::NullPointer, "output pointer is null");
        }
        let f = try_lib!(fragility(a));
        *essential = f.essential as u64;
        *total = f.total as u64;
        CrtStatus::Ok
    })
}

/// Whether the difference coarray covers `Λ ∩ V̄(pΛ)`; `p = 0` uses the
/// array's own prime. `missing` receives the hole count.
///
/// # Safety
/// `h` must be a live handle; the outputs valid pointers.
#[no_mangle]
pub unsafe extern "C" fn crt_array_hole_free(
    h: *const CrtArray,
    p: u64,
    out: *mut bool,
    missing: *mut usize,
) -> CrtStatus {
    guard(|| {
        let a = try_status!(array_arg(h));
        if out.is_null() || missing.is_null() {
            return fail(CrtStatus::NullPointer, "output pointer is null");
        }
        let p = match (p, a.p) {
            (0, Some(q)) => q,
            (0, None) => return fail(CrtStatus::InvalidArgument, "array has no prime; pass p"),
            (q, _) => q,
        };
        let check = try_lib!(hole_free_check(&difference_coarray(a), p, a.ring));
        *out = check.hole_free;
        *missing = check.missing.len();
        CrtStatus::Ok
    })
}
