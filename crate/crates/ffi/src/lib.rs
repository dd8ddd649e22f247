//! C ABI over `quadmod`.
//!
//! Quadrilaterals live behind an opaque `QmQuad` handle. Every fallible call
//! returns a `QmStatus`; on failure a message is kept per thread and can be
//! fetched with `qm_last_error`. Strings returned to the caller are owned by
//! the caller and released with `qm_string_free`. No function unwinds across
//! the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use quadmod::geometry::{Point2, Quadrilateral};
use quadmod::pde_oracle::{self, MarkedPolygon, PdeError};
use quadmod::sc_solver::{self, ScConfig};
use quadmod::verify::{self, CheckConfig};

/// Result codes of the C API.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    SolverFailure = 3,
    /// The FEM bracket did not reach the requested width; outputs hold the
    /// best bracket found.
    ToleranceNotReached = 4,
    Internal = 5,
}

/// Opaque quadrilateral handle.
pub struct QmQuad {
    quad: Quadrilateral,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl ToString) {
    let c = CString::new(msg.to_string().replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: QmStatus, msg: impl ToString) -> QmStatus {
    set_error(msg);
    status
}

/// Runs `f`, mapping a panic to `Internal`.
fn guard(f: impl FnOnce() -> QmStatus) -> QmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(QmStatus::Internal, "internal panic"),
    }
}

/// # Safety
/// `p` is null or points to a NUL-terminated string.
unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, QmStatus> {
    if p.is_null() {
        return Err(fail(QmStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(QmStatus::InvalidInput, "string is not UTF-8"))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("no interior NUL")
        .into_raw()
}

/// Creates a quadrilateral from `xy = [ax, ay, bx, by, cx, cy, dx, dy]`.
///
/// # Safety
/// `xy` points to 8 readable doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qm_quad_new(xy: *const f64, out: *mut *mut QmQuad) -> QmStatus {
    guard(|| {
        if xy.is_null() || out.is_null() {
            return fail(QmStatus::NullPointer, "null argument");
        }
        let v = std::slice::from_raw_parts(xy, 8);
        let pts = [0, 1, 2, 3].map(|i| Point2::new(v[2 * i], v[2 * i + 1]));
        match Quadrilateral::from_array(pts) {
            Ok(quad) => {
                *out = Box::into_raw(Box::new(QmQuad { quad }));
                QmStatus::Ok
            }
            Err(e) => fail(QmStatus::InvalidInput, e),
        }
    })
}

/// Creates a quadrilateral from `{"a":[x,y],"b":[x,y],"c":[x,y],"d":[x,y]}`.
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qm_quad_from_json(json: *const c_char, out: *mut *mut QmQuad) -> QmStatus {
    guard(|| {
        if out.is_null() {
            return fail(QmStatus::NullPointer, "null output pointer");
        }
        let text = match str_arg(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match quadmod::io::parse_quad(text) {
            Ok(quad) => {
                *out = Box::into_raw(Box::new(QmQuad { quad }));
                QmStatus::Ok
            }
            Err(e) => fail(QmStatus::InvalidInput, e),
        }
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `q` is null or a handle from `qm_quad_new`/`qm_quad_from_json` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qm_quad_free(q: *mut QmQuad) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// Copies the vertices into `xy[0..8]`.
///
/// # Safety
/// `q` is a live handle; `xy` has room for 8 doubles.
#[no_mangle]
pub unsafe extern "C" fn qm_quad_vertices(q: *const QmQuad, xy: *mut f64) -> QmStatus {
    guard(|| {
        let (Some(q), false) = (q.as_ref(), xy.is_null()) else {
            return fail(QmStatus::NullPointer, "null argument");
        };
        let out = std::slice::from_raw_parts_mut(xy, 8);
        for (i, p) in q.quad.vertices().iter().enumerate() {
            out[2 * i] = p.x;
            out[2 * i + 1] = p.y;
        }
        QmStatus::Ok
    })
}

/// Schwarz–Christoffel modulus. `tol <= 0` selects the default.
///
/// # Safety
/// `q` is a live handle; `value` and `err` are writable.
#[no_mangle]
pub unsafe extern "C" fn qm_modulus_sc(
    q: *const QmQuad,
    tol: f64,
    value: *mut f64,
    err: *mut f64,
) -> QmStatus {
    guard(|| {
        let Some(q) = q.as_ref() else {
            return fail(QmStatus::NullPointer, "null handle");
        };
        if value.is_null() || err.is_null() {
            return fail(QmStatus::NullPointer, "null output pointer");
        }
        let tol = if tol > 0.0 {
            tol
        } else {
            sc_solver::DEFAULT_TOL
        };
        match sc_solver::modulus_sc_with(
            &q.quad,
            &ScConfig {
                tol,
                ..ScConfig::default()
            },
        ) {
            Ok(e) => {
                *value = e.value;
                *err = e.err;
                QmStatus::Ok
            }
            Err(e) => fail(QmStatus::SolverFailure, e),
        }
    })
}

/// FEM modulus with its two-sided bracket `[lower, upper]`. `tol <= 0`
/// selects the default bracket width.
///
/// # Safety
/// `q` is a live handle; all output pointers are writable.
#[no_mangle]
pub unsafe extern "C" fn qm_modulus_fem(
    q: *const QmQuad,
    tol: f64,
    value: *mut f64,
    err: *mut f64,
    lower: *mut f64,
    upper: *mut f64,
) -> QmStatus {
    guard(|| {
        let Some(q) = q.as_ref() else {
            return fail(QmStatus::NullPointer, "null handle");
        };
        if value.is_null() || err.is_null() || lower.is_null() || upper.is_null() {
            return fail(QmStatus::NullPointer, "null output pointer");
        }
        let tol = if tol > 0.0 { tol } else { verify::FEM_TOL };
        let poly = MarkedPolygon::from_quad(&q.quad);
        let res = pde_oracle::modulus_fem_polygon(
            &poly,
            tol,
            pde_oracle::MAX_LEVELS,
            pde_oracle::DEFAULT_GRADING,
        );
        let (b, status) = match res {
            Ok((_, b)) => (b, QmStatus::Ok),
            Err(PdeError::ToleranceNotReached { bracket, tol }) => {
                set_error(format!("bracket width {} above {tol}", bracket.width()));
                (bracket, QmStatus::ToleranceNotReached)
            }
            Err(e) => return fail(QmStatus::SolverFailure, e),
        };
        *value = b.estimate;
        *err = b.half_width_err();
        *lower = b.lower;
        *upper = b.upper;
        status
    })
}

/// Runs a named check; on success `*report_json` receives the report.
/// `*passed` is 1 when the report has no failures and no solver faults.
///
/// # Safety
/// `check_id` is a NUL-terminated string; `report_json` and `passed` are writable.
#[no_mangle]
pub unsafe extern "C" fn qm_verify(
    check_id: *const c_char,
    seed: u64,
    samples: usize,
    report_json: *mut *mut c_char,
    passed: *mut i32,
) -> QmStatus {
    guard(|| {
        if report_json.is_null() || passed.is_null() {
            return fail(QmStatus::NullPointer, "null output pointer");
        }
        let id = match str_arg(check_id) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match verify::verify(id, &CheckConfig::new(seed, samples)) {
            Ok(r) => {
                *passed = i32::from(r.failures.is_empty() && r.solver_faults.is_empty());
                *report_json = into_c_string(r.to_json());
                QmStatus::Ok
            }
            Err(e) => fail(QmStatus::InvalidInput, e),
        }
    })
}

/// Message of the last failed call on this thread, or null. The caller owns
/// the result.
#[no_mangle]
pub extern "C" fn qm_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .map_or(ptr::null_mut(), |c| c.clone().into_raw())
    })
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` is null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn qm_status_message(status: QmStatus) -> *const c_char {
    let s: &'static CStr = match status {
        QmStatus::Ok => c"ok",
        QmStatus::NullPointer => c"null pointer",
        QmStatus::InvalidInput => c"invalid input",
        QmStatus::SolverFailure => c"solver failure",
        QmStatus::ToleranceNotReached => c"tolerance not reached",
        QmStatus::Internal => c"internal error",
    };
    s.as_ptr()
}
