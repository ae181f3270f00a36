//! C ABI for splinetool.
//!
//! Splines and potentials are opaque heap handles released with their
//! `*_free` function. Every fallible call returns a [`SplinetoolStatus`]; the
//! message of the last failure on the calling thread is available through
//! [`splinetool_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use splinetool::cli::exit_code;
use splinetool::fit::{fit, FitProblem, SolverConfig};
use splinetool::potential::{
    numeric_prox_oracle, potential_from_derivative, potential_from_prox, OracleConfig,
    PwQuadPotential,
};
use splinetool::pwl::{Grid, NodalSpline};
use splinetool::slope::{project_slopes, SlopeBounds};
use splinetool::Error;

/// Status codes; the nonzero values match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplinetoolStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    NoConvergence = 3,
    Precondition = 4,
    Scale = 5,
    Panic = 6,
}

/// Opaque nodal linear spline.
pub struct SplinetoolSpline(NodalSpline);

/// Opaque piecewise-quadratic potential.
pub struct SplinetoolPotential(PwQuadPotential);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SplinetoolStatus {
    match exit_code(e) {
        3 => SplinetoolStatus::NoConvergence,
        4 => SplinetoolStatus::Precondition,
        5 => SplinetoolStatus::Scale,
        _ => SplinetoolStatus::InvalidInput,
    }
}

fn guard(f: impl FnOnce() -> Result<(), SplinetoolStatus>) -> SplinetoolStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SplinetoolStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            SplinetoolStatus::Panic
        }
    }
}

fn fail(e: Error) -> SplinetoolStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn null() -> SplinetoolStatus {
    set_error("null pointer argument".into());
    SplinetoolStatus::NullPointer
}

unsafe fn slice_in<'a>(p: *const f64, n: usize) -> Result<&'a [f64], SplinetoolStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn spline_ref<'a>(p: *const SplinetoolSpline) -> Result<&'a NodalSpline, SplinetoolStatus> {
    p.as_ref().map(|s| &s.0).ok_or_else(null)
}

unsafe fn potential_ref<'a>(
    p: *const SplinetoolPotential,
) -> Result<&'a PwQuadPotential, SplinetoolStatus> {
    p.as_ref().map(|s| &s.0).ok_or_else(null)
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), SplinetoolStatus> {
    if out.is_null() {
        return Err(null());
    }
    out.write(v);
    Ok(())
}

/// Copies the message of the last failure on this thread into `buf`
/// (NUL-terminated, truncated to `len`). Returns the full message length, or
/// 0 when there is no message.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn splinetool_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Builds a spline from `n` strictly increasing nodes `t` and values `f`.
///
/// # Safety
/// `t` and `f` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splinetool_spline_new(
    t: *const f64,
    f: *const f64,
    n: usize,
    out: *mut *mut SplinetoolSpline,
) -> SplinetoolStatus {
    guard(|| {
        let (t, f) = (slice_in(t, n)?, slice_in(f, n)?);
        let grid = Grid::new(t.to_vec()).map_err(fail)?;
        let sp = NodalSpline::new(grid, f.to_vec()).map_err(fail)?;
        write_out(out, Box::into_raw(Box::new(SplinetoolSpline(sp))))
    })
}

/// # Safety
/// `sp` must be null or a handle from this library that was not freed yet.
#[no_mangle]
pub unsafe extern "C" fn splinetool_spline_free(sp: *mut SplinetoolSpline) {
    if !sp.is_null() {
        drop(Box::from_raw(sp));
    }
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `sp` must be null or a live spline handle.
#[no_mangle]
pub unsafe extern "C" fn splinetool_spline_len(sp: *const SplinetoolSpline) -> usize {
    sp.as_ref().map_or(0, |s| s.0.len())
}

/// Copies nodes and values into `t` and `f` (each of length `n`, which must
/// equal the spline length). Either output may be null.
///
/// # Safety
/// `sp` must be a live handle; non-null outputs must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn splinetool_spline_data(
    sp: *const SplinetoolSpline,
    t: *mut f64,
    f: *mut f64,
    n: usize,
) -> SplinetoolStatus {
    guard(|| {
        let s = spline_ref(sp)?;
        if n != s.len() {
            return Err(fail(Error::LengthMismatch {
                expected: s.len(),
                got: n,
            }));
        }
        if !t.is_null() {
            ptr::copy_nonoverlapping(s.grid().nodes().as_ptr(), t, n);
        }
        if !f.is_null() {
            ptr::copy_nonoverlapping(s.values().as_ptr(), f, n);
        }
        Ok(())
    })
}

/// # Safety
/// `sp` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn splinetool_spline_eval(
    sp: *const SplinetoolSpline,
    x: f64,
    out: *mut f64,
) -> SplinetoolStatus {
    guard(|| write_out(out, spline_ref(sp)?.eval(x)))
}

/// # Safety
/// `sp` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn splinetool_spline_tv2(
    sp: *const SplinetoolSpline,
    out: *mut f64,
) -> SplinetoolStatus {
    guard(|| write_out(out, spline_ref(sp)?.tv2()))
}

/// Mean-preserving projection onto slopes in `[s_min, s_max]` (infinities
/// allowed). Writes a new handle to `out`.
///
/// # Safety
/// `sp` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn splinetool_spline_project(
    sp: *const SplinetoolSpline,
    s_min: f64,
    s_max: f64,
    out: *mut *mut SplinetoolSpline,
) -> SplinetoolStatus {
    guard(|| {
        let s = spline_ref(sp)?;
        let b = SlopeBounds::new(s_min, s_max).map_err(fail)?;
        let p = project_slopes(s, &b);
        write_out(out, Box::into_raw(Box::new(SplinetoolSpline(p))))
    })
}

/// Potential whose derivative is the spline.
///
/// # Safety
/// `sp` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn splinetool_potential_from_derivative(
    sp: *const SplinetoolSpline,
    out: *mut *mut SplinetoolPotential,
) -> SplinetoolStatus {
    guard(|| {
        let p = potential_from_derivative(spline_ref(sp)?);
        write_out(out, Box::into_raw(Box::new(SplinetoolPotential(p))))
    })
}

/// Potential whose proximal map is the (nondecreasing) spline.
///
/// # Safety
/// `sp` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn splinetool_potential_from_prox(
    sp: *const SplinetoolSpline,
    out: *mut *mut SplinetoolPotential,
) -> SplinetoolStatus {
    guard(|| {
        let p = potential_from_prox(spline_ref(sp)?).map_err(fail)?;
        write_out(out, Box::into_raw(Box::new(SplinetoolPotential(p))))
    })
}

/// # Safety
/// `pot` must be null or a handle from this library that was not freed yet.
#[no_mangle]
pub unsafe extern "C" fn splinetool_potential_free(pot: *mut SplinetoolPotential) {
    if !pot.is_null() {
        drop(Box::from_raw(pot));
    }
}

/// # Safety
/// `pot` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn splinetool_potential_eval(
    pot: *const SplinetoolPotential,
    y: f64,
    out: *mut f64,
) -> SplinetoolStatus {
    guard(|| write_out(out, potential_ref(pot)?.eval(y)))
}

/// Proximal map of the potential at `x` by direct minimization on a grid of
/// spacing `step` (`step <= 0` selects the default).
///
/// # Safety
/// `pot` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn splinetool_potential_prox(
    pot: *const SplinetoolPotential,
    x: f64,
    step: f64,
    out: *mut f64,
) -> SplinetoolStatus {
    guard(|| {
        let mut cfg = OracleConfig::default();
        if step > 0.0 {
            cfg.step = step;
        }
        let v = numeric_prox_oracle(potential_ref(pot)?, x, &cfg).map_err(fail)?;
        write_out(out, v)
    })
}

/// Fits `m` samples `(xs, ys)` on the grid `grid` of `n` nodes (`n == 0`
/// selects the padded data grid). `tol <= 0` and `max_iters == 0` select the
/// defaults. On `NoConvergence` the last iterate is still written to `out`.
/// `objective` may be null.
///
/// # Safety
/// Input pointers must hold the stated number of doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn splinetool_fit(
    xs: *const f64,
    ys: *const f64,
    m: usize,
    grid: *const f64,
    n: usize,
    lambda: f64,
    s_min: f64,
    s_max: f64,
    tol: f64,
    max_iters: usize,
    out: *mut *mut SplinetoolSpline,
    objective: *mut f64,
) -> SplinetoolStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let (xs, ys) = (slice_in(xs, m)?, slice_in(ys, m)?);
        let grid = if n == 0 {
            None
        } else {
            Some(Grid::new(slice_in(grid, n)?.to_vec()).map_err(fail)?)
        };
        let bounds = SlopeBounds::new(s_min, s_max).map_err(fail)?;
        let data = xs.iter().copied().zip(ys.iter().copied()).collect();
        let problem = FitProblem::new(data, grid, lambda, bounds).map_err(fail)?;
        let mut cfg = SolverConfig::default();
        if tol > 0.0 {
            cfg.tol = tol;
        }
        if max_iters > 0 {
            cfg.max_iters = max_iters;
        }
        let (result, status) = match fit(&problem, &cfg) {
            Ok(r) => (r, SplinetoolStatus::Ok),
            Err(Error::DidNotConverge(r)) => {
                set_error(format!(
                    "solver did not converge after {} iterations",
                    r.iterations
                ));
                (*r, SplinetoolStatus::NoConvergence)
            }
            Err(e) => return Err(fail(e)),
        };
        if !objective.is_null() {
            objective.write(result.objective);
        }
        out.write(Box::into_raw(Box::new(SplinetoolSpline(result.spline))));
        match status {
            SplinetoolStatus::Ok => Ok(()),
            s => Err(s),
        }
    })
}
