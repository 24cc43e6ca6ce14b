// Copyright 2026 The bilevel-sched Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! C ABI over `bilevel-sched`.
//!
//! Instances and solutions are opaque handles owned by the caller and
//! released with their `_free` functions. Every entry point returns a
//! [`BsStatus`]; on failure [`bs_last_error_message`] describes the cause.
//! Strings returned by the library must be released with [`bs_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bilevel_sched::bench::{solve, Algo, SolveOptions, SolveReport};
use bilevel_sched::{Budget, Error, Instance};

pub const BS_ALGO_LSA: u32 = 0;
pub const BS_ALGO_LSS: u32 = 1;
pub const BS_ALGO_LSFA: u32 = 2;
pub const BS_ALGO_RBS: u32 = 3;
pub const BS_ALGO_MSLS: u32 = 4;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInstance = 3,
    InvalidArgument = 4,
    Io = 5,
    Infeasible = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Solver options. Zero or negative fields select the defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BsSolveOptions {
    /// Wall-clock budget in seconds; `<= 0` means unlimited.
    pub budget_seconds: f64,
    /// Deterministic step budget; overrides `budget_seconds` when non-zero.
    pub step_budget: u64,
    pub beam_width: u32,
    /// Negative selects the fitted default.
    pub alpha: f64,
    pub seeds: u32,
    pub ls_fraction: f64,
}

pub struct BsInstance {
    inner: Instance,
}

pub struct BsSolution {
    report: SolveReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> BsStatus {
    match err {
        Error::InvalidInstance(_) | Error::Json(_) | Error::StructuralInvalid(_) => {
            BsStatus::InvalidInstance
        }
        Error::Io { .. } => BsStatus::Io,
        Error::Infeasible(_) | Error::InfeasibleAssignment { .. } => BsStatus::Infeasible,
        _ => BsStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (BsStatus, String)>) -> BsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            BsStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (BsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (BsStatus, String) {
    (BsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (BsStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (BsStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn into_handle<T>(value: T, out: *mut *mut T) {
    // SAFETY: callers check `out` for null first.
    unsafe { *out = Box::into_raw(Box::new(value)) };
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses an instance from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_instance_from_json(
    json: *const c_char,
    out: *mut *mut BsInstance,
) -> BsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = read_str(json, "json")?;
        let inner = Instance::from_json_str(text).map_err(lib_err)?;
        into_handle(BsInstance { inner }, out);
        Ok(())
    })
}

/// Loads an instance file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_instance_load(
    path: *const c_char,
    out: *mut *mut BsInstance,
) -> BsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = read_str(path, "path")?;
        let inner = Instance::load(path).map_err(lib_err)?;
        into_handle(BsInstance { inner }, out);
        Ok(())
    })
}

/// Number of jobs, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bs_instance_job_count(inst: *const BsInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.inner.job_count())
}

/// # Safety
/// `inst` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bs_instance_free(inst: *mut BsInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

#[no_mangle]
pub extern "C" fn bs_solve_options_default() -> BsSolveOptions {
    BsSolveOptions {
        budget_seconds: 0.0,
        step_budget: 0,
        beam_width: 0,
        alpha: -1.0,
        seeds: 0,
        ls_fraction: 0.0,
    }
}

fn options(o: &BsSolveOptions) -> SolveOptions {
    let budget = if o.step_budget > 0 {
        Budget::Steps(o.step_budget)
    } else if o.budget_seconds > 0.0 && o.budget_seconds.is_finite() {
        Budget::from_secs_f64(o.budget_seconds)
    } else {
        Budget::Unlimited
    };
    SolveOptions {
        budget: Some(budget),
        beam_width: (o.beam_width > 0).then_some(o.beam_width as usize),
        alpha: (o.alpha >= 0.0).then_some(o.alpha.min(1.0)),
        seeds: (o.seeds > 0).then_some(o.seeds as usize),
        ls_fraction: (o.ls_fraction > 0.0 && o.ls_fraction < 1.0).then_some(o.ls_fraction),
    }
}

/// Runs algorithm `algo` (one of the `BS_ALGO_*` values). `opts` may be null.
///
/// # Safety
/// `inst` must be a live handle, `opts` null or valid, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_solve(
    inst: *const BsInstance,
    algo: u32,
    opts: *const BsSolveOptions,
    out: *mut *mut BsSolution,
) -> BsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inst = inst.as_ref().ok_or_else(|| null("instance"))?;
        let algo = match algo {
            BS_ALGO_LSA => Algo::Lsa,
            BS_ALGO_LSS => Algo::Lss,
            BS_ALGO_LSFA => Algo::Lsfa,
            BS_ALGO_RBS => Algo::Rbs,
            BS_ALGO_MSLS => Algo::Msls,
            other => {
                return Err((BsStatus::InvalidArgument, format!("unknown algorithm {other}")));
            }
        };
        let o = opts.as_ref().copied().unwrap_or_else(|| bs_solve_options_default());
        let report = solve(&inst.inner, algo, &options(&o)).map_err(lib_err)?;
        into_handle(BsSolution { report }, out);
        Ok(())
    })
}

/// # Safety
/// `sol` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_solution_weighted_tardy(
    sol: *const BsSolution,
    out: *mut u64,
) -> BsStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("solution"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = sol.report.weighted_tardy;
        Ok(())
    })
}

/// Sum of completion times in raw time units.
///
/// # Safety
/// `sol` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_solution_total_completion(
    sol: *const BsSolution,
    out: *mut f64,
) -> BsStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("solution"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = sol.report.sum_cj_raw;
        Ok(())
    })
}

/// Copies the selected job ids, ascending, into `buf`. `len` always receives
/// the number of ids; if `cap` is smaller nothing is copied and
/// `BS_STATUS_BUFFER_TOO_SMALL` is returned. `buf` may be null when `cap` is 0.
///
/// # Safety
/// `buf` must have room for `cap` values and `len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bs_solution_selected(
    sol: *const BsSolution,
    buf: *mut u32,
    cap: usize,
    len: *mut usize,
) -> BsStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("solution"))?;
        if len.is_null() {
            return Err(null("len"));
        }
        let ids = &sol.report.selected;
        *len = ids.len();
        if cap < ids.len() {
            return Err((
                BsStatus::BufferTooSmall,
                format!("need room for {} ids", ids.len()),
            ));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(ids.as_ptr(), buf, ids.len());
        Ok(())
    })
}

/// Full report as JSON. Release with [`bs_string_free`].
///
/// # Safety
/// `sol` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_solution_to_json(
    sol: *const BsSolution,
    out: *mut *mut c_char,
) -> BsStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("solution"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = serde_json::to_string(&sol.report)
            .map_err(|e| (BsStatus::InvalidArgument, e.to_string()))?;
        *out = CString::new(text)
            .map_err(|e| (BsStatus::InvalidArgument, e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `sol` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bs_solution_free(sol: *mut BsSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Fitted beam width and `alpha` for recovering beam search.
///
/// # Safety
/// Output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bs_rbs_params(
    n_jobs: u64,
    n: u64,
    m: u64,
    beam_width: *mut u32,
    alpha: *mut f64,
) -> BsStatus {
    guard(|| {
        if beam_width.is_null() || alpha.is_null() {
            return Err(null("output"));
        }
        let p = bilevel_sched::params::rbs_params(n_jobs, n, m);
        *beam_width = p.beam_width as u32;
        *alpha = p.alpha;
        Ok(())
    })
}

/// Fitted beam width, seed count, and local search share for MSLS.
///
/// # Safety
/// Output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bs_msls_params(
    n_jobs: u64,
    m: u64,
    beam_width: *mut u32,
    seeds: *mut u32,
    ls_fraction: *mut f64,
) -> BsStatus {
    guard(|| {
        if beam_width.is_null() || seeds.is_null() || ls_fraction.is_null() {
            return Err(null("output"));
        }
        let p = bilevel_sched::params::msls_params(n_jobs, m);
        *beam_width = p.beam_width as u32;
        *seeds = p.k as u32;
        *ls_fraction = p.ls_fraction;
        Ok(())
    })
}
