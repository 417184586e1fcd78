//! C ABI for `urnwalk`.
//!
//! Conventions:
//! * every fallible function returns an `int32_t` status (`URN_OK` or a
//!   negative `URN_ERR_*` code) and writes results through out-pointers;
//! * tables and Monte Carlo summaries are opaque handles created by
//!   `urn_*_new`/`urn_monte_carlo` and released with the matching `*_free`;
//! * after a failure, `urn_last_error_message` describes it (per thread);
//! * panics never cross the boundary; they surface as `URN_ERR_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use urnwalk::densities::{self, DensityMethod, DensityParams, DensityValue};
use urnwalk::numtheory::{self, ArithmeticTable};
use urnwalk::walks::{self, MonteCarloSummary, WalkConfig, WalkKind};
use urnwalk::{estimates, Error};

pub const URN_OK: i32 = 0;
pub const URN_ERR_NULL: i32 = -1;
pub const URN_ERR_INVALID: i32 = -2;
pub const URN_ERR_RESOURCE: i32 = -3;
pub const URN_ERR_PANIC: i32 = -255;

pub const URN_WALK_POLYA: i32 = 0;
pub const URN_WALK_ALPHA: i32 = 1;
pub const URN_WALK_FRIEDMAN: i32 = 2;
pub const URN_WALK_POLYA3D: i32 = 3;

pub const URN_METHOD_EULER_PRODUCT: i32 = 0;
pub const URN_METHOD_MOBIUS_TRUNCATED: i32 = 1;
pub const URN_METHOD_BRUTE_FORCE: i32 = 2;

/// Sieved Möbius/totient table.
pub struct UrnTable(ArithmeticTable);

/// Result of a Monte Carlo run, including every trial record.
pub struct UrnSummary(MonteCarloSummary);

/// A density value with its method and truncation bound.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct UrnDensity {
    pub value: f64,
    pub tail_bound: f64,
    /// One of `URN_METHOD_*`.
    pub method: i32,
    /// Depth or grid size for truncated methods, 0 otherwise.
    pub method_param: u64,
}

impl From<DensityValue> for UrnDensity {
    fn from(d: DensityValue) -> Self {
        let (method, method_param) = match d.method {
            DensityMethod::EulerProduct => (URN_METHOD_EULER_PRODUCT, 0),
            DensityMethod::MobiusTruncated(n) => (URN_METHOD_MOBIUS_TRUNCATED, n),
            DensityMethod::BruteForce(n) => (URN_METHOD_BRUTE_FORCE, n),
        };
        Self {
            value: d.value,
            tail_bound: d.tail_bound,
            method,
            method_param,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
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

fn code_of(e: &Error) -> i32 {
    match e {
        Error::SieveLimit { .. } | Error::BeyondSieve { .. } | Error::ExactModeLimit { .. } | Error::Io(_) => {
            URN_ERR_RESOURCE
        }
        Error::InvalidParameter(_) | Error::Unsupported(_) | Error::Config(_) => URN_ERR_INVALID,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => URN_OK,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            URN_ERR_NULL
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            code_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            URN_ERR_PANIC
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn inp<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn urn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message describing the last failure on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn urn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a Möbius/totient table for `1..=limit`.
///
/// # Safety
/// `out_table` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn urn_table_new(limit: u64, out_table: *mut *mut UrnTable) -> i32 {
    guard(|| {
        let slot = out(out_table, "out_table")?;
        *slot = ptr::null_mut();
        let table = numtheory::sieve(limit)?;
        *slot = Box::into_raw(Box::new(UrnTable(table)));
        Ok(())
    })
}

/// Releases a table; null is ignored.
///
/// # Safety
/// `table` must come from `urn_table_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn urn_table_free(table: *mut UrnTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// # Safety
/// `table` and `out_limit` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn urn_table_limit(table: *const UrnTable, out_limit: *mut u64) -> i32 {
    guard(|| {
        *out(out_limit, "out_limit")? = inp(table, "table")?.0.limit();
        Ok(())
    })
}

/// `μ(n)` for `1 ≤ n ≤ limit`.
///
/// # Safety
/// `table` and `out_mu` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn urn_table_mobius(table: *const UrnTable, n: u64, out_mu: *mut i8) -> i32 {
    guard(|| {
        let t = inp(table, "table")?;
        *out(out_mu, "out_mu")? = t.0.try_mobius(n)?;
        Ok(())
    })
}

/// `φ(n)` for `1 ≤ n ≤ limit`.
///
/// # Safety
/// `table` and `out_phi` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn urn_table_totient(table: *const UrnTable, n: u64, out_phi: *mut u64) -> i32 {
    guard(|| {
        let t = inp(table, "table")?;
        *out(out_phi, "out_phi")? = t.0.try_totient(n)?;
        Ok(())
    })
}

/// Closed-form density of visible points on `(a0 + n r0, b0 + m u0)`.
///
/// # Safety
/// `out_density` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn urn_delta_general(a0: u64, b0: u64, r0: u64, u0: u64, out_density: *mut UrnDensity) -> i32 {
    guard(|| {
        let slot = out(out_density, "out_density")?;
        *slot = densities::delta_general(DensityParams::new(a0, b0, r0, u0)?).into();
        Ok(())
    })
}

/// Truncated Möbius series for the same density; `depth ≤ table limit`.
///
/// # Safety
/// `table` and `out_density` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn urn_delta_general_mobius(
    table: *const UrnTable,
    a0: u64,
    b0: u64,
    r0: u64,
    u0: u64,
    depth: u64,
    out_density: *mut UrnDensity,
) -> i32 {
    guard(|| {
        let t = inp(table, "table")?;
        let slot = out(out_density, "out_density")?;
        *slot = densities::delta_general_mobius(&t.0, DensityParams::new(a0, b0, r0, u0)?, depth)?.into();
        Ok(())
    })
}

/// `Δ(c)`, the density for equal steps `c` from `(1, 1)`.
///
/// # Safety
/// `out_density` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn urn_delta_c(c: u64, out_density: *mut UrnDensity) -> i32 {
    guard(|| {
        let slot = out(out_density, "out_density")?;
        if c == 0 {
            return Err(Error::InvalidParameter("c must be >= 1".into()).into());
        }
        *slot = densities::delta_c(c).into();
        Ok(())
    })
}

/// Density of `k`-visible points.
///
/// # Safety
/// `out_value` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn urn_k_visible_density(k: u64, out_value: *mut f64) -> i32 {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        if k == 0 {
            return Err(Error::InvalidParameter("k must be >= 1".into()).into());
        }
        *slot = densities::k_visible_density(k);
        Ok(())
    })
}

/// `1/ζ(3)` and its error bound.
///
/// # Safety
/// Both out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn urn_constant_p(out_value: *mut f64, out_error_bound: *mut f64) -> i32 {
    guard(|| {
        let c = densities::constant_p();
        *out(out_value, "out_value")? = c.value;
        *out(out_error_bound, "out_error_bound")? = c.error_bound;
        Ok(())
    })
}

/// `Π_p (1 − 3/p² + 2/p³)` truncated at `cutoff`, with its tail bound.
///
/// # Safety
/// Both out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn urn_constant_t(cutoff: u64, out_value: *mut f64, out_error_bound: *mut f64) -> i32 {
    guard(|| {
        let v = out(out_value, "out_value")?;
        let b = out(out_error_bound, "out_error_bound")?;
        if !(2..=numtheory::MAX_SIEVE_LIMIT).contains(&cutoff) {
            return Err(Error::InvalidParameter(format!("cutoff out of range: {cutoff}")).into());
        }
        let c = densities::constant_t(cutoff);
        *v = c.value;
        *b = c.error_bound;
        Ok(())
    })
}

/// `E(Q_N)` for Pólya's walk from `(1, 1)`; needs `N + 2 ≤ table limit`.
///
/// # Safety
/// `table` and `out_value` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn urn_expected_q_closed_form(table: *const UrnTable, n: u64, out_value: *mut f64) -> i32 {
    guard(|| {
        let t = inp(table, "table")?;
        *out(out_value, "out_value")? = estimates::expected_q_closed_form(&t.0, n)?;
        Ok(())
    })
}

/// Runs `trials` independent walks of `horizon` steps. `kind` is one of
/// `URN_WALK_*`; `alpha` is read only for the α-walk; `start` holds `dims`
/// coordinates (3 for the three-colour urn, else 2).
///
/// # Safety
/// `start` must point to `dims` values, `k_list` to `k_len` values (or be
/// null with `k_len == 0`), and `out_summary` must be valid.
#[no_mangle]
pub unsafe extern "C" fn urn_monte_carlo(
    kind: i32,
    alpha: f64,
    start: *const u64,
    dims: usize,
    step_right: u64,
    step_up: u64,
    horizon: u64,
    trials: u64,
    k_list: *const u64,
    k_len: usize,
    master_seed: u64,
    out_summary: *mut *mut UrnSummary,
) -> i32 {
    guard(|| {
        let slot = out(out_summary, "out_summary")?;
        *slot = ptr::null_mut();
        let kind = match kind {
            URN_WALK_POLYA => WalkKind::Polya,
            URN_WALK_ALPHA => WalkKind::AlphaRandom { alpha },
            URN_WALK_FRIEDMAN => WalkKind::Friedman,
            URN_WALK_POLYA3D => WalkKind::Polya3D,
            other => return Err(Error::InvalidParameter(format!("unknown walk kind {other}")).into()),
        };
        let cfg = WalkConfig {
            kind,
            start: slice(start, dims, "start")?.to_vec(),
            step_right,
            step_up,
        };
        let ks = slice(k_list, k_len, "k_list")?;
        let summary = walks::monte_carlo(&cfg, horizon, trials, ks, master_seed)?;
        *slot = Box::into_raw(Box::new(UrnSummary(summary)));
        Ok(())
    })
}

/// Releases a summary; null is ignored.
///
/// # Safety
/// `summary` must come from `urn_monte_carlo` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn urn_summary_free(summary: *mut UrnSummary) {
    if !summary.is_null() {
        drop(Box::from_raw(summary));
    }
}

/// Mean, variance and standard error of the visible fraction.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn urn_summary_q(
    summary: *const UrnSummary,
    out_mean: *mut f64,
    out_var: *mut f64,
    out_stderr: *mut f64,
) -> i32 {
    guard(|| {
        let s = &inp(summary, "summary")?.0;
        *out(out_mean, "out_mean")? = s.mean_q;
        *out(out_var, "out_var")? = s.var_q;
        *out(out_stderr, "out_stderr")? = s.stderr;
        Ok(())
    })
}

/// Mean fraction of steps with gcd exactly `k`; `k` must have been requested.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn urn_summary_q_k(summary: *const UrnSummary, k: u64, out_mean: *mut f64) -> i32 {
    guard(|| {
        let s = &inp(summary, "summary")?.0;
        let slot = out(out_mean, "out_mean")?;
        *slot = s
            .mean_q_for(k)
            .ok_or_else(|| Error::InvalidParameter(format!("k = {k} was not in k_list")))?;
        Ok(())
    })
}

/// Number of trials held by the summary.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn urn_summary_trials(summary: *const UrnSummary, out_trials: *mut u64) -> i32 {
    guard(|| {
        *out(out_trials, "out_trials")? = inp(summary, "summary")?.0.trials;
        Ok(())
    })
}

/// Visible fraction and right-step count of trial `index`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn urn_summary_trial(
    summary: *const UrnSummary,
    index: u64,
    out_q: *mut f64,
    out_right_count: *mut u64,
) -> i32 {
    guard(|| {
        let s = &inp(summary, "summary")?.0;
        let r = s
            .records
            .get(index as usize)
            .ok_or_else(|| Error::InvalidParameter(format!("trial {index} out of range")))?;
        *out(out_q, "out_q")? = r.q;
        *out(out_right_count, "out_right_count")? = r.right_count;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;

    #[test]
    fn panics_become_status_codes() {
        let code = guard(|| panic!("boom"));
        assert_eq!(code, URN_ERR_PANIC);
        let msg = unsafe { CStr::from_ptr(urn_last_error_message()) };
        assert!(msg.to_str().unwrap().contains("boom"));
    }

    #[test]
    fn version_is_terminated() {
        let v = unsafe { CStr::from_ptr(urn_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
