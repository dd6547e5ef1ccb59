//! C interface to the `sumprod` library.
//!
//! Sets are passed as opaque `SpGridSet` handles created by the library and
//! released with [`sp_set_free`]. Every fallible function returns an
//! [`SpStatus`]; on failure the message is available from
//! [`sp_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use sumprod::energy::{energy, quadruple_count, FiberMode};
use sumprod::experiments::{emit_report, run, ExperimentConfig};
use sumprod::generators::GeneratorSpec;
use sumprod::grid::arithmetic;
use sumprod::regularity::{dyadic_content, frostman_constant, kt_constant, FrostmanKind};
use sumprod::{ArithOp, Error, GridSet};

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpStatus {
    Ok = 0,
    InvalidInput = 1,
    Domain = 2,
    ScaleMismatch = 3,
    Generation = 4,
    Hypothesis = 5,
    Io = 6,
    Json = 7,
    NullPointer = 8,
    Overflow = 9,
    Panic = 10,
}

/// Binary operation for [`sp_set_arithmetic`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpArithOp {
    Sum = 0,
    Diff = 1,
    Prod = 2,
    Quot = 3,
}

/// Fiber combination for energies.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpFiberMode {
    Difference = 0,
    Sum = 1,
}

/// Frostman condition variant.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpFrostmanKind {
    /// Relative to the set size.
    Set = 0,
    /// Katz–Tao (absolute) form.
    Kt = 1,
}

/// Opaque set of grid cells at scale `2^-m`.
pub struct SpGridSet(GridSet);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SpStatus {
    match err {
        Error::InvalidInput(_) => SpStatus::InvalidInput,
        Error::Domain(_) => SpStatus::Domain,
        Error::ScaleMismatch { .. } => SpStatus::ScaleMismatch,
        Error::Generation { .. } => SpStatus::Generation,
        Error::Hypothesis(_) => SpStatus::Hypothesis,
        Error::Io { .. } => SpStatus::Io,
        Error::Json(_) => SpStatus::Json,
    }
}

struct Failure(SpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SpStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SpStatus::Panic
        }
    }
}

unsafe fn set_ref<'a>(p: *const SpGridSet, what: &str) -> Result<&'a GridSet, Failure> {
    p.as_ref().map(|s| &s.0).ok_or_else(|| null(what))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SpStatus::InvalidInput, format!("{what} is not UTF-8")))
}

fn boxed(set: GridSet) -> *mut SpGridSet {
    Box::into_raw(Box::new(SpGridSet(set)))
}

fn fiber_mode(mode: SpFiberMode) -> FiberMode {
    match mode {
        SpFiberMode::Difference => FiberMode::Difference,
        SpFiberMode::Sum => FiberMode::Sum,
    }
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a set from `len` cell indices at scale `m`.
///
/// # Safety
/// `cells` must point to `len` readable values (or be null with `len == 0`)
/// and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_set_new(m: u32, cells: *const i64, len: usize, out: *mut *mut SpGridSet) -> SpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let cells = if len == 0 {
            &[][..]
        } else if cells.is_null() {
            return Err(null("cells"));
        } else {
            std::slice::from_raw_parts(cells, len)
        };
        *out = boxed(GridSet::from_cells(m, cells.iter().copied())?);
        Ok(())
    })
}

/// Generates a set from a JSON generator spec such as
/// `{"kind": "cantor", "base": 4, "digits": [0, 2]}`.
///
/// # Safety
/// `spec_json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sp_set_generate(spec_json: *const c_char, m: u32, out: *mut *mut SpGridSet) -> SpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let spec: GeneratorSpec = serde_json::from_str(str_arg(spec_json, "spec_json")?)
            .map_err(|e| Failure(SpStatus::Json, e.to_string()))?;
        *out = boxed(spec.generate(m)?);
        Ok(())
    })
}

/// Releases a set; null is ignored.
///
/// # Safety
/// `set` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sp_set_free(set: *mut SpGridSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of cells, or 0 for null.
///
/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sp_set_len(set: *const SpGridSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.len())
}

/// Scale exponent `m`, or 0 for null.
///
/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sp_set_scale(set: *const SpGridSet) -> u32 {
    set.as_ref().map_or(0, |s| s.0.m())
}

/// Copies up to `cap` sorted cells into `buf` and stores the full count in
/// `len`.
///
/// # Safety
/// `buf` must have room for `cap` values (or be null with `cap == 0`).
#[no_mangle]
pub unsafe extern "C" fn sp_set_cells(set: *const SpGridSet, buf: *mut i64, cap: usize, len: *mut usize) -> SpStatus {
    guard(|| {
        let cells = set_ref(set, "set")?.cells();
        *out_ref(len, "len")? = cells.len();
        let n = cells.len().min(cap);
        if n > 0 {
            if buf.is_null() {
                return Err(null("buf"));
            }
            ptr::copy_nonoverlapping(cells.as_ptr(), buf, n);
        }
        Ok(())
    })
}

/// `N_{2^-j}` of the set.
///
/// # Safety
/// `set` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sp_set_covering_number(set: *const SpGridSet, j: u32, out: *mut usize) -> SpStatus {
    guard(|| {
        *out_ref(out, "out")? = set_ref(set, "set")?.covering_number(j)?;
        Ok(())
    })
}

/// Sum, difference, product or quotient set.
///
/// # Safety
/// `a` and `b` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sp_set_arithmetic(
    a: *const SpGridSet,
    b: *const SpGridSet,
    op: SpArithOp,
    out: *mut *mut SpGridSet,
) -> SpStatus {
    guard(|| {
        let op = match op {
            SpArithOp::Sum => ArithOp::Sum,
            SpArithOp::Diff => ArithOp::Diff,
            SpArithOp::Prod => ArithOp::Prod,
            SpArithOp::Quot => ArithOp::Quot,
        };
        let result = arithmetic(set_ref(a, "a")?, set_ref(b, "b")?, op)?;
        *out_ref(out, "out")? = boxed(result);
        Ok(())
    })
}

/// `E_k(A, B)` with window `w`, as a double.
///
/// # Safety
/// `a` and `b` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sp_energy(
    a: *const SpGridSet,
    b: *const SpGridSet,
    k: f64,
    mode: SpFiberMode,
    w: u64,
    out: *mut f64,
) -> SpStatus {
    guard(|| {
        *out_ref(out, "out")? = energy(set_ref(a, "a")?, set_ref(b, "b")?, k, fiber_mode(mode), w)?.as_f64();
        Ok(())
    })
}

/// Exact `E_k(A, B)` for integer `k`; fails with `Overflow` past `u64`.
///
/// # Safety
/// `a` and `b` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sp_energy_exact(
    a: *const SpGridSet,
    b: *const SpGridSet,
    k: u32,
    mode: SpFiberMode,
    w: u64,
    out: *mut u64,
) -> SpStatus {
    guard(|| {
        let value = energy(set_ref(a, "a")?, set_ref(b, "b")?, k as f64, fiber_mode(mode), w)?
            .exact()
            .ok_or_else(|| Failure(SpStatus::InvalidInput, format!("k = {k} has no exact energy")))?;
        *out_ref(out, "out")? =
            u64::try_from(value).map_err(|_| Failure(SpStatus::Overflow, format!("energy {value} exceeds u64")))?;
        Ok(())
    })
}

/// Quadruples `(a, b, a′, b′)` with `|(a ∘ b) − (a′ ∘ b′)| ≤ w`.
///
/// # Safety
/// `a` and `b` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sp_quadruple_count(
    a: *const SpGridSet,
    b: *const SpGridSet,
    mode: SpFiberMode,
    w: u64,
    out: *mut u64,
) -> SpStatus {
    guard(|| {
        let value = quadruple_count(set_ref(a, "a")?, set_ref(b, "b")?, fiber_mode(mode), w)?;
        *out_ref(out, "out")? =
            u64::try_from(value).map_err(|_| Failure(SpStatus::Overflow, format!("count {value} exceeds u64")))?;
        Ok(())
    })
}

/// Smallest Frostman constant of the set at exponent `s`.
///
/// # Safety
/// `set` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sp_frostman_constant(
    set: *const SpGridSet,
    s: f64,
    kind: SpFrostmanKind,
    out: *mut f64,
) -> SpStatus {
    guard(|| {
        let set = set_ref(set, "set")?;
        *out_ref(out, "out")? = match kind {
            SpFrostmanKind::Set => frostman_constant(set, s, FrostmanKind::Set)?.c_min,
            SpFrostmanKind::Kt => kt_constant(set, s)?,
        };
        Ok(())
    })
}

/// Dyadic `α`-content of the set.
///
/// # Safety
/// `set` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sp_dyadic_content(set: *const SpGridSet, alpha: f64, out: *mut f64) -> SpStatus {
    guard(|| {
        *out_ref(out, "out")? = dyadic_content(set_ref(set, "set")?, alpha)?.value;
        Ok(())
    })
}

/// Runs the pipeline described by `config_json`, writes the report files
/// into `out_dir` when it is not null, and stores 0 (all hard invariants
/// hold) or 2 in `exit_code`. A failed hypothesis returns `Hypothesis`.
///
/// # Safety
/// `config_json` must be a NUL-terminated string, `out_dir` null or a
/// NUL-terminated string, and `exit_code` writable.
#[no_mangle]
pub unsafe extern "C" fn sp_run_experiment(
    config_json: *const c_char,
    out_dir: *const c_char,
    exit_code: *mut i32,
) -> SpStatus {
    guard(|| {
        let config = ExperimentConfig::from_json(str_arg(config_json, "config_json")?)?;
        let code = out_ref(exit_code, "exit_code")?;
        let report = run(&config)?;
        if !out_dir.is_null() {
            emit_report(&report, Path::new(str_arg(out_dir, "out_dir")?))?;
        }
        *code = report.exit_code(config.max_slack);
        Ok(())
    })
}
