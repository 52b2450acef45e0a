//! C ABI for feedctl.
//!
//! Objects are opaque heap handles released with their `*_free` function.
//! Every fallible call returns an [`FcStatus`]; on failure the message is
//! available from [`fc_last_error_message`] on the same thread. Matrices cross
//! the boundary as row-major buffers of interleaved `(re, im)` doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use feedctl::canonical::canonical_form;
use feedctl::cli::load_state;
use feedctl::controllability::{classify, is_asymptotically_dpc};
use feedctl::matops::{ComplexMatrix, ToleranceConfig};
use feedctl::simulate::{run_averaged, FeedbackLaw};
use feedctl::synthesis::{ddc_plan_for_measurement, FeedbackPlan};
use feedctl::{DensityMatrix, Error, Measurement};
use num_complex::Complex64;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    InvalidState = 4,
    NotUnitary = 5,
    Completeness = 6,
    NotDpc = 7,
    Infeasible = 8,
    SynthesisPrecondition = 9,
    PlanExhausted = 10,
    Parse = 11,
    Internal = 12,
    Panic = 13,
}

/// Numerical tolerances; pass NULL wherever a default is acceptable.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FcTolerance {
    pub eq_tol: f64,
    pub psd_tol: f64,
    pub rank_tol: f64,
}

/// A validated measurement (Kraus operator set).
pub struct FcMeasurement(Measurement);

/// A validated density matrix.
pub struct FcDensity(DensityMatrix);

/// A time-indexed feedback plan.
pub struct FcPlan(FeedbackPlan);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FcStatus {
    match e {
        Error::Dimension(_) | Error::NotSquare { .. } => FcStatus::Dimension,
        Error::NotHermitian { .. } | Error::InvalidState(_) | Error::DegenerateConditioning { .. } => {
            FcStatus::InvalidState
        }
        Error::NotUnitary { .. } => FcStatus::NotUnitary,
        Error::Completeness { .. } => FcStatus::Completeness,
        Error::InvalidTolerance(_) | Error::InvalidArgument(_) => FcStatus::InvalidArgument,
        Error::NotDpc => FcStatus::NotDpc,
        Error::Infeasible => FcStatus::Infeasible,
        Error::FormMismatch { .. } | Error::NotScalarUnitary { .. } => FcStatus::SynthesisPrecondition,
        Error::PlanExhausted { .. } => FcStatus::PlanExhausted,
        Error::Parse(_) | Error::Json(_) => FcStatus::Parse,
        Error::Io(_) | Error::Csv(_) | Error::Internal(_) => FcStatus::Internal,
    }
}

struct Failure(FcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(FcStatus::NullPointer, format!("{what} is NULL"))
}

/// Runs `body`, recording any error or panic for `fc_last_error_message`.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> FcStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => FcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            FcStatus::Panic
        }
    }
}

fn tolerance(tol: *const FcTolerance) -> Result<ToleranceConfig, Failure> {
    // SAFETY: the caller passes NULL or a valid pointer
    match unsafe { tol.as_ref() } {
        None => Ok(ToleranceConfig::default()),
        Some(t) => Ok(ToleranceConfig::new(t.eq_tol, t.psd_tol, t.rank_tol)?),
    }
}

fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null and NUL-terminated by contract
    unsafe { CStr::from_ptr(s) }
        .to_str()
        .map_err(|_| Failure(FcStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: the caller passes NULL or a live handle
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null, writable by contract
    unsafe { out.write(value) };
    Ok(())
}

fn boxed<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    // SAFETY: non-null, writable by contract
    unsafe { out.write(Box::into_raw(Box::new(value))) };
    Ok(())
}

fn string_out(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| Failure(FcStatus::Internal, "string contains NUL".into()))?;
    write_out(out, c.into_raw(), "output string")
}

fn read_matrix(n: usize, data: *const f64) -> Result<ComplexMatrix, Failure> {
    if data.is_null() {
        return Err(null("matrix buffer"));
    }
    if n == 0 {
        return Err(Failure(FcStatus::Dimension, "matrix dimension is zero".into()));
    }
    // SAFETY: the caller provides 2 n² readable doubles
    let buf = unsafe { std::slice::from_raw_parts(data, 2 * n * n) };
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        let k = 2 * (i * n + j);
        Complex64::new(buf[k], buf[k + 1])
    }))
}

fn write_matrix(m: &ComplexMatrix, out: *mut f64, len: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    let n = m.nrows();
    if len < 2 * n * n {
        return Err(Failure(
            FcStatus::Dimension,
            format!("output buffer holds {len} doubles, need {}", 2 * n * n),
        ));
    }
    // SAFETY: checked above that `len` covers the write
    let buf = unsafe { std::slice::from_raw_parts_mut(out, 2 * n * n) };
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            buf[2 * (i * n + j)] = z.re;
            buf[2 * (i * n + j) + 1] = z.im;
        }
    }
    Ok(())
}

/// Default tolerances (all 1e-10).
#[no_mangle]
pub extern "C" fn fc_tolerance_default() -> FcTolerance {
    let t = ToleranceConfig::default();
    FcTolerance {
        eq_tol: t.eq_tol,
        psd_tol: t.psd_tol,
        rank_tol: t.rank_tol,
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a measurement from JSON (`{"label": ..., "operators": [...]}`).
///
/// # Safety
/// `json` must be a NUL-terminated string; `tol` NULL or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fc_measurement_from_json(
    json: *const c_char,
    tol: *const FcTolerance,
    out: *mut *mut FcMeasurement,
) -> FcStatus {
    guard(|| {
        let t = tolerance(tol)?;
        let m = Measurement::from_json_str(str_arg(json, "json")?, &t)?;
        boxed(out, FcMeasurement(m))
    })
}

/// Builds a named built-in measurement, e.g. `projective-computational(2)`.
///
/// # Safety
/// `label` must be a NUL-terminated string; `tol` NULL or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fc_measurement_from_builtin(
    label: *const c_char,
    tol: *const FcTolerance,
    out: *mut *mut FcMeasurement,
) -> FcStatus {
    guard(|| {
        let t = tolerance(tol)?;
        let m = feedctl::quantum::builtin::from_label(str_arg(label, "label")?, &t)?;
        boxed(out, FcMeasurement(m))
    })
}

/// Builds a measurement from `outcomes` consecutive `n × n` operators.
///
/// # Safety
/// `data` must hold `2 n² outcomes` doubles; `tol` NULL or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fc_measurement_from_operators(
    n: usize,
    outcomes: usize,
    data: *const f64,
    tol: *const FcTolerance,
    out: *mut *mut FcMeasurement,
) -> FcStatus {
    guard(|| {
        let t = tolerance(tol)?;
        if data.is_null() {
            return Err(null("operator buffer"));
        }
        let ops = (0..outcomes)
            .map(|k| read_matrix(n, data.add(2 * n * n * k)))
            .collect::<Result<Vec<_>, _>>()?;
        boxed(out, FcMeasurement(Measurement::new("ffi", ops, &t)?))
    })
}

/// Hilbert-space dimension, or 0 for NULL.
///
/// # Safety
/// `m` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fc_measurement_dim(m: *const FcMeasurement) -> usize {
    m.as_ref().map_or(0, |m| m.0.dim())
}

/// Number of outcomes, or 0 for NULL.
///
/// # Safety
/// `m` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fc_measurement_outcomes(m: *const FcMeasurement) -> usize {
    m.as_ref().map_or(0, |m| m.0.len())
}

/// # Safety
/// `m` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fc_measurement_free(m: *mut FcMeasurement) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Builds a density matrix from an `n × n` buffer.
///
/// # Safety
/// `data` must hold `2 n²` doubles; `tol` NULL or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fc_density_from_matrix(
    n: usize,
    data: *const f64,
    tol: *const FcTolerance,
    out: *mut *mut FcDensity,
) -> FcStatus {
    guard(|| {
        let t = tolerance(tol)?;
        boxed(out, FcDensity(DensityMatrix::new(read_matrix(n, data)?, &t)?))
    })
}

/// Builds a named state, e.g. `maximally-mixed(3)`, `basis(2,0)`, `plus(2)`.
///
/// # Safety
/// `label` must be a NUL-terminated string; `tol` NULL or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fc_density_from_builtin(
    label: *const c_char,
    tol: *const FcTolerance,
    out: *mut *mut FcDensity,
) -> FcStatus {
    guard(|| {
        let t = tolerance(tol)?;
        let label = str_arg(label, "label")?;
        // file paths are not accepted here
        if !label.contains('(') {
            return Err(Failure(FcStatus::InvalidArgument, format!("unknown state '{label}'")));
        }
        boxed(out, FcDensity(load_state(label, &t)?))
    })
}

/// Dimension of a state, or 0 for NULL.
///
/// # Safety
/// `rho` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fc_density_dim(rho: *const FcDensity) -> usize {
    rho.as_ref().map_or(0, |r| r.0.dim())
}

/// Copies the matrix into `out`, which holds `len` doubles.
///
/// # Safety
/// `rho` must be a live handle; `out` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fc_density_to_matrix(rho: *const FcDensity, out: *mut f64, len: usize) -> FcStatus {
    guard(|| write_matrix(handle(rho, "state")?.0.matrix(), out, len))
}

/// # Safety
/// `rho` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fc_density_free(rho: *mut FcDensity) {
    if !rho.is_null() {
        drop(Box::from_raw(rho));
    }
}

/// Trace distance `½ tr|a − b|`.
///
/// # Safety
/// `a`, `b` must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fc_trace_distance(a: *const FcDensity, b: *const FcDensity, out: *mut f64) -> FcStatus {
    guard(|| {
        let d = handle(a, "first state")?.0.trace_distance(&handle(b, "second state")?.0)?;
        write_out(out, d, "output")
    })
}

/// Canonical upper-triangular factor of an `n × n` matrix.
///
/// # Safety
/// `data` must hold `2 n²` doubles and `out` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fc_canonical_form(
    n: usize,
    data: *const f64,
    tol: *const FcTolerance,
    out: *mut f64,
    len: usize,
) -> FcStatus {
    guard(|| {
        let t = tolerance(tol)?;
        let r = canonical_form(&read_matrix(n, data)?, &t)?;
        write_matrix(&r, out, len)
    })
}

/// Classification report as a JSON string; release it with `fc_string_free`.
///
/// # Safety
/// `m` must be a live handle; `tol` NULL or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fc_classify_json(
    m: *const FcMeasurement,
    tol: *const FcTolerance,
    out: *mut *mut c_char,
) -> FcStatus {
    guard(|| {
        let t = tolerance(tol)?;
        let report = classify(&handle(m, "measurement")?.0, &t)?;
        let json = serde_json::to_string(&report).map_err(Error::from)?;
        string_out(out, json)
    })
}

/// Whether feedback can purify asymptotically. `witness` receives the
/// 0-based outcome with a non-scalar canonical factor, or -1.
///
/// # Safety
/// `m` must be a live handle; `tol` NULL or valid; `out` writable; `witness` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn fc_is_asymptotically_dpc(
    m: *const FcMeasurement,
    tol: *const FcTolerance,
    out: *mut bool,
    witness: *mut isize,
) -> FcStatus {
    guard(|| {
        let t = tolerance(tol)?;
        let (ok, k) = is_asymptotically_dpc(&handle(m, "measurement")?.0, &t)?;
        write_out(out, ok, "output")?;
        if !witness.is_null() {
            witness.write(k.map_or(-1, |k| k as isize));
        }
        Ok(())
    })
}

/// Finite-time plan taking `rho0` to `rhof`. Fails with
/// `SynthesisPrecondition` when the measurement does not allow it.
///
/// # Safety
/// All handles must be live; `tol` NULL or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fc_synthesize(
    m: *const FcMeasurement,
    rho0: *const FcDensity,
    rhof: *const FcDensity,
    tol: *const FcTolerance,
    out: *mut *mut FcPlan,
) -> FcStatus {
    guard(|| {
        let t = tolerance(tol)?;
        let m = &handle(m, "measurement")?.0;
        let (rho0, rhof) = (&handle(rho0, "initial state")?.0, &handle(rhof, "target state")?.0);
        let report = classify(m, &t)?;
        if !report.finite_time_ddc {
            return Err(Failure(
                FcStatus::SynthesisPrecondition,
                format!("finite-time transfer is not available: {}", report.notes.join("; ")),
            ));
        }
        boxed(out, FcPlan(ddc_plan_for_measurement(m, rho0, rhof, &t)?))
    })
}

/// Number of steps in a plan, or 0 for NULL.
///
/// # Safety
/// `plan` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fc_plan_len(plan: *const FcPlan) -> usize {
    plan.as_ref().map_or(0, |p| p.0.len())
}

/// Plan as JSON; release it with `fc_string_free`.
///
/// # Safety
/// `plan` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fc_plan_to_json(plan: *const FcPlan, out: *mut *mut c_char) -> FcStatus {
    guard(|| string_out(out, handle(plan, "plan")?.0.to_json()?))
}

/// Parses a plan written by `fc_plan_to_json` or the command-line tool.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fc_plan_from_json(json: *const c_char, out: *mut *mut FcPlan) -> FcStatus {
    guard(|| boxed(out, FcPlan(FeedbackPlan::from_json(str_arg(json, "json")?)?)))
}

/// # Safety
/// `plan` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fc_plan_free(plan: *mut FcPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Averaged state after running every step of `plan` from `rho0`.
///
/// # Safety
/// All handles must be live; `tol` NULL or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fc_run_averaged(
    rho0: *const FcDensity,
    m: *const FcMeasurement,
    plan: *const FcPlan,
    tol: *const FcTolerance,
    out: *mut *mut FcDensity,
) -> FcStatus {
    guard(|| {
        let t = tolerance(tol)?;
        let plan = &handle(plan, "plan")?.0;
        let m = &handle(m, "measurement")?.0;
        let law = FeedbackLaw::FixedPlan(plan.clone());
        law.check(m, &t)?;
        let states = run_averaged(&handle(rho0, "initial state")?.0, m, &law, plan.len(), &t)?;
        let last = states.into_iter().last().expect("run_averaged returns the initial state");
        boxed(out, FcDensity(last))
    })
}
