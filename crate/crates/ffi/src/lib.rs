//! C interface to `mixwass`.
//!
//! Every function returns a [`MixwassStatus`]. On failure a message is kept
//! per thread and can be read with [`mixwass_last_error`]. Reports are opaque
//! handles released with [`mixwass_report_free`]; strings handed out by the
//! library are released with [`mixwass_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mixwass::config::RunConfigFile;
use mixwass::extraction::AtomicMeasure;
use mixwass::gaussmoments::{moments_of_measure, MeasureSpec};
use mixwass::hierarchy::{self, Certificate, HierarchyReport};
use mixwass::sdp::SolveStatus;
use mixwass::Error;

/// Result code of every call. Values 1 to 3 match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixwassStatus {
    Ok = 0,
    Config = 1,
    Numerical = 2,
    Io = 3,
    NullPointer = 5,
    InvalidUtf8 = 6,
    OutOfBounds = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixwassCertificate {
    Inconclusive = 0,
    NotMixture = 1,
    MixtureCandidate = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixwassSolveStatus {
    Optimal = 0,
    MaxIterations = 1,
    NumericalFailure = 2,
    InfeasibleSuspected = 3,
}

/// One row of the order trace.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixwassOrder {
    pub n: usize,
    pub tau: f64,
    pub tau_star: f64,
    pub gap: f64,
    pub status: MixwassSolveStatus,
    pub flat: bool,
    /// Rank of the top moment matrix, or -1 when flatness was not checked.
    pub rank: i64,
}

/// Opaque result of [`mixwass_run`].
pub struct MixwassReport {
    inner: HierarchyReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn fail(status: MixwassStatus, msg: impl Into<String>) -> MixwassStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> MixwassStatus {
    let status = match e.exit_code() {
        1 => MixwassStatus::Config,
        2 => MixwassStatus::Numerical,
        _ => MixwassStatus::Io,
    };
    fail(status, e.to_string())
}

fn guarded(f: impl FnOnce() -> MixwassStatus) -> MixwassStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(MixwassStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, MixwassStatus> {
    if p.is_null() {
        return Err(fail(MixwassStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(MixwassStatus::InvalidUtf8, "string argument is not UTF-8"))
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mixwass_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Runs the hierarchy for a JSON configuration (same schema as the CLI's
/// `--config` file). On success `*out` receives a new report.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mixwass_run(
    config_json: *const c_char,
    out: *mut *mut MixwassReport,
) -> MixwassStatus {
    guarded(|| {
        if out.is_null() {
            return fail(MixwassStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let text = match read_str(config_json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let result = RunConfigFile::from_json(text)
            .and_then(|file| file.hierarchy())
            .and_then(|cfg| hierarchy::run(&cfg));
        match result {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(MixwassReport { inner }));
                MixwassStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Releases a report. NULL is ignored.
///
/// # Safety
/// `report` must come from [`mixwass_run`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mixwass_report_free(report: *mut MixwassReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Number of solved orders, or 0 for NULL.
///
/// # Safety
/// `report` must be NULL or a live report.
#[no_mangle]
pub unsafe extern "C" fn mixwass_report_num_orders(report: *const MixwassReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.records.len())
}

/// Copies row `index` of the order trace into `*out`.
///
/// # Safety
/// `report` must be a live report and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mixwass_report_order(
    report: *const MixwassReport,
    index: usize,
    out: *mut MixwassOrder,
) -> MixwassStatus {
    guarded(|| {
        let (Some(r), false) = (report.as_ref(), out.is_null()) else {
            return fail(MixwassStatus::NullPointer, "null report or output");
        };
        let Some(rec) = r.inner.records.get(index) else {
            return fail(MixwassStatus::OutOfBounds, format!("order index {index} out of range"));
        };
        *out = MixwassOrder {
            n: rec.n,
            tau: rec.tau,
            tau_star: rec.tau_star,
            gap: rec.gap,
            status: match rec.status {
                SolveStatus::Optimal => MixwassSolveStatus::Optimal,
                SolveStatus::MaxIterations => MixwassSolveStatus::MaxIterations,
                SolveStatus::NumericalFailure => MixwassSolveStatus::NumericalFailure,
                SolveStatus::InfeasibleSuspected => MixwassSolveStatus::InfeasibleSuspected,
            },
            flat: rec.flat(),
            rank: rec.rank().map_or(-1, |k| k as i64),
        };
        MixwassStatus::Ok
    })
}

fn candidate(report: &MixwassReport) -> Option<&AtomicMeasure> {
    match &report.inner.certificate {
        Certificate::MixtureCandidate { measure, .. } => Some(measure),
        _ => None,
    }
}

/// Kind of certificate, and the order it was reached at (0 when
/// inconclusive) in `*order` if non-NULL.
///
/// # Safety
/// `report` must be a live report; `order` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn mixwass_report_certificate(
    report: *const MixwassReport,
    order: *mut usize,
) -> MixwassCertificate {
    let Some(r) = report.as_ref() else {
        return MixwassCertificate::Inconclusive;
    };
    let (kind, n) = match &r.inner.certificate {
        Certificate::NotMixture { n, .. } => (MixwassCertificate::NotMixture, *n),
        Certificate::MixtureCandidate { n, .. } => (MixwassCertificate::MixtureCandidate, *n),
        Certificate::Inconclusive { .. } => (MixwassCertificate::Inconclusive, 0),
    };
    if !order.is_null() {
        *order = n;
    }
    kind
}

/// Number of atoms of the extracted mixture, 0 without a candidate.
///
/// # Safety
/// `report` must be NULL or a live report.
#[no_mangle]
pub unsafe extern "C" fn mixwass_report_num_atoms(report: *const MixwassReport) -> usize {
    report.as_ref().and_then(candidate).map_or(0, AtomicMeasure::len)
}

/// Atom `index` of the extracted mixture.
///
/// # Safety
/// `report` must be a live report; the three outputs valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mixwass_report_atom(
    report: *const MixwassReport,
    index: usize,
    mean: *mut f64,
    sigma: *mut f64,
    weight: *mut f64,
) -> MixwassStatus {
    guarded(|| {
        if mean.is_null() || sigma.is_null() || weight.is_null() {
            return fail(MixwassStatus::NullPointer, "null output pointer");
        }
        let Some(r) = report.as_ref() else {
            return fail(MixwassStatus::NullPointer, "null report");
        };
        let Some(measure) = candidate(r) else {
            return fail(MixwassStatus::OutOfBounds, "report has no mixture candidate");
        };
        let Some(&(m, s)) = measure.atoms.get(index) else {
            return fail(MixwassStatus::OutOfBounds, format!("atom index {index} out of range"));
        };
        *mean = m;
        *sigma = s;
        *weight = measure.weights[index];
        MixwassStatus::Ok
    })
}

/// The full report as JSON. Free the string with [`mixwass_string_free`].
///
/// # Safety
/// `report` must be a live report and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mixwass_report_json(
    report: *const MixwassReport,
    out: *mut *mut c_char,
) -> MixwassStatus {
    guarded(|| {
        let (Some(r), false) = (report.as_ref(), out.is_null()) else {
            return fail(MixwassStatus::NullPointer, "null report or output");
        };
        let json = match serde_json::to_string(&r.inner) {
            Ok(j) => j,
            Err(e) => return from_error(e.into()),
        };
        *out = CString::new(json).unwrap_or_default().into_raw();
        MixwassStatus::Ok
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mixwass_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Moments `mu_0..mu_max_degree` of a JSON measure spec, written to `out`,
/// which must hold `max_degree + 1` values.
///
/// # Safety
/// `measure_json` must be a NUL-terminated string and `out` point to
/// `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mixwass_moments(
    measure_json: *const c_char,
    max_degree: usize,
    out: *mut f64,
    out_len: usize,
) -> MixwassStatus {
    guarded(|| {
        if out.is_null() {
            return fail(MixwassStatus::NullPointer, "null output buffer");
        }
        if out_len < max_degree + 1 {
            return fail(
                MixwassStatus::OutOfBounds,
                format!("buffer holds {out_len} values, need {}", max_degree + 1),
            );
        }
        let text = match read_str(measure_json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let spec: MeasureSpec = match serde_json::from_str(text) {
            Ok(s) => s,
            Err(e) => return fail(MixwassStatus::Config, format!("measure: {e}")),
        };
        match moments_of_measure(&spec, max_degree) {
            Ok(m) => {
                std::slice::from_raw_parts_mut(out, max_degree + 1).copy_from_slice(m.as_slice());
                MixwassStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Squared W2 distance between two univariate Gaussians.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mixwass_w2_gaussian(
    mean1: f64,
    sigma1: f64,
    mean2: f64,
    sigma2: f64,
    out: *mut f64,
) -> MixwassStatus {
    guarded(|| {
        if out.is_null() {
            return fail(MixwassStatus::NullPointer, "null output pointer");
        }
        match hierarchy::w2_gaussian_closed_form((mean1, sigma1), (mean2, sigma2)) {
            Ok(v) => {
                *out = v;
                MixwassStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
