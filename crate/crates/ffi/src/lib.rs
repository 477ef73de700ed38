//! C ABI for `lplc`.
//!
//! Every fallible call returns an [`LplcStatus`]. On failure a message is
//! kept per thread and can be read with [`lplc_last_error_message`] until the
//! next failing call on that thread.
//!
//! Handles are opaque and not thread safe; do not share one between threads
//! without your own locking. Strings handed out by the library must go back
//! through [`lplc_string_free`].

use lplc::asymptotics::{
    build_s, error_budget, validate_assumptions, wkb_eval, AsymptoticsError, ErrorBudget, PhaseTable, SField,
};
use lplc::classify::{admissible_pair_for, classify, ClassificationReport, ClassifyError, CriterionConfig, Verdict};
use lplc::cli::report::ClassifyOutput;
use lplc::cli::spec::{describe_problem_error, ProblemSpec};
use lplc::numerics::Schedule;
use lplc::problem::RayProblem;
use num_complex::Complex64;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LplcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Bad JSON or a potential that does not parse.
    ParseError = 3,
    InvalidArgument = 4,
    NotAdmissible = 5,
    AssumptionViolated = 6,
    BudgetDiverges = 7,
    NumericalFailure = 8,
    /// A Rust panic was caught at the boundary.
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LplcVerdict {
    LimitPointI = 0,
    /// Every solution is square integrable; limit point II and limit circle not told apart.
    AllSolutionsL2 = 1,
    LimitCircle = 2,
    Inconclusive = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LplcComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for LplcComplex {
    fn from(z: Complex64) -> Self {
        LplcComplex { re: z.re, im: z.im }
    }
}

/// Leading WKB pair at one point. The log-moduli stay finite where the
/// values themselves under- or overflow.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LplcWkbSample {
    pub x: f64,
    pub y_lead: LplcComplex,
    pub yhat_lead: LplcComplex,
    pub phase: LplcComplex,
    pub log_abs_y: f64,
    pub log_abs_yhat: f64,
    /// Relative error bound `2 e^{2M} - 2`.
    pub envelope: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LplcAdmissiblePair {
    pub theta: f64,
    pub k: LplcComplex,
    pub margin: f64,
    pub lambda_gap: f64,
    pub eps_geom: f64,
}

struct Wkb {
    field: SField,
    budget: ErrorBudget,
    table: Option<(f64, PhaseTable)>,
}

/// A problem on a ray together with its classification settings.
pub struct LplcProblem {
    problem: RayProblem,
    config: CriterionConfig,
    wkb: Option<Wkb>,
}

pub struct LplcReport {
    report: ClassificationReport,
    potential: String,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(LplcStatus, String);

impl Failure {
    fn new(status: LplcStatus, msg: impl Into<String>) -> Self {
        Failure(status, msg.into())
    }
}

impl From<ClassifyError> for Failure {
    fn from(e: ClassifyError) -> Self {
        let status = match &e {
            ClassifyError::Config(_) | ClassifyError::NegativePsiSample { .. } => LplcStatus::InvalidArgument,
            ClassifyError::NotAdmissible(_) => LplcStatus::NotAdmissible,
            ClassifyError::AssumptionViolated { .. } => LplcStatus::AssumptionViolated,
            _ => LplcStatus::NumericalFailure,
        };
        Failure(status, e.to_string())
    }
}

impl From<AsymptoticsError> for Failure {
    fn from(e: AsymptoticsError) -> Self {
        let status = match &e {
            AsymptoticsError::AssumptionViolated { .. } => LplcStatus::AssumptionViolated,
            AsymptoticsError::BudgetDiverges { .. } => LplcStatus::BudgetDiverges,
            _ => LplcStatus::NumericalFailure,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LplcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LplcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            LplcStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(LplcStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(LplcStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::new(LplcStatus::NullPointer, format!("{what} is null")))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::new(LplcStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    deref_mut(p, "output pointer")
}

fn into_handle(problem: RayProblem, config: CriterionConfig) -> *mut LplcProblem {
    Box::into_raw(Box::new(LplcProblem { problem, config, wkb: None }))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lplc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or an empty string. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lplc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Build a problem from the endpoint, angle, spectral parameter and a
/// potential expression in `x`. Default classification settings apply.
///
/// # Safety
/// `potential` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lplc_problem_new(
    a: f64,
    phi: f64,
    lambda_re: f64,
    lambda_im: f64,
    potential: *const c_char,
    out: *mut *mut LplcProblem,
) -> LplcStatus {
    guard(|| {
        let out = out_ptr(out)?;
        *out = ptr::null_mut();
        let text = read_str(potential, "potential")?;
        let problem = RayProblem::parse(a, phi, Complex64::new(lambda_re, lambda_im), text)
            .map_err(|e| Failure::new(LplcStatus::ParseError, describe_problem_error(&e, text)))?;
        *out = into_handle(problem, CriterionConfig::default());
        Ok(())
    })
}

/// Build a problem from the same JSON the command line tool reads,
/// including an optional `config` object.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lplc_problem_from_json(json: *const c_char, out: *mut *mut LplcProblem) -> LplcStatus {
    guard(|| {
        let out = out_ptr(out)?;
        *out = ptr::null_mut();
        let text = read_str(json, "json")?;
        let spec: ProblemSpec =
            serde_json::from_str(text).map_err(|e| Failure::new(LplcStatus::ParseError, e.to_string()))?;
        let problem = spec.problem().map_err(|e| Failure::new(LplcStatus::ParseError, e.to_string()))?;
        let config = spec
            .criterion_config()
            .map_err(|e| Failure::new(LplcStatus::InvalidArgument, e.to_string()))?;
        *out = into_handle(problem, config);
        Ok(())
    })
}

/// Turn the ODE oracle on or off for later classifications.
///
/// # Safety
/// `problem` must come from this library and not be freed.
#[no_mangle]
pub unsafe extern "C" fn lplc_problem_set_oracle(problem: *mut LplcProblem, enabled: bool) -> LplcStatus {
    guard(|| {
        deref_mut(problem, "problem")?.config.use_oracle = enabled;
        Ok(())
    })
}

/// # Safety
/// `problem` must be null or come from this library, and is freed once.
#[no_mangle]
pub unsafe extern "C" fn lplc_problem_free(problem: *mut LplcProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Admissible pair `(theta, K)` for the problem.
///
/// # Safety
/// `problem` must come from this library and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn lplc_admissible_pair(problem: *const LplcProblem, out: *mut LplcAdmissiblePair) -> LplcStatus {
    guard(|| {
        let h = deref(problem, "problem")?;
        let out = out_ptr(out)?;
        let horizon = h.config.horizon.unwrap_or_else(|| Schedule::default_for(h.problem.a()).last());
        let p = admissible_pair_for(&h.problem, horizon, h.config.hull_points)?;
        *out = LplcAdmissiblePair {
            theta: p.theta,
            k: p.k.into(),
            margin: p.margin,
            lambda_gap: p.lambda_gap,
            eps_geom: p.eps_geom,
        };
        Ok(())
    })
}

/// Leading WKB solutions at `x >= a`. The error budget is computed on the
/// first call and kept with the handle.
///
/// # Safety
/// `problem` must come from this library and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn lplc_wkb_eval(problem: *mut LplcProblem, x: f64, out: *mut LplcWkbSample) -> LplcStatus {
    guard(|| {
        let h = deref_mut(problem, "problem")?;
        let out = out_ptr(out)?;
        let a = h.problem.a();
        if !(x >= a) || !x.is_finite() {
            return Err(Failure::new(LplcStatus::InvalidArgument, format!("x = {x} is not in [a, inf)")));
        }
        if h.wkb.is_none() {
            let field = build_s(&h.problem);
            let budget = error_budget(&field, a, &Schedule::default_for(a))?;
            h.wkb = Some(Wkb { field, budget, table: None });
        }
        let wkb = h.wkb.as_mut().expect("set above");
        if !matches!(&wkb.table, Some((reach, _)) if x <= *reach) {
            let reach = x.max(2.0 * a.max(1.0));
            let checks = validate_assumptions(&wkb.field, a, reach)?;
            if let Some(v) = checks.violations.first() {
                return Err(AsymptoticsError::AssumptionViolated { x: v.x, reason: v.reason }.into());
            }
            wkb.table = Some((reach, PhaseTable::new(&wkb.field, reach, 256)?));
        }
        let (_, table) = wkb.table.as_ref().expect("set above");
        let w = wkb_eval(&wkb.field, table, &wkb.budget, x)?;
        *out = LplcWkbSample {
            x: w.x,
            y_lead: w.y_lead.into(),
            yhat_lead: w.yhat_lead.into(),
            phase: w.phase.into(),
            log_abs_y: w.log_abs_y,
            log_abs_yhat: w.log_abs_yhat,
            envelope: w.envelope,
        };
        Ok(())
    })
}

/// Run the classification. On success `*out` owns a report.
///
/// # Safety
/// `problem` must come from this library and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn lplc_classify(problem: *const LplcProblem, out: *mut *mut LplcReport) -> LplcStatus {
    guard(|| {
        let h = deref(problem, "problem")?;
        let out = out_ptr(out)?;
        *out = ptr::null_mut();
        let report = classify(&h.problem, &h.config)?;
        let potential = h.problem.q_text().to_string();
        *out = Box::into_raw(Box::new(LplcReport { report, potential }));
        Ok(())
    })
}

/// # Safety
/// `report` must come from [`lplc_classify`] and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn lplc_report_verdict(report: *const LplcReport, out: *mut LplcVerdict) -> LplcStatus {
    guard(|| {
        let r = deref(report, "report")?;
        *out_ptr(out)? = match r.report.verdict {
            Verdict::LimitPointI => LplcVerdict::LimitPointI,
            Verdict::AllSolutionsL2 => LplcVerdict::AllSolutionsL2,
            Verdict::LimitCircle => LplcVerdict::LimitCircle,
            Verdict::Inconclusive => LplcVerdict::Inconclusive,
        };
        Ok(())
    })
}

/// The report as JSON, identical to `lplc classify` output. Free the
/// string with [`lplc_string_free`].
///
/// # Safety
/// `report` must come from [`lplc_classify`] and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn lplc_report_json(report: *const LplcReport, out: *mut *mut c_char) -> LplcStatus {
    guard(|| {
        let r = deref(report, "report")?;
        let out = out_ptr(out)?;
        *out = ptr::null_mut();
        let mut text = serde_json::to_string_pretty(&ClassifyOutput::new(&r.potential, &r.report))
            .map_err(|e| Failure::new(LplcStatus::NumericalFailure, e.to_string()))?;
        text.push('\n');
        *out = CString::new(text).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// # Safety
/// `report` must be null or come from [`lplc_classify`], and is freed once.
#[no_mangle]
pub unsafe extern "C" fn lplc_report_free(report: *mut LplcReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn lplc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
