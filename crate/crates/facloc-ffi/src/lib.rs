//! C ABI for the facloc library.
//!
//! Instances travel as opaque handles; every other payload is a UTF-8 JSON
//! string in exactly the formats the `facloc` CLI prints, so bindings in any
//! language parse one schema. All functions return a [`FaclocStatus`];
//! details of the last failure on the current thread are available from
//! [`facloc_last_error`]. Strings returned through out-parameters must be
//! released with [`facloc_string_free`], instances with
//! [`facloc_instance_free`].
//!
//! The generated header lives at `include/facloc.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use facloc::audit::{audit_positions, audit_preferences, empirical_ratio};
use facloc::generators::{gen_thm1, gen_thm2, gen_thm6_sequence, Thm2Variant};
use facloc::io::{
    audit_report_json, lottery_to_json, opt_report_json, parse_instance, ratio_report_json,
    render_instance, to_json_string, EvalReportJson, RationalJson, SolutionJson,
};
use facloc::mechanisms::{classify_general, classify_theta, theta_default, MechTheta};
use facloc::model::{parse_rational, Instance, Rational};
use facloc::solver::optimal_solution;
use facloc::sweep::MechanismChoice;

/// Result of every C API call.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaclocStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// An input string was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Instance or spec text failed to parse or validate.
    ParseError = 3,
    /// A numeric or enum parameter was out of range.
    InvalidParameter = 4,
    /// An audit refused to run (facility count too large for exhaustive
    /// enumeration).
    AuditRefused = 5,
    /// A panic was caught at the boundary; see facloc_last_error.
    Internal = 6,
}

/// Mechanism selector.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaclocMechanism {
    /// Randomized general-setting mechanism.
    General = 0,
    /// Deterministic known-positions mechanism with parameter theta.
    Theta = 1,
    /// Known-positions minisum mechanism.
    Minisum = 2,
    /// Exhaustive optimum used as a (non-truthful) mechanism.
    Opt = 3,
}

/// Variant selector of the thm2 family.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaclocThm2Variant {
    I = 0,
    J = 1,
}

/// Opaque instance handle.
pub struct FaclocInstance {
    inner: Instance,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let text = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("error").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn fail(status: FaclocStatus, message: impl Into<String>) -> FaclocStatus {
    set_error(message.into());
    status
}

/// Message of the last failing call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn facloc_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |s| s.as_ptr())
    })
}

/// ABI version of this header; bumped on any breaking change.
#[no_mangle]
pub extern "C" fn facloc_abi_version() -> u32 {
    1
}

fn guard(body: impl FnOnce() -> FaclocStatus) -> FaclocStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "internal panic".to_string());
            fail(FaclocStatus::Internal, message)
        }
    }
}

unsafe fn read_utf8<'a>(ptr: *const c_char) -> Result<&'a str, FaclocStatus> {
    if ptr.is_null() {
        return Err(fail(FaclocStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|e| fail(FaclocStatus::InvalidUtf8, e.to_string()))
}

unsafe fn write_string(out: *mut *mut c_char, text: String) -> FaclocStatus {
    let c = match CString::new(text) {
        Ok(c) => c,
        Err(e) => return fail(FaclocStatus::Internal, e.to_string()),
    };
    *out = c.into_raw();
    FaclocStatus::Ok
}

unsafe fn borrow_instance<'a>(
    handle: *const FaclocInstance,
) -> Result<&'a Instance, FaclocStatus> {
    if handle.is_null() {
        return Err(fail(FaclocStatus::NullArgument, "null instance handle"));
    }
    Ok(&(*handle).inner)
}

fn theta_from(text: Option<&str>) -> Result<Rational, FaclocStatus> {
    let theta = match text {
        Some(t) => {
            parse_rational(t).map_err(|e| fail(FaclocStatus::InvalidParameter, e.to_string()))?
        }
        None => theta_default(),
    };
    MechTheta::new(theta.clone())
        .map_err(|e| fail(FaclocStatus::InvalidParameter, e.to_string()))?;
    Ok(theta)
}

fn choice_of(mech: FaclocMechanism) -> MechanismChoice {
    match mech {
        FaclocMechanism::General => MechanismChoice::General,
        FaclocMechanism::Theta => MechanismChoice::Theta,
        FaclocMechanism::Minisum => MechanismChoice::Minisum,
        FaclocMechanism::Opt => MechanismChoice::Opt,
    }
}

fn export_instance(out: *mut *mut FaclocInstance, inst: Instance) -> FaclocStatus {
    if out.is_null() {
        return fail(FaclocStatus::NullArgument, "null output handle");
    }
    unsafe {
        *out = Box::into_raw(Box::new(FaclocInstance { inner: inst }));
    }
    clear_error();
    FaclocStatus::Ok
}

/// Parses an instance document (the CLI's JSON format, exact rationals).
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
/// On success `*out` owns the instance and must be released with
/// [`facloc_instance_free`].
#[no_mangle]
pub unsafe extern "C" fn facloc_instance_parse(
    json: *const c_char,
    out: *mut *mut FaclocInstance,
) -> FaclocStatus {
    guard(|| {
        let text = match read_utf8(json) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match parse_instance(text) {
            Ok(inst) => export_instance(out, inst),
            Err(e) => fail(FaclocStatus::ParseError, e.to_string()),
        }
    })
}

/// Serializes the instance back to its canonical JSON document.
///
/// # Safety
/// `handle` must come from this library; `out` must be a valid pointer. The
/// returned string must be released with [`facloc_string_free`].
#[no_mangle]
pub unsafe extern "C" fn facloc_instance_to_json(
    handle: *const FaclocInstance,
    out: *mut *mut c_char,
) -> FaclocStatus {
    guard(|| {
        let inst = match borrow_instance(handle) {
            Ok(i) => i,
            Err(status) => return status,
        };
        if out.is_null() {
            return fail(FaclocStatus::NullArgument, "null output pointer");
        }
        clear_error();
        write_string(out, render_instance(inst))
    })
}

/// Releases an instance handle. Null is a no-op.
///
/// # Safety
/// `handle` must be null or a pointer previously returned by this library,
/// released at most once.
#[no_mangle]
pub unsafe extern "C" fn facloc_instance_free(handle: *mut FaclocInstance) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Releases a string returned by this library. Null is a no-op.
///
/// # Safety
/// `text` must be null or a string pointer previously returned by this
/// library, released at most once.
#[no_mangle]
pub unsafe extern "C" fn facloc_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}

/// Runs a mechanism and writes the evaluation report (lottery or point-mass
/// solution plus exact expected welfare) as JSON.
///
/// `theta` may be null for the default split parameter `43/100`; it is
/// ignored by mechanisms other than `Theta`.
///
/// # Safety
/// Pointer arguments as in [`facloc_instance_to_json`].
#[no_mangle]
pub unsafe extern "C" fn facloc_eval(
    handle: *const FaclocInstance,
    mech: FaclocMechanism,
    theta: *const c_char,
    out: *mut *mut c_char,
) -> FaclocStatus {
    guard(|| {
        let inst = match borrow_instance(handle) {
            Ok(i) => i,
            Err(status) => return status,
        };
        if out.is_null() {
            return fail(FaclocStatus::NullArgument, "null output pointer");
        }
        let theta_text = if theta.is_null() {
            None
        } else {
            match read_utf8(theta) {
                Ok(t) => Some(t),
                Err(status) => return status,
            }
        };
        let theta = match theta_from(theta_text) {
            Ok(t) => t,
            Err(status) => return status,
        };
        let choice = choice_of(mech);
        let mechanism = choice.build(&theta);
        let lottery = mechanism.lottery(inst);
        let case = match choice {
            MechanismChoice::Theta => classify_theta(inst, &theta)
                .expect("theta validated")
                .tag()
                .to_string(),
            _ => classify_general(inst).tag().to_string(),
        };
        let atoms = lottery.atoms();
        let report = EvalReportJson {
            instance: inst.digest(),
            mechanism: mechanism.name(),
            case,
            solution: if atoms.len() == 1 {
                Some(SolutionJson::from_solution(&atoms[0].0))
            } else {
                None
            },
            lottery: lottery_to_json(&lottery),
            expected_welfare: RationalJson::from_rational(
                &inst.expected_social_welfare(&lottery),
            ),
        };
        clear_error();
        write_string(out, to_json_string(&report))
    })
}

/// Writes the exhaustive-optimum report (best solution and the full welfare
/// table) as JSON.
///
/// # Safety
/// Pointer arguments as in [`facloc_instance_to_json`].
#[no_mangle]
pub unsafe extern "C" fn facloc_opt(
    handle: *const FaclocInstance,
    out: *mut *mut c_char,
) -> FaclocStatus {
    guard(|| {
        let inst = match borrow_instance(handle) {
            Ok(i) => i,
            Err(status) => return status,
        };
        if out.is_null() {
            return fail(FaclocStatus::NullArgument, "null output pointer");
        }
        let report = opt_report_json(inst, &optimal_solution(inst));
        clear_error();
        write_string(out, to_json_string(&report))
    })
}

unsafe fn run_audit(
    handle: *const FaclocInstance,
    mech: FaclocMechanism,
    theta: *const c_char,
    out: *mut *mut c_char,
    out_profitable: *mut u64,
    positions_denominator: Option<u64>,
) -> FaclocStatus {
    let inst = match borrow_instance(handle) {
        Ok(i) => i,
        Err(status) => return status,
    };
    if out.is_null() {
        return fail(FaclocStatus::NullArgument, "null output pointer");
    }
    let theta_text = if theta.is_null() {
        None
    } else {
        match read_utf8(theta) {
            Ok(t) => Some(t),
            Err(status) => return status,
        }
    };
    let theta = match theta_from(theta_text) {
        Ok(t) => t,
        Err(status) => return status,
    };
    let mechanism = choice_of(mech).build(&theta);
    let report = match positions_denominator {
        Some(denom) => audit_positions(mechanism.as_ref(), inst, denom),
        None => match audit_preferences(mechanism.as_ref(), inst) {
            Ok(r) => r,
            Err(e) => return fail(FaclocStatus::AuditRefused, e.to_string()),
        },
    };
    if !out_profitable.is_null() {
        *out_profitable = report.deviations.len() as u64;
    }
    clear_error();
    write_string(out, to_json_string(&audit_report_json(&report)))
}

/// Exhaustively audits unilateral preference misreports and writes the audit
/// report as JSON. `out_profitable` (nullable) receives the number of
/// profitable deviations found.
///
/// # Safety
/// Pointer arguments as in [`facloc_instance_to_json`].
#[no_mangle]
pub unsafe extern "C" fn facloc_audit_preferences(
    handle: *const FaclocInstance,
    mech: FaclocMechanism,
    theta: *const c_char,
    out: *mut *mut c_char,
    out_profitable: *mut u64,
) -> FaclocStatus {
    guard(|| run_audit(handle, mech, theta, out, out_profitable, None))
}

/// Audits position misreports over the structured deviation set with the
/// given grid denominator; otherwise like [`facloc_audit_preferences`].
///
/// # Safety
/// Pointer arguments as in [`facloc_instance_to_json`].
#[no_mangle]
pub unsafe extern "C" fn facloc_audit_positions(
    handle: *const FaclocInstance,
    mech: FaclocMechanism,
    theta: *const c_char,
    denominator: u64,
    out: *mut *mut c_char,
    out_profitable: *mut u64,
) -> FaclocStatus {
    guard(|| run_audit(handle, mech, theta, out, out_profitable, Some(denominator)))
}

/// Writes the exact optimal-vs-mechanism welfare ratio report as JSON.
///
/// # Safety
/// Pointer arguments as in [`facloc_instance_to_json`].
#[no_mangle]
pub unsafe extern "C" fn facloc_empirical_ratio(
    handle: *const FaclocInstance,
    mech: FaclocMechanism,
    theta: *const c_char,
    out: *mut *mut c_char,
) -> FaclocStatus {
    guard(|| {
        let inst = match borrow_instance(handle) {
            Ok(i) => i,
            Err(status) => return status,
        };
        if out.is_null() {
            return fail(FaclocStatus::NullArgument, "null output pointer");
        }
        let theta_text = if theta.is_null() {
            None
        } else {
            match read_utf8(theta) {
                Ok(t) => Some(t),
                Err(status) => return status,
            }
        };
        let theta = match theta_from(theta_text) {
            Ok(t) => t,
            Err(status) => return status,
        };
        let mechanism = choice_of(mech).build(&theta);
        let report = empirical_ratio(mechanism.as_ref(), inst);
        clear_error();
        write_string(out, to_json_string(&ratio_report_json(&report)))
    })
}

unsafe fn gen_family(
    out: *mut *mut FaclocInstance,
    eps: *const c_char,
    build: impl FnOnce(&Rational) -> Result<Instance, facloc::generators::GenError>,
) -> FaclocStatus {
    let eps_text = match read_utf8(eps) {
        Ok(t) => t,
        Err(status) => return status,
    };
    let eps = match parse_rational(eps_text) {
        Ok(e) => e,
        Err(e) => return fail(FaclocStatus::InvalidParameter, e.to_string()),
    };
    match build(&eps) {
        Ok(inst) => export_instance(out, inst),
        Err(e) => fail(FaclocStatus::InvalidParameter, e.to_string()),
    }
}

/// Builds the thm1 family instance: two agents at `eps` with disjoint single
/// approvals, one candidate at 1; `step = 1` moves the second agent to 1.
///
/// # Safety
/// `eps` must be a valid NUL-terminated string (an exact rational such as
/// "1/100") and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn facloc_gen_thm1(
    k: u32,
    eps: *const c_char,
    step: u32,
    out: *mut *mut FaclocInstance,
) -> FaclocStatus {
    guard(|| gen_family(out, eps, |e| gen_thm1(k as usize, e, step as usize)))
}

/// Builds the thm2 family instance: `k` agents at `eps`, agent `i` approving
/// exactly facility `i`, one candidate at 1; variant J moves agent 1 to 1.
///
/// # Safety
/// As in [`facloc_gen_thm1`].
#[no_mangle]
pub unsafe extern "C" fn facloc_gen_thm2(
    k: u32,
    eps: *const c_char,
    variant: FaclocThm2Variant,
    out: *mut *mut FaclocInstance,
) -> FaclocStatus {
    guard(|| {
        let variant = match variant {
            FaclocThm2Variant::I => Thm2Variant::I,
            FaclocThm2Variant::J => Thm2Variant::J,
        };
        gen_family(out, eps, |e| gen_thm2(k as usize, e, variant))
    })
}

/// Builds the thm6 family instance (candidates at 0 and 1, six agents);
/// `step` of the two agents at `1/2 - eps` drop facility 2 from their
/// approvals.
///
/// # Safety
/// As in [`facloc_gen_thm1`].
#[no_mangle]
pub unsafe extern "C" fn facloc_gen_thm6(
    k: u32,
    eps: *const c_char,
    step: u32,
    out: *mut *mut FaclocInstance,
) -> FaclocStatus {
    guard(|| gen_family(out, eps, |e| gen_thm6_sequence(k as usize, e, step as usize)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    fn parse(text: &str) -> *mut FaclocInstance {
        let c = CString::new(text).unwrap();
        let mut handle: *mut FaclocInstance = ptr::null_mut();
        let status = unsafe { facloc_instance_parse(c.as_ptr(), &mut handle) };
        assert_eq!(status, FaclocStatus::Ok);
        assert!(!handle.is_null());
        handle
    }

    fn take_string(ptr: *mut c_char) -> String {
        assert!(!ptr.is_null());
        let text = unsafe { CStr::from_ptr(ptr) }.to_str().unwrap().to_string();
        unsafe { facloc_string_free(ptr) };
        text
    }

    const MINIMAL: &str =
        r#"{"version":1,"k":2,"candidates":["1/5","9/10"],"agents":[{"x":"0","approvals":[1,0]}]}"#;

    #[test]
    fn parse_round_trip() {
        let handle = parse(MINIMAL);
        let mut out: *mut c_char = ptr::null_mut();
        assert_eq!(
            unsafe { facloc_instance_to_json(handle, &mut out) },
            FaclocStatus::Ok
        );
        let text = take_string(out);
        assert!(text.contains("\"1/5\""));
        unsafe { facloc_instance_free(handle) };
    }

    #[test]
    fn parse_error_sets_message() {
        let c = CString::new("{\"version\":1").unwrap();
        let mut handle: *mut FaclocInstance = ptr::null_mut();
        let status = unsafe { facloc_instance_parse(c.as_ptr(), &mut handle) };
        assert_eq!(status, FaclocStatus::ParseError);
        assert!(handle.is_null());
        let err = facloc_last_error();
        assert!(!err.is_null());
        let message = unsafe { CStr::from_ptr(err) }.to_str().unwrap();
        assert!(message.contains("line"));
    }

    #[test]
    fn null_arguments_are_rejected() {
        let mut out: *mut c_char = ptr::null_mut();
        assert_eq!(
            unsafe { facloc_opt(ptr::null(), &mut out) },
            FaclocStatus::NullArgument
        );
        assert_eq!(
            unsafe { facloc_instance_parse(ptr::null(), ptr::null_mut()) },
            FaclocStatus::NullArgument
        );
    }

    #[test]
    fn eval_matches_library() {
        // Straddle case probabilities 4/7 and 3/7 surface in the JSON.
        let handle = parse(MINIMAL);
        let mut out: *mut c_char = ptr::null_mut();
        let status = unsafe {
            facloc_eval(handle, FaclocMechanism::General, ptr::null(), &mut out)
        };
        assert_eq!(status, FaclocStatus::Ok);
        let text = take_string(out);
        assert!(text.contains("\"4/7\""), "{text}");
        assert!(text.contains("\"3/7\""));
        assert!(text.contains("\"case\": \"straddle\""));
        unsafe { facloc_instance_free(handle) };
    }

    #[test]
    fn eval_rejects_bad_theta() {
        let handle = parse(MINIMAL);
        let mut out: *mut c_char = ptr::null_mut();
        let theta = CString::new("3/4").unwrap();
        let status = unsafe {
            facloc_eval(handle, FaclocMechanism::Theta, theta.as_ptr(), &mut out)
        };
        assert_eq!(status, FaclocStatus::InvalidParameter);
        unsafe { facloc_instance_free(handle) };
    }

    #[test]
    fn generated_family_audits_cleanly() {
        let eps = CString::new("1/100").unwrap();
        let mut handle: *mut FaclocInstance = ptr::null_mut();
        assert_eq!(
            unsafe { facloc_gen_thm6(2, eps.as_ptr(), 0, &mut handle) },
            FaclocStatus::Ok
        );
        let mut out: *mut c_char = ptr::null_mut();
        let mut profitable = u64::MAX;
        let status = unsafe {
            facloc_audit_preferences(
                handle,
                FaclocMechanism::Minisum,
                ptr::null(),
                &mut out,
                &mut profitable,
            )
        };
        assert_eq!(status, FaclocStatus::Ok);
        assert_eq!(profitable, 0);
        let text = take_string(out);
        assert!(text.contains("\"deviations_checked\": 18"));
        unsafe { facloc_instance_free(handle) };
    }

    #[test]
    fn opt_as_mechanism_flagged_through_abi() {
        let eps = CString::new("1/100").unwrap();
        let mut handle: *mut FaclocInstance = ptr::null_mut();
        assert_eq!(
            unsafe { facloc_gen_thm6(2, eps.as_ptr(), 0, &mut handle) },
            FaclocStatus::Ok
        );
        let mut out: *mut c_char = ptr::null_mut();
        let mut profitable = 0u64;
        let status = unsafe {
            facloc_audit_preferences(
                handle,
                FaclocMechanism::Opt,
                ptr::null(),
                &mut out,
                &mut profitable,
            )
        };
        assert_eq!(status, FaclocStatus::Ok);
        assert!(profitable >= 1);
        facloc_string_free_checked(out);
        unsafe { facloc_instance_free(handle) };
    }

    fn facloc_string_free_checked(ptr: *mut c_char) {
        assert!(!ptr.is_null());
        unsafe { facloc_string_free(ptr) };
    }

    #[test]
    fn ratio_report_through_abi() {
        let eps = CString::new("1/1000").unwrap();
        let mut handle: *mut FaclocInstance = ptr::null_mut();
        assert_eq!(
            unsafe { facloc_gen_thm2(3, eps.as_ptr(), FaclocThm2Variant::J, &mut handle) },
            FaclocStatus::Ok
        );
        let mut out: *mut c_char = ptr::null_mut();
        let status = unsafe {
            facloc_empirical_ratio(handle, FaclocMechanism::General, ptr::null(), &mut out)
        };
        assert_eq!(status, FaclocStatus::Ok);
        let text = take_string(out);
        // 1500/501 in lowest terms.
        assert!(text.contains("\"500/167\""), "{text}");
        unsafe { facloc_instance_free(handle) };
    }

    #[test]
    fn position_audit_through_abi() {
        let handle = parse(MINIMAL);
        let mut out: *mut c_char = ptr::null_mut();
        let mut profitable = u64::MAX;
        let status = unsafe {
            facloc_audit_positions(
                handle,
                FaclocMechanism::General,
                ptr::null(),
                10,
                &mut out,
                &mut profitable,
            )
        };
        assert_eq!(status, FaclocStatus::Ok);
        assert_eq!(profitable, 0);
        let text = take_string(out);
        assert!(text.contains("\"lottery_invariant\": true"));
        unsafe { facloc_instance_free(handle) };
    }

    #[test]
    fn abi_version_and_header() {
        assert_eq!(facloc_abi_version(), 1);
        let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("include")
            .join("facloc.h");
        let text = std::fs::read_to_string(header).expect("generated header");
        for symbol in [
            "facloc_instance_parse",
            "facloc_eval",
            "facloc_audit_preferences",
            "facloc_empirical_ratio",
            "facloc_gen_thm6",
            "typedef struct FaclocInstance FaclocInstance",
        ] {
            assert!(text.contains(symbol), "header missing {symbol}");
        }
    }
}
