//! C ABI for the harmony solver. Instances and solutions are opaque handles;
//! data crosses the boundary as UTF-8 JSON strings in the same formats the
//! CLI uses. Every fallible call returns a `HarmonyStatus`; on failure a
//! thread-local message is readable via `harmony_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use harmony::cli::{parse_instance_str, parse_solution_str, solution_json_string};
use harmony::domain::Instance;
use harmony::engine::{self, EngineError, Solution, SolverConfig};
use harmony::rational::parse_rat;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let cstring = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("invalid error message").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(cstring));
}

/// Result codes for all fallible calls.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarmonyStatus {
    /// Success.
    Ok = 0,
    /// Null pointer, malformed UTF-8, or invalid parameter.
    InvalidArgument = 1,
    /// Instance or solution JSON failed to parse or validate.
    ParseError = 2,
    /// An oracle violated the solver's assumption (not compensable).
    AssumptionViolation = 3,
    /// The refinement budget ran out before a solution was extracted.
    MaxRoundsExceeded = 4,
    /// Verification ran but the certificate failed.
    VerificationFailed = 5,
    /// Unexpected internal failure.
    InternalError = 6,
}

/// Opaque parsed instance plus its solver configuration.
pub struct HarmonyInstance {
    instance: Instance,
    config: SolverConfig,
}

/// Opaque solution handle.
pub struct HarmonySolution {
    solution: Solution,
    method: &'static str,
}

fn cstr_arg<'a>(ptr: *const c_char) -> Result<&'a str, HarmonyStatus> {
    if ptr.is_null() {
        set_error("null string argument".into());
        return Err(HarmonyStatus::InvalidArgument);
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8".into());
        HarmonyStatus::InvalidArgument
    })
}

/// Parse an instance-file JSON string into a handle. On success `*out` owns
/// the handle; release it with `harmony_instance_free`.
///
/// # Safety
///
/// `json` must be a NUL-terminated string and `out` a valid pointer; both only need to stay valid for the duration of the call.
#[no_mangle]
pub unsafe extern "C" fn harmony_instance_parse(
    json: *const c_char,
    out: *mut *mut HarmonyInstance,
) -> HarmonyStatus {
    if out.is_null() {
        set_error("null output pointer".into());
        return HarmonyStatus::InvalidArgument;
    }
    let text = match cstr_arg(json) {
        Ok(t) => t,
        Err(status) => return status,
    };
    match parse_instance_str(text) {
        Ok((instance, config)) => {
            let handle = Box::new(HarmonyInstance { instance, config });
            unsafe { *out = Box::into_raw(handle) };
            HarmonyStatus::Ok
        }
        Err(message) => {
            set_error(message);
            HarmonyStatus::ParseError
        }
    }
}

/// Release an instance handle. Null is a no-op.
///
/// # Safety
///
/// `handle` must be null or a pointer previously returned by `harmony_instance_parse` that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn harmony_instance_free(handle: *mut HarmonyInstance) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Solve the instance. Uses the exact quasilinear solver when it applies and
/// `force_mesh` is false, the mesh engine otherwise. On success `*out` owns a
/// solution handle; release it with `harmony_solution_free`.
///
/// # Safety
///
/// `handle` must be a live pointer from `harmony_instance_parse` and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn harmony_solve(
    handle: *const HarmonyInstance,
    force_mesh: bool,
    out: *mut *mut HarmonySolution,
) -> HarmonyStatus {
    if handle.is_null() || out.is_null() {
        set_error("null pointer argument".into());
        return HarmonyStatus::InvalidArgument;
    }
    let h = unsafe { &*handle };
    match solve_impl(&h.instance, &h.config, force_mesh) {
        Ok((solution, method)) => {
            let boxed = Box::new(HarmonySolution { solution, method });
            unsafe { *out = Box::into_raw(boxed) };
            HarmonyStatus::Ok
        }
        Err(status) => status,
    }
}

fn solve_impl(
    instance: &Instance,
    config: &SolverConfig,
    force_mesh: bool,
) -> Result<(Solution, &'static str), HarmonyStatus> {
    use harmony::domain::Mode;
    use harmony::preferences::DemandOracle;
    use harmony::quasilinear::solve_quasilinear_exact;

    let all_quasilinear = instance
        .agents
        .iter()
        .all(|a| matches!(a.oracle, DemandOracle::Quasilinear { .. }));
    let exact_applies = all_quasilinear
        && instance.mode == Mode::Classic
        && instance.agent_count() == instance.room_count();
    if exact_applies && !force_mesh {
        let values: Vec<_> = instance
            .agents
            .iter()
            .map(|a| match &a.oracle {
                DemandOracle::Quasilinear { values } => values.clone(),
                _ => unreachable!(),
            })
            .collect();
        let (alloc, certificate) = solve_quasilinear_exact(&values, &instance.total_rent)
            .map_err(|e| {
                set_error(e.to_string());
                HarmonyStatus::InternalError
            })?;
        let solution = Solution {
            prices: alloc.prices.clone(),
            payload: engine::SolutionPayload::Allocation(alloc),
            certificates: vec![certificate],
            diagnostics: Default::default(),
        };
        return Ok((solution, "quasilinear-exact"));
    }
    engine::solve(instance, config)
        .map(|s| (s, "mesh-engine"))
        .map_err(|e| {
            let status = match &e {
                EngineError::AssumptionViolation { .. } | EngineError::NoFeasibleCell { .. } => {
                    HarmonyStatus::AssumptionViolation
                }
                EngineError::MaxRoundsExceeded { .. } => HarmonyStatus::MaxRoundsExceeded,
                EngineError::Oracle(_) => HarmonyStatus::InternalError,
            };
            set_error(e.to_string());
            status
        })
}

/// Serialize a solution to the solution-file JSON format. On success `*out`
/// owns a string; release it with `harmony_string_free`.
///
/// # Safety
///
/// All three pointers must be valid; the handles must be live.
#[no_mangle]
pub unsafe extern "C" fn harmony_solution_to_json(
    instance: *const HarmonyInstance,
    solution: *const HarmonySolution,
    out: *mut *mut c_char,
) -> HarmonyStatus {
    if instance.is_null() || solution.is_null() || out.is_null() {
        set_error("null pointer argument".into());
        return HarmonyStatus::InvalidArgument;
    }
    let i = unsafe { &*instance };
    let s = unsafe { &*solution };
    let json = solution_json_string(&i.instance, &s.solution, s.method);
    match CString::new(json) {
        Ok(cstring) => {
            unsafe { *out = cstring.into_raw() };
            HarmonyStatus::Ok
        }
        Err(_) => {
            set_error("solution JSON contains an interior NUL".into());
            HarmonyStatus::InternalError
        }
    }
}

/// Release a solution handle. Null is a no-op.
///
/// # Safety
///
/// `handle` must be null or a pointer previously returned by `harmony_solve` that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn harmony_solution_free(handle: *mut HarmonySolution) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Check a solution-file JSON string against the instance. `epsilon` is an
/// optional rational string ("1/1000", "0.001"); pass null to use the
/// instance's default tolerance. Returns `Ok` iff every certificate passes.
///
/// # Safety
///
/// `instance` must be a live handle; `solution_json` a NUL-terminated string; `epsilon` null or a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn harmony_verify(
    instance: *const HarmonyInstance,
    solution_json: *const c_char,
    epsilon: *const c_char,
) -> HarmonyStatus {
    if instance.is_null() {
        set_error("null instance".into());
        return HarmonyStatus::InvalidArgument;
    }
    let h = unsafe { &*instance };
    let text = match cstr_arg(solution_json) {
        Ok(t) => t,
        Err(status) => return status,
    };
    let solution = match parse_solution_str(&h.instance, text) {
        Ok(s) => s,
        Err(message) => {
            set_error(message);
            return HarmonyStatus::ParseError;
        }
    };
    let eps = if epsilon.is_null() {
        h.config.resolved_epsilon(&h.instance)
    } else {
        match cstr_arg(epsilon).and_then(|t| {
            parse_rat(t).map_err(|e| {
                set_error(format!("epsilon: {e}"));
                HarmonyStatus::InvalidArgument
            })
        }) {
            Ok(r) => r,
            Err(status) => return status,
        }
    };
    match engine::verify(&h.instance, &solution, &eps) {
        Ok(certs) if certs.iter().all(|c| c.envy_free) => HarmonyStatus::Ok,
        Ok(certs) => {
            let failures: Vec<String> = certs
                .iter()
                .flat_map(|c| c.failures.iter().cloned())
                .collect();
            set_error(failures.join("; "));
            HarmonyStatus::VerificationFailed
        }
        Err(e) => {
            set_error(e.to_string());
            HarmonyStatus::InternalError
        }
    }
}

/// Release a string returned by this library. Null is a no-op.
///
/// # Safety
///
/// `s` must be null or a string previously returned by this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn harmony_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// The message from the most recent failure on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread;
/// do not free it.
#[no_mangle]
pub extern "C" fn harmony_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|s| s.as_ptr())
            .unwrap_or(ptr::null())
    })
}
