//! C interface to `codedcache`.
//!
//! Every fallible function returns a [`CcStatus`]; on failure the message is
//! available from [`cc_last_error`] on the same thread. Strings handed out by
//! the library must be released with [`cc_string_free`], handles with their
//! `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use codedcache::combinatorics::{subpacketization, RVector};
use codedcache::config::{Config, Placement};
use codedcache::delivery::{
    decodable, AutoScheduler, DeliverySchedule, ExhaustiveScheduler, GreedyScheduler,
    RequestVector, Scheduler, ToyScheduler,
};
use codedcache::exact::{exact_to_f64, Exact, Frac};
use codedcache::rates::{
    expected_rate_exact, rate_alpha_closed, rate_beta_closed, DEFAULT_ENUMERATION_LIMIT,
};
use codedcache::Error;

/// Fixed message table of the three-user example.
pub const CC_SCHEDULER_TOY: u32 = 0;
/// Clique greedy with uncoded fallback.
pub const CC_SCHEDULER_GREEDY: u32 = 1;
/// Minimum-size search; fails with `CC_STATUS_INFEASIBLE` past its budget.
pub const CC_SCHEDULER_EXHAUSTIVE: u32 = 2;
/// Exhaustive search, greedy when the budget runs out.
pub const CC_SCHEDULER_AUTO: u32 = 3;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Overflow = 3,
    Limit = 4,
    Unsupported = 5,
    Infeasible = 6,
    Panic = 7,
}

/// Cache contents of all users, built from a JSON config.
pub struct CcPlacement {
    placement: Placement,
    popularity: Vec<Exact>,
    files: u32,
}

/// Broadcast answering one demand.
pub struct CcSchedule {
    schedule: DeliverySchedule,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Validation(_) => CcStatus::InvalidArgument,
            Error::Overflow(_) => CcStatus::Overflow,
            Error::Limit(_) => CcStatus::Limit,
            Error::Unsupported(_) => CcStatus::Unsupported,
            Error::Infeasible(_) => CcStatus::Infeasible,
        };
        Failure(status, e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn guard(body: impl FnOnce() -> FfiResult<()>) -> CcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CcStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CcStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

fn c_string(s: String) -> FfiResult<*mut c_char> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(CcStatus::InvalidArgument, "string contains NUL".into()))
}

fn scheduler(id: u32) -> FfiResult<Box<dyn Scheduler>> {
    Ok(match id {
        CC_SCHEDULER_TOY => Box::new(ToyScheduler),
        CC_SCHEDULER_GREEDY => Box::new(GreedyScheduler),
        CC_SCHEDULER_EXHAUSTIVE => Box::new(ExhaustiveScheduler::default()),
        CC_SCHEDULER_AUTO => Box::new(AutoScheduler::default()),
        _ => {
            return Err(Failure(
                CcStatus::InvalidArgument,
                format!("unknown scheduler {id}"),
            ))
        }
    })
}

fn write_frac(x: Frac, num: *mut i64, den: *mut i64) -> FfiResult<()> {
    unsafe {
        *out_arg(num, "num")? = *x.numer();
        *out_arg(den, "den")? = *x.denom();
    }
    Ok(())
}

fn beta_cache(p: &CcPlacement) -> FfiResult<&codedcache::placement::CacheState> {
    match &p.placement {
        Placement::Beta(c) => Ok(c),
        Placement::Alpha(_) => Err(Failure(
            CcStatus::Unsupported,
            "delivery is per part for alpha placements".into(),
        )),
    }
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library.
#[no_mangle]
pub extern "C" fn cc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Number of subfiles per file for `users` users and replication vector `r`.
///
/// # Safety
/// `r` must point to `groups` readable values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cc_subpacketization(
    users: u32,
    r: *const u32,
    groups: usize,
    out: *mut u64,
) -> CcStatus {
    guard(|| {
        let values = if groups == 0 {
            Vec::new()
        } else if r.is_null() {
            return Err(null("r"));
        } else {
            std::slice::from_raw_parts(r, groups).to_vec()
        };
        let r = RVector::new(values)?;
        *out_arg(out, "out")? = subpacketization(users, &r)?;
        Ok(())
    })
}

/// Parses a JSON config and places the caches.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cc_placement_from_json(
    json: *const c_char,
    out: *mut *mut CcPlacement,
) -> CcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let cfg = Config::from_json(str_arg(json, "json")?)?;
        let layout = cfg.layout()?;
        let placement = CcPlacement {
            placement: cfg.place()?,
            popularity: layout.popularity().to_vec(),
            files: layout.files(),
        };
        *out = Box::into_raw(Box::new(placement));
        Ok(())
    })
}

/// # Safety
/// `p` must come from [`cc_placement_from_json`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn cc_placement_free(p: *mut CcPlacement) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Cache size of `user` (1-based) in files, as a reduced fraction.
///
/// # Safety
/// `p` must be a live handle; `num` and `den` writable.
#[no_mangle]
pub unsafe extern "C" fn cc_placement_memory(
    p: *const CcPlacement,
    user: u32,
    num: *mut i64,
    den: *mut i64,
) -> CcStatus {
    guard(|| {
        let p = handle(p, "placement")?;
        let m = match &p.placement {
            Placement::Beta(c) => c.user_memory(user)?,
            Placement::Alpha(s) => s.user_memory(user)?,
        };
        write_frac(m, num, den)
    })
}

/// Cache contents as JSON, the same document `codedcache place` prints.
/// Free the result with [`cc_string_free`].
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cc_placement_cache_json(
    p: *const CcPlacement,
    out: *mut *mut c_char,
) -> CcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let export = handle(p, "placement")?.placement.export();
        let mut text = serde_json::to_string_pretty(&export)
            .map_err(|e| Failure(CcStatus::InvalidArgument, e.to_string()))?;
        text.push('\n');
        *out = c_string(text)?;
        Ok(())
    })
}

/// Schedules a demand such as `"A,A,B"`. Only nonuniform (beta) placements
/// have a single delivery; alpha placements return `CC_STATUS_UNSUPPORTED`.
///
/// # Safety
/// `p` must be a live handle, `demand` NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cc_deliver(
    p: *const CcPlacement,
    demand: *const c_char,
    scheduler_id: u32,
    out: *mut *mut CcSchedule,
) -> CcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let p = handle(p, "placement")?;
        let cache = beta_cache(p)?;
        let demand = RequestVector::parse(str_arg(demand, "demand")?)?;
        demand.check(cache.users(), p.files)?;
        let schedule = scheduler(scheduler_id)?.schedule(cache, &demand)?;
        *out = Box::into_raw(Box::new(CcSchedule { schedule }));
        Ok(())
    })
}

/// # Safety
/// `s` must come from [`cc_deliver`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn cc_schedule_free(s: *mut CcSchedule) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Broadcast size in files, `messages / S`, as a reduced fraction.
///
/// # Safety
/// `s` must be a live handle; `num` and `den` writable.
#[no_mangle]
pub unsafe extern "C" fn cc_schedule_rate(
    s: *const CcSchedule,
    num: *mut i64,
    den: *mut i64,
) -> CcStatus {
    guard(|| write_frac(handle(s, "schedule")?.schedule.rate(), num, den))
}

/// # Safety
/// `s` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cc_schedule_message_count(
    s: *const CcSchedule,
    out: *mut usize,
) -> CcStatus {
    guard(|| {
        *out_arg(out, "out")? = handle(s, "schedule")?.schedule.messages.len();
        Ok(())
    })
}

/// One message per line, e.g. `A_{23,2} + B_{12,1}`. Free with
/// [`cc_string_free`].
///
/// # Safety
/// `s` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cc_schedule_text(s: *const CcSchedule, out: *mut *mut c_char) -> CcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        *out = c_string(handle(s, "schedule")?.schedule.text())?;
        Ok(())
    })
}

/// Checks over GF(2) that every user decodes its file from its cache and
/// the schedule.
///
/// # Safety
/// Both handles must be live, the schedule built from `p`; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cc_verify(
    p: *const CcPlacement,
    s: *const CcSchedule,
    out: *mut bool,
) -> CcStatus {
    guard(|| {
        let cache = beta_cache(handle(p, "placement")?)?;
        let schedule = &handle(s, "schedule")?.schedule;
        *out_arg(out, "out")? = decodable(cache, schedule, &schedule.demand)?.decodable;
        Ok(())
    })
}

/// Expected rate under the config's popularity, summed exactly over all
/// demands. `exact` may be null; otherwise it receives the value as `"a/b"`,
/// to be freed with [`cc_string_free`].
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cc_expected_rate(
    p: *const CcPlacement,
    scheduler_id: u32,
    out: *mut f64,
    exact: *mut *mut c_char,
) -> CcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if let Some(e) = exact.as_mut() {
            *e = ptr::null_mut();
        }
        let p = handle(p, "placement")?;
        let rate = expected_rate_exact(
            p.placement.placed(),
            scheduler(scheduler_id)?.as_ref(),
            &p.popularity,
            DEFAULT_ENUMERATION_LIMIT,
        )?;
        *out = exact_to_f64(&rate);
        if let Some(e) = exact.as_mut() {
            *e = c_string(rate.to_string())?;
        }
        Ok(())
    })
}

/// Best nonuniform-strategy rate of the three-user, two-file example at
/// cache size 1, for `p` in `[1/2, 1]`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cc_rate_beta_closed(p: f64, out: *mut f64) -> CcStatus {
    guard(|| {
        *out_arg(out, "out")? = rate_beta_closed(p)?;
        Ok(())
    })
}

/// Grouping-baseline counterpart of [`cc_rate_beta_closed`].
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cc_rate_alpha_closed(p: f64, out: *mut f64) -> CcStatus {
    guard(|| {
        *out_arg(out, "out")? = rate_alpha_closed(p)?;
        Ok(())
    })
}
