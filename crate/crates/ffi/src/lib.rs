//! C ABI over the `bspe` crate.
//!
//! Profiles and outcomes are opaque heap handles released with their
//! `*_free` function. Every fallible call returns a [`BspeStatus`]; on
//! failure [`bspe_last_error_message`] describes the error for the calling
//! thread. Money crosses the boundary as `uint64_t`, agent ids as
//! `uint32_t`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, UnwindSafe};
use std::ptr;

use bspe::analysis::{factors, minimize_ratio, ruin_closed_form};
use bspe::{AgentId, Environment, Error, Money, Outcome, RandomSource, SamplingBias, ValuationProfile};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BspeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ValueTooLarge = 3,
    DuplicateAgent = 4,
    ReservedAgentId = 5,
    InvalidBias = 6,
    ZeroUnits = 7,
    IndexOutOfRange = 8,
    Panic = 9,
}

/// Opaque bid profile.
pub struct BspeProfile(ValuationProfile);

/// Opaque allocation and payments.
pub struct BspeOutcome(Outcome);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BspeEfo {
    pub winner_count: usize,
    pub uniform_price: u64,
    pub revenue: u64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BspeFactors {
    pub p: f64,
    pub r1: f64,
    pub r2: f64,
    pub ratio: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message).unwrap_or_else(|_| c"error message contained NUL".to_owned());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn fail(status: BspeStatus, message: impl Into<String>) -> BspeStatus {
    set_last_error(message.into());
    status
}

fn status_of(error: &Error) -> BspeStatus {
    match error {
        Error::ValueTooLarge(_) => BspeStatus::ValueTooLarge,
        Error::DuplicateAgent(_) => BspeStatus::DuplicateAgent,
        Error::ReservedAgentId(_) => BspeStatus::ReservedAgentId,
        Error::InvalidBias(_) => BspeStatus::InvalidBias,
        Error::ZeroUnits => BspeStatus::ZeroUnits,
        _ => BspeStatus::InvalidArgument,
    }
}

impl From<Error> for BspeStatus {
    fn from(error: Error) -> Self {
        fail(status_of(&error), error.to_string())
    }
}

/// Runs `body`, turning a panic into [`BspeStatus::Panic`].
fn guarded(body: impl FnOnce() -> Result<(), BspeStatus> + UnwindSafe) -> BspeStatus {
    match catch_unwind(body) {
        Ok(Ok(())) => BspeStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(BspeStatus::Panic, "internal panic"),
    }
}

unsafe fn deref<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, BspeStatus> {
    unsafe { ptr.as_ref() }.ok_or_else(|| fail(BspeStatus::NullPointer, format!("{what} is NULL")))
}

unsafe fn slice<'a, T>(data: *const T, len: usize, what: &str) -> Result<&'a [T], BspeStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(fail(BspeStatus::NullPointer, format!("{what} is NULL")));
    }
    Ok(unsafe { std::slice::from_raw_parts(data, len) })
}

fn out_ptr<T>(out: *mut T, what: &str) -> Result<*mut T, BspeStatus> {
    if out.is_null() {
        Err(fail(BspeStatus::NullPointer, format!("{what} is NULL")))
    } else {
        Ok(out)
    }
}

fn environment(units: usize) -> Result<Environment, BspeStatus> {
    Ok(Environment::new(units)?)
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bspe_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bspe_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a profile from `len` values. `ids` may be NULL (agents are then
/// numbered 1..=len); otherwise it must hold `len` distinct ids below 2^31.
///
/// # Safety
/// `values` (and `ids` if non-NULL) must point to `len` readable elements;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bspe_profile_new(
    values: *const u64,
    len: usize,
    ids: *const u32,
    out: *mut *mut BspeProfile,
) -> BspeStatus {
    guarded(|| {
        let out = out_ptr(out, "out")?;
        let values: Vec<Money> = unsafe { slice(values, len, "values")? }.iter().map(|&v| Money::new(v)).collect();
        let ids = if ids.is_null() {
            None
        } else {
            let raw = unsafe { slice(ids, len, "ids")? };
            Some(raw.iter().map(|&id| AgentId::new(id)).collect::<Result<Vec<_>, _>>()?)
        };
        let profile = ValuationProfile::new(&values, ids.as_deref())?;
        unsafe { *out = Box::into_raw(Box::new(BspeProfile(profile))) };
        Ok(())
    })
}

/// # Safety
/// `profile` must be NULL or a handle from [`bspe_profile_new`] not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn bspe_profile_free(profile: *mut BspeProfile) {
    if !profile.is_null() {
        drop(unsafe { Box::from_raw(profile) });
    }
}

/// Number of bidders, 0 for NULL.
///
/// # Safety
/// `profile` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bspe_profile_len(profile: *const BspeProfile) -> usize {
    unsafe { profile.as_ref() }.map_or(0, |p| p.0.len())
}

/// Envy-free optimal fixed-price revenue with `units` units.
///
/// # Safety
/// `profile` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bspe_efo(profile: *const BspeProfile, units: usize, out: *mut BspeEfo) -> BspeStatus {
    guarded(|| {
        let profile = unsafe { deref(profile, "profile")? };
        let out = out_ptr(out, "out")?;
        let solution = bspe::efo(&profile.0, &environment(units)?);
        unsafe {
            *out = BspeEfo {
                winner_count: solution.winner_count,
                uniform_price: solution.uniform_price.amount(),
                revenue: solution.revenue.amount(),
            }
        };
        Ok(())
    })
}

/// One run of the mechanism with bias `p`, drawing its coins from stream
/// `stream` of the source seeded with `seed`.
///
/// # Safety
/// `profile` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bspe_run(
    profile: *const BspeProfile,
    units: usize,
    p: f64,
    seed: u64,
    stream: u64,
    out: *mut *mut BspeOutcome,
) -> BspeStatus {
    guarded(|| {
        let profile = unsafe { deref(profile, "profile")? };
        let out = out_ptr(out, "out")?;
        let env = environment(units)?;
        let bias = SamplingBias::new(p)?;
        let mut rng = RandomSource::new(seed).stream(stream);
        let outcome = bspe::bspe_run(&profile.0, &env, bias, &mut rng);
        unsafe { *out = Box::into_raw(Box::new(BspeOutcome(outcome))) };
        Ok(())
    })
}

/// Profit extractor targeting `target`, run on `bids`.
///
/// # Safety
/// Both profiles must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bspe_profit_extract(
    target: *const BspeProfile,
    bids: *const BspeProfile,
    units: usize,
    out: *mut *mut BspeOutcome,
) -> BspeStatus {
    guarded(|| {
        let target = unsafe { deref(target, "target")? };
        let bids = unsafe { deref(bids, "bids")? };
        let out = out_ptr(out, "out")?;
        let outcome = bspe::profit_extract(&target.0, &bids.0, &environment(units)?);
        unsafe { *out = Box::into_raw(Box::new(BspeOutcome(outcome))) };
        Ok(())
    })
}

/// Single-unit second-price auction.
///
/// # Safety
/// `profile` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bspe_vickrey_1unit(profile: *const BspeProfile, out: *mut *mut BspeOutcome) -> BspeStatus {
    guarded(|| {
        let profile = unsafe { deref(profile, "profile")? };
        let out = out_ptr(out, "out")?;
        let outcome = bspe::vickrey_1unit(&profile.0);
        unsafe { *out = Box::into_raw(Box::new(BspeOutcome(outcome))) };
        Ok(())
    })
}

/// # Safety
/// `outcome` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bspe_outcome_free(outcome: *mut BspeOutcome) {
    if !outcome.is_null() {
        drop(unsafe { Box::from_raw(outcome) });
    }
}

/// Total payments, 0 for NULL.
///
/// # Safety
/// `outcome` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bspe_outcome_revenue(outcome: *const BspeOutcome) -> u64 {
    unsafe { outcome.as_ref() }.map_or(0, |o| o.0.revenue().amount())
}

/// Number of served agents, 0 for NULL.
///
/// # Safety
/// `outcome` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bspe_outcome_served_count(outcome: *const BspeOutcome) -> usize {
    unsafe { outcome.as_ref() }.map_or(0, |o| o.0.served_count())
}

/// The `index`-th served agent (in increasing id order) and its payment.
///
/// # Safety
/// `outcome` must be a live handle; `agent` and `payment` writable.
#[no_mangle]
pub unsafe extern "C" fn bspe_outcome_entry(
    outcome: *const BspeOutcome,
    index: usize,
    agent: *mut u32,
    payment: *mut u64,
) -> BspeStatus {
    guarded(|| {
        let outcome = unsafe { deref(outcome, "outcome")? };
        let agent = out_ptr(agent, "agent")?;
        let payment = out_ptr(payment, "payment")?;
        let (&id, &price) = outcome.0.payments().iter().nth(index).ok_or_else(|| {
            fail(
                BspeStatus::IndexOutOfRange,
                format!("index {index} out of range for {} served agents", outcome.0.served_count()),
            )
        })?;
        unsafe {
            *agent = id.get();
            *payment = price.amount();
        }
        Ok(())
    })
}

/// `r1`, `r2` and the approximation ratio for bias `p` in (0, 0.5).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bspe_factors(p: f64, out: *mut BspeFactors) -> BspeStatus {
    guarded(|| {
        let out = out_ptr(out, "out")?;
        SamplingBias::new(p)?;
        let f = factors(p);
        unsafe {
            *out = BspeFactors {
                p: f.p,
                r1: f.r1,
                r2: f.r2,
                ratio: f.ratio,
            }
        };
        Ok(())
    })
}

/// Infinite-horizon ruin probability from 0 and from +1.
///
/// # Safety
/// `q` and `q_conditional` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bspe_ruin_closed_form(p: f64, q: *mut f64, q_conditional: *mut f64) -> BspeStatus {
    guarded(|| {
        let q = out_ptr(q, "q")?;
        let q_conditional = out_ptr(q_conditional, "q_conditional")?;
        let bounds = ruin_closed_form(p)?;
        unsafe {
            *q = bounds.q;
            *q_conditional = bounds.q_conditional;
        }
        Ok(())
    })
}

/// Minimises the approximation ratio over `[lo, hi]` to tolerance `tol`.
///
/// # Safety
/// `p_star` and `ratio_star` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bspe_minimize_ratio(
    lo: f64,
    hi: f64,
    tol: f64,
    p_star: *mut f64,
    ratio_star: *mut f64,
) -> BspeStatus {
    guarded(|| {
        let p_star = out_ptr(p_star, "p_star")?;
        let ratio_star = out_ptr(ratio_star, "ratio_star")?;
        let m = minimize_ratio(lo, hi, tol)?;
        unsafe {
            *p_star = m.p_star;
            *ratio_star = m.ratio_star;
        }
        Ok(())
    })
}
