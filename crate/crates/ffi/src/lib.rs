//! C ABI over the single-bidder pricing engines.
//!
//! Every fallible call returns an [`RlStatus`]. On failure the message is
//! available from [`rl_last_error`] until the next failing call on the same
//! thread. Handles are opaque and must be released with the matching `free`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use reserve_lab::config::Backend;
use reserve_lab::pricing::{BanditEngine, BanditParams, EngineParams, PricingEngine};
use reserve_lab::rng::SeedTree;
use reserve_lab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Contract = 3,
    Config = 4,
    InformationLeak = 5,
    Scale = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlBackend {
    OneFold = 0,
    TwoFold = 1,
}

pub struct RlPricingEngine(PricingEngine);

pub struct RlBanditEngine(BanditEngine);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> RlStatus {
    match e {
        Error::Domain(_) => RlStatus::Domain,
        Error::Contract(_) => RlStatus::Contract,
        Error::Config(_) => RlStatus::Config,
        Error::InformationLeak(_) => RlStatus::InformationLeak,
        Error::Scale(_) => RlStatus::Scale,
        _ => RlStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), RlStatus>) -> RlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RlStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside reserve-lab".into());
            RlStatus::Panic
        }
    }
}

fn lift<T>(r: reserve_lab::Result<T>) -> Result<T, RlStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

unsafe fn handle<'a, T>(p: *mut T) -> Result<&'a mut T, RlStatus> {
    p.as_mut().ok_or_else(|| {
        set_error("null handle".into());
        RlStatus::NullPointer
    })
}

fn non_null<T>(p: *mut T) -> Result<(), RlStatus> {
    if p.is_null() {
        set_error("null output pointer".into());
        return Err(RlStatus::NullPointer);
    }
    Ok(())
}

fn sigma_override(sigma: f64) -> Option<f64> {
    (sigma >= 0.0).then_some(sigma)
}

/// Message of the last failing call on this thread, or an empty string.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn rl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a full-information engine. A negative `sigma` selects the
/// calibrated noise scale.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn rl_pricing_new(
    alpha: f64,
    horizon: usize,
    epsilon: f64,
    backend: RlBackend,
    sigma: f64,
    seed: u64,
    out: *mut *mut RlPricingEngine,
) -> RlStatus {
    guard(|| {
        non_null(out)?;
        *out = ptr::null_mut();
        let backend = match backend {
            RlBackend::OneFold => Backend::OneFold,
            RlBackend::TwoFold => Backend::TwoFold,
        };
        let mut p = EngineParams::new(alpha, horizon, epsilon, backend);
        p.sigma = sigma_override(sigma);
        let e = lift(PricingEngine::new(&p, &SeedTree::new(seed)))?;
        *out = Box::into_raw(Box::new(RlPricingEngine(e)));
        Ok(())
    })
}

/// Posts the price for the next round.
///
/// # Safety
/// `engine` must come from [`rl_pricing_new`]; `price` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_pricing_choose(engine: *mut RlPricingEngine, price: *mut f64) -> RlStatus {
    guard(|| {
        let e = handle(engine)?;
        non_null(price)?;
        *price = lift(e.0.choose_price())?.price;
        Ok(())
    })
}

/// Reports the round's bid. `payment` may be null.
///
/// # Safety
/// `engine` must come from [`rl_pricing_new`]; `payment` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn rl_pricing_observe(engine: *mut RlPricingEngine, bid: f64, payment: *mut f64) -> RlStatus {
    guard(|| {
        let e = handle(engine)?;
        let o = lift(e.0.observe_bid(bid))?;
        if !payment.is_null() {
            *payment = o.payment;
        }
        Ok(())
    })
}

/// # Safety
/// `engine` must come from [`rl_pricing_new`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn rl_pricing_free(engine: *mut RlPricingEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Creates a bandit-feedback engine. A negative `sigma` selects the
/// calibrated noise scale.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn rl_bandit_new(
    alpha: f64,
    horizon: usize,
    epsilon: f64,
    sigma: f64,
    seed: u64,
    out: *mut *mut RlBanditEngine,
) -> RlStatus {
    guard(|| {
        non_null(out)?;
        *out = ptr::null_mut();
        let mut p = BanditParams::new(alpha, horizon, epsilon);
        p.sigma = sigma_override(sigma);
        let e = lift(BanditEngine::new(&p, &SeedTree::new(seed)))?;
        *out = Box::into_raw(Box::new(RlBanditEngine(e)));
        Ok(())
    })
}

/// Posts the price for the next round.
///
/// # Safety
/// `engine` must come from [`rl_bandit_new`]; `price` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_bandit_choose(engine: *mut RlBanditEngine, price: *mut f64) -> RlStatus {
    guard(|| {
        let e = handle(engine)?;
        non_null(price)?;
        *price = lift(e.0.choose_arm())?.price;
        Ok(())
    })
}

/// Reports only whether the posted price sold and what was paid.
///
/// # Safety
/// `engine` must come from [`rl_bandit_new`].
#[no_mangle]
pub unsafe extern "C" fn rl_bandit_observe(engine: *mut RlBanditEngine, sold: bool, payment: f64) -> RlStatus {
    guard(|| {
        let e = handle(engine)?;
        lift(e.0.observe_reward(sold, payment))?;
        Ok(())
    })
}

/// # Safety
/// `engine` must come from [`rl_bandit_new`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn rl_bandit_free(engine: *mut RlBanditEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}
