//! C ABI over `east_core`.
//!
//! Configs and runs are opaque heap handles owned by the caller and released
//! with their `_free` function. Fallible calls return an [`EastStatus`]; on
//! failure the message is available from [`east_last_error_message`] on the
//! same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use east_core::metrics::VariantTotals;
use east_core::output::write_run;
use east_core::radio::{
    free_space_base_requirement, power_level_for_rssi_loss, rssi_loss_from_temperature,
    LinkBudgetParams, RssiLossDbm, TemperatureC,
};
use east_core::{run_simulation, Error, SimConfig, SimOutput};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EastStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Domain = 4,
    Data = 5,
    Usage = 6,
    Io = 7,
    Csv = 8,
    Panic = 9,
}

/// Simulation parameters.
pub struct EastConfig(SimConfig);

/// Finished simulation with its per-round records.
pub struct EastRun {
    output: SimOutput,
    totals: VariantTotals,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> EastStatus {
    match err {
        Error::Domain(_) => EastStatus::Domain,
        Error::Config { .. } => EastStatus::Config,
        Error::Data(_) => EastStatus::Data,
        Error::Usage(_) => EastStatus::Usage,
        Error::Io { .. } => EastStatus::Io,
        Error::Csv { .. } => EastStatus::Csv,
    }
}

struct Fail(EastStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Runs `f`, turning errors and panics into a status plus a stored message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> EastStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EastStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".to_string());
            EastStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(EastStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Fail(
            EastStatus::InvalidUtf8,
            format!("{name} is not valid UTF-8"),
        )
    })
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(EastStatus::NullPointer, format!("{name} is null")))
}

fn out_arg<T>(p: *mut T, name: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail(EastStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// Message of the last failed call on this thread, or null if none.
/// Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn east_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn east_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New config holding the defaults.
#[no_mangle]
pub extern "C" fn east_config_default() -> *mut EastConfig {
    Box::into_raw(Box::new(EastConfig(SimConfig::default())))
}

/// Reads a `key = value` config file into `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn east_config_from_file(
    path: *const c_char,
    out: *mut *mut EastConfig,
) -> EastStatus {
    guard(|| {
        out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let cfg = SimConfig::load(Some(Path::new(path)), &[])?;
        *out = Box::into_raw(Box::new(EastConfig(cfg)));
        Ok(())
    })
}

/// Sets one config key. The config is unchanged on failure.
///
/// # Safety
/// `cfg` must come from this library; `key` and `value` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn east_config_set(
    cfg: *mut EastConfig,
    key: *const c_char,
    value: *const c_char,
) -> EastStatus {
    guard(|| {
        let cfg = cfg
            .as_mut()
            .ok_or_else(|| Fail(EastStatus::NullPointer, "cfg is null".into()))?;
        let (key, value) = (str_arg(key, "key")?, str_arg(value, "value")?);
        let mut next = cfg.0.clone();
        next.set(key, value)?;
        cfg.0 = next;
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn east_config_free(cfg: *mut EastConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Validates `cfg`, runs it to completion and stores the run in `*out`.
///
/// # Safety
/// `cfg` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn east_run(cfg: *const EastConfig, out: *mut *mut EastRun) -> EastStatus {
    guard(|| {
        out_arg(out, "out")?;
        let cfg = ref_arg(cfg, "cfg")?;
        cfg.0.validate()?;
        let output = run_simulation(&cfg.0)?;
        let totals = VariantTotals::from_records(output.config.controller, &output.records);
        *out = Box::into_raw(Box::new(EastRun { output, totals }));
        Ok(())
    })
}

/// Rounds executed; fewer than configured if every node died.
///
/// # Safety
/// `run` must be null or come from [`east_run`].
#[no_mangle]
pub unsafe extern "C" fn east_run_rounds_executed(run: *const EastRun) -> usize {
    run.as_ref().map_or(0, |r| r.output.summary.rounds_executed)
}

/// Beacons plus ACKs over the whole run.
///
/// # Safety
/// `run` must be null or come from [`east_run`].
#[no_mangle]
pub unsafe extern "C" fn east_run_control_packets(run: *const EastRun) -> u64 {
    run.as_ref().map_or(0, |r| r.totals.control_packets)
}

/// Radio energy spent by all nodes, joules.
///
/// # Safety
/// `run` must be null or come from [`east_run`].
#[no_mangle]
pub unsafe extern "C" fn east_run_energy_j(run: *const EastRun) -> f64 {
    run.as_ref().map_or(0.0, |r| r.totals.energy_j)
}

/// Nodes alive after the last executed round.
///
/// # Safety
/// `run` must be null or come from [`east_run`].
#[no_mangle]
pub unsafe extern "C" fn east_run_survivors(run: *const EastRun) -> usize {
    run.as_ref().map_or(0, |r| r.totals.survivors)
}

/// Writes the run's CSVs, figures and manifest under `dir`.
///
/// # Safety
/// `run` must come from [`east_run`]; `dir` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn east_run_write_csv(run: *const EastRun, dir: *const c_char) -> EastStatus {
    guard(|| {
        let run = ref_arg(run, "run")?;
        let dir = str_arg(dir, "dir")?;
        write_run(Path::new(dir), &run.output, None)?;
        Ok(())
    })
}

/// # Safety
/// `run` must come from [`east_run`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn east_run_free(run: *mut EastRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// RSSI loss in dBm at `temp_c` degrees Celsius.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn east_rssi_loss(temp_c: f64, out: *mut f64) -> EastStatus {
    guard(|| {
        out_arg(out, "out")?;
        *out = rssi_loss_from_temperature(TemperatureC(temp_c))?.0;
        Ok(())
    })
}

/// Compensating power level in dBm for an RSSI loss in dBm.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn east_power_level(loss_dbm: f64, out: *mut f64) -> EastStatus {
    guard(|| {
        out_arg(out, "out")?;
        *out = power_level_for_rssi_loss(RssiLossDbm(loss_dbm))?.0;
        Ok(())
    })
}

/// Free-space base power requirement in dBm at `distance_m`, default radio.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn east_base_requirement(distance_m: f64, out: *mut f64) -> EastStatus {
    guard(|| {
        out_arg(out, "out")?;
        *out = free_space_base_requirement(distance_m, &LinkBudgetParams::default())?.0;
        Ok(())
    })
}
