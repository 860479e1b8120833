//! C ABI for the `qre` simulator.
//!
//! Objects cross the boundary as opaque handles created by `qre_*_new` /
//! `qre_*_parse` / `qre_run` and released by the matching `*_free`. Every
//! fallible call returns a [`QreStatus`]; on failure the message is kept in a
//! thread-local buffer readable through [`qre_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, c_double, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use qre::config::ScenarioConfig;
use qre::experiment::{oracle_check, run_scenario};
use qre::export::{series_csv, SERIES_COLUMNS};
use qre::scenario::{validate, RunOutput};
use qre::QreError;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QreStatus {
    Ok = 0,
    /// Numerical or I/O failure not covered below.
    Failure = 1,
    /// Invalid or incomplete configuration.
    Config = 2,
    /// The requested environment cannot be realized.
    Infeasible = 3,
    /// A numerical guard tripped during propagation.
    Guard = 4,
    /// A required pointer argument was null or a string was not UTF-8.
    InvalidArgument = 5,
    /// Index outside the series.
    OutOfRange = 6,
    /// A Rust panic was caught at the boundary.
    Panic = 7,
}

impl From<&QreError> for QreStatus {
    fn from(e: &QreError) -> Self {
        match e.exit_code() {
            2 => Self::Config,
            3 => Self::Infeasible,
            4 => Self::Guard,
            _ => Self::Failure,
        }
    }
}

/// Parsed and normalized scenario configuration.
pub struct QreConfig {
    inner: ScenarioConfig,
}

/// Recorded observables of one propagation run.
pub struct QreSeries {
    out: RunOutput,
    config_toml: String,
    columns: Vec<String>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn guarded(f: impl FnOnce() -> Result<(), (QreStatus, String)>) -> QreStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QreStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            QreStatus::Panic
        }
    }
}

fn lib_err(e: QreError) -> (QreStatus, String) {
    ((&e).into(), e.to_string())
}

fn invalid(what: &str) -> (QreStatus, String) {
    (QreStatus::InvalidArgument, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (QreStatus, String)> {
    if p.is_null() {
        return Err(invalid(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (QreStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, (QreStatus, String)> {
    p.as_ref().ok_or_else(|| invalid(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (QreStatus, String)> {
    p.as_mut().ok_or_else(|| invalid(what))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qre_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next `qre_*` call on the same thread.
#[no_mangle]
pub extern "C" fn qre_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses a TOML configuration and fills scenario defaults.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qre_config_parse(toml: *const c_char, out: *mut *mut QreConfig) -> QreStatus {
    guarded(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let text = str_arg(toml, "toml")?;
        let inner = ScenarioConfig::parse(text).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(QreConfig { inner }));
        Ok(())
    })
}

/// Releases a configuration; null is ignored.
///
/// # Safety
/// `config` must come from [`qre_config_parse`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn qre_config_free(config: *mut QreConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Overrides the time step, keeping the final time.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qre_config_set_dt(config: *mut QreConfig, dt: c_double) -> QreStatus {
    guarded(|| {
        let c = out_arg(config, "config")?;
        c.inner.override_dt(dt).map_err(lib_err)
    })
}

/// Overrides the number of grid points.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qre_config_set_grid_n(config: *mut QreConfig, n_points: usize) -> QreStatus {
    guarded(|| {
        let c = out_arg(config, "config")?;
        let mut next = c.inner.clone();
        next.override_grid_n(n_points);
        c.inner = next.normalize().map_err(lib_err)?;
        Ok(())
    })
}

/// The normalized configuration as TOML; release with [`qre_string_free`].
///
/// # Safety
/// `config` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qre_config_to_toml(config: *const QreConfig, out: *mut *mut c_char) -> QreStatus {
    guarded(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let c = ref_arg(config, "config")?;
        let s = CString::new(c.inner.to_toml()).map_err(|e| (QreStatus::Failure, e.to_string()))?;
        *out = s.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn qre_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds the scenario and runs the feasibility and step-size checks without
/// propagating.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qre_validate(config: *const QreConfig) -> QreStatus {
    guarded(|| {
        let c = ref_arg(config, "config")?;
        validate(&c.inner).map(|_| ()).map_err(lib_err)
    })
}

/// Propagates the scenario. When `out_dir` is non-null the CSV and plot
/// script are also written there.
///
/// # Safety
/// `config` must be a live handle; `out_dir` null or NUL-terminated; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn qre_run(
    config: *const QreConfig,
    out_dir: *const c_char,
    out: *mut *mut QreSeries,
) -> QreStatus {
    guarded(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let c = ref_arg(config, "config")?;
        let dir = if out_dir.is_null() {
            None
        } else {
            Some(Path::new(str_arg(out_dir, "out_dir")?))
        };
        let run = run_scenario(&c.inner, dir).map_err(lib_err)?;
        let mut columns: Vec<String> = SERIES_COLUMNS.iter().map(|s| s.to_string()).collect();
        columns.extend(run.output.series.comparators.iter().map(|(n, _)| n.clone()));
        *out = Box::into_raw(Box::new(QreSeries {
            out: run.output,
            config_toml: c.inner.to_toml(),
            columns,
        }));
        Ok(())
    })
}

/// Releases a series; null is ignored.
///
/// # Safety
/// `series` must come from [`qre_run`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn qre_series_free(series: *mut QreSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Number of recorded rows; 0 for null.
///
/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qre_series_len(series: *const QreSeries) -> usize {
    series.as_ref().map_or(0, |s| s.out.series.len())
}

/// Number of columns, comparators included; 0 for null.
///
/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qre_series_column_count(series: *const QreSeries) -> usize {
    series.as_ref().map_or(0, |s| s.columns.len())
}

/// Column name as a NUL-terminated string owned by the series; null when out of range.
///
/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qre_series_column_name(series: *const QreSeries, column: usize) -> *const c_char {
    thread_local! {
        static NAME: RefCell<Option<CString>> = const { RefCell::new(None) };
    }
    let Some(name) = series.as_ref().and_then(|s| s.columns.get(column)) else {
        return ptr::null();
    };
    NAME.with(|n| {
        let mut n = n.borrow_mut();
        *n = CString::new(name.as_str()).ok();
        n.as_ref().map_or(ptr::null(), |s| s.as_ptr())
    })
}

/// Value at (`row`, `column`). Optional quantities that were not recorded
/// (for example transmission outside the tunneling scenario) read as NaN.
///
/// # Safety
/// `series` must be a live handle; `value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qre_series_get(
    series: *const QreSeries,
    row: usize,
    column: usize,
    value: *mut c_double,
) -> QreStatus {
    guarded(|| {
        let value = out_arg(value, "value")?;
        let s = ref_arg(series, "series")?;
        let range = |what: &str, i: usize, n: usize| (QreStatus::OutOfRange, format!("{what} {i} out of range (0..{n})"));
        let n_rows = s.out.series.len();
        let r = s.out.series.records.get(row).ok_or_else(|| range("row", row, n_rows))?;
        let opt = |v: Option<f64>| v.unwrap_or(f64::NAN);
        *value = match column {
            0 => r.t,
            1 => r.mean_x,
            2 => r.mean_p,
            3 => r.var_x,
            4 => r.var_p,
            5 => r.energy,
            6 => r.purity,
            7 => r.trace,
            8 => opt(r.transmission),
            9 => opt(r.mean_g),
            10 => opt(r.mean_f),
            k => {
                let (_, v) = s
                    .out
                    .series
                    .comparators
                    .get(k - SERIES_COLUMNS.len())
                    .ok_or_else(|| range("column", k, s.columns.len()))?;
                v[row]
            }
        };
        Ok(())
    })
}

/// The full CSV document (header, configuration echo, rows); release with
/// [`qre_string_free`].
///
/// # Safety
/// `series` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qre_series_to_csv(series: *const QreSeries, out: *mut *mut c_char) -> QreStatus {
    guarded(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let s = ref_arg(series, "series")?;
        let text = series_csv(&s.out.series, &s.config_toml);
        *out = CString::new(text).map_err(|e| (QreStatus::Failure, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Compares the split-operator propagator with the dense RK4 oracle over
/// `n_steps` steps (the configuration's grid must have at most 64 points) and
/// stores the Frobenius distance in `distance`.
///
/// # Safety
/// `config` must be a live handle; `distance` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qre_oracle_check(
    config: *const QreConfig,
    n_steps: usize,
    distance: *mut c_double,
) -> QreStatus {
    guarded(|| {
        let distance = out_arg(distance, "distance")?;
        let c = ref_arg(config, "config")?;
        let r = oracle_check(&c.inner, n_steps).map_err(lib_err)?;
        *distance = r.frobenius;
        Ok(())
    })
}
