//! C ABI for the `wmar` library.
//!
//! Handles are opaque pointers owned by the caller and released with the
//! matching `*_free` function. Every fallible call returns a [`WmarStatus`];
//! on failure [`wmar_last_error`] describes the problem. Panics never cross
//! the boundary: they are reported as `WMAR_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use wmar::dataio;
use wmar::estimate::{self, FitOptions, FitReport};
use wmar::qfun::{self, Grid, QuantileGrid};
use wmar::{DistSeries, SimConfig, WmarError};

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WmarStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    InvalidData = 5,
    GramSingular = 6,
    OutsideLogImage = 7,
    Panic = 8,
}

/// A panel of `N` features observed at `T + 1` instants.
pub struct WmarSeries(DistSeries);

/// Output of a fit.
pub struct WmarFitReport(FitReport);

/// Simulation settings; see [`wmar_sim_config_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct WmarSimConfig {
    pub n: usize,
    pub t: usize,
    pub burn_in: usize,
    pub alpha: f64,
    pub density: f64,
    pub seed: u64,
    pub grid_h: f64,
}

/// Estimation settings; see [`wmar_fit_options_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct WmarFitOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub ridge: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &WmarError) -> WmarStatus {
    match e {
        WmarError::Io { .. } => WmarStatus::Io,
        WmarError::Csv(_) | WmarError::Json(_) | WmarError::Format(_) => WmarStatus::Parse,
        WmarError::InvalidArgument(_) | WmarError::InvalidGrid(_) => WmarStatus::InvalidArgument,
        WmarError::GramSingular { .. } => WmarStatus::GramSingular,
        WmarError::OutsideLogImage(_) => WmarStatus::OutsideLogImage,
        _ => WmarStatus::InvalidData,
    }
}

enum Failure {
    Null(&'static str),
    Lib(WmarError),
}

impl From<WmarError> for Failure {
    fn from(e: WmarError) -> Self {
        Failure::Lib(e)
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> WmarStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            WmarStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_last_error(&format!("null pointer: {what}"));
            WmarStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic");
            WmarStatus::Panic
        }
    }
}

unsafe fn non_null<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure::Null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| WmarError::InvalidArgument("path is not UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a>(p: *mut f64, len: usize, what: &'static str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn check_len(have: usize, need: usize, what: &str) -> Result<(), Failure> {
    if have < need {
        return Err(WmarError::InvalidArgument(format!("{what} holds {have} values, needs {need}")).into());
    }
    Ok(())
}

/// Message describing the most recent failure on this thread, or an empty
/// string. The pointer stays valid until the next call into this library on
/// the same thread.
#[no_mangle]
pub extern "C" fn wmar_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wmar_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn wmar_sim_config_default() -> WmarSimConfig {
    let d = SimConfig::default();
    WmarSimConfig {
        n: d.n,
        t: d.t,
        burn_in: d.burn_in,
        alpha: d.alpha,
        density: d.density,
        seed: d.seed,
        grid_h: d.grid_h,
    }
}

#[no_mangle]
pub extern "C" fn wmar_fit_options_default() -> WmarFitOptions {
    let d = FitOptions::default();
    WmarFitOptions {
        tol: d.tol,
        max_iter: d.max_iter,
        ridge: d.ridge,
    }
}

/// Simulate a raw series. When `coeffs_out` is non-null it receives the true
/// `n x n` coefficient matrix, row-major; `coeffs_len` must be at least `n * n`.
///
/// # Safety
/// `config` must point to a valid config, `out` to writable storage for a
/// handle, and `coeffs_out` to `coeffs_len` writable doubles or be null.
#[no_mangle]
pub unsafe extern "C" fn wmar_series_simulate(
    config: *const WmarSimConfig,
    out: *mut *mut WmarSeries,
    coeffs_out: *mut f64,
    coeffs_len: usize,
) -> WmarStatus {
    guard(|| {
        let c = non_null(config, "config")?;
        let out = out_ptr(out, "out")?;
        let cfg = SimConfig {
            n: c.n,
            t: c.t,
            burn_in: c.burn_in,
            alpha: c.alpha,
            density: c.density,
            seed: c.seed,
            grid_h: c.grid_h,
        };
        let data = wmar::simulate::simulate_dataset(&cfg)?;
        if !coeffs_out.is_null() {
            let m = data.coeffs.matrix().data();
            check_len(coeffs_len, m.len(), "coeffs_out")?;
            slice_out(coeffs_out, coeffs_len, "coeffs_out")?[..m.len()].copy_from_slice(m);
        }
        *out = Box::into_raw(Box::new(WmarSeries(data.raw)));
        Ok(())
    })
}

/// Build a series from quantile values laid out as `[feature][time][grid point]`.
/// Features are labelled `f1..fN`, instants `0..T`.
///
/// # Safety
/// `values` must hold `n_features * n_times * grid_size` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wmar_series_from_values(
    n_features: usize,
    n_times: usize,
    grid_size: usize,
    values: *const f64,
    out: *mut *mut WmarSeries,
) -> WmarStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let total = n_features
            .checked_mul(n_times)
            .and_then(|x| x.checked_mul(grid_size))
            .ok_or_else(|| WmarError::InvalidArgument("dimensions overflow".into()))?;
        if total == 0 {
            return Err(WmarError::InvalidArgument("empty series".into()).into());
        }
        let v = slice_arg(values, total, "values")?;
        let grid = Grid::with_size(grid_size)?;
        let data = v
            .chunks(n_times * grid_size)
            .map(|row| {
                row.chunks(grid_size)
                    .map(|q| QuantileGrid::quantile(grid, q.to_vec()))
                    .collect::<wmar::Result<Vec<_>>>()
            })
            .collect::<wmar::Result<Vec<_>>>()?;
        *out = Box::into_raw(Box::new(WmarSeries(DistSeries::with_default_labels(grid, data)?)));
        Ok(())
    })
}

/// Read a grid-wide CSV (`feature,time,q_0,...`).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wmar_series_read_grid_csv(path: *const c_char, out: *mut *mut WmarSeries) -> WmarStatus {
    guard(|| {
        let path = path_arg(path)?;
        let out = out_ptr(out, "out")?;
        let s = dataio::read_grid_wide_path(&path, None)?;
        *out = Box::into_raw(Box::new(WmarSeries(s)));
        Ok(())
    })
}

/// Read raw samples (`feature,time,value`) into empirical quantiles on a grid
/// of spacing `grid_h`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wmar_series_read_samples_csv(
    path: *const c_char,
    grid_h: f64,
    out: *mut *mut WmarSeries,
) -> WmarStatus {
    guard(|| {
        let path = path_arg(path)?;
        let out = out_ptr(out, "out")?;
        let s = dataio::read_samples_long_path(&path, Grid::new(grid_h)?)?;
        *out = Box::into_raw(Box::new(WmarSeries(s)));
        Ok(())
    })
}

/// # Safety
/// `series` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn wmar_series_write_grid_csv(series: *const WmarSeries, path: *const c_char) -> WmarStatus {
    guard(|| {
        let s = non_null(series, "series")?;
        let path = path_arg(path)?;
        dataio::write_grid_wide_path(&s.0, &path)?;
        Ok(())
    })
}

/// Number of features, or 0 for a null handle.
///
/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wmar_series_n_features(series: *const WmarSeries) -> usize {
    series.as_ref().map_or(0, |s| s.0.n_features())
}

/// Number of instants `T + 1`, or 0 for a null handle.
///
/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wmar_series_n_times(series: *const WmarSeries) -> usize {
    series.as_ref().map_or(0, |s| s.0.len())
}

/// Number of grid points `M`, or 0 for a null handle.
///
/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wmar_series_grid_size(series: *const WmarSeries) -> usize {
    series.as_ref().map_or(0, |s| s.0.grid().len())
}

/// Copy the quantile values of one cell into `out` (`len >= grid size`).
///
/// # Safety
/// `series` must be a live handle and `out` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn wmar_series_values(
    series: *const WmarSeries,
    feature: usize,
    time: usize,
    out: *mut f64,
    len: usize,
) -> WmarStatus {
    guard(|| {
        let s = &non_null(series, "series")?.0;
        if feature >= s.n_features() || time >= s.len() {
            return Err(WmarError::InvalidArgument(format!(
                "cell ({feature}, {time}) outside {} x {}",
                s.n_features(),
                s.len()
            ))
            .into());
        }
        let v = s.get(feature, time).values();
        check_len(len, v.len(), "out")?;
        slice_out(out, len, "out")?[..v.len()].copy_from_slice(v);
        Ok(())
    })
}

/// # Safety
/// `series` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wmar_series_free(series: *mut WmarSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Estimate the coefficient matrix. `options` may be null for defaults; a
/// nonzero `centered` skips mean removal.
///
/// # Safety
/// `series` must be a live handle, `options` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wmar_fit(
    series: *const WmarSeries,
    options: *const WmarFitOptions,
    centered: c_int,
    out: *mut *mut WmarFitReport,
) -> WmarStatus {
    guard(|| {
        let s = &non_null(series, "series")?.0;
        let out = out_ptr(out, "out")?;
        let o = options.as_ref().copied().unwrap_or_else(|| wmar_fit_options_default());
        let opts = FitOptions {
            tol: o.tol,
            max_iter: o.max_iter,
            ridge: o.ridge,
        };
        let report = if centered != 0 {
            estimate::fit_centered(s, &opts)?
        } else {
            estimate::fit(s, &opts)?
        };
        *out = Box::into_raw(Box::new(WmarFitReport(report)));
        Ok(())
    })
}

/// Dimension `N` of the fitted model, or 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wmar_report_n(report: *const WmarFitReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.n())
}

/// 1 when every row met the stopping tolerance, 0 otherwise or for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wmar_report_converged(report: *const WmarFitReport) -> c_int {
    report.as_ref().map_or(0, |r| c_int::from(r.0.flags.all_converged))
}

/// Copy the estimated coefficients, row-major, into `out` (`len >= N * N`).
///
/// # Safety
/// `report` must be a live handle and `out` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn wmar_report_coefficients(report: *const WmarFitReport, out: *mut f64, len: usize) -> WmarStatus {
    guard(|| {
        let m = non_null(report, "report")?.0.coeffs.matrix().data();
        check_len(len, m.len(), "out")?;
        slice_out(out, len, "out")?[..m.len()].copy_from_slice(m);
        Ok(())
    })
}

/// Serialize a report to JSON. Free the string with [`wmar_string_free`].
///
/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wmar_report_to_json(report: *const WmarFitReport, out: *mut *mut c_char) -> WmarStatus {
    guard(|| {
        let r = &non_null(report, "report")?.0;
        let out = out_ptr(out, "out")?;
        let text = dataio::fit_report_to_json(r)?;
        let c = CString::new(text).map_err(|e| WmarError::Format(e.to_string()))?;
        *out = c.into_raw();
        Ok(())
    })
}

/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wmar_report_from_json(json: *const c_char, out: *mut *mut WmarFitReport) -> WmarStatus {
    guard(|| {
        if json.is_null() {
            return Err(Failure::Null("json"));
        }
        let out = out_ptr(out, "out")?;
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| WmarError::Format("JSON is not UTF-8".into()))?;
        *out = Box::into_raw(Box::new(WmarFitReport(dataio::fit_report_from_json(text)?)));
        Ok(())
    })
}

/// Forecast `horizon` steps past the last instant of `series`. The result has
/// one instant per step.
///
/// # Safety
/// `report` and `series` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wmar_report_forecast(
    report: *const WmarFitReport,
    series: *const WmarSeries,
    horizon: usize,
    out: *mut *mut WmarSeries,
) -> WmarStatus {
    guard(|| {
        let r = &non_null(report, "report")?.0;
        let s = &non_null(series, "series")?.0;
        let out = out_ptr(out, "out")?;
        let steps = estimate::forecast_horizon(r, &s.instant(s.len() - 1), horizon)?;
        let data = (0..r.n())
            .map(|i| steps.iter().map(|g| g[i].clone()).collect())
            .collect();
        let times = (1..=horizon).map(|h| format!("+{h}")).collect();
        let fc = DistSeries::new(r.grid, r.labels.clone(), times, data)?;
        *out = Box::into_raw(Box::new(WmarSeries(fc)));
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wmar_report_free(report: *mut WmarFitReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wmar_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Wasserstein distance between two quantile functions on the same grid of
/// `grid_size` points.
///
/// # Safety
/// `f` and `g` must point to `grid_size` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wmar_wasserstein(f: *const f64, g: *const f64, grid_size: usize, out: *mut f64) -> WmarStatus {
    guard(|| {
        let grid = Grid::with_size(grid_size)?;
        let a = QuantileGrid::quantile(grid, slice_arg(f, grid_size, "f")?.to_vec())?;
        let b = QuantileGrid::quantile(grid, slice_arg(g, grid_size, "g")?.to_vec())?;
        *out_ptr(out, "out")? = qfun::wasserstein(&a, &b)?;
        Ok(())
    })
}

/// Euclidean projection of `v` onto `{x >= 0, sum x <= 1}`; `out` may alias `v`.
///
/// # Safety
/// `v` and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn wmar_project_simplex(v: *const f64, len: usize, out: *mut f64) -> WmarStatus {
    guard(|| {
        let p = estimate::project_simplex(slice_arg(v, len, "v")?);
        if p.iter().any(|x| !x.is_finite()) {
            return Err(WmarError::InvalidArgument("non-finite input".into()).into());
        }
        slice_out(out, len, "out")?.copy_from_slice(&p);
        Ok(())
    })
}
