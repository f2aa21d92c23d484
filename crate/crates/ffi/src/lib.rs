//! C interface to the `tvss` engine.
//!
//! Series and fits are opaque handles created and released by the library.
//! Every fallible call returns a [`TvssStatus`]; after a failure the message
//! is available from [`tvss_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use tvss::forecast::{forecast_paths, forecast_summary};
use tvss::{
    Error, Hyperparameters, McmcConfig, ModelKind, PosteriorDraws, Quantity, TimeSeriesData,
    Xi0Policy,
};

/// Result of a call. Codes 1 to 4 match the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TvssStatus {
    Ok = 0,
    ConfigError = 1,
    DataError = 2,
    NumericalError = 3,
    CheckFailed = 4,
    NullPointer = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TvssModel {
    Seasonal = 0,
    Baseline = 1,
}

/// Run settings for [`tvss_fit`]; start from [`tvss_fit_options_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct TvssFitOptions {
    pub model: TvssModel,
    pub n_iter: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
}

/// Prior constants; `xi0` set to NaN means the mean of the observed values.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct TvssHyperparameters {
    pub tau_shape: f64,
    pub tau_rate: f64,
    pub mu0_scale: f64,
    pub x0_scale: f64,
    pub state_intercept_scale: f64,
    pub state_slope_scale: f64,
    pub state_seasonal_scale: f64,
    pub obs_intercept_scale: f64,
    pub obs_slope_scale: f64,
    pub obs_seasonal_scale: f64,
    pub transition_scale: f64,
    pub observation_scale: f64,
    pub xi0: f64,
}

/// An observed series (opaque).
pub struct TvssSeries {
    data: TimeSeriesData,
}

/// Retained posterior draws of one fit (opaque).
pub struct TvssFit {
    draws: PosteriorDraws,
    hyper: Hyperparameters,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).unwrap_or_default());
}

fn status_of(err: &Error) -> TvssStatus {
    match err.exit_code() {
        1 => TvssStatus::ConfigError,
        2 => TvssStatus::DataError,
        3 => TvssStatus::NumericalError,
        _ => TvssStatus::CheckFailed,
    }
}

/// Runs `f`, recording any error or panic for [`tvss_last_error`].
fn guard(f: impl FnOnce() -> Result<(), TvssStatus>) -> TvssStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TvssStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic");
            TvssStatus::Panic
        }
    }
}

fn fail(err: Error) -> TvssStatus {
    set_error(err.to_string());
    status_of(&err)
}

fn null(what: &str) -> TvssStatus {
    set_error(format!("{what} is null"));
    TvssStatus::NullPointer
}

/// Message describing the last failed call on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tvss_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn tvss_fit_options_default() -> TvssFitOptions {
    let m = McmcConfig::default();
    TvssFitOptions {
        model: TvssModel::Seasonal,
        n_iter: m.n_iter as u64,
        burn_in: m.burn_in as u64,
        thin: m.thin as u64,
        seed: m.seed,
    }
}

#[no_mangle]
pub extern "C" fn tvss_hyperparameters_default() -> TvssHyperparameters {
    let h = Hyperparameters::default();
    TvssHyperparameters {
        tau_shape: h.tau_shape,
        tau_rate: h.tau_rate,
        mu0_scale: h.mu0_scale,
        x0_scale: h.x0_scale,
        state_intercept_scale: h.state_intercept_scale,
        state_slope_scale: h.state_slope_scale,
        state_seasonal_scale: h.state_seasonal_scale,
        obs_intercept_scale: h.obs_intercept_scale,
        obs_slope_scale: h.obs_slope_scale,
        obs_seasonal_scale: h.obs_seasonal_scale,
        transition_scale: h.transition_scale,
        observation_scale: h.observation_scale,
        xi0: f64::NAN,
    }
}

impl From<&TvssHyperparameters> for Hyperparameters {
    fn from(h: &TvssHyperparameters) -> Self {
        Hyperparameters {
            tau_shape: h.tau_shape,
            tau_rate: h.tau_rate,
            mu0_scale: h.mu0_scale,
            x0_scale: h.x0_scale,
            state_intercept_scale: h.state_intercept_scale,
            state_slope_scale: h.state_slope_scale,
            state_seasonal_scale: h.state_seasonal_scale,
            obs_intercept_scale: h.obs_intercept_scale,
            obs_slope_scale: h.obs_slope_scale,
            obs_seasonal_scale: h.obs_seasonal_scale,
            transition_scale: h.transition_scale,
            observation_scale: h.observation_scale,
            xi0: if h.xi0.is_nan() {
                Xi0Policy::EmpiricalMean
            } else {
                Xi0Policy::Fixed(h.xi0)
            },
        }
    }
}

/// Copies `len` values (NaN marks a missing observation) into a new series.
///
/// # Safety
/// `values` must point to `len` readable doubles and `out` to a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tvss_series_new(
    values: *const f64,
    len: usize,
    period: usize,
    out: *mut *mut TvssSeries,
) -> TvssStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let slice = std::slice::from_raw_parts(values, len);
        let data = TimeSeriesData::from_f64(slice, period, "series").map_err(fail)?;
        *out = Box::into_raw(Box::new(TvssSeries { data }));
        Ok(())
    })
}

/// # Safety
/// `series` must be null or a pointer from [`tvss_series_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tvss_series_free(series: *mut TvssSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Number of time points, 0 for a null handle.
///
/// # Safety
/// `series` must be null or a live series handle.
#[no_mangle]
pub unsafe extern "C" fn tvss_series_len(series: *const TvssSeries) -> usize {
    series.as_ref().map_or(0, |s| s.data.len())
}

/// Runs the Gibbs sampler. Null `options` or `hyper` select the defaults.
///
/// # Safety
/// `series` must be a live series handle, `options` and `hyper` null or
/// valid, and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tvss_fit(
    series: *const TvssSeries,
    options: *const TvssFitOptions,
    hyper: *const TvssHyperparameters,
    out: *mut *mut TvssFit,
) -> TvssStatus {
    guard(|| {
        let series = series.as_ref().ok_or_else(|| null("series"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let opts = options
            .as_ref()
            .copied()
            .unwrap_or_else(|| tvss_fit_options_default());
        let hyper: Hyperparameters = hyper.as_ref().map(Into::into).unwrap_or_default();
        let kind = match opts.model {
            TvssModel::Seasonal => ModelKind::Seasonal,
            TvssModel::Baseline => ModelKind::Baseline,
        };
        let config = McmcConfig {
            n_iter: opts.n_iter as usize,
            burn_in: opts.burn_in as usize,
            thin: opts.thin as usize,
            seed: opts.seed,
        };
        let draws = tvss::run_chain(&series.data, &hyper, kind, &config).map_err(fail)?;
        *out = Box::into_raw(Box::new(TvssFit { draws, hyper }));
        Ok(())
    })
}

/// # Safety
/// `fit` must be null or a pointer from [`tvss_fit`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tvss_fit_free(fit: *mut TvssFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Number of retained draws, 0 for a null handle.
///
/// # Safety
/// `fit` must be null or a live fit handle.
#[no_mangle]
pub unsafe extern "C" fn tvss_fit_draw_count(fit: *const TvssFit) -> usize {
    fit.as_ref().map_or(0, |f| f.draws.n_draws())
}

/// Copies the retained draws of quantity `name` (for example `tau`,
/// `x[288]` or `b1[288]`) into `out`. `written` receives the draw count,
/// also when `capacity` is too small.
///
/// # Safety
/// `fit` must be a live fit handle, `name` a NUL-terminated string, `out`
/// writable for `capacity` doubles and `written` null or writable.
#[no_mangle]
pub unsafe extern "C" fn tvss_fit_trace(
    fit: *const TvssFit,
    name: *const c_char,
    out: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> TvssStatus {
    guard(|| {
        let fit = fit.as_ref().ok_or_else(|| null("fit"))?;
        if name.is_null() {
            return Err(null("name"));
        }
        let name = CStr::from_ptr(name)
            .to_str()
            .map_err(|_| fail(Error::config("quantity name is not UTF-8")))?;
        let q: Quantity = name.parse().map_err(fail)?;
        let col = fit
            .draws
            .column(q)
            .ok_or_else(|| fail(Error::config(format!("{q} is not retained by this fit"))))?;
        if !written.is_null() {
            *written = col.len();
        }
        if capacity < col.len() {
            set_error(format!(
                "buffer holds {capacity} values, {} needed",
                col.len()
            ));
            return Err(TvssStatus::BufferTooSmall);
        }
        if out.is_null() {
            return Err(null("out"));
        }
        std::ptr::copy_nonoverlapping(col.as_ptr(), out, col.len());
        Ok(())
    })
}

/// Posterior-predictive median and `lower`/`upper` quantiles for steps
/// `1..=horizon`. Each output array must hold `horizon` doubles.
///
/// # Safety
/// `fit` must be a live fit handle and the three arrays writable.
#[no_mangle]
pub unsafe extern "C" fn tvss_forecast(
    fit: *const TvssFit,
    horizon: usize,
    lower: f64,
    upper: f64,
    out_median: *mut f64,
    out_lower: *mut f64,
    out_upper: *mut f64,
) -> TvssStatus {
    guard(|| {
        let fit = fit.as_ref().ok_or_else(|| null("fit"))?;
        if out_median.is_null() || out_lower.is_null() || out_upper.is_null() {
            return Err(null("output array"));
        }
        let paths = forecast_paths(&fit.draws, &fit.hyper, horizon, fit.draws.config.seed, 0)
            .map_err(fail)?;
        let summary = forecast_summary(&paths, (lower, upper)).map_err(fail)?;
        for (i, st) in summary.steps.iter().enumerate() {
            *out_median.add(i) = st.median;
            *out_lower.add(i) = st.lower;
            *out_upper.add(i) = st.upper;
        }
        Ok(())
    })
}
