//! Posterior-predictive forecasting.
//!
//! Each retained draw seeds one forward path: for `t = T+1..=T+M` every
//! coefficient takes one random-walk step with the same shrinking step
//! variance as in the prior, then `X_t` is drawn from the transition and `Y_t`
//! from the observation equation. Seasonal lags read historical latent values
//! while `t - s <= T` and previously forecast ones afterwards.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gibbs::{run_chain_with, ChainOptions, PosteriorDraws, Quantity};
use crate::model::{
    prior_step_scale, Hyperparameters, McmcConfig, ModelKind, PathKind, SamplerState,
    TimeSeriesData,
};
use crate::rng::{self, Purpose};
use crate::stats::{quantile_sorted, sorted};

/// Minimum number of paths for a forecast summary.
pub const MIN_PATHS: usize = 100;

/// Default credible levels, a 95% central interval.
pub const DEFAULT_LEVELS: (f64, f64) = (0.025, 0.975);

/// The end-of-sample values a forecast path starts from.
#[derive(Clone, Debug, PartialEq)]
pub struct ForecastOrigin {
    pub tau: f64,
    /// `X_{T-s+1}, ..., X_T`.
    pub lags: Vec<f64>,
    /// Value of each path at `T`, indexed like [`PathKind::ALL`]; seasonal
    /// entries are ignored for the baseline model.
    pub coefficients: [f64; 6],
}

fn path_slot(p: PathKind) -> usize {
    PathKind::ALL
        .iter()
        .position(|&q| q == p)
        .expect("path in ALL")
}

impl ForecastOrigin {
    pub fn from_state(state: &SamplerState, kind: ModelKind, period: usize) -> Result<Self> {
        let len = state.len();
        if len < period {
            return Err(Error::data("state shorter than one period"));
        }
        let mut coefficients = [0.0; 6];
        for &p in PathKind::for_kind(kind) {
            let v = state
                .path(p)
                .ok_or_else(|| Error::data(format!("state lacks path {}", p.short_name())))?;
            coefficients[path_slot(p)] = v[len];
        }
        Ok(Self {
            tau: state.tau,
            lags: state.x[len + 1 - period..=len].to_vec(),
            coefficients,
        })
    }

    pub fn from_draws(draws: &PosteriorDraws, i: usize) -> Result<Self> {
        let (len, s) = (draws.len, draws.period);
        let get = |q: Quantity| {
            draws.value(i, q).ok_or_else(|| {
                Error::data(format!("draws do not retain {q} needed for forecasting"))
            })
        };
        let lags = (len + 1 - s..=len)
            .map(|t| get(Quantity::Latent(t)))
            .collect::<Result<Vec<_>>>()?;
        let mut coefficients = [0.0; 6];
        for &p in PathKind::for_kind(draws.kind) {
            coefficients[path_slot(p)] = get(Quantity::Coefficient(p, len))?;
        }
        Ok(Self {
            tau: get(Quantity::Tau)?,
            lags,
            coefficients,
        })
    }
}

/// One forward path of `horizon` future observations from a posterior draw
/// of a series of length `len`.
pub fn sample_predictive_path<R: Rng + ?Sized>(
    origin: &ForecastOrigin,
    hyper: &Hyperparameters,
    kind: ModelKind,
    len: usize,
    horizon: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if horizon < 1 {
        return Err(Error::config("forecast horizon must be at least 1"));
    }
    let s = origin.lags.len();
    let mut coef = origin.coefficients;
    let mut latent = Vec::with_capacity(s + horizon);
    latent.extend_from_slice(&origin.lags);
    let inv_tau = origin.tau.recip();
    let sd_x = (hyper.transition_scale * inv_tau).sqrt();
    let sd_y = (hyper.observation_scale * inv_tau).sqrt();
    let mut out = Vec::with_capacity(horizon);

    for h in 1..=horizon {
        let t = len + h;
        for &p in PathKind::for_kind(kind) {
            let sd = (prior_step_scale(p, t, s, hyper)? * inv_tau).sqrt();
            let z: f64 = StandardNormal.sample(rng);
            coef[path_slot(p)] += sd * z;
        }
        let [bt0, bt1, bts, b0, b1, bs] = coef;
        // latent[h - 1] is X_{t-s}, the last element is X_{t-1}
        let prev = latent[latent.len() - 1];
        let lag = if kind.is_seasonal() {
            latent[h - 1]
        } else {
            0.0
        };
        let zx: f64 = StandardNormal.sample(rng);
        let x = bt0 + bt1 * prev + bts * lag + sd_x * zx;
        let zy: f64 = StandardNormal.sample(rng);
        out.push(b0 + b1 * x + bs * lag + sd_y * zy);
        latent.push(x);
    }
    Ok(out)
}

/// One predictive path per retained draw, each on its own RNG stream.
pub fn forecast_paths(
    draws: &PosteriorDraws,
    hyper: &Hyperparameters,
    horizon: usize,
    seed: u64,
    series_index: u32,
) -> Result<Vec<Vec<f64>>> {
    (0..draws.n_draws())
        .map(|i| {
            let origin = ForecastOrigin::from_draws(draws, i)?;
            let mut r = rng::stream(seed, Purpose::Forecast, series_index, i as u32);
            sample_predictive_path(&origin, hyper, draws.kind, draws.len, horizon, &mut r)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ForecastStep {
    pub h: usize,
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Per-horizon median and credible bounds of the predictive paths.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ForecastSummary {
    pub horizon: usize,
    pub levels: (f64, f64),
    pub n_paths: usize,
    pub steps: Vec<ForecastStep>,
}

fn check_levels(levels: (f64, f64)) -> Result<()> {
    let (lo, hi) = levels;
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
        return Err(Error::config(format!(
            "quantile levels must satisfy 0 <= lower <= upper <= 1, got ({lo}, {hi})"
        )));
    }
    Ok(())
}

/// Gathers step `h` (0-based) across all paths.
fn column(paths: &[Vec<f64>], h: usize) -> Vec<f64> {
    paths.iter().map(|p| p[h]).collect()
}

/// Median and the two requested quantiles at every step, using linear
/// interpolation between order statistics.
pub fn forecast_summary(paths: &[Vec<f64>], levels: (f64, f64)) -> Result<ForecastSummary> {
    check_levels(levels)?;
    if paths.is_empty() {
        return Err(Error::data("no forecast paths to summarise"));
    }
    if paths.len() < MIN_PATHS {
        return Err(Error::data(format!(
            "need at least {MIN_PATHS} forecast paths, got {}",
            paths.len()
        )));
    }
    let horizon = paths[0].len();
    if paths.iter().any(|p| p.len() != horizon) {
        return Err(Error::data("forecast paths have unequal lengths"));
    }
    let steps = (0..horizon)
        .map(|h| {
            let col = sorted(&column(paths, h));
            ForecastStep {
                h: h + 1,
                median: quantile_sorted(&col, 0.5),
                lower: quantile_sorted(&col, levels.0),
                upper: quantile_sorted(&col, levels.1),
            }
        })
        .collect();
    Ok(ForecastSummary {
        horizon,
        levels,
        n_paths: paths.len(),
        steps,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramBin {
    pub h: usize,
    pub left: f64,
    pub right: f64,
    pub count: usize,
}

/// Equal-width histogram of the predictive sample at each step, spanning the
/// sample range; the top edge is inclusive so counts sum to the path count.
pub fn predictive_histogram(paths: &[Vec<f64>], bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 {
        return Err(Error::config("histogram needs at least one bin"));
    }
    let Some(first) = paths.first() else {
        return Err(Error::data("no forecast paths"));
    };
    let mut out = Vec::with_capacity(first.len() * bins);
    for h in 0..first.len() {
        let col = column(paths, h);
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = if hi > lo {
            (hi - lo) / bins as f64
        } else {
            1.0
        };
        let mut counts = vec![0usize; bins];
        for v in &col {
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        for (k, count) in counts.into_iter().enumerate() {
            out.push(HistogramBin {
                h: h + 1,
                left: lo + k as f64 * width,
                right: lo + (k + 1) as f64 * width,
                count,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationStep {
    pub h: usize,
    pub observed: Option<f64>,
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
    /// Observed minus median.
    pub error: Option<f64>,
    pub covered: Option<bool>,
}

/// Holdout comparison of forecasts against held-back observations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub kind: ModelKind,
    pub steps: Vec<ValidationStep>,
    /// Root mean squared error over steps with an observed value.
    pub rmse: f64,
}

impl ValidationReport {
    /// Scores a summary against held-back observations (missing ones are skipped).
    pub fn score(kind: ModelKind, summary: &ForecastSummary, observed: &[Option<f64>]) -> Self {
        let steps: Vec<ValidationStep> = summary
            .steps
            .iter()
            .zip(observed)
            .map(|(st, &obs)| ValidationStep {
                h: st.h,
                observed: obs,
                median: st.median,
                lower: st.lower,
                upper: st.upper,
                error: obs.map(|y| y - st.median),
                covered: obs.map(|y| st.lower <= y && y <= st.upper),
            })
            .collect();
        let errs: Vec<f64> = steps.iter().filter_map(|s| s.error).collect();
        let rmse = if errs.is_empty() {
            f64::NAN
        } else {
            (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt()
        };
        Self { kind, steps, rmse }
    }

    pub fn errors(&self) -> Vec<f64> {
        self.steps.iter().filter_map(|s| s.error).collect()
    }

    pub fn covered_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| s.covered == Some(true))
            .count()
    }
}

/// Everything produced by fitting a series and forecasting from it.
#[derive(Clone, Debug)]
pub struct FitForecast {
    pub draws: PosteriorDraws,
    pub paths: Vec<Vec<f64>>,
    pub summary: ForecastSummary,
}

/// Runs the chain and forecasts `horizon` steps past the end of `series`.
pub fn fit_and_forecast(
    series: &TimeSeriesData,
    hyper: &Hyperparameters,
    kind: ModelKind,
    config: &McmcConfig,
    options: &ChainOptions,
    horizon: usize,
    levels: (f64, f64),
) -> Result<FitForecast> {
    check_levels(levels)?;
    if horizon < 1 {
        return Err(Error::config("forecast horizon must be at least 1"));
    }
    let draws = run_chain_with(series, hyper, kind, config, options)?;
    let paths = forecast_paths(&draws, hyper, horizon, config.seed, options.series_index)?;
    let summary = forecast_summary(&paths, levels)?;
    Ok(FitForecast {
        draws,
        paths,
        summary,
    })
}

/// Fits on the first `T - horizon` points and scores the forecast of the rest.
pub fn holdout_validate(
    series: &TimeSeriesData,
    hyper: &Hyperparameters,
    kind: ModelKind,
    config: &McmcConfig,
    horizon: usize,
    levels: (f64, f64),
) -> Result<ValidationReport> {
    holdout_validate_with(
        series,
        hyper,
        kind,
        config,
        &ChainOptions::default(),
        horizon,
        levels,
    )
}

pub fn holdout_validate_with(
    series: &TimeSeriesData,
    hyper: &Hyperparameters,
    kind: ModelKind,
    config: &McmcConfig,
    options: &ChainOptions,
    horizon: usize,
    levels: (f64, f64),
) -> Result<ValidationReport> {
    if horizon < 1 || series.len() <= horizon {
        return Err(Error::data(format!(
            "series of length {} is too short for a holdout of {horizon}",
            series.len()
        )));
    }
    let fit_len = series.len() - horizon;
    let train = series.head(fit_len)?;
    let out = fit_and_forecast(&train, hyper, kind, config, options, horizon, levels)?;
    Ok(ValidationReport::score(
        kind,
        &out.summary,
        &series.values()[fit_len..],
    ))
}
