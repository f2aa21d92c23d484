//! Model definition: series container, prior constants, the sampler state
//! layout and the unnormalised log joint density.
//!
//! Observation and transition equations, for `t = 1..=T` and period `s`:
//!
//! ```text
//! Y_t = b0_t + b1_t X_t + [t >= s] bs_t X_{t-s} + eps_t,   eps_t ~ N(0, c_y / tau)
//! X_t = bt0_t + bt1_t X_{t-1} + [t >= s] bts_t X_{t-s} + eta_t, eta_t ~ N(0, c_x / tau)
//! X_0 ~ N(mu0, c_0 / tau),   mu0 ~ N(xi0, c_mu / tau),   tau ~ Gamma(a, b)
//! ```
//!
//! Every coefficient path is a random walk whose step variance shrinks as the
//! inverse square of the step index (counted from the first free index), so the
//! marginal prior variance of each path stays bounded.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Fixed value of intercept paths at `t = 0`.
pub const INTERCEPT_ANCHOR: f64 = 0.0;
/// Fixed value of slope paths at `t = 0`.
pub const SLOPE_ANCHOR: f64 = 0.5;
/// Fixed value of seasonal paths at `t = s - 1` (zero before that).
pub const SEASONAL_ANCHOR: f64 = 0.5;

pub const DEFAULT_PERIOD: usize = 12;

/// A univariate series, indexed `1..=T`, with optional missing entries.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesData {
    values: Vec<Option<f64>>,
    period: usize,
    pub label: String,
}

impl TimeSeriesData {
    pub fn new(values: Vec<Option<f64>>, period: usize, label: impl Into<String>) -> Result<Self> {
        if period < 2 {
            return Err(Error::data(format!(
                "period must be at least 2, got {period}"
            )));
        }
        if values.iter().all(Option::is_none) {
            return Err(Error::data("empty series: no observed values"));
        }
        if let Some(i) = values
            .iter()
            .position(|v| matches!(v, Some(y) if !y.is_finite()))
        {
            return Err(Error::data(format!("non-finite value at t={}", i + 1)));
        }
        Ok(Self {
            values,
            period,
            label: label.into(),
        })
    }

    /// Builds a series from plain numbers, treating NaN as missing.
    pub fn from_f64(values: &[f64], period: usize, label: impl Into<String>) -> Result<Self> {
        let values = values
            .iter()
            .map(|v| if v.is_nan() { None } else { Some(*v) })
            .collect();
        Self::new(values, period, label)
    }

    /// Series length `T`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    /// Observation at 1-based index `t`.
    pub fn get(&self, t: usize) -> Option<f64> {
        self.values.get(t.wrapping_sub(1)).copied().flatten()
    }

    pub fn is_missing(&self, t: usize) -> bool {
        (1..=self.len()).contains(&t) && self.values[t - 1].is_none()
    }

    /// 1-based indices of missing entries, ascending.
    pub fn missing_indices(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_none())
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// First `n` points as a new series with the same period and label.
    pub fn head(&self, n: usize) -> Result<Self> {
        Self::new(
            self.values[..n.min(self.len())].to_vec(),
            self.period,
            self.label.clone(),
        )
    }

    /// Checks the minimum length required to fit the given model kind.
    pub fn check_fit_length(&self, kind: ModelKind) -> Result<()> {
        let min = match kind {
            ModelKind::Seasonal => 2 * self.period + 2,
            ModelKind::Baseline => 2,
        };
        if self.len() < min {
            return Err(Error::data(format!(
                "series of length {} is too short for the {kind} model (need at least {min})",
                self.len()
            )));
        }
        Ok(())
    }
}

/// Arithmetic mean of the observed values.
pub fn empirical_bayes_xi0(series: &TimeSeriesData) -> Result<f64> {
    let (sum, n) = series
        .values
        .iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        return Err(Error::data("empty series"));
    }
    Ok(sum / n as f64)
}

/// How the prior mean of `mu0` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Xi0Policy {
    Fixed(f64),
    EmpiricalMean,
}

/// Prior constants. Every variance in the model is one of these scalings
/// times `1 / tau`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparameters {
    /// Gamma shape of the precision prior (`a`).
    pub tau_shape: f64,
    /// Gamma rate of the precision prior (`b`).
    pub tau_rate: f64,
    /// `c_mu`
    pub mu0_scale: f64,
    /// `c_0`
    pub x0_scale: f64,
    pub state_intercept_scale: f64,
    pub state_slope_scale: f64,
    pub state_seasonal_scale: f64,
    pub obs_intercept_scale: f64,
    pub obs_slope_scale: f64,
    pub obs_seasonal_scale: f64,
    /// `c_x`, transition noise.
    pub transition_scale: f64,
    /// `c_y`, observation noise.
    pub observation_scale: f64,
    pub xi0: Xi0Policy,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            tau_shape: 0.01,
            tau_rate: 0.01,
            mu0_scale: 100.0,
            x0_scale: 100.0,
            state_intercept_scale: 100.0,
            state_slope_scale: 1.0,
            state_seasonal_scale: 1.0,
            obs_intercept_scale: 100.0,
            obs_slope_scale: 1.0,
            obs_seasonal_scale: 1.0,
            transition_scale: 200.0,
            observation_scale: 200.0,
            xi0: Xi0Policy::EmpiricalMean,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("tau_shape", self.tau_shape),
            ("tau_rate", self.tau_rate),
            ("mu0_scale", self.mu0_scale),
            ("x0_scale", self.x0_scale),
            ("state_intercept_scale", self.state_intercept_scale),
            ("state_slope_scale", self.state_slope_scale),
            ("state_seasonal_scale", self.state_seasonal_scale),
            ("obs_intercept_scale", self.obs_intercept_scale),
            ("obs_slope_scale", self.obs_slope_scale),
            ("obs_seasonal_scale", self.obs_seasonal_scale),
            ("transition_scale", self.transition_scale),
            ("observation_scale", self.observation_scale),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!(
                    "{name} must be a positive finite number, got {v}"
                )));
            }
        }
        if let Xi0Policy::Fixed(v) = self.xi0 {
            if !v.is_finite() {
                return Err(Error::config("fixed xi0 must be finite"));
            }
        }
        Ok(())
    }

    pub fn path_scale(&self, path: PathKind) -> f64 {
        match path {
            PathKind::StateIntercept => self.state_intercept_scale,
            PathKind::StateSlope => self.state_slope_scale,
            PathKind::StateSeasonal => self.state_seasonal_scale,
            PathKind::ObsIntercept => self.obs_intercept_scale,
            PathKind::ObsSlope => self.obs_slope_scale,
            PathKind::ObsSeasonal => self.obs_seasonal_scale,
        }
    }

    pub fn resolve_xi0(&self, series: &TimeSeriesData) -> Result<f64> {
        match self.xi0 {
            Xi0Policy::Fixed(v) => Ok(v),
            Xi0Policy::EmpiricalMean => empirical_bayes_xi0(series),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Seasonal,
    Baseline,
}

impl ModelKind {
    pub fn is_seasonal(self) -> bool {
        matches!(self, ModelKind::Seasonal)
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Seasonal => "seasonal",
            ModelKind::Baseline => "baseline",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "seasonal" => Ok(ModelKind::Seasonal),
            "baseline" => Ok(ModelKind::Baseline),
            other => Err(Error::config(format!(
                "unknown model kind `{other}` (seasonal|baseline)"
            ))),
        }
    }
}

/// The six time-varying coefficient paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PathKind {
    StateIntercept,
    StateSlope,
    StateSeasonal,
    ObsIntercept,
    ObsSlope,
    ObsSeasonal,
}

impl PathKind {
    pub const ALL: [PathKind; 6] = [
        PathKind::StateIntercept,
        PathKind::StateSlope,
        PathKind::StateSeasonal,
        PathKind::ObsIntercept,
        PathKind::ObsSlope,
        PathKind::ObsSeasonal,
    ];

    pub fn is_seasonal(self) -> bool {
        matches!(self, PathKind::StateSeasonal | PathKind::ObsSeasonal)
    }

    /// Paths present in a model of the given kind.
    pub fn for_kind(kind: ModelKind) -> &'static [PathKind] {
        match kind {
            ModelKind::Seasonal => &Self::ALL,
            ModelKind::Baseline => &[
                PathKind::StateIntercept,
                PathKind::StateSlope,
                PathKind::ObsIntercept,
                PathKind::ObsSlope,
            ],
        }
    }

    /// Short name used in quantity selectors (`bt0`, `b1`, ...).
    pub fn short_name(self) -> &'static str {
        match self {
            PathKind::StateIntercept => "bt0",
            PathKind::StateSlope => "bt1",
            PathKind::StateSeasonal => "bts",
            PathKind::ObsIntercept => "b0",
            PathKind::ObsSlope => "b1",
            PathKind::ObsSeasonal => "bs",
        }
    }

    /// Value of the path at its anchor index.
    pub fn anchor(self) -> f64 {
        match self {
            PathKind::StateIntercept | PathKind::ObsIntercept => INTERCEPT_ANCHOR,
            PathKind::StateSlope | PathKind::ObsSlope => SLOPE_ANCHOR,
            PathKind::StateSeasonal | PathKind::ObsSeasonal => SEASONAL_ANCHOR,
        }
    }

    /// Fixed index of the anchor: 0, or `s - 1` for seasonal paths.
    pub fn anchor_index(self, period: usize) -> usize {
        if self.is_seasonal() {
            period - 1
        } else {
            0
        }
    }

    /// First free (sampled) index of the path.
    pub fn first_free(self, period: usize) -> usize {
        self.anchor_index(period) + 1
    }
}

/// Variance multiplier of the step-`t` increment of a coefficient path:
/// `c / t^2` for non-seasonal paths and `c / (t - s + 1)^2` for seasonal ones.
/// Valid for any `t` at or past the first free index, including forecast steps.
pub fn prior_step_scale(
    path: PathKind,
    t: usize,
    period: usize,
    hyper: &Hyperparameters,
) -> Result<f64> {
    let first = path.first_free(period);
    if t < first {
        return Err(Error::config(format!(
            "step index {t} is before the first free index {first} of path {}",
            path.short_name()
        )));
    }
    let k = (t - first + 1) as f64;
    Ok(hyper.path_scale(path) / (k * k))
}

/// Precision multiplier (reciprocal of [`prior_step_scale`]) without range checks.
#[inline]
pub(crate) fn step_weight(path: PathKind, t: usize, period: usize, hyper: &Hyperparameters) -> f64 {
    let k = (t + 1 - path.first_free(period)) as f64;
    k * k / hyper.path_scale(path)
}

/// Seasonal coefficient paths, indexed `0..=T`; entries below `s - 1` are
/// structural zeros and `s - 1` holds the anchor.
#[derive(Clone, Debug, PartialEq)]
pub struct SeasonalPaths {
    pub state: Vec<f64>,
    pub obs: Vec<f64>,
}

/// One full configuration of every unknown in the model.
///
/// All vectors have length `T + 1` and are indexed by time directly; index 0
/// of the intercept and slope paths holds the anchor. `y` holds the completed
/// observations: observed values where present, current imputations where
/// missing (`y[0]` is unused).
#[derive(Clone, Debug, PartialEq)]
pub struct SamplerState {
    pub tau: f64,
    pub mu0: f64,
    pub x: Vec<f64>,
    pub state_intercept: Vec<f64>,
    pub state_slope: Vec<f64>,
    pub obs_intercept: Vec<f64>,
    pub obs_slope: Vec<f64>,
    pub seasonal: Option<SeasonalPaths>,
    pub y: Vec<f64>,
}

impl SamplerState {
    /// Series length `T` this state was built for.
    pub fn len(&self) -> usize {
        self.x.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn path(&self, path: PathKind) -> Option<&[f64]> {
        match path {
            PathKind::StateIntercept => Some(&self.state_intercept),
            PathKind::StateSlope => Some(&self.state_slope),
            PathKind::ObsIntercept => Some(&self.obs_intercept),
            PathKind::ObsSlope => Some(&self.obs_slope),
            PathKind::StateSeasonal => self.seasonal.as_ref().map(|s| s.state.as_slice()),
            PathKind::ObsSeasonal => self.seasonal.as_ref().map(|s| s.obs.as_slice()),
        }
    }

    pub fn path_mut(&mut self, path: PathKind) -> Option<&mut Vec<f64>> {
        match path {
            PathKind::StateIntercept => Some(&mut self.state_intercept),
            PathKind::StateSlope => Some(&mut self.state_slope),
            PathKind::ObsIntercept => Some(&mut self.obs_intercept),
            PathKind::ObsSlope => Some(&mut self.obs_slope),
            PathKind::StateSeasonal => self.seasonal.as_mut().map(|s| &mut s.state),
            PathKind::ObsSeasonal => self.seasonal.as_mut().map(|s| &mut s.obs),
        }
    }

    /// Current imputed values, one per missing index of `data`, as `(t, y)`.
    pub fn imputed(&self, data: &TimeSeriesData) -> Vec<(usize, f64)> {
        data.missing_indices()
            .into_iter()
            .map(|t| (t, self.y[t]))
            .collect()
    }

    /// Checks every anchor holds its fixed value.
    pub fn anchors_intact(&self, period: usize) -> bool {
        PathKind::ALL.iter().all(|&p| match self.path(p) {
            None => true,
            Some(v) => {
                let a = p.anchor_index(period);
                v[a] == p.anchor() && v[..a].iter().all(|&z| z == 0.0)
            }
        })
    }

    pub fn check_shape(&self, len: usize, kind: ModelKind) -> Result<()> {
        let n = len + 1;
        let core = [
            self.x.len(),
            self.state_intercept.len(),
            self.state_slope.len(),
            self.obs_intercept.len(),
            self.obs_slope.len(),
            self.y.len(),
        ];
        if core.iter().any(|&l| l != n) {
            return Err(Error::data(format!(
                "state dimensions {core:?} inconsistent with series length {len}"
            )));
        }
        match (&self.seasonal, kind) {
            (Some(s), ModelKind::Seasonal) if s.state.len() == n && s.obs.len() == n => Ok(()),
            (Some(_), ModelKind::Seasonal) => Err(Error::data(format!(
                "seasonal path dimensions inconsistent with series length {len}"
            ))),
            (None, ModelKind::Seasonal) => {
                Err(Error::data("seasonal model requires seasonal paths"))
            }
            (_, ModelKind::Baseline) => Ok(()),
        }
    }
}

/// MCMC run length settings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcConfig {
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            n_iter: 50_000,
            burn_in: 30_000,
            thin: 1,
            seed: 1,
        }
    }
}

impl McmcConfig {
    pub fn retained(&self) -> usize {
        self.n_iter.saturating_sub(self.burn_in) / self.thin.max(1)
    }

    /// Checks that the run retains at least one draw.
    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::config("thin must be positive"));
        }
        if self.burn_in >= self.n_iter {
            return Err(Error::config(format!(
                "burn_in ({}) must be smaller than n_iter ({})",
                self.burn_in, self.n_iter
            )));
        }
        if self.retained() == 0 {
            return Err(Error::config("configuration retains no draws"));
        }
        Ok(())
    }
}

/// Data, priors and model kind bound together, with `xi0` resolved.
#[derive(Clone, Debug)]
pub struct Model<'a> {
    pub data: &'a TimeSeriesData,
    pub hyper: &'a Hyperparameters,
    pub kind: ModelKind,
    pub xi0: f64,
}

impl<'a> Model<'a> {
    pub fn new(
        data: &'a TimeSeriesData,
        hyper: &'a Hyperparameters,
        kind: ModelKind,
    ) -> Result<Self> {
        hyper.validate()?;
        data.check_fit_length(kind)?;
        let xi0 = hyper.resolve_xi0(data)?;
        Ok(Self {
            data,
            hyper,
            kind,
            xi0,
        })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn period(&self) -> usize {
        self.data.period()
    }

    /// Number of Gaussian factors in the joint density.
    pub fn gaussian_factor_count(&self) -> usize {
        gaussian_factor_count(self.kind, self.len(), self.period())
    }

    /// Gamma shape of the precision full conditional.
    pub fn tau_posterior_shape(&self) -> f64 {
        self.hyper.tau_shape + 0.5 * self.gaussian_factor_count() as f64
    }
}

/// Closed-form factor count: `8T - 2s + 4` (seasonal) or `6T + 2` (baseline).
pub fn gaussian_factor_count(kind: ModelKind, len: usize, period: usize) -> usize {
    match kind {
        ModelKind::Seasonal => 8 * len + 4 - 2 * period,
        ModelKind::Baseline => 6 * len + 2,
    }
}

/// Which group of the joint a Gaussian factor belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FactorGroup {
    Mu0Prior,
    InitialState,
    Increment(PathKind),
    Transition,
    Observation,
}

/// One Gaussian factor `N(residual; 0, 1 / (weight * tau))` of the joint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianFactor {
    pub group: FactorGroup,
    pub t: usize,
    pub weight: f64,
    pub residual: f64,
}

impl GaussianFactor {
    /// Log density without the `-ln(2 pi) / 2` constant.
    pub fn log_density(&self, tau: f64) -> f64 {
        0.5 * (self.weight * tau).ln() - 0.5 * self.weight * tau * self.residual * self.residual
    }
}

/// Enumerates every Gaussian factor of the joint for the given state.
pub fn gaussian_factors(state: &SamplerState, model: &Model) -> Result<Vec<GaussianFactor>> {
    let len = model.len();
    let s = model.period();
    let hyper = model.hyper;
    state.check_shape(len, model.kind)?;
    let seasonal = match model.kind {
        ModelKind::Seasonal => state.seasonal.as_ref(),
        ModelKind::Baseline => None,
    };

    let mut out = Vec::with_capacity(model.gaussian_factor_count());
    out.push(GaussianFactor {
        group: FactorGroup::Mu0Prior,
        t: 0,
        weight: 1.0 / hyper.mu0_scale,
        residual: state.mu0 - model.xi0,
    });
    out.push(GaussianFactor {
        group: FactorGroup::InitialState,
        t: 0,
        weight: 1.0 / hyper.x0_scale,
        residual: state.x[0] - state.mu0,
    });
    for &path in PathKind::for_kind(model.kind) {
        let v = state.path(path).expect("shape checked");
        for t in path.first_free(s)..=len {
            out.push(GaussianFactor {
                group: FactorGroup::Increment(path),
                t,
                weight: step_weight(path, t, s, hyper),
                residual: v[t] - v[t - 1],
            });
        }
    }
    let (wx, wy) = (1.0 / hyper.transition_scale, 1.0 / hyper.observation_scale);
    for t in 1..=len {
        let mut xm = state.state_intercept[t] + state.state_slope[t] * state.x[t - 1];
        let mut ym = state.obs_intercept[t] + state.obs_slope[t] * state.x[t];
        if let Some(sp) = seasonal {
            if t >= s {
                xm += sp.state[t] * state.x[t - s];
                ym += sp.obs[t] * state.x[t - s];
            }
        }
        out.push(GaussianFactor {
            group: FactorGroup::Transition,
            t,
            weight: wx,
            residual: state.x[t] - xm,
        });
        out.push(GaussianFactor {
            group: FactorGroup::Observation,
            t,
            weight: wy,
            residual: state.y[t] - ym,
        });
    }
    Ok(out)
}

/// Log density of the Gamma(a, b) precision prior.
pub fn tau_log_prior(tau: f64, hyper: &Hyperparameters) -> f64 {
    if tau <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let (a, b) = (hyper.tau_shape, hyper.tau_rate);
    a * b.ln() - ln_gamma(a) + (a - 1.0) * tau.ln() - b * tau
}

/// Unnormalised log joint density of `state` and the completed data.
///
/// Keeps every normaliser that depends on `tau` or the scalings and drops only
/// the `ln(2 pi)` constants of the Gaussian factors.
pub fn log_joint(state: &SamplerState, model: &Model) -> Result<f64> {
    let factors = gaussian_factors(state, model)?;
    let prior = tau_log_prior(state.tau, model.hyper);
    if !prior.is_finite() {
        return Ok(prior);
    }
    Ok(prior
        + factors
            .iter()
            .map(|f| f.log_density(state.tau))
            .sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(vals: &[Option<f64>]) -> TimeSeriesData {
        TimeSeriesData::new(vals.to_vec(), 12, "t").unwrap()
    }

    #[test]
    fn xi0_is_mean_of_observed() {
        let s = series(&[Some(25.0), Some(27.0), None, Some(28.0)]);
        assert!((empirical_bayes_xi0(&s).unwrap() - 26.666_666_666_666_668).abs() < 1e-12);
        let c = series(&[Some(30.0); 7]);
        assert_eq!(empirical_bayes_xi0(&c).unwrap(), 30.0);
    }

    #[test]
    fn all_missing_series_is_rejected() {
        let err = TimeSeriesData::new(vec![None, None], 12, "x").unwrap_err();
        assert!(err.to_string().contains("empty series"));
    }

    #[test]
    fn period_below_two_is_rejected() {
        assert!(TimeSeriesData::new(vec![Some(1.0); 30], 1, "x").is_err());
    }

    #[test]
    fn step_scales_match_defaults() {
        let h = Hyperparameters::default();
        assert_eq!(
            prior_step_scale(PathKind::ObsIntercept, 1, 12, &h).unwrap(),
            100.0
        );
        assert_eq!(
            prior_step_scale(PathKind::ObsSeasonal, 12, 12, &h).unwrap(),
            1.0
        );
        assert!((prior_step_scale(PathKind::StateSlope, 10, 12, &h).unwrap() - 0.01).abs() < 1e-15);
        assert!(prior_step_scale(PathKind::StateSeasonal, 11, 12, &h).is_err());
        assert!(prior_step_scale(PathKind::StateIntercept, 0, 12, &h).is_err());
    }

    #[test]
    fn partial_sums_of_inverse_squares_stay_below_limit() {
        let limit = std::f64::consts::PI.powi(2) / 6.0;
        let mut sum = 0.0;
        for u in 1..=1_000_000u64 {
            sum += 1.0 / (u as f64 * u as f64);
            assert!(sum < limit);
        }
    }

    #[test]
    fn mcmc_config_validation() {
        assert_eq!(McmcConfig::default().retained(), 20_000);
        let bad = McmcConfig {
            burn_in: 10,
            n_iter: 10,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let one = McmcConfig {
            burn_in: 10,
            n_iter: 11,
            thin: 1,
            seed: 0,
        };
        assert_eq!(one.retained(), 1);
        one.validate().unwrap();
    }

    #[test]
    fn hyperparameter_json_uses_defaults_for_missing_keys() {
        let h: Hyperparameters =
            serde_json::from_str(r#"{"tau_shape": 2.0, "xi0": {"fixed": 25.0}}"#).unwrap();
        assert_eq!(h.tau_shape, 2.0);
        assert_eq!(h.observation_scale, 200.0);
        assert_eq!(h.xi0, Xi0Policy::Fixed(25.0));
        let e: Hyperparameters = serde_json::from_str(r#"{"xi0": "empirical_mean"}"#).unwrap();
        assert_eq!(e, Hyperparameters::default());
    }
}
