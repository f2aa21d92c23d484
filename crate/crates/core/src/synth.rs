//! Synthetic data: deterministic seasonal test series, and exact forward
//! simulation of the model from its own prior.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    prior_step_scale, Hyperparameters, ModelKind, PathKind, SamplerState, SeasonalPaths,
    TimeSeriesData, Xi0Policy, SEASONAL_ANCHOR,
};
use crate::rng::{self, Purpose};

/// Parameters of a trend-plus-sine test series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub len: usize,
    pub period: usize,
    pub trend_slope: f64,
    pub seasonal_amplitude: f64,
    pub noise_sd: f64,
    pub base_level: f64,
    pub missing_fraction: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            len: 132,
            period: 12,
            trend_slope: 0.005,
            seasonal_amplitude: 8.0,
            noise_sd: 1.0,
            base_level: 26.0,
            missing_fraction: 0.0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.period < 2 {
            return Err(Error::config("period must be at least 2"));
        }
        if self.len < 2 * self.period + 2 {
            return Err(Error::config(format!(
                "length {} is below the minimum {} for period {}",
                self.len,
                2 * self.period + 2,
                self.period
            )));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd > 0.0) {
            return Err(Error::config("noise_sd must be positive"));
        }
        if !(0.0..1.0).contains(&self.missing_fraction) {
            return Err(Error::config("missing_fraction must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Noise-free signal at 1-based index `t`.
    pub fn signal(&self, t: usize) -> f64 {
        let phase = 2.0 * std::f64::consts::PI * t as f64 / self.period as f64;
        self.base_level + self.trend_slope * t as f64 + self.seasonal_amplitude * phase.sin()
    }
}

/// A generated series together with the complete values, including those
/// that were masked as missing.
#[derive(Clone, Debug)]
pub struct SyntheticSeries {
    pub data: TimeSeriesData,
    pub truth: Vec<f64>,
}

/// `Y_t = base + slope t + amplitude sin(2 pi t / s) + N(0, sd^2)`, with
/// `floor(missing_fraction T)` indices after the first period masked at random.
pub fn generate_seasonal_series(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticSeries> {
    spec.validate()?;
    let mut rng = rng::stream(seed, Purpose::Synthetic, 0, 0);
    let truth: Vec<f64> = (1..=spec.len)
        .map(|t| {
            let z: f64 = StandardNormal.sample(&mut rng);
            spec.signal(t) + spec.noise_sd * z
        })
        .collect();
    let mut values: Vec<Option<f64>> = truth.iter().copied().map(Some).collect();
    let n_missing = (spec.missing_fraction * spec.len as f64).floor() as usize;
    let eligible = spec.len - spec.period;
    for i in index::sample(&mut rng, eligible, n_missing.min(eligible)) {
        values[spec.period + i] = None;
    }
    let data = TimeSeriesData::new(values, spec.period, format!("synthetic-{seed}"))?;
    Ok(SyntheticSeries { data, truth })
}

fn normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, variance: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    mean + variance.sqrt() * z
}

/// Draws `Y_t` for every `t` from the observation equation given the rest of `state`.
pub fn simulate_observations<R: Rng + ?Sized>(
    state: &mut SamplerState,
    kind: ModelKind,
    period: usize,
    hyper: &Hyperparameters,
    rng: &mut R,
) {
    let len = state.len();
    let var = hyper.observation_scale / state.tau;
    for t in 1..=len {
        let mut mean = state.obs_intercept[t] + state.obs_slope[t] * state.x[t];
        if let (ModelKind::Seasonal, Some(sp), true) = (kind, state.seasonal.as_ref(), t >= period)
        {
            mean += sp.obs[t] * state.x[t - period];
        }
        state.y[t] = normal(rng, mean, var);
    }
}

/// Runs the model generatively: `tau`, `mu0`, `X_0`, the anchored coefficient
/// random walks, the latent path and the observations, with the same factor
/// list and regime split at `t = s` as the log joint.
pub fn simulate_from_prior<R: Rng + ?Sized>(
    hyper: &Hyperparameters,
    kind: ModelKind,
    len: usize,
    period: usize,
    rng: &mut R,
) -> Result<(SamplerState, TimeSeriesData)> {
    hyper.validate()?;
    let xi0 = match hyper.xi0 {
        Xi0Policy::Fixed(v) => v,
        Xi0Policy::EmpiricalMean => {
            return Err(Error::config("xi0 must be fixed for forward simulation"))
        }
    };
    if period < 2 {
        return Err(Error::config("period must be at least 2"));
    }
    let min = if kind.is_seasonal() {
        2 * period + 2
    } else {
        2
    };
    if len < min {
        return Err(Error::config(format!("length {len} below minimum {min}")));
    }

    let tau = Gamma::new(hyper.tau_shape, hyper.tau_rate.recip())
        .map_err(|e| Error::config(format!("invalid precision prior: {e}")))?
        .sample(rng);
    let mu0 = normal(rng, xi0, hyper.mu0_scale / tau);
    let x0 = normal(rng, mu0, hyper.x0_scale / tau);

    let mut state = SamplerState {
        tau,
        mu0,
        x: vec![0.0; len + 1],
        state_intercept: vec![PathKind::StateIntercept.anchor(); len + 1],
        state_slope: vec![PathKind::StateSlope.anchor(); len + 1],
        obs_intercept: vec![PathKind::ObsIntercept.anchor(); len + 1],
        obs_slope: vec![PathKind::ObsSlope.anchor(); len + 1],
        seasonal: kind.is_seasonal().then(|| {
            let mut v = vec![0.0; len + 1];
            v[period - 1] = SEASONAL_ANCHOR;
            SeasonalPaths {
                state: v.clone(),
                obs: v,
            }
        }),
        y: vec![0.0; len + 1],
    };
    state.x[0] = x0;
    for &p in PathKind::for_kind(kind) {
        let first = p.first_free(period);
        let v = state.path_mut(p).expect("path present for kind");
        for t in first..=len {
            let step = prior_step_scale(p, t, period, hyper)?;
            v[t] = normal(rng, v[t - 1], step / tau);
        }
    }
    let var_x = hyper.transition_scale / tau;
    for t in 1..=len {
        let mut mean = state.state_intercept[t] + state.state_slope[t] * state.x[t - 1];
        if let (Some(sp), true) = (state.seasonal.as_ref(), t >= period) {
            mean += sp.state[t] * state.x[t - period];
        }
        state.x[t] = normal(rng, mean, var_x);
    }
    simulate_observations(&mut state, kind, period, hyper, rng);

    let data = TimeSeriesData::new(
        state.y[1..].iter().copied().map(Some).collect(),
        period,
        "prior-simulation",
    )?;
    Ok((state, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_spec_is_nearly_constant() {
        let spec = SyntheticSpec {
            trend_slope: 0.0,
            seasonal_amplitude: 0.0,
            noise_sd: 1e-9,
            ..Default::default()
        };
        let s = generate_seasonal_series(&spec, 1).unwrap();
        assert!(s
            .data
            .values()
            .iter()
            .all(|v| (v.unwrap() - 26.0).abs() < 1e-6));
    }

    #[test]
    fn noise_free_component_has_exact_annual_structure() {
        let spec = SyntheticSpec::default();
        let detrended: Vec<f64> = (1..=spec.len)
            .map(|t| spec.signal(t) - spec.trend_slope * t as f64)
            .collect();
        let m = crate::stats::mean(&detrended);
        let c: Vec<f64> = detrended.iter().map(|v| v - m).collect();
        let lag = spec.period;
        let num: f64 = (lag..c.len()).map(|i| c[i] * c[i - lag]).sum();
        let den: f64 = (lag..c.len()).map(|i| c[i - lag] * c[i - lag]).sum();
        assert!((num / den - 1.0).abs() < 1e-9);
    }

    #[test]
    fn missing_mask_skips_first_period() {
        let spec = SyntheticSpec {
            len: 200,
            missing_fraction: 0.1,
            ..Default::default()
        };
        let s = generate_seasonal_series(&spec, 3).unwrap();
        let miss = s.data.missing_indices();
        assert_eq!(miss.len(), 20);
        assert!(miss.iter().all(|&t| t > 12));
    }

    #[test]
    fn prior_simulation_requires_fixed_xi0() {
        let mut r = rng::stream(1, Purpose::Diagnostics, 0, 0);
        let err = simulate_from_prior(
            &Hyperparameters::default(),
            ModelKind::Seasonal,
            30,
            12,
            &mut r,
        )
        .unwrap_err();
        assert!(err.to_string().contains("must be fixed"));
    }

    #[test]
    fn prior_simulation_keeps_anchors_and_is_reproducible() {
        let h = Hyperparameters {
            tau_shape: 20.0,
            tau_rate: 20.0,
            xi0: Xi0Policy::Fixed(0.0),
            ..Default::default()
        };
        for kind in [ModelKind::Seasonal, ModelKind::Baseline] {
            let a = simulate_from_prior(
                &h,
                kind,
                30,
                12,
                &mut rng::stream(9, Purpose::Diagnostics, 0, 0),
            )
            .unwrap();
            let b = simulate_from_prior(
                &h,
                kind,
                30,
                12,
                &mut rng::stream(9, Purpose::Diagnostics, 0, 0),
            )
            .unwrap();
            assert_eq!(a.0, b.0);
            assert!(a.0.anchors_intact(12));
            assert_eq!(a.0.state_slope[0], 0.5);
        }
    }
}
