//! Monte Carlo moment checks against closed-form expressions.

use std::collections::HashMap;

use tvss::diagnostics::{geweke_hyperparameters, random_fixture};
use tvss::forecast::{sample_predictive_path, ForecastOrigin};
use tvss::gibbs::{GibbsSampler, Quantity};
use tvss::model::{
    gaussian_factors, log_joint, FactorGroup, Hyperparameters, Model, ModelKind, PathKind,
};
use tvss::rng::{stream, Purpose};
use tvss::stats::{mean, variance};
use tvss::synth::simulate_from_prior;

#[test]
fn imputed_observation_has_observation_equation_moments() {
    let h = Hyperparameters::default();
    let mut r = stream(31, Purpose::Diagnostics, 0, 0);
    let fx = random_fixture(ModelKind::Seasonal, 30, 12, &mut r).unwrap();
    let g = GibbsSampler::new(Model::new(&fx.data, &h, ModelKind::Seasonal).unwrap());
    let t = *fx.data.missing_indices().last().unwrap();
    let st0 = &fx.state;
    let sp = st0.seasonal.as_ref().unwrap();
    let mut want_mean = st0.obs_intercept[t] + st0.obs_slope[t] * st0.x[t];
    if t >= 12 {
        want_mean += sp.obs[t] * st0.x[t - 12];
    }
    let want_var = h.observation_scale / st0.tau;

    let mut st = st0.clone();
    let n = 100_000;
    let draws: Vec<f64> = (0..n)
        .map(|_| g.update(&mut st, Quantity::Observation(t), &mut r).unwrap())
        .collect();
    let (m, v) = (mean(&draws), variance(&draws));
    assert!(
        (m - want_mean).abs() < 5.0 * (want_var / n as f64).sqrt(),
        "{m} vs {want_mean}"
    );
    assert!((v / want_var - 1.0).abs() < 0.03, "{v} vs {want_var}");
    // nothing but y[t] moved
    let mut back = st.clone();
    back.y[t] = st0.y[t];
    assert_eq!(&back, st0);
}

#[test]
fn one_step_predictive_moments() {
    let h = Hyperparameters::default();
    let len = 100usize;
    let coefficients = [1.5, 0.4, 0.3, -0.7, 0.9, 0.2];
    let lags: Vec<f64> = (0..12).map(|i| 20.0 + (i as f64).cos() * 4.0).collect();
    let tau = 3.0;
    let origin = ForecastOrigin {
        tau,
        lags: lags.clone(),
        coefficients,
    };

    // step variances at t = T + 1: c / (T+1)^2 for ordinary paths, c / (T+1-s+1)^2 for seasonal
    let k = (len + 1) as f64;
    let ks = (len + 1 - 11) as f64;
    let v = |c: f64, k: f64| c / (k * k) / tau;
    let [a0, a1, a_s, c0, c1, cs] = coefficients;
    let (x_t, lag) = (lags[11], lags[0]);
    let ex = a0 + a1 * x_t + a_s * lag;
    let vx = v(h.state_intercept_scale, k)
        + v(h.state_slope_scale, k) * x_t * x_t
        + v(h.state_seasonal_scale, ks) * lag * lag
        + h.transition_scale / tau;
    let vc1 = v(h.obs_slope_scale, k);
    let ey = c0 + c1 * ex + cs * lag;
    let vy = v(h.obs_intercept_scale, k) + (c1 * c1 + vc1) * (vx + ex * ex) - c1 * c1 * ex * ex
        + v(h.obs_seasonal_scale, ks) * lag * lag
        + h.observation_scale / tau;

    let n = 100_000;
    let ys: Vec<f64> = (0..n)
        .map(|i| {
            let mut r = stream(4, Purpose::Forecast, 0, i as u32);
            sample_predictive_path(&origin, &h, ModelKind::Seasonal, len, 1, &mut r).unwrap()[0]
        })
        .collect();
    let (m, var) = (mean(&ys), variance(&ys));
    assert!((m - ey).abs() < 5.0 * (vy / n as f64).sqrt(), "{m} vs {ey}");
    assert!((var / vy - 1.0).abs() < 0.04, "{var} vs {vy}");
}

#[test]
fn forward_simulation_standardised_residuals_have_unit_mean_square() {
    let h = geweke_hyperparameters();
    for (kind, len) in [(ModelKind::Seasonal, 26), (ModelKind::Baseline, 15)] {
        let mut r = stream(12, Purpose::Diagnostics, 0, 0);
        let mut sums: HashMap<String, (f64, usize)> = HashMap::new();
        for _ in 0..10_000 {
            let (st, data) = simulate_from_prior(&h, kind, len, 12, &mut r).unwrap();
            let m = Model::new(&data, &h, kind).unwrap();
            assert!(log_joint(&st, &m).unwrap().is_finite());
            let factors = gaussian_factors(&st, &m).unwrap();
            assert_eq!(factors.len(), m.gaussian_factor_count());
            for f in factors {
                let key = match f.group {
                    FactorGroup::Increment(p) => format!("increment {}", p.short_name()),
                    g => format!("{g:?}"),
                };
                let e = sums.entry(key).or_default();
                e.0 += f.weight * st.tau * f.residual * f.residual;
                e.1 += 1;
            }
        }
        assert_eq!(sums.len(), 4 + PathKind::for_kind(kind).len());
        for (k, (s, n)) in sums {
            let ms = s / n as f64;
            assert!((ms - 1.0).abs() < 0.05, "{kind} {k}: {ms}");
        }
    }
}
