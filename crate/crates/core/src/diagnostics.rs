//! Verification instruments for the sampler.
//!
//! - A grid oracle that normalises a one-dimensional slice of the log joint
//!   numerically and compares it with the sampler's closed-form conditional.
//! - A Geweke joint-distribution test comparing forward simulation from the
//!   prior against a successive-conditional chain that alternates Gibbs sweeps
//!   with re-simulation of the data.
//! - Trace export and posterior summaries.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Gamma as GammaDist, Normal as NormalDist};

use crate::error::{Error, Result};
use crate::gibbs::{Conditional, Fault, GibbsSampler, PosteriorDraws, Quantity};
use crate::model::{
    log_joint, Hyperparameters, Model, ModelKind, PathKind, SamplerState, SeasonalPaths,
    TimeSeriesData, Xi0Policy, SEASONAL_ANCHOR,
};
use crate::rng::{self, EngineRng, Purpose};
use crate::stats::{batch_means_se, mean, quantile_sorted, sorted, variance};
use crate::synth::{simulate_from_prior, simulate_observations};

/// Half-width of the oracle grid in conditional standard deviations.
pub const GRID_SPAN_SD: f64 = 10.0;
pub const GRID_POINTS: usize = 20_001;
/// Oracle pass threshold on the max absolute log-density error.
pub const ORACLE_TOLERANCE: f64 = 1e-4;
/// Only grid points where the analytic density exceeds this are compared.
const DENSITY_FLOOR: f64 = 1e-12;
/// Geweke pass threshold on |z|.
pub const GEWEKE_Z_LIMIT: f64 = 4.0;
pub const GEWEKE_BATCHES: usize = 100;

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub target: String,
    pub family: String,
    pub kind: ModelKind,
    pub grid_span_sd: f64,
    pub grid_points: usize,
    /// Analytic conditional mass inside the grid.
    pub mass_covered: f64,
    pub max_abs_error: f64,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.max_abs_error.is_finite() && self.max_abs_error < ORACLE_TOLERANCE
    }
}

fn log_sum_exp_trapezoid(logs: &[f64], log_weights: &[f64]) -> f64 {
    let n = logs.len();
    let terms = logs.iter().zip(log_weights).enumerate().map(|(i, (l, w))| {
        let end = if i == 0 || i == n - 1 {
            0.5f64.ln()
        } else {
            0.0
        };
        l + w + end
    });
    let terms: Vec<f64> = terms.collect();
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + terms.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Compares the sampler's full conditional for `target` against the slice
/// of the log joint through `state`, normalised on a fine grid by the
/// trapezoid rule.
pub fn conditional_oracle_check(
    sampler: &GibbsSampler,
    state: &SamplerState,
    target: Quantity,
) -> Result<OracleReport> {
    let model = sampler.model();
    let cond = sampler.conditional(state, target)?;
    let n = GRID_POINTS;

    // grid points, log integration measure per point, analytic mass inside
    let (grid, log_measure, mass) = match cond {
        Conditional::Normal { mean, precision } => {
            let sd = precision.recip().sqrt();
            let lo = mean - GRID_SPAN_SD * sd;
            let step = 2.0 * GRID_SPAN_SD * sd / (n - 1) as f64;
            let grid: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
            let d = NormalDist::new(mean, sd).map_err(|e| Error::Check(e.to_string()))?;
            let mass = d.cdf(grid[n - 1]) - d.cdf(grid[0]);
            (grid, vec![step.ln(); n], mass)
        }
        Conditional::Gamma { shape, rate } => {
            let mode = (shape - 1.0).max(1e-3) / rate;
            let (lo, hi) = ((mode / 10.0).ln(), (mode * 10.0).ln());
            let du = (hi - lo) / (n - 1) as f64;
            let grid: Vec<f64> = (0..n).map(|i| (lo + du * i as f64).exp()).collect();
            let logm = grid.iter().map(|tau| du.ln() + tau.ln()).collect();
            let d = GammaDist::new(shape, rate).map_err(|e| Error::Check(e.to_string()))?;
            let mass = d.cdf(grid[n - 1]) - d.cdf(grid[0]);
            (grid, logm, mass)
        }
    };

    let mut probe = state.clone();
    let mut slice = Vec::with_capacity(n);
    for &v in &grid {
        target.write(&mut probe, v);
        slice.push(log_joint(&probe, model)?);
    }
    let log_norm = log_sum_exp_trapezoid(&slice, &log_measure);

    let mut max_err: f64 = 0.0;
    for (v, lj) in grid.iter().zip(&slice) {
        let analytic = cond.log_density(*v);
        if analytic.exp() > DENSITY_FLOOR {
            max_err = max_err.max((lj - log_norm - analytic).abs());
        }
    }
    if !max_err.is_finite() {
        max_err = f64::INFINITY;
    }
    Ok(OracleReport {
        target: target.to_string(),
        family: family_name(target, model.len(), model.period()),
        kind: model.kind,
        grid_span_sd: GRID_SPAN_SD,
        grid_points: n,
        mass_covered: mass,
        max_abs_error: max_err,
    })
}

/// Conditional family of a coordinate, distinguishing the four index regimes
/// of the latent path and the boundary `t = T` for coefficients.
pub fn family_name(q: Quantity, len: usize, period: usize) -> String {
    match q {
        Quantity::Tau => "tau".into(),
        Quantity::Mu0 => "mu0".into(),
        Quantity::Latent(0) => "x0".into(),
        Quantity::Latent(t) if t < period => "x[t<s]".into(),
        Quantity::Latent(t) if t + period <= len => "x[s<=t<=T-s]".into(),
        Quantity::Latent(t) if t < len => "x[T-s<t<T]".into(),
        Quantity::Latent(_) => "x[T]".into(),
        Quantity::Coefficient(p, t) if t == len => format!("{}[T]", p.short_name()),
        Quantity::Coefficient(p, _) => format!("{}[t]", p.short_name()),
        Quantity::Observation(_) => "y*".into(),
    }
}

/// A randomized oracle test bed: observed data with a few gaps and an
/// arbitrary (not necessarily plausible) state.
#[derive(Clone, Debug)]
pub struct OracleFixture {
    pub data: TimeSeriesData,
    pub state: SamplerState,
}

/// Builds a random fixture of length `len` for `kind`, with the state
/// scattered around the data so every residual is non-zero.
pub fn random_fixture<R: Rng + ?Sized>(
    kind: ModelKind,
    len: usize,
    period: usize,
    rng: &mut R,
) -> Result<OracleFixture> {
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut values: Vec<Option<f64>> = (1..=len)
        .map(|t| {
            let phase = 2.0 * std::f64::consts::PI * t as f64 / period as f64;
            Some(26.0 + 5.0 * phase.sin() + noise.sample(rng))
        })
        .collect();
    for _ in 0..2 {
        let t = rng.random_range(1..=len);
        values[t - 1] = None;
    }
    let data = TimeSeriesData::new(values, period, "oracle-fixture")?;

    let jitter = |rng: &mut R, sd: f64| -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        sd * z
    };
    let xi0 = crate::model::empirical_bayes_xi0(&data)?;
    let mut x: Vec<f64> = Vec::with_capacity(len + 1);
    x.push(xi0 + jitter(rng, 2.0));
    for t in 1..=len {
        let base = data.get(t).unwrap_or(xi0);
        x.push(base + jitter(rng, 2.0));
    }
    let mut y = vec![0.0];
    y.extend((1..=len).map(|t| data.get(t).unwrap_or_else(|| xi0 + jitter(rng, 3.0))));
    let path = |rng: &mut R, p: PathKind| -> Vec<f64> {
        let mut v = vec![0.0; len + 1];
        let a = p.anchor_index(period);
        v[a] = p.anchor();
        for slot in &mut v[a + 1..] {
            *slot = p.anchor() + jitter(rng, 0.3);
        }
        v
    };
    let state_intercept = path(rng, PathKind::StateIntercept);
    let state_slope = path(rng, PathKind::StateSlope);
    let obs_intercept = path(rng, PathKind::ObsIntercept);
    let obs_slope = path(rng, PathKind::ObsSlope);
    let seasonal = kind.is_seasonal().then(|| SeasonalPaths {
        state: path(rng, PathKind::StateSeasonal),
        obs: path(rng, PathKind::ObsSeasonal),
    });
    debug_assert!(seasonal
        .as_ref()
        .is_none_or(|s| s.state[period - 1] == SEASONAL_ANCHOR));
    let state = SamplerState {
        tau: rng.random_range(0.2..5.0),
        mu0: xi0 + jitter(rng, 3.0),
        x,
        state_intercept,
        state_slope,
        obs_intercept,
        obs_slope,
        seasonal,
        y,
    };
    Ok(OracleFixture { data, state })
}

/// Coordinates exercised per fixture: one of every conditional family.
pub fn family_representatives<R: Rng + ?Sized>(
    sampler: &GibbsSampler,
    rng: &mut R,
) -> Vec<Quantity> {
    let model = sampler.model();
    let (len, s) = (model.len(), model.period());
    let mut out = vec![Quantity::Tau, Quantity::Mu0, Quantity::Latent(0)];
    out.push(Quantity::Latent(rng.random_range(1..s)));
    if s <= len - s {
        out.push(Quantity::Latent(rng.random_range(s..=len - s)));
    }
    out.push(Quantity::Latent(rng.random_range(len - s + 1..len)));
    out.push(Quantity::Latent(len));
    for &p in PathKind::for_kind(model.kind) {
        out.push(Quantity::Coefficient(
            p,
            rng.random_range(p.first_free(s)..len),
        ));
        out.push(Quantity::Coefficient(p, len));
    }
    out.extend(
        model
            .data
            .missing_indices()
            .into_iter()
            .map(Quantity::Observation),
    );
    out
}

/// Oracle checks over `n_states` random fixtures per model kind
/// (seasonal at `T = 26`, baseline at `T = 15`, period 12).
pub fn oracle_suite(n_states: usize, seed: u64, fault: Option<Fault>) -> Result<Vec<OracleReport>> {
    let hyper = Hyperparameters::default();
    let mut reports = Vec::new();
    for (kind, len) in [(ModelKind::Seasonal, 26), (ModelKind::Baseline, 15)] {
        let mut r = rng::stream(seed, Purpose::Diagnostics, kind as u32, 0);
        for _ in 0..n_states {
            let fx = random_fixture(kind, len, 12, &mut r)?;
            let model = Model::new(&fx.data, &hyper, kind)?;
            let sampler = GibbsSampler::new(model).with_fault(fault);
            for q in family_representatives(&sampler, &mut r) {
                reports.push(conditional_oracle_check(&sampler, &fx.state, q)?);
            }
        }
    }
    Ok(reports)
}

/// Prior constants used by the Geweke test: a concentrated precision prior,
/// small slope scalings and distinct values everywhere so that swapped
/// constants cannot cancel.
pub fn geweke_hyperparameters() -> Hyperparameters {
    Hyperparameters {
        tau_shape: 40.0,
        tau_rate: 42.0,
        mu0_scale: 2.0,
        x0_scale: 1.5,
        state_intercept_scale: 1.0,
        state_slope_scale: 0.002,
        state_seasonal_scale: 0.0015,
        obs_intercept_scale: 0.8,
        obs_slope_scale: 0.003,
        obs_seasonal_scale: 0.0025,
        transition_scale: 1.0,
        observation_scale: 0.7,
        xi0: Xi0Policy::Fixed(0.0),
    }
}

/// Names of the recorded Geweke statistics, first moments then squares.
pub fn geweke_statistic_names(len: usize, period: usize) -> Vec<String> {
    let firsts = vec![
        "tau".to_string(),
        "mu0".to_string(),
        "mean(x)".to_string(),
        format!("bt1[{}]", len.div_ceil(2)),
        format!("b1[{len}]"),
        format!("y[{period}]"),
    ];
    let squares: Vec<String> = firsts.iter().map(|n| format!("{n}^2")).collect();
    firsts.into_iter().chain(squares).collect()
}

fn geweke_statistics(state: &SamplerState, period: usize) -> Vec<f64> {
    let len = state.len();
    let firsts = [
        state.tau,
        state.mu0,
        mean(&state.x[1..]),
        state.state_slope[len.div_ceil(2)],
        state.obs_slope[len],
        state.y[period],
    ];
    firsts
        .iter()
        .copied()
        .chain(firsts.iter().map(|v| v * v))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct GewekeStatistic {
    pub name: String,
    pub mean_a: f64,
    pub mean_b: f64,
    pub se_a: f64,
    pub se_b: f64,
    pub z: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GewekeReport {
    pub kind: ModelKind,
    pub len: usize,
    pub n_samples: usize,
    pub sweeps_per_sample: usize,
    pub statistics: Vec<GewekeStatistic>,
}

impl GewekeReport {
    pub fn max_abs_z(&self) -> f64 {
        self.statistics
            .iter()
            .map(|s| s.z.abs())
            .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_abs_z() < GEWEKE_Z_LIMIT
    }
}

/// Configuration of one Geweke run.
#[derive(Clone, Debug)]
pub struct GewekeConfig {
    pub kind: ModelKind,
    pub len: usize,
    pub period: usize,
    pub n_samples: usize,
    pub sweeps_per_sample: usize,
    pub seed: u64,
    pub fault: Option<Fault>,
}

impl GewekeConfig {
    pub fn new(kind: ModelKind, len: usize, n_samples: usize, seed: u64) -> Self {
        Self {
            kind,
            len,
            period: 12,
            n_samples,
            sweeps_per_sample: 50,
            seed,
            fault: None,
        }
    }

    fn validate(&self) -> Result<()> {
        let min = if self.kind.is_seasonal() {
            2 * self.period + 2
        } else {
            2
        };
        if self.len < min {
            return Err(Error::config(format!(
                "Geweke test needs T >= {min} for the {} model, got {}",
                self.kind, self.len
            )));
        }
        if self.n_samples < 2 * GEWEKE_BATCHES || self.sweeps_per_sample == 0 {
            return Err(Error::config(
                "Geweke test needs more samples and at least one sweep per sample",
            ));
        }
        Ok(())
    }
}

fn forward_samples(
    hyper: &Hyperparameters,
    cfg: &GewekeConfig,
    rng: &mut EngineRng,
) -> Result<Vec<Vec<f64>>> {
    (0..cfg.n_samples)
        .map(|_| {
            let (state, _) = simulate_from_prior(hyper, cfg.kind, cfg.len, cfg.period, rng)?;
            Ok(geweke_statistics(&state, cfg.period))
        })
        .collect()
}

fn successive_samples(
    hyper: &Hyperparameters,
    cfg: &GewekeConfig,
    rng: &mut EngineRng,
) -> Result<Vec<Vec<f64>>> {
    let (mut state, data) = simulate_from_prior(hyper, cfg.kind, cfg.len, cfg.period, rng)?;
    // With no missing values and a fixed xi0 the sampler reads the data only
    // through `state.y`, so re-simulating `state.y` replaces the data set.
    let model = Model::new(&data, hyper, cfg.kind)?;
    let sampler = GibbsSampler::new(model).with_fault(cfg.fault);
    let mut out = Vec::with_capacity(cfg.n_samples);
    for _ in 0..cfg.n_samples {
        for _ in 0..cfg.sweeps_per_sample {
            sampler.sweep(&mut state, rng)?;
        }
        simulate_observations(&mut state, cfg.kind, cfg.period, hyper, rng);
        out.push(geweke_statistics(&state, cfg.period));
    }
    Ok(out)
}

fn compare(
    names: Vec<String>,
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    b_autocorrelated: bool,
) -> Result<Vec<GewekeStatistic>> {
    names
        .into_iter()
        .enumerate()
        .map(|(j, name)| {
            let ca: Vec<f64> = a.iter().map(|r| r[j]).collect();
            let cb: Vec<f64> = b.iter().map(|r| r[j]).collect();
            let se_a = (variance(&ca) / ca.len() as f64).sqrt();
            let se_b = if b_autocorrelated {
                batch_means_se(&cb, GEWEKE_BATCHES)?
            } else {
                (variance(&cb) / cb.len() as f64).sqrt()
            };
            let (mean_a, mean_b) = (mean(&ca), mean(&cb));
            let z = (mean_a - mean_b) / (se_a * se_a + se_b * se_b).sqrt();
            Ok(GewekeStatistic {
                name,
                mean_a,
                mean_b,
                se_a,
                se_b,
                z,
            })
        })
        .collect()
}

/// Forward (marginal-conditional) samples against successive-conditional
/// samples. A wrong full conditional shifts the stationary distribution of
/// the second sampler and shows up as a large |z|.
pub fn geweke_joint_test(hyper: &Hyperparameters, cfg: &GewekeConfig) -> Result<GewekeReport> {
    cfg.validate()?;
    let mut ra = rng::stream(cfg.seed, Purpose::Diagnostics, 100 + cfg.kind as u32, 0);
    let mut rb = rng::stream(cfg.seed, Purpose::Diagnostics, 100 + cfg.kind as u32, 1);
    let a = forward_samples(hyper, cfg, &mut ra)?;
    let b = successive_samples(hyper, cfg, &mut rb)?;
    Ok(GewekeReport {
        kind: cfg.kind,
        len: cfg.len,
        n_samples: cfg.n_samples,
        sweeps_per_sample: cfg.sweeps_per_sample,
        statistics: compare(geweke_statistic_names(cfg.len, cfg.period), &a, &b, true)?,
    })
}

/// Harness self-test: two independent forward sample sets.
pub fn geweke_self_test(hyper: &Hyperparameters, cfg: &GewekeConfig) -> Result<GewekeReport> {
    cfg.validate()?;
    let mut ra = rng::stream(cfg.seed, Purpose::Diagnostics, 200 + cfg.kind as u32, 0);
    let mut rb = rng::stream(cfg.seed, Purpose::Diagnostics, 200 + cfg.kind as u32, 1);
    let a = forward_samples(hyper, cfg, &mut ra)?;
    let b = forward_samples(hyper, cfg, &mut rb)?;
    Ok(GewekeReport {
        kind: cfg.kind,
        len: cfg.len,
        n_samples: cfg.n_samples,
        sweeps_per_sample: 0,
        statistics: compare(geweke_statistic_names(cfg.len, cfg.period), &a, &b, false)?,
    })
}

fn resolve_selection(draws: &PosteriorDraws, selection: &[Quantity]) -> Result<Vec<usize>> {
    if selection.is_empty() {
        return Err(Error::config("empty trace selection"));
    }
    selection
        .iter()
        .map(|q| {
            draws.column_index(*q).ok_or_else(|| {
                let valid: Vec<String> =
                    draws.quantities().iter().map(ToString::to_string).collect();
                Error::config(format!(
                    "{q} is not retained; valid names: {}",
                    valid.join(", ")
                ))
            })
        })
        .collect()
}

/// Writes one CSV row per retained draw and one column per selected quantity.
pub fn trace_export<W: Write>(
    draws: &PosteriorDraws,
    selection: &[Quantity],
    out: W,
) -> Result<()> {
    let cols = resolve_selection(draws, selection)?;
    let mut w = crate::io::csv_writer(out);
    let to_io = crate::io::csv_io;
    w.write_record(selection.iter().map(ToString::to_string))
        .map_err(to_io)?;
    for i in 0..draws.n_draws() {
        let row = draws.row(i);
        w.write_record(cols.iter().map(|&j| crate::io::fmt_f64(row[j])))
            .map_err(to_io)?;
    }
    w.flush().map_err(|e| Error::io("trace", e))?;
    Ok(())
}

pub fn trace_export_to_path(
    draws: &PosteriorDraws,
    selection: &[Quantity],
    path: &Path,
) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    trace_export(draws, selection, std::io::BufWriter::new(f))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryStats {
    pub quantity: String,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
}

/// Moments and quantiles of a plain sample.
pub fn summarize(name: impl Into<String>, values: &[f64]) -> Result<SummaryStats> {
    if values.is_empty() {
        return Err(Error::data("no draws to summarise"));
    }
    let s = sorted(values);
    Ok(SummaryStats {
        quantity: name.into(),
        mean: mean(values),
        sd: variance(values).sqrt(),
        q025: quantile_sorted(&s, 0.025),
        q50: quantile_sorted(&s, 0.5),
        q975: quantile_sorted(&s, 0.975),
    })
}

pub fn summary_stats(draws: &PosteriorDraws, q: Quantity) -> Result<SummaryStats> {
    let col = draws
        .column(q)
        .ok_or_else(|| Error::config(format!("{q} is not retained")))?;
    summarize(q.to_string(), &col)
}
