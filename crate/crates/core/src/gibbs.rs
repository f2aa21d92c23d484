//! Deterministic-scan Gibbs sampler.
//!
//! Every unknown has a closed-form univariate full conditional: a Gamma for
//! the precision `tau` and a normal for everything else. Each normal
//! conditional is assembled from the Gaussian factors of the joint that touch
//! the coordinate, written as `w (g * theta - h)^2 / 2 * tau`, so that the
//! conditional precision is `tau * sum(w g^2)` and the mean `sum(w g h) / sum(w g^2)`.
//! Factors indexed past `T` (successor increments, future transitions and
//! observations) do not exist and are never accumulated.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{
    step_weight, Hyperparameters, McmcConfig, Model, ModelKind, PathKind, SamplerState,
    SeasonalPaths, TimeSeriesData, SEASONAL_ANCHOR,
};
use crate::rng::{self, EngineRng, Purpose};

/// A scalar unknown of the model, also used to name retained trace columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantity {
    Tau,
    Mu0,
    /// `X_t`, `t` in `0..=T`.
    Latent(usize),
    Coefficient(PathKind, usize),
    /// Completed observation `Y_t`; sampled only where the data are missing.
    Observation(usize),
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Tau => f.write_str("tau"),
            Quantity::Mu0 => f.write_str("mu0"),
            Quantity::Latent(t) => write!(f, "x[{t}]"),
            Quantity::Coefficient(p, t) => write!(f, "{}[{t}]", p.short_name()),
            Quantity::Observation(t) => write!(f, "y[{t}]"),
        }
    }
}

pub const QUANTITY_SYNTAX: &str =
    "tau, mu0, x[t], bt0[t], bt1[t], bts[t], b0[t], b1[t], bs[t], y[t]";

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "tau" => return Ok(Quantity::Tau),
            "mu0" => return Ok(Quantity::Mu0),
            _ => {}
        }
        let bad = || {
            Error::config(format!(
                "unknown quantity `{s}`; valid names: {QUANTITY_SYNTAX}"
            ))
        };
        let (name, rest) = s.split_once('[').ok_or_else(bad)?;
        let idx: usize = rest
            .strip_suffix(']')
            .and_then(|i| i.parse().ok())
            .ok_or_else(bad)?;
        let q = match name {
            "x" => Quantity::Latent(idx),
            "y" => Quantity::Observation(idx),
            other => {
                let path = PathKind::ALL
                    .into_iter()
                    .find(|p| p.short_name() == other)
                    .ok_or_else(bad)?;
                Quantity::Coefficient(path, idx)
            }
        };
        Ok(q)
    }
}

impl Quantity {
    /// Whether the quantity exists for a series of length `len`.
    pub fn exists(self, len: usize, kind: ModelKind) -> bool {
        match self {
            Quantity::Tau | Quantity::Mu0 => true,
            Quantity::Latent(t) => t <= len,
            Quantity::Coefficient(p, t) => t <= len && (kind.is_seasonal() || !p.is_seasonal()),
            Quantity::Observation(t) => (1..=len).contains(&t),
        }
    }

    pub fn read(self, state: &SamplerState) -> Option<f64> {
        match self {
            Quantity::Tau => Some(state.tau),
            Quantity::Mu0 => Some(state.mu0),
            Quantity::Latent(t) => state.x.get(t).copied(),
            Quantity::Coefficient(p, t) => state.path(p).and_then(|v| v.get(t).copied()),
            Quantity::Observation(t) => state.y.get(t).copied().filter(|_| t >= 1),
        }
    }

    /// Overwrites the quantity in `state`; returns false if it has no slot there.
    pub fn write(self, state: &mut SamplerState, v: f64) -> bool {
        let slot = match self {
            Quantity::Tau => Some(&mut state.tau),
            Quantity::Mu0 => Some(&mut state.mu0),
            Quantity::Latent(t) => state.x.get_mut(t),
            Quantity::Coefficient(p, t) => state.path_mut(p).and_then(|v| v.get_mut(t)),
            Quantity::Observation(t) if t >= 1 => state.y.get_mut(t),
            Quantity::Observation(_) => None,
        };
        match slot {
            Some(s) => {
                *s = v;
                true
            }
            None => false,
        }
    }
}

/// A univariate full conditional.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Conditional {
    /// Normal with the given mean and precision (inverse variance).
    Normal { mean: f64, precision: f64 },
    /// Gamma with shape and rate.
    Gamma { shape: f64, rate: f64 },
}

impl Conditional {
    pub fn log_density(&self, v: f64) -> f64 {
        match *self {
            Conditional::Normal { mean, precision } => {
                let d = v - mean;
                0.5 * (precision / (2.0 * std::f64::consts::PI)).ln() - 0.5 * precision * d * d
            }
            Conditional::Gamma { shape, rate } => {
                if v <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                shape * rate.ln() - statrs::function::gamma::ln_gamma(shape)
                    + (shape - 1.0) * v.ln()
                    - rate * v
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Conditional::Normal { mean, .. } => mean,
            Conditional::Gamma { shape, rate } => shape / rate,
        }
    }

    pub fn sd(&self) -> f64 {
        match *self {
            Conditional::Normal { precision, .. } => precision.recip().sqrt(),
            Conditional::Gamma { shape, rate } => shape.sqrt() / rate,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Conditional::Normal { mean, precision } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + z / precision.sqrt()
            }
            Conditional::Gamma { shape, rate } => match Gamma::new(shape, rate.recip()) {
                Ok(g) => g.sample(rng),
                Err(_) => f64::NAN,
            },
        }
    }
}

/// Deliberate sampler defects, used only to check that the verification
/// harness notices a wrong conditional.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Draw the observation-intercept coefficients with twice the correct variance.
    InflateObsInterceptVariance,
}

impl FromStr for Fault {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inflate-b0-variance" => Ok(Fault::InflateObsInterceptVariance),
            other => Err(Error::config(format!(
                "unknown fault `{other}` (inflate-b0-variance)"
            ))),
        }
    }
}

#[derive(Default, Clone, Copy)]
struct Accum {
    prec: f64,
    lin: f64,
}

impl Accum {
    /// Adds the factor `w (g theta - h)^2 / 2`.
    #[inline(always)]
    fn add(&mut self, w: f64, g: f64, h: f64) {
        self.prec += w * g * g;
        self.lin += w * g * h;
    }

    #[inline(always)]
    fn finish(self, tau: f64) -> Conditional {
        Conditional::Normal {
            mean: self.lin / self.prec,
            precision: self.prec * tau,
        }
    }
}

/// Full-conditional sampler for one model.
#[derive(Clone, Debug)]
pub struct GibbsSampler<'a> {
    model: Model<'a>,
    missing: Vec<usize>,
    fault: Option<Fault>,
    inv_cx: f64,
    inv_cy: f64,
}

impl<'a> GibbsSampler<'a> {
    pub fn new(model: Model<'a>) -> Self {
        let missing = model.data.missing_indices();
        let inv_cx = model.hyper.transition_scale.recip();
        let inv_cy = model.hyper.observation_scale.recip();
        Self {
            model,
            missing,
            fault: None,
            inv_cx,
            inv_cy,
        }
    }

    pub fn with_fault(mut self, fault: Option<Fault>) -> Self {
        self.fault = fault;
        self
    }

    pub fn model(&self) -> &Model<'a> {
        &self.model
    }

    fn hyper(&self) -> &Hyperparameters {
        self.model.hyper
    }

    fn seasonal<'s>(&self, state: &'s SamplerState) -> Option<&'s SeasonalPaths> {
        if self.model.kind.is_seasonal() {
            state.seasonal.as_ref()
        } else {
            None
        }
    }

    /// Deterministic starting point: `tau = 1`, `mu0 = X_0 = xi0`, latent path
    /// equal to the data (or `xi0` where missing), coefficient paths flat at
    /// their anchors, and missing observations filled with `xi0`.
    pub fn init_chain(&self) -> SamplerState {
        let data = self.model.data;
        let len = data.len();
        let s = data.period();
        let xi0 = self.model.xi0;
        let mut x = Vec::with_capacity(len + 1);
        x.push(xi0);
        x.extend((1..=len).map(|t| data.get(t).unwrap_or(xi0)));
        let mut y = x.clone();
        y[0] = 0.0;
        let flat = |p: PathKind| vec![p.anchor(); len + 1];
        let seasonal = self.model.kind.is_seasonal().then(|| {
            let mut path = vec![0.0; len + 1];
            path[s - 1..].fill(SEASONAL_ANCHOR);
            SeasonalPaths {
                state: path.clone(),
                obs: path,
            }
        });
        SamplerState {
            tau: 1.0,
            mu0: xi0,
            x,
            state_intercept: flat(PathKind::StateIntercept),
            state_slope: flat(PathKind::StateSlope),
            obs_intercept: flat(PathKind::ObsIntercept),
            obs_slope: flat(PathKind::ObsSlope),
            seasonal,
            y,
        }
    }

    /// `b + sum(w r^2) / 2` over every Gaussian factor of the joint.
    pub fn tau_rate(&self, state: &SamplerState) -> f64 {
        let h = self.hyper();
        let len = self.model.len();
        let s = self.model.period();
        let mut q = (state.mu0 - self.model.xi0).powi(2) / h.mu0_scale
            + (state.x[0] - state.mu0).powi(2) / h.x0_scale;
        for &p in PathKind::for_kind(self.model.kind) {
            let v = state.path(p).expect("path present for model kind");
            let c = h.path_scale(p);
            let first = p.first_free(s);
            let mut acc = 0.0;
            for t in first..=len {
                let k = (t + 1 - first) as f64;
                let d = v[t] - v[t - 1];
                acc += k * k * d * d;
            }
            q += acc / c;
        }
        let (mut qx, mut qy) = (0.0, 0.0);
        let seas = self.seasonal(state);
        for t in 1..=len {
            let mut rx =
                state.x[t] - state.state_intercept[t] - state.state_slope[t] * state.x[t - 1];
            let mut ry = state.y[t] - state.obs_intercept[t] - state.obs_slope[t] * state.x[t];
            if let Some(sp) = seas {
                if t >= s {
                    rx -= sp.state[t] * state.x[t - s];
                    ry -= sp.obs[t] * state.x[t - s];
                }
            }
            qx += rx * rx;
            qy += ry * ry;
        }
        q += qx * self.inv_cx + qy * self.inv_cy;
        h.tau_rate + 0.5 * q
    }

    fn tau_conditional(&self, state: &SamplerState) -> Result<Conditional> {
        let rate = self.tau_rate(state);
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::Numerical {
                update: "tau".into(),
                message: format!("non-positive or non-finite Gamma rate {rate}"),
            });
        }
        Ok(Conditional::Gamma {
            shape: self.model.tau_posterior_shape(),
            rate,
        })
    }

    fn mu0_conditional(&self, state: &SamplerState) -> Conditional {
        let h = self.hyper();
        let mut acc = Accum::default();
        acc.add(h.mu0_scale.recip(), 1.0, self.model.xi0);
        acc.add(h.x0_scale.recip(), 1.0, state.x[0]);
        acc.finish(state.tau)
    }

    #[inline]
    fn latent_conditional(&self, state: &SamplerState, j: usize) -> Conditional {
        let len = self.model.len();
        let s = self.model.period();
        let seas = self.seasonal(state);
        let x = &state.x;
        let (wx, wy) = (self.inv_cx, self.inv_cy);
        let mut acc = Accum::default();

        if j == 0 {
            acc.add(self.hyper().x0_scale.recip(), 1.0, state.mu0);
        } else {
            // own transition and own observation
            let mut xm = state.state_intercept[j] + state.state_slope[j] * x[j - 1];
            let mut yrest = state.y[j] - state.obs_intercept[j];
            if let (Some(sp), true) = (seas, j >= s) {
                xm += sp.state[j] * x[j - s];
                yrest -= sp.obs[j] * x[j - s];
            }
            acc.add(wx, 1.0, xm);
            acc.add(wy, state.obs_slope[j], yrest);
        }
        let next = j + 1;
        if next <= len {
            let mut rest = x[next] - state.state_intercept[next];
            if let (Some(sp), true) = (seas, next >= s) {
                rest -= sp.state[next] * x[next - s];
            }
            acc.add(wx, state.state_slope[next], rest);
        }
        if let Some(sp) = seas {
            let ahead = j + s;
            if ahead <= len {
                let rest = x[ahead]
                    - state.state_intercept[ahead]
                    - state.state_slope[ahead] * x[ahead - 1];
                acc.add(wx, sp.state[ahead], rest);
                let rest =
                    state.y[ahead] - state.obs_intercept[ahead] - state.obs_slope[ahead] * x[ahead];
                acc.add(wy, sp.obs[ahead], rest);
            }
        }
        acc.finish(state.tau)
    }

    #[inline]
    fn coefficient_conditional(
        &self,
        state: &SamplerState,
        path: PathKind,
        t: usize,
    ) -> Conditional {
        let len = self.model.len();
        let s = self.model.period();
        let h = self.hyper();
        let x = &state.x;
        let seas = self.seasonal(state);
        let v = state.path(path).expect("path present for model kind");

        let mut acc = Accum::default();
        acc.add(step_weight(path, t, s, h), 1.0, v[t - 1]);
        if t < len {
            acc.add(step_weight(path, t + 1, s, h), 1.0, v[t + 1]);
        }

        let lag = |sel: fn(&SeasonalPaths) -> &Vec<f64>| match seas {
            Some(sp) if t >= s => sel(sp)[t] * x[t - s],
            _ => 0.0,
        };
        let (w, reg, rest) = match path {
            PathKind::StateIntercept => (
                self.inv_cx,
                1.0,
                x[t] - state.state_slope[t] * x[t - 1] - lag(|sp| &sp.state),
            ),
            PathKind::StateSlope => (
                self.inv_cx,
                x[t - 1],
                x[t] - state.state_intercept[t] - lag(|sp| &sp.state),
            ),
            PathKind::StateSeasonal => (
                self.inv_cx,
                x[t - s],
                x[t] - state.state_intercept[t] - state.state_slope[t] * x[t - 1],
            ),
            PathKind::ObsIntercept => (
                self.inv_cy,
                1.0,
                state.y[t] - state.obs_slope[t] * x[t] - lag(|sp| &sp.obs),
            ),
            PathKind::ObsSlope => (
                self.inv_cy,
                x[t],
                state.y[t] - state.obs_intercept[t] - lag(|sp| &sp.obs),
            ),
            PathKind::ObsSeasonal => (
                self.inv_cy,
                x[t - s],
                state.y[t] - state.obs_intercept[t] - state.obs_slope[t] * x[t],
            ),
        };
        acc.add(w, reg, rest);
        let mut cond = acc.finish(state.tau);
        if let (Some(Fault::InflateObsInterceptVariance), PathKind::ObsIntercept) =
            (self.fault, path)
        {
            if let Conditional::Normal { precision, .. } = &mut cond {
                *precision *= 0.5;
            }
        }
        cond
    }

    fn imputation_conditional(&self, state: &SamplerState, t: usize) -> Conditional {
        let s = self.model.period();
        let mut mean = state.obs_intercept[t] + state.obs_slope[t] * state.x[t];
        if let (Some(sp), true) = (self.seasonal(state), t >= s) {
            mean += sp.obs[t] * state.x[t - s];
        }
        Conditional::Normal {
            mean,
            precision: state.tau * self.inv_cy,
        }
    }

    /// Checks that `q` is a sampled coordinate of this model.
    pub fn check_coordinate(&self, q: Quantity) -> Result<()> {
        let len = self.model.len();
        let s = self.model.period();
        let ok = match q {
            Quantity::Tau | Quantity::Mu0 => true,
            Quantity::Latent(t) => t <= len,
            Quantity::Coefficient(p, t) => {
                (self.model.kind.is_seasonal() || !p.is_seasonal())
                    && t >= p.first_free(s)
                    && t <= len
            }
            Quantity::Observation(t) => {
                if !(1..=len).contains(&t) {
                    false
                } else if !self.model.data.is_missing(t) {
                    return Err(Error::data(format!(
                        "y[{t}] is observed; imputation never overwrites data"
                    )));
                } else {
                    true
                }
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!(
                "{q} is not a sampled coordinate of this model"
            )))
        }
    }

    /// Full conditional of one coordinate given everything else in `state`.
    pub fn conditional(&self, state: &SamplerState, q: Quantity) -> Result<Conditional> {
        self.check_coordinate(q)?;
        state.check_shape(self.model.len(), self.model.kind)?;
        self.conditional_unchecked(state, q)
    }

    #[inline]
    fn conditional_unchecked(&self, state: &SamplerState, q: Quantity) -> Result<Conditional> {
        Ok(match q {
            Quantity::Tau => return self.tau_conditional(state),
            Quantity::Mu0 => self.mu0_conditional(state),
            Quantity::Latent(t) => self.latent_conditional(state, t),
            Quantity::Coefficient(p, t) => self.coefficient_conditional(state, p, t),
            Quantity::Observation(t) => self.imputation_conditional(state, t),
        })
    }

    #[inline]
    fn update_unchecked<R: Rng + ?Sized>(
        &self,
        state: &mut SamplerState,
        q: Quantity,
        rng: &mut R,
    ) -> Result<f64> {
        let v = self.conditional_unchecked(state, q)?.sample(rng);
        if !v.is_finite() || (q == Quantity::Tau && v <= 0.0) {
            return Err(Error::Numerical {
                update: q.to_string(),
                message: format!("drew invalid value {v}"),
            });
        }
        q.write(state, v);
        Ok(v)
    }

    /// Draws one coordinate from its full conditional and stores it.
    pub fn update<R: Rng + ?Sized>(
        &self,
        state: &mut SamplerState,
        q: Quantity,
        rng: &mut R,
    ) -> Result<f64> {
        self.check_coordinate(q)?;
        state.check_shape(self.model.len(), self.model.kind)?;
        self.update_unchecked(state, q, rng)
    }

    /// Every sampled coordinate, in sweep order.
    pub fn coordinates(&self) -> Vec<Quantity> {
        let len = self.model.len();
        let s = self.model.period();
        let mut out = vec![Quantity::Tau, Quantity::Mu0];
        out.extend((0..=len).map(Quantity::Latent));
        for &p in PathKind::for_kind(self.model.kind) {
            out.extend((p.first_free(s)..=len).map(|t| Quantity::Coefficient(p, t)));
        }
        out.extend(self.missing.iter().map(|&t| Quantity::Observation(t)));
        out
    }

    /// One full deterministic scan: tau, mu0, X_0..X_T, state paths, observation
    /// paths, then missing observations. Each draw sees the latest values.
    pub fn sweep<R: Rng + ?Sized>(&self, state: &mut SamplerState, rng: &mut R) -> Result<()> {
        let len = self.model.len();
        let s = self.model.period();
        state.check_shape(len, self.model.kind)?;
        self.update_unchecked(state, Quantity::Tau, rng)?;
        self.update_unchecked(state, Quantity::Mu0, rng)?;
        for t in 0..=len {
            self.update_unchecked(state, Quantity::Latent(t), rng)?;
        }
        for &p in PathKind::for_kind(self.model.kind) {
            for t in p.first_free(s)..=len {
                self.update_unchecked(state, Quantity::Coefficient(p, t), rng)?;
            }
        }
        for &t in &self.missing {
            self.update_unchecked(state, Quantity::Observation(t), rng)?;
        }
        Ok(())
    }
}

/// Options controlling what a chain retains.
#[derive(Clone, Debug, Default)]
pub struct ChainOptions {
    /// Extra quantities to record on top of the always-retained set.
    pub track: Vec<Quantity>,
    /// Record every sampled coordinate (memory grows with `T`).
    pub keep_all: bool,
    /// Series index used to select the RNG stream.
    pub series_index: u32,
    pub fault: Option<Fault>,
}

/// Retained post-burn-in draws, stored as a dense draw-by-quantity table.
#[derive(Clone, Debug)]
pub struct PosteriorDraws {
    pub kind: ModelKind,
    pub config: McmcConfig,
    pub xi0: f64,
    pub period: usize,
    pub len: usize,
    pub label: String,
    pub sampling_time: Duration,
    quantities: Vec<Quantity>,
    index: HashMap<Quantity, usize>,
    values: Vec<f64>,
}

impl PosteriorDraws {
    fn new(model: &Model, config: &McmcConfig, quantities: Vec<Quantity>) -> Self {
        let index = quantities
            .iter()
            .enumerate()
            .map(|(i, q)| (*q, i))
            .collect();
        Self {
            kind: model.kind,
            config: config.clone(),
            xi0: model.xi0,
            period: model.period(),
            len: model.len(),
            label: model.data.label.clone(),
            sampling_time: Duration::ZERO,
            quantities,
            index,
            values: Vec::with_capacity(0),
        }
    }

    fn record(&mut self, state: &SamplerState) {
        self.values.extend(
            self.quantities
                .iter()
                .map(|q| q.read(state).unwrap_or(f64::NAN)),
        );
    }

    /// Number of retained draws.
    pub fn n_draws(&self) -> usize {
        if self.quantities.is_empty() {
            0
        } else {
            self.values.len() / self.quantities.len()
        }
    }

    pub fn quantities(&self) -> &[Quantity] {
        &self.quantities
    }

    pub fn contains(&self, q: Quantity) -> bool {
        self.index.contains_key(&q)
    }

    pub fn column_index(&self, q: Quantity) -> Option<usize> {
        self.index.get(&q).copied()
    }

    /// Retained values of draw `i`, in [`Self::quantities`] order.
    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.quantities.len();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn column(&self, q: Quantity) -> Option<Vec<f64>> {
        let j = self.column_index(q)?;
        let w = self.quantities.len();
        Some(self.values.iter().skip(j).step_by(w).copied().collect())
    }

    pub fn value(&self, draw: usize, q: Quantity) -> Option<f64> {
        self.column_index(q).map(|j| self.row(draw)[j])
    }
}

/// Quantities every chain retains: `tau`, `mu0`, `X_0`, the last `s` latent
/// values and every path at `T` (enough to start forecasts), and each
/// missing observation.
pub fn default_retained(model: &Model) -> Vec<Quantity> {
    let len = model.len();
    let s = model.period();
    let mut out = vec![Quantity::Tau, Quantity::Mu0, Quantity::Latent(0)];
    out.extend((len.saturating_sub(s) + 1..=len).map(Quantity::Latent));
    out.extend(
        PathKind::for_kind(model.kind)
            .iter()
            .map(|&p| Quantity::Coefficient(p, len)),
    );
    out.extend(
        model
            .data
            .missing_indices()
            .into_iter()
            .map(Quantity::Observation),
    );
    out
}

/// Runs one chain with the default retained set.
pub fn run_chain(
    data: &TimeSeriesData,
    hyper: &Hyperparameters,
    kind: ModelKind,
    config: &McmcConfig,
) -> Result<PosteriorDraws> {
    run_chain_with(data, hyper, kind, config, &ChainOptions::default())
}

/// Initialises, runs `n_iter` sweeps and keeps every `thin`-th state after burn-in.
pub fn run_chain_with(
    data: &TimeSeriesData,
    hyper: &Hyperparameters,
    kind: ModelKind,
    config: &McmcConfig,
    options: &ChainOptions,
) -> Result<PosteriorDraws> {
    config.validate()?;
    let model = Model::new(data, hyper, kind)?;
    let sampler = GibbsSampler::new(model.clone()).with_fault(options.fault);

    let mut quantities = default_retained(&model);
    if options.keep_all {
        quantities.extend(sampler.coordinates());
        let s = model.period();
        // anchors are not sampled but make full paths readable
        for &p in PathKind::for_kind(kind) {
            quantities.extend((0..p.first_free(s)).map(|t| Quantity::Coefficient(p, t)));
        }
    }
    for &q in &options.track {
        if !q.exists(model.len(), kind) {
            return Err(Error::config(format!(
                "{q} does not exist for a {kind} model of length {}",
                model.len()
            )));
        }
        quantities.push(q);
    }
    let mut seen = std::collections::HashSet::new();
    quantities.retain(|q| seen.insert(*q));

    let mut draws = PosteriorDraws::new(&model, config, quantities);
    draws
        .values
        .reserve(config.retained() * draws.quantities.len());

    let mut rng: EngineRng = rng::stream(config.seed, Purpose::Chain, options.series_index, 0);
    let mut state = sampler.init_chain();
    let start = Instant::now();
    for iter in 0..config.n_iter {
        sampler.sweep(&mut state, &mut rng).map_err(|e| match e {
            Error::Numerical { update, message } => Error::Numerical {
                update,
                message: format!("{message} at iteration {}", iter + 1),
            },
            other => other,
        })?;
        if iter >= config.burn_in && (iter + 1 - config.burn_in).is_multiple_of(config.thin) {
            draws.record(&state);
        }
    }
    draws.sampling_time = start.elapsed();
    Ok(draws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn data(len: usize, missing: &[usize]) -> TimeSeriesData {
        let vals = (1..=len)
            .map(|t| {
                if missing.contains(&t) {
                    None
                } else {
                    Some(26.0 + 4.0 * (t as f64 * 0.52).sin())
                }
            })
            .collect();
        TimeSeriesData::new(vals, 12, "test").unwrap()
    }

    #[test]
    fn quantity_names_round_trip() {
        for s in [
            "tau", "mu0", "x[0]", "x[120]", "bt0[3]", "bt1[4]", "bts[12]", "b0[1]", "b1[288]",
            "bs[30]", "y[7]",
        ] {
            assert_eq!(s.parse::<Quantity>().unwrap().to_string(), s);
        }
        let err = "zz[3]".parse::<Quantity>().unwrap_err().to_string();
        assert!(err.contains("valid names"));
        assert!("x[".parse::<Quantity>().is_err());
    }

    #[test]
    fn init_chain_is_flat_and_deterministic() {
        let d = data(30, &[5]);
        let h = Hyperparameters::default();
        let m = Model::new(&d, &h, ModelKind::Seasonal).unwrap();
        let g = GibbsSampler::new(m.clone());
        let s0 = g.init_chain();
        assert_eq!(s0, g.init_chain());
        assert!(s0.state_slope.iter().all(|&b| b == 0.5));
        assert_eq!(s0.tau, 1.0);
        assert_eq!(s0.mu0, m.xi0);
        assert_eq!(s0.x[5], m.xi0);
        assert_eq!(s0.y[5], m.xi0);
        assert!(s0.anchors_intact(12));
    }

    #[test]
    fn constant_series_initialises_at_constant() {
        let d = TimeSeriesData::new(vec![Some(30.0); 30], 12, "c").unwrap();
        let h = Hyperparameters::default();
        let g = GibbsSampler::new(Model::new(&d, &h, ModelKind::Seasonal).unwrap());
        let s0 = g.init_chain();
        assert!(s0.x.iter().all(|&v| v == 30.0));
        assert_eq!(s0.mu0, 30.0);
    }

    #[test]
    fn tau_shape_matches_closed_forms_at_paper_scale() {
        let h = Hyperparameters::default();
        let d = data(288, &[]);
        let seasonal = Model::new(&d, &h, ModelKind::Seasonal).unwrap();
        assert!((seasonal.tau_posterior_shape() - 1142.01).abs() < 1e-9);
        let baseline = Model::new(&d, &h, ModelKind::Baseline).unwrap();
        assert!((baseline.tau_posterior_shape() - 865.01).abs() < 1e-9);
    }

    #[test]
    fn zero_residual_state_gives_prior_rate() {
        let d = TimeSeriesData::new(vec![Some(0.0); 26], 12, "z").unwrap();
        let h = Hyperparameters {
            xi0: crate::model::Xi0Policy::Fixed(0.0),
            ..Default::default()
        };
        let g = GibbsSampler::new(Model::new(&d, &h, ModelKind::Seasonal).unwrap());
        let st = g.init_chain();
        assert_eq!(g.tau_rate(&st), 0.01);
    }

    #[test]
    fn mu0_conditional_with_default_scales() {
        let d = data(30, &[]);
        let h = Hyperparameters::default();
        let g = GibbsSampler::new(Model::new(&d, &h, ModelKind::Seasonal).unwrap());
        let mut st = g.init_chain();
        st.tau = 2.0;
        st.x[0] = g.model().xi0 + 4.0;
        match g.conditional(&st, Quantity::Mu0).unwrap() {
            Conditional::Normal { mean, precision } => {
                assert!((mean - (g.model().xi0 + 2.0)).abs() < 1e-12);
                assert!((1.0 / precision - 50.0 / 2.0).abs() < 1e-9);
            }
            _ => panic!(),
        }
        st.x[0] = g.model().xi0;
        assert!((g.conditional(&st, Quantity::Mu0).unwrap().mean() - g.model().xi0).abs() < 1e-12);
    }

    #[test]
    fn decoupled_x0_reduces_to_prior() {
        let d = data(30, &[]);
        let h = Hyperparameters::default();
        for kind in [ModelKind::Seasonal, ModelKind::Baseline] {
            let g = GibbsSampler::new(Model::new(&d, &h, kind).unwrap());
            let mut st = g.init_chain();
            st.state_slope[1] = 0.0;
            if let Some(sp) = st.seasonal.as_mut() {
                sp.state[12] = 0.0;
                sp.obs[12] = 0.0;
            }
            st.mu0 = 3.0;
            st.tau = 4.0;
            let c = g.conditional(&st, Quantity::Latent(0)).unwrap();
            assert_eq!(
                c,
                Conditional::Normal {
                    mean: 3.0,
                    precision: 4.0 / 100.0
                }
            );
        }
    }

    #[test]
    fn interior_latent_without_couplings_follows_transition() {
        let d = data(40, &[]);
        let h = Hyperparameters::default();
        let g = GibbsSampler::new(Model::new(&d, &h, ModelKind::Seasonal).unwrap());
        let mut st = g.init_chain();
        let t = 20;
        st.state_slope[t + 1] = 0.0;
        st.obs_slope[t] = 0.0;
        let sp = st.seasonal.as_mut().unwrap();
        sp.state[t + 12] = 0.0;
        sp.obs[t + 12] = 0.0;
        sp.state[t] = 0.3;
        st.state_intercept[t] = 1.5;
        st.state_slope[t] = 0.7;
        let expect = 1.5 + 0.7 * st.x[t - 1] + 0.3 * st.x[t - 12];
        match g.conditional(&st, Quantity::Latent(t)).unwrap() {
            Conditional::Normal { mean, precision } => {
                assert!((mean - expect).abs() < 1e-12);
                assert!((precision - 1.0 / 200.0).abs() < 1e-15);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn last_latent_has_no_future_terms() {
        let d = data(30, &[]);
        let h = Hyperparameters::default();
        let g = GibbsSampler::new(Model::new(&d, &h, ModelKind::Seasonal).unwrap());
        let mut st = g.init_chain();
        st.obs_slope[30] = 0.8;
        st.tau = 1.0;
        match g.conditional(&st, Quantity::Latent(30)).unwrap() {
            Conditional::Normal { precision, .. } => {
                assert!((precision - (1.0 / 200.0 + 0.64 / 200.0)).abs() < 1e-15);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn agreeing_sources_give_their_common_value() {
        let d = data(30, &[]);
        let h = Hyperparameters::default();
        let g = GibbsSampler::new(Model::new(&d, &h, ModelKind::Seasonal).unwrap());
        let mut st = g.init_chain();
        let (t, r) = (15, 2.5);
        st.state_intercept[t - 1] = r;
        st.state_intercept[t + 1] = r;
        st.x[t] = r
            + st.state_slope[t] * st.x[t - 1]
            + st.seasonal.as_ref().unwrap().state[t] * st.x[t - 12];
        let c = g
            .conditional(&st, Quantity::Coefficient(PathKind::StateIntercept, t))
            .unwrap();
        assert!((c.mean() - r).abs() < 1e-9);

        st.obs_intercept[t - 1] = r;
        st.obs_intercept[t + 1] = r;
        st.y[t] =
            r + st.obs_slope[t] * st.x[t] + st.seasonal.as_ref().unwrap().obs[t] * st.x[t - 12];
        let c = g
            .conditional(&st, Quantity::Coefficient(PathKind::ObsIntercept, t))
            .unwrap();
        assert!((c.mean() - r).abs() < 1e-9);
    }

    #[test]
    fn zero_regressor_gives_pure_smoothing() {
        let d = data(30, &[]);
        let h = Hyperparameters::default();
        let g = GibbsSampler::new(Model::new(&d, &h, ModelKind::Seasonal).unwrap());
        let mut st = g.init_chain();
        let t = 10;
        st.x[t - 1] = 0.0;
        st.x[t] = 0.0;
        st.tau = 3.0;
        let expect = (t * t + (t + 1) * (t + 1)) as f64 * 3.0;
        for p in [PathKind::StateSlope, PathKind::ObsSlope] {
            match g.conditional(&st, Quantity::Coefficient(p, t)).unwrap() {
                Conditional::Normal { precision, .. } => assert!((precision - expect).abs() < 1e-9),
                _ => panic!(),
            }
        }
    }

    #[test]
    fn imputation_conditional_and_guard() {
        let d = data(30, &[14]);
        let h = Hyperparameters::default();
        let g = GibbsSampler::new(Model::new(&d, &h, ModelKind::Seasonal).unwrap());
        let mut st = g.init_chain();
        st.obs_intercept[14] = 2.0;
        st.obs_slope[14] = 1.0;
        st.x[14] = 3.0;
        st.seasonal.as_mut().unwrap().obs[14] = 0.0;
        st.tau = 1e12;
        let c = g.conditional(&st, Quantity::Observation(14)).unwrap();
        assert_eq!(
            c,
            Conditional::Normal {
                mean: 5.0,
                precision: 1e12 / 200.0
            }
        );
        let mut rng = stream(3, Purpose::Diagnostics, 0, 0);
        let v = g
            .update(&mut st, Quantity::Observation(14), &mut rng)
            .unwrap();
        assert!((v - 5.0).abs() < 1e-4);
        assert!(g
            .update(&mut st, Quantity::Observation(13), &mut rng)
            .is_err());
    }

    #[test]
    fn out_of_range_coordinates_are_rejected() {
        let d = data(30, &[]);
        let h = Hyperparameters::default();
        let g = GibbsSampler::new(Model::new(&d, &h, ModelKind::Baseline).unwrap());
        let st = g.init_chain();
        assert!(g.conditional(&st, Quantity::Latent(31)).is_err());
        assert!(g
            .conditional(&st, Quantity::Coefficient(PathKind::StateSlope, 0))
            .is_err());
        assert!(g
            .conditional(&st, Quantity::Coefficient(PathKind::ObsSeasonal, 20))
            .is_err());
    }

    #[test]
    fn sweep_is_deterministic_and_keeps_anchors() {
        let d = data(30, &[4, 20]);
        let h = Hyperparameters::default();
        let g = GibbsSampler::new(Model::new(&d, &h, ModelKind::Seasonal).unwrap());
        let mut a = g.init_chain();
        let mut b = a.clone();
        let mut ra = stream(11, Purpose::Chain, 0, 0);
        let mut rb = stream(11, Purpose::Chain, 0, 0);
        for _ in 0..50 {
            g.sweep(&mut a, &mut ra).unwrap();
            g.sweep(&mut b, &mut rb).unwrap();
        }
        assert_eq!(a, b);
        assert!(a.anchors_intact(12));
        for t in 1..=30 {
            if t != 4 && t != 20 {
                assert_eq!(a.y[t], d.get(t).unwrap());
            }
        }
        let m = Model::new(&d, &h, ModelKind::Seasonal).unwrap();
        assert!(crate::model::log_joint(&a, &m).unwrap().is_finite());
    }

    #[test]
    fn chain_retains_expected_count() {
        let d = data(30, &[]);
        let h = Hyperparameters::default();
        let cfg = McmcConfig {
            n_iter: 11,
            burn_in: 10,
            thin: 1,
            seed: 2,
        };
        let draws = run_chain(&d, &h, ModelKind::Seasonal, &cfg).unwrap();
        assert_eq!(draws.n_draws(), 1);
        let cfg = McmcConfig {
            n_iter: 300,
            burn_in: 100,
            thin: 3,
            seed: 2,
        };
        let draws = run_chain(&d, &h, ModelKind::Baseline, &cfg).unwrap();
        assert_eq!(draws.n_draws(), 66);
        assert!(draws
            .column(Quantity::Tau)
            .unwrap()
            .iter()
            .all(|&t| t > 0.0));
        assert!(!draws.contains(Quantity::Coefficient(PathKind::ObsSeasonal, 30)));
    }
}
