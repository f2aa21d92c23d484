//! Bayesian state-space forecasting with time-varying coefficients and a
//! seasonal lag, fitted by Gibbs sampling.
//!
//! The crate is organised around the sampler pipeline:
//!
//! - [`model`]: series container, prior constants, state layout, log joint.
//! - [`gibbs`]: full conditionals, sweeps and chain runs.
//! - [`forecast`]: posterior-predictive paths, summaries and holdout validation.
//! - [`diagnostics`]: conditional grid oracle, Geweke test, traces, summaries.
//! - [`synth`]: synthetic seasonal series and forward simulation from the prior.
//! - [`io`], [`config`] and [`cli`]: CSV ingestion, run configuration and the
//!   `tvss` command line.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod forecast;
pub mod gibbs;
pub mod io;
pub mod model;
pub mod rng;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use forecast::{ForecastSummary, ValidationReport};
pub use gibbs::{run_chain, run_chain_with, ChainOptions, GibbsSampler, PosteriorDraws, Quantity};
pub use model::{
    Hyperparameters, McmcConfig, Model, ModelKind, PathKind, SamplerState, TimeSeriesData,
    Xi0Policy,
};
