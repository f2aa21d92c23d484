//! The `tvss` command line: `fit`, `forecast`, `validate`, `simulate` and `check`.
//!
//! Every subcommand reads an optional JSON [`RunConfig`]; flags override
//! individual fields. Errors map onto exit codes 1 (config), 2 (data),
//! 3 (numerical) and 4 (failed check).

use std::collections::HashSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{RunConfig, OUTPUT_DIR_ENV};
use crate::diagnostics::{
    geweke_hyperparameters, geweke_joint_test, oracle_suite, summary_stats, trace_export_to_path,
    GewekeConfig, GewekeReport, OracleReport,
};
use crate::error::{Error, Result};
use crate::forecast::{
    fit_and_forecast, holdout_validate_with, predictive_histogram, ForecastSummary,
    ValidationReport,
};
use crate::gibbs::{ChainOptions, Fault, PosteriorDraws, Quantity};
use crate::io::{fmt_f64, load_series, write_series, write_series_to, write_table};
use crate::model::{ModelKind, TimeSeriesData};
use crate::rng;
use crate::synth::{generate_seasonal_series, simulate_from_prior, SyntheticSpec};

#[derive(Debug, Parser)]
#[command(
    name = "tvss",
    version,
    about = "Seasonal time-varying-parameter state-space forecasting by Gibbs sampling"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the sampler and write traces, posterior summaries and a manifest.
    Fit(RunArgs),
    /// Fit, then write posterior-predictive forecast bounds.
    Forecast(ForecastArgs),
    /// Hold out the last `horizon` points and score the forecast of them.
    Validate(ValidateArgs),
    /// Write a synthetic series, or a draw from the model's prior.
    Simulate(SimulateArgs),
    /// Run the conditional oracle and the Geweke joint-distribution test.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Input series CSVs with header `t,value`.
    pub inputs: Vec<PathBuf>,
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = OUTPUT_DIR_ENV)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_iter: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub period: Option<usize>,
    /// Quantities to trace, e.g. `tau,x[10],b1[132]`.
    #[arg(long, value_delimiter = ',')]
    pub trace: Vec<String>,
    /// Series processed in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub lower: Option<f64>,
    #[arg(long)]
    pub upper: Option<f64>,
    /// Also write per-step histogram counts with this many bins.
    #[arg(long)]
    pub histogram_bins: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub forecast: ForecastArgs,
    /// Score both the seasonal and the baseline model side by side.
    #[arg(long)]
    pub compare: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Destination CSV; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// JSON synthetic spec (ignored with `--from-prior`).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub len: Option<usize>,
    #[arg(long)]
    pub period: Option<usize>,
    #[arg(long)]
    pub missing_fraction: Option<f64>,
    /// Simulate from the model prior using the hyperparameters in `--config`.
    #[arg(long)]
    pub from_prior: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<ModelKind>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Random states per conditional family.
    #[arg(long, default_value_t = 20)]
    pub states: usize,
    /// Samples per arm of the Geweke test.
    #[arg(long, default_value_t = 50_000)]
    pub geweke_samples: usize,
    /// Gibbs sweeps between successive data re-simulations.
    #[arg(long, default_value_t = 50)]
    pub sweeps_per_sample: usize,
    #[arg(long)]
    pub skip_geweke: bool,
    /// Write the full report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, hide = true)]
    pub fault: Option<String>,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Fit(a) => cmd_fit(&a),
        Command::Forecast(a) => cmd_forecast(&a),
        Command::Validate(a) => cmd_validate(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Check(a) => cmd_check(&a),
    }
}

fn resolve_config(a: &RunArgs) -> Result<RunConfig> {
    let mut c = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    c.inputs.extend(a.inputs.iter().cloned());
    if a.output_dir.is_some() {
        c.output_dir = a.output_dir.clone();
    }
    if let Some(m) = a.model {
        c.model = m;
    }
    if let Some(v) = a.seed {
        c.mcmc.seed = v;
    }
    if let Some(v) = a.n_iter {
        c.mcmc.n_iter = v;
    }
    if let Some(v) = a.burn_in {
        c.mcmc.burn_in = v;
    }
    if let Some(v) = a.thin {
        c.mcmc.thin = v;
    }
    if let Some(v) = a.period {
        c.period = v;
    }
    if !a.trace.is_empty() {
        c.trace = a.trace.clone();
    }
    if a.jobs == 0 {
        return Err(Error::config("--jobs must be at least 1"));
    }
    if c.inputs.is_empty() {
        return Err(Error::config("no input series given"));
    }
    Ok(c)
}

fn resolve_forecast_config(a: &ForecastArgs) -> Result<RunConfig> {
    let mut c = resolve_config(&a.run)?;
    if let Some(h) = a.horizon {
        c.horizon = h;
    }
    if let Some(l) = a.lower {
        c.levels.0 = l;
    }
    if let Some(u) = a.upper {
        c.levels.1 = u;
    }
    Ok(c)
}

/// Loads every input, rejecting two inputs that would share output files.
fn load_inputs(c: &RunConfig) -> Result<Vec<TimeSeriesData>> {
    let mut labels = HashSet::new();
    c.inputs
        .iter()
        .map(|p| {
            let s = load_series(p, c.period)?;
            if !labels.insert(s.label.clone()) {
                return Err(Error::config(format!(
                    "two inputs share the name `{}`",
                    s.label
                )));
            }
            Ok(s)
        })
        .collect()
}

fn prepare_output_dir(c: &RunConfig) -> Result<PathBuf> {
    let dir = c.resolve_output_dir();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

/// Runs `job` on every series, `jobs` at a time, with the series position as
/// its RNG stream index.
fn for_each_series<F>(series: &[TimeSeriesData], jobs: usize, job: F) -> Result<()>
where
    F: Fn(u32, &TimeSeriesData) -> Result<()> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        series
            .par_iter()
            .enumerate()
            .map(|(i, s)| job(i as u32, s))
            .collect::<Vec<_>>()
            .into_iter()
            .collect::<Result<()>>()
    })
}

fn chain_options(c: &RunConfig, series_index: u32) -> Result<ChainOptions> {
    Ok(ChainOptions {
        track: c.trace_quantities()?,
        series_index,
        ..Default::default()
    })
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::config(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Writes the trace CSV, summary-stats CSV and manifest for one fitted series.
fn write_fit_outputs(
    dir: &Path,
    c: &RunConfig,
    series: &TimeSeriesData,
    series_index: u32,
    draws: &PosteriorDraws,
    total_seconds: f64,
    extra_outputs: &[PathBuf],
) -> Result<()> {
    let label = &series.label;
    let selection: Vec<Quantity> = if c.trace.is_empty() {
        draws.quantities().to_vec()
    } else {
        c.trace_quantities()?
    };
    let trace_path = dir.join(format!("{label}.trace.csv"));
    trace_export_to_path(draws, &selection, &trace_path)?;

    let summary_path = dir.join(format!("{label}.summary.csv"));
    let rows = draws
        .quantities()
        .iter()
        .map(|&q| {
            let s = summary_stats(draws, q)?;
            Ok(vec![
                s.quantity,
                fmt_f64(s.mean),
                fmt_f64(s.sd),
                fmt_f64(s.q025),
                fmt_f64(s.q50),
                fmt_f64(s.q975),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    write_table(
        &summary_path,
        &["quantity", "mean", "sd", "q025", "q50", "q975"],
        rows,
    )?;

    let mut outputs = vec![file_name(&trace_path), file_name(&summary_path)];
    outputs.extend(extra_outputs.iter().map(|p| file_name(p)));
    let manifest = json!({
        "label": label,
        "model": draws.kind,
        "len": draws.len,
        "period": draws.period,
        "missing": series.missing_indices(),
        "xi0": draws.xi0,
        "hyper": c.hyper,
        "mcmc": draws.config,
        "retained_draws": draws.n_draws(),
        "retained_quantities": draws.quantities().iter().map(ToString::to_string).collect::<Vec<_>>(),
        "rng": { "generator": "chacha8", "seed": draws.config.seed, "series_stream": series_index },
        "outputs": outputs,
        "timings": {
            "sampling_seconds": draws.sampling_time.as_secs_f64(),
            "total_seconds": total_seconds,
        },
    });
    write_json(&dir.join(format!("{label}.manifest.json")), &manifest)
}

fn cmd_fit(a: &RunArgs) -> Result<()> {
    let c = resolve_config(a)?;
    c.validate()?;
    let series = load_inputs(&c)?;
    let dir = prepare_output_dir(&c)?;
    for_each_series(&series, a.jobs, |i, s| {
        let start = Instant::now();
        let draws =
            crate::gibbs::run_chain_with(s, &c.hyper, c.model, &c.mcmc, &chain_options(&c, i)?)?;
        write_fit_outputs(&dir, &c, s, i, &draws, start.elapsed().as_secs_f64(), &[])?;
        eprintln!(
            "{}: {} draws in {:.2}s",
            s.label,
            draws.n_draws(),
            draws.sampling_time.as_secs_f64()
        );
        Ok(())
    })
}

fn forecast_rows(summary: &ForecastSummary) -> Vec<Vec<String>> {
    summary
        .steps
        .iter()
        .map(|s| {
            vec![
                s.h.to_string(),
                fmt_f64(s.median),
                fmt_f64(s.lower),
                fmt_f64(s.upper),
            ]
        })
        .collect()
}

fn cmd_forecast(a: &ForecastArgs) -> Result<()> {
    let c = resolve_forecast_config(a)?;
    c.validate()?;
    let series = load_inputs(&c)?;
    let dir = prepare_output_dir(&c)?;
    for_each_series(&series, a.run.jobs, |i, s| {
        let start = Instant::now();
        let out = fit_and_forecast(
            s,
            &c.hyper,
            c.model,
            &c.mcmc,
            &chain_options(&c, i)?,
            c.horizon,
            c.levels,
        )?;
        let fc_path = dir.join(format!("{}.forecast.csv", s.label));
        write_table(
            &fc_path,
            &["h", "median", "lower", "upper"],
            forecast_rows(&out.summary),
        )?;
        let mut extra = vec![fc_path];
        if let Some(bins) = a.histogram_bins {
            let hist = predictive_histogram(&out.paths, bins)?;
            let path = dir.join(format!("{}.histogram.csv", s.label));
            let rows = hist.iter().map(|b| {
                vec![
                    b.h.to_string(),
                    fmt_f64(b.left),
                    fmt_f64(b.right),
                    b.count.to_string(),
                ]
            });
            write_table(&path, &["h", "bin_left", "bin_right", "count"], rows)?;
            extra.push(path);
        }
        write_fit_outputs(
            &dir,
            &c,
            s,
            i,
            &out.draws,
            start.elapsed().as_secs_f64(),
            &extra,
        )
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), fmt_f64)
}

fn coverage(r: &ValidationReport) -> (usize, usize) {
    (r.covered_count(), r.errors().len())
}

fn cmd_validate(a: &ValidateArgs) -> Result<()> {
    let c = resolve_forecast_config(&a.forecast)?;
    c.validate()?;
    let series = load_inputs(&c)?;
    let dir = prepare_output_dir(&c)?;
    let kinds = if a.compare {
        vec![ModelKind::Seasonal, ModelKind::Baseline]
    } else {
        vec![c.model]
    };
    for_each_series(&series, a.forecast.run.jobs, |i, s| {
        let opts = chain_options(&c, i)?;
        let reports = kinds
            .iter()
            .map(|&k| holdout_validate_with(s, &c.hyper, k, &c.mcmc, &opts, c.horizon, c.levels))
            .collect::<Result<Vec<_>>>()?;

        let mut header = vec!["h".to_string(), "observed".to_string()];
        for k in &kinds {
            for col in ["median", "lower", "upper", "error", "covered"] {
                header.push(format!("{k}_{col}"));
            }
        }
        let rows = (0..c.horizon).map(|h| {
            let mut row = vec![(h + 1).to_string(), opt(reports[0].steps[h].observed)];
            for r in &reports {
                let st = &r.steps[h];
                row.extend([
                    fmt_f64(st.median),
                    fmt_f64(st.lower),
                    fmt_f64(st.upper),
                    opt(st.error),
                    st.covered
                        .map_or_else(|| "NA".to_string(), |b| b.to_string()),
                ]);
            }
            row
        });
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        write_table(
            &dir.join(format!("{}.validation.csv", s.label)),
            &header_refs,
            rows,
        )?;

        let summary: Vec<_> = reports
            .iter()
            .map(|r| {
                let (cov, n) = coverage(r);
                json!({ "model": r.kind, "rmse": r.rmse, "covered": cov, "scored": n })
            })
            .collect();
        write_json(
            &dir.join(format!("{}.validation.json", s.label)),
            &json!({ "label": s.label, "reports": summary }),
        )?;
        for r in &reports {
            let (cov, n) = coverage(r);
            println!(
                "{} {}: rmse {:.4}, coverage {cov}/{n}",
                s.label, r.kind, r.rmse
            );
        }
        Ok(())
    })
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let series = if a.from_prior {
        let c = match &a.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let kind = a.model.unwrap_or(c.model);
        let period = a.period.unwrap_or(c.period);
        let len = a.len.unwrap_or(SyntheticSpec::default().len);
        let mut r = rng::stream(a.seed, rng::Purpose::Synthetic, 0, 1);
        simulate_from_prior(&c.hyper, kind, len, period, &mut r)?.1
    } else {
        let mut spec = match &a.spec {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::config(format!("{}: {e}", p.display())))?
            }
            None => SyntheticSpec::default(),
        };
        if let Some(v) = a.len {
            spec.len = v;
        }
        if let Some(v) = a.period {
            spec.period = v;
        }
        if let Some(v) = a.missing_fraction {
            spec.missing_fraction = v;
        }
        generate_seasonal_series(&spec, a.seed)?.data
    };
    match &a.output {
        Some(p) => write_series(&series, p),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_series_to(&series, &mut lock)?;
            lock.flush().map_err(|e| Error::io("stdout", e))
        }
    }
}

fn cmd_check(a: &CheckArgs) -> Result<()> {
    let fault: Option<Fault> = a.fault.as_deref().map(str::parse).transpose()?;
    if a.states == 0 {
        return Err(Error::config("--states must be at least 1"));
    }
    let start = Instant::now();
    let oracle = oracle_suite(a.states, a.seed, fault)?;
    let oracle_secs = start.elapsed().as_secs_f64();

    let mut families: Vec<(String, String, f64)> = Vec::new();
    for r in &oracle {
        let key = (r.kind.to_string(), r.family.clone());
        match families
            .iter_mut()
            .find(|(k, f, _)| (k, f) == (&key.0, &key.1))
        {
            Some(e) => e.2 = e.2.max(r.max_abs_error),
            None => families.push((key.0, key.1, r.max_abs_error)),
        }
    }
    println!(
        "conditional oracle ({} checks, {oracle_secs:.1}s)",
        oracle.len()
    );
    for (kind, fam, err) in &families {
        let verdict = if *err < crate::diagnostics::ORACLE_TOLERANCE {
            "ok"
        } else {
            "FAIL"
        };
        println!("  {kind:<8} {fam:<16} max |log error| {err:.3e}  {verdict}");
    }
    let failed_oracle: Vec<&OracleReport> = oracle.iter().filter(|r| !r.passed()).collect();

    let mut geweke: Vec<GewekeReport> = Vec::new();
    if !a.skip_geweke {
        let hyper = geweke_hyperparameters();
        for (kind, len) in [(ModelKind::Seasonal, 26), (ModelKind::Baseline, 15)] {
            let mut cfg = GewekeConfig::new(kind, len, a.geweke_samples, a.seed);
            cfg.sweeps_per_sample = a.sweeps_per_sample;
            cfg.fault = fault;
            let t0 = Instant::now();
            let rep = geweke_joint_test(&hyper, &cfg)?;
            println!("geweke {kind} T={len} ({:.1}s)", t0.elapsed().as_secs_f64());
            for s in &rep.statistics {
                let verdict = if s.z.abs() < crate::diagnostics::GEWEKE_Z_LIMIT {
                    "ok"
                } else {
                    "FAIL"
                };
                println!("  {:<12} z = {:+.3}  {verdict}", s.name, s.z);
            }
            geweke.push(rep);
        }
    }

    if let Some(p) = &a.report {
        write_json(p, &json!({ "oracle": oracle, "geweke": geweke }))?;
    }

    let mut failures: Vec<String> = failed_oracle
        .iter()
        .map(|r| {
            format!(
                "{} conditional {} ({}): error {:.3e}",
                r.kind, r.target, r.family, r.max_abs_error
            )
        })
        .collect();
    for rep in &geweke {
        for s in rep
            .statistics
            .iter()
            .filter(|s| s.z.abs() >= crate::diagnostics::GEWEKE_Z_LIMIT)
        {
            failures.push(format!(
                "{} Geweke statistic {}: z = {:.2}",
                rep.kind, s.name, s.z
            ));
        }
    }
    if failures.is_empty() {
        println!("all checks passed");
        Ok(())
    } else {
        let shown: Vec<&str> = failures.iter().take(10).map(String::as_str).collect();
        Err(Error::Check(format!(
            "{} failing checks; first: {}",
            failures.len(),
            shown.join("; ")
        )))
    }
}
