//! Command-line workflows: simulate, fit, predict, evaluate and study.
//!
//! Every command reads one JSON config, writes its artifacts into an output
//! directory and echoes the resolved config in `manifest.json`.

mod error;
pub mod io;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use error::{CliError, CliResult};
use io::{
    fmt_f64, fmt_opt, read_dataset, read_json, write_csv, write_dataset, write_json, DataConfig,
    Inline,
};

use crate::estimation::{correlation_band, fit, fit_from, FitOptions, FittedModel};
use crate::model::{Dataset, ModelSpec, ParameterSet};
use crate::prediction::{empirical_bayes_mode_with, evaluate_by, predict_survival_curve_with};
use crate::simulation::{run_study, simulate_dataset_with_effects, Scenario, StudyOptions};

/// Output directory override.
pub const ENV_OUT: &str = "COPJM_OUT";
/// Worker-count override.
pub const ENV_WORKERS: &str = "COPJM_WORKERS";
const DEFAULT_OUT: &str = "copjm-out";

#[derive(Debug, Parser)]
#[command(
    name = "copjm",
    version,
    about = "Copula joint models for longitudinal and time-to-event data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one dataset from a scenario.
    Simulate(RunArgs),
    /// Fit a joint model by maximum likelihood.
    Fit(RunArgs),
    /// Dynamic survival predictions from a fitted model.
    Predict(RunArgs),
    /// AUC and prediction error over landmark/window grids.
    Evaluate(RunArgs),
    /// Replicated simulation study.
    Study(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: COPJM_WORKERS, else all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory (default: COPJM_OUT, else the config's `out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: Option<u64>,
    workers: usize,
    config: &'a C,
    artifacts: Vec<&'static str>,
}

struct Run {
    command: &'static str,
    base: PathBuf,
    out: PathBuf,
    seed: Option<u64>,
    workers: usize,
}

impl Run {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn manifest<C: Serialize>(
        &self,
        config: &C,
        mut artifacts: Vec<&'static str>,
    ) -> CliResult<()> {
        artifacts.push("manifest.json");
        let m = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            seed: self.seed,
            workers: self.workers,
            config,
            artifacts,
        };
        write_json(&self.path("manifest.json"), &m)
    }
}

fn default_out() -> PathBuf {
    PathBuf::from(DEFAULT_OUT)
}

/// Runs a parsed command line and returns the output directory.
pub fn run(cli: Cli) -> CliResult<PathBuf> {
    let (name, args) = match &cli.command {
        Command::Simulate(a) => ("simulate", a),
        Command::Fit(a) => ("fit", a),
        Command::Predict(a) => ("predict", a),
        Command::Evaluate(a) => ("evaluate", a),
        Command::Study(a) => ("study", a),
    };
    let workers = match args.workers {
        Some(w) => Some(w),
        None => match std::env::var(ENV_WORKERS) {
            Ok(v) => Some(
                v.parse()
                    .map_err(|_| CliError::Config(format!("{ENV_WORKERS}: not a count: {v}")))?,
            ),
            Err(_) => None,
        },
    };
    if workers == Some(0) {
        return Err(CliError::Config("workers must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let base = args
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let mut run = Run {
        command: name,
        base,
        out: PathBuf::new(),
        seed: args.seed,
        workers: pool.current_num_threads(),
    };
    pool.install(|| match cli.command {
        Command::Simulate(a) => simulate(&mut run, &a),
        Command::Fit(a) => fit_cmd(&mut run, &a),
        Command::Predict(a) => predict(&mut run, &a),
        Command::Evaluate(a) => evaluate(&mut run, &a),
        Command::Study(a) => study(&mut run, &a),
    })?;
    Ok(run.out)
}

/// Flag, then environment, then config.
fn resolve_out(run: &mut Run, args: &RunArgs, configured: &Path) -> CliResult<()> {
    run.out = match (&args.out, std::env::var_os(ENV_OUT)) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => run.base.join(configured),
    };
    std::fs::create_dir_all(&run.out).map_err(|e| CliError::io(&run.out, e))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub scenario: Scenario,
    /// Replicate index of the random streams.
    pub replicate: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct NamedValue {
    name: String,
    value: f64,
}

#[derive(Serialize)]
struct SubjectEffects<'a> {
    id: &'a str,
    b: &'a [f64],
}

#[derive(Serialize)]
struct Truth<'a> {
    parameters: &'a ParameterSet,
    named: Vec<NamedValue>,
    random_effects: Vec<SubjectEffects<'a>>,
}

fn simulate(run: &mut Run, args: &RunArgs) -> CliResult<()> {
    let mut cfg: SimulateConfig = read_json(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.scenario.seed = seed;
    }
    run.seed = Some(cfg.scenario.seed);
    resolve_out(run, args, &cfg.out.clone().unwrap_or_else(default_out))?;
    cfg.scenario.validate()?;
    cfg.scenario = cfg.scenario.resolved()?;
    let (data, effects) = simulate_dataset_with_effects(&cfg.scenario, cfg.replicate)?;
    let generating = cfg.scenario.spec(1)?;
    write_dataset(
        &run.out,
        &data,
        &generating.long_covariates,
        &generating.surv_covariates,
    )?;
    let truth = cfg.scenario.truth()?;
    let doc = Truth {
        parameters: &truth,
        named: truth
            .named_values(&generating)
            .into_iter()
            .map(|(name, value)| NamedValue { name, value })
            .collect(),
        random_effects: data
            .subjects
            .iter()
            .zip(&effects)
            .map(|(s, b)| SubjectEffects { id: &s.id, b })
            .collect(),
    };
    write_json(&run.path("truth.json"), &doc)?;
    write_json(&run.path("spec.json"), &generating)?;
    info!(
        "simulated {} subjects, {:.1}% events",
        data.len(),
        100.0 * data.event_fraction()
    );
    run.manifest(
        &cfg,
        vec![
            "longitudinal.csv",
            "survival.csv",
            "truth.json",
            "spec.json",
        ],
    )
}

fn default_curve_points() -> usize {
    200
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub data: DataConfig,
    pub spec: Inline<ModelSpec>,
    #[serde(default)]
    pub options: FitOptions,
    /// Starting values; data-driven initialization when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Inline<ParameterSet>>,
    #[serde(default = "default_curve_points")]
    pub curve_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn load_data(run: &Run, cfg: &DataConfig, spec: &ModelSpec) -> CliResult<Dataset> {
    read_dataset(cfg, &run.base, &spec.long_covariates, &spec.surv_covariates)
}

fn fit_cmd(run: &mut Run, args: &RunArgs) -> CliResult<()> {
    let mut cfg: FitConfig = read_json(&args.config)?;
    resolve_out(run, args, &cfg.out.clone().unwrap_or_else(default_out))?;
    let spec = cfg.spec.load(&run.base)?;
    spec.validate()?;
    cfg.spec = Inline::Value(spec.clone());
    let start = match &cfg.start {
        Some(s) => {
            let p = s.load(&run.base)?;
            cfg.start = Some(Inline::Value(p.clone()));
            Some(p)
        }
        None => None,
    };
    let data = load_data(run, &cfg.data, &spec)?;
    let f = match start {
        Some(p) => fit_from(&data, &spec, p, &cfg.options)?,
        None => fit(&data, &spec, &cfg.options)?,
    };
    if !f.convergence.converged {
        warn!("optimizer stopped with status {:?}", f.convergence.status);
    }
    for w in &f.warnings {
        warn!("{w}");
    }
    write_json(&run.path("fit.json"), &f)?;
    let mut artifacts = vec!["fit.json"];
    if spec.ell() > 0 {
        write_curves(&run.path("curves.csv"), &f, cfg.curve_points)?;
        artifacts.push("curves.csv");
    }
    run.manifest(&cfg, artifacts)
}

fn write_curves(path: &Path, f: &FittedModel, points: usize) -> CliResult<()> {
    let (lo, hi) = f.spec.correlation_basis.domain();
    let grid = grid(lo, hi, points);
    let rows: Vec<Vec<String>> = if f.vcov.is_some() {
        correlation_band(f, &grid)?
            .iter()
            .map(|p| {
                vec![
                    fmt_f64(p.t),
                    fmt_f64(p.rho),
                    fmt_f64(p.lower),
                    fmt_f64(p.upper),
                ]
            })
            .collect()
    } else {
        grid.iter()
            .map(|&t| {
                Ok(vec![
                    fmt_f64(t),
                    fmt_f64(f.theta_hat.rho_at(&f.spec, t)?),
                    String::new(),
                    String::new(),
                ])
            })
            .collect::<CliResult<_>>()?
    };
    write_csv(path, &["t", "rho", "lower", "upper"], rows)
}

fn default_horizon_points() -> usize {
    51
}

fn default_trajectory_points() -> usize {
    101
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictConfig {
    /// A `fit.json` written by the fit command.
    pub fit: PathBuf,
    pub data: DataConfig,
    /// Subjects to predict for; all subjects when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids: Option<Vec<String>>,
    pub landmarks: Vec<f64>,
    /// Last horizon u; the baseline-hazard horizon when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Horizons per landmark, equally spaced on [t, horizon].
    #[serde(default = "default_horizon_points")]
    pub horizon_points: usize,
    /// Points of the fitted trajectory on [0, horizon].
    #[serde(default = "default_trajectory_points")]
    pub trajectory_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        n => (0..n)
            .map(|i| {
                if i + 1 == n {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Fitted mean response x(s)ᵀβ₁ + z(s)ᵀb on a time grid.
fn trajectory(
    subject: &crate::model::SubjectData,
    b: &[f64],
    params: &ParameterSet,
    spec: &ModelSpec,
    times: &[f64],
) -> CliResult<Vec<f64>> {
    let mut row = Vec::with_capacity(spec.p());
    times
        .iter()
        .map(|&s| {
            spec.design_row(s, &subject.long_covariates, &mut row)?;
            let (z, r) = spec.random_effects.design(s);
            let fixed: f64 = row.iter().zip(&params.beta1).map(|(a, c)| a * c).sum();
            let random: f64 = z[..r].iter().zip(b).map(|(a, c)| a * c).sum();
            Ok(fixed + random)
        })
        .collect()
}

fn predict(run: &mut Run, args: &RunArgs) -> CliResult<()> {
    let cfg: PredictConfig = read_json(&args.config)?;
    resolve_out(run, args, &cfg.out.clone().unwrap_or_else(default_out))?;
    let f: FittedModel = read_json(&run.base.join(&cfg.fit))?;
    let spec = &f.spec;
    let params = &f.theta_hat;
    let horizon = cfg.horizon.unwrap_or_else(|| spec.baseline.horizon());
    if !(horizon <= spec.baseline.horizon()) {
        return Err(CliError::Config(format!(
            "horizon {horizon} beyond the model horizon {}",
            spec.baseline.horizon()
        )));
    }
    if let Some(t) = cfg.landmarks.iter().find(|&&t| !(t >= 0.0 && t <= horizon)) {
        return Err(CliError::Config(format!(
            "landmark {t} outside [0, {horizon}]"
        )));
    }
    if cfg.horizon_points < 1 {
        return Err(CliError::Config("horizon_points must be positive".into()));
    }
    let data = load_data(run, &cfg.data, spec)?;
    let subjects: Vec<&crate::model::SubjectData> = match &cfg.ids {
        None => data.subjects.iter().collect(),
        Some(ids) => ids
            .iter()
            .map(|id| {
                data.subjects
                    .iter()
                    .find(|s| &s.id == id)
                    .ok_or_else(|| CliError::Data(format!("subject {id}: not in the dataset")))
            })
            .collect::<CliResult<_>>()?,
    };
    let jobs: Vec<(&crate::model::SubjectData, f64)> = subjects
        .iter()
        .flat_map(|s| {
            cfg.landmarks
                .iter()
                .filter(|&&t| s.event_time > t)
                .map(move |&t| (*s, t))
        })
        .collect();
    let times = grid(0.0, horizon, cfg.trajectory_points);
    let results = jobs
        .par_iter()
        .map(
            |&(s, t)| -> CliResult<(Vec<Vec<String>>, Vec<Vec<String>>)> {
                let us = grid(t, horizon, cfg.horizon_points);
                let pi = predict_survival_curve_with(s, t, &us, params, spec)
                    .map_err(|e| e.in_subject(&s.id))?;
                let eb = empirical_bayes_mode_with(s, t, params, spec)
                    .map_err(|e| e.in_subject(&s.id))?;
                let fitted = trajectory(s, &eb.b, params, spec, &times)?;
                let p = us
                    .iter()
                    .zip(&pi)
                    .map(|(u, p)| vec![s.id.clone(), fmt_f64(t), fmt_f64(*u), fmt_f64(*p)])
                    .collect();
                let tr = times
                    .iter()
                    .zip(&fitted)
                    .map(|(x, m)| vec![s.id.clone(), fmt_f64(t), fmt_f64(*x), fmt_f64(*m)])
                    .collect();
                Ok((p, tr))
            },
        )
        .collect::<CliResult<Vec<_>>>()?;
    let (p, tr): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    write_csv(
        &run.path("predictions.csv"),
        &["id", "t", "u", "pi_hat"],
        p.into_iter().flatten(),
    )?;
    write_csv(
        &run.path("trajectories.csv"),
        &["id", "t", "time", "fitted"],
        tr.into_iter().flatten(),
    )?;
    run.manifest(&cfg, vec!["predictions.csv", "trajectories.csv"])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelRef {
    pub label: String,
    /// A `fit.json` written by the fit command.
    pub fit: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    pub models: Vec<ModelRef>,
    pub data: DataConfig,
    pub landmarks: Vec<f64>,
    /// Prediction windows Δt.
    pub windows: Vec<f64>,
    /// Refit without each subject before predicting for it.
    #[serde(default)]
    pub leave_one_out: bool,
    /// Options of the leave-one-out refits.
    #[serde(default)]
    pub options: FitOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

/// θ̂ without subject i for every subject at risk at the earliest landmark;
/// the full-data estimate for the others.
fn leave_one_out(
    data: &Dataset,
    f: &FittedModel,
    first: f64,
    options: &FitOptions,
) -> CliResult<Vec<ParameterSet>> {
    let options = FitOptions {
        compute_vcov: false,
        ..*options
    };
    (0..data.len())
        .map(|i| {
            if data.subjects[i].event_time <= first {
                return Ok(f.theta_hat.clone());
            }
            let mut rest = data.clone();
            rest.subjects.remove(i);
            Ok(fit_from(&rest, &f.spec, f.theta_hat.clone(), &options)?.theta_hat)
        })
        .collect()
}

fn evaluate(run: &mut Run, args: &RunArgs) -> CliResult<()> {
    let cfg: EvaluateConfig = read_json(&args.config)?;
    resolve_out(run, args, &cfg.out.clone().unwrap_or_else(default_out))?;
    if let Some(dt) = cfg.windows.iter().find(|&&dt| !(dt > 0.0)) {
        return Err(CliError::Config(format!(
            "windows must be positive, got {dt}"
        )));
    }
    let mut rows = Vec::new();
    for m in &cfg.models {
        let f: FittedModel = read_json(&run.base.join(&m.fit))?;
        let horizon = f.spec.baseline.horizon();
        for &t in &cfg.landmarks {
            if let Some(dt) = cfg
                .windows
                .iter()
                .find(|&&dt| !(t >= 0.0 && t + dt <= horizon))
            {
                return Err(CliError::Config(format!(
                    "model {}: window ({t}, {}] leaves [0, {horizon}]",
                    m.label,
                    t + dt
                )));
            }
        }
        let data = load_data(run, &cfg.data, &f.spec)?;
        let per_subject = if cfg.leave_one_out {
            let first = cfg.landmarks.iter().copied().fold(f64::INFINITY, f64::min);
            leave_one_out(&data, &f, first, &cfg.options)?
        } else {
            Vec::new()
        };
        let params_of = |i: usize| per_subject.get(i).unwrap_or(&f.theta_hat);
        for &t in &cfg.landmarks {
            for &dt in &cfg.windows {
                let r = evaluate_by(&data, &params_of, &f.spec, t, dt)?;
                rows.push(vec![
                    m.label.clone(),
                    fmt_f64(t),
                    fmt_f64(dt),
                    fmt_opt(r.auc),
                    fmt_opt(r.pe),
                    r.n_at_risk.to_string(),
                    r.n_events.to_string(),
                ]);
            }
        }
    }
    write_csv(
        &run.path("metrics.csv"),
        &["model", "t", "dt", "auc", "pe", "n_at_risk", "n_events"],
        rows,
    )?;
    run.manifest(&cfg, vec!["metrics.csv"])
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub scenario: Scenario,
    pub options: StudyOptions,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

/// Statistic columns of `summary.csv`, after `model`, `parameter`, `True`.
pub const SUMMARY_STATISTICS: [&str; 6] = ["Est", "SE", "SD", "RMSE", "CP", "ECP"];

fn study(run: &mut Run, args: &RunArgs) -> CliResult<()> {
    let mut cfg: StudyConfig = read_json(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.scenario.seed = seed;
    }
    run.seed = Some(cfg.scenario.seed);
    resolve_out(run, args, &cfg.out.clone().unwrap_or_else(default_out))?;
    cfg.scenario.validate()?;
    let result = run_study(&cfg.scenario, &cfg.options)?;
    cfg.scenario = result.scenario.clone();
    for (rep, model, msg) in &result.failures {
        warn!("replicate {rep}, model {model}: {msg}");
    }
    let mut header = vec!["model", "parameter", "True"];
    header.extend(SUMMARY_STATISTICS);
    let rows = result.summaries.iter().flat_map(|s| {
        s.parameters.iter().map(|p| {
            vec![
                s.model.clone(),
                p.name.clone(),
                fmt_f64(p.truth),
                fmt_f64(p.est),
                fmt_opt(p.se),
                fmt_opt(p.sd),
                fmt_f64(p.rmse),
                fmt_opt(p.cp),
                fmt_opt(p.ecp),
            ]
        })
    });
    write_csv(&run.path("summary.csv"), &header, rows)?;
    let rows = result.summaries.iter().flat_map(|s| {
        s.band_coverage
            .iter()
            .map(|b| vec![s.model.clone(), fmt_f64(b.t), fmt_f64(b.coverage)])
    });
    write_csv(&run.path("coverage.csv"), &["model", "t", "coverage"], rows)?;
    write_json(&run.path("study.json"), &result)?;
    run.manifest(&cfg, vec!["summary.csv", "coverage.csv", "study.json"])
}
