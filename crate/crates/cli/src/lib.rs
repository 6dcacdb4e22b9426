//! Command-line front end: argument parsing, suite dispatch and report output.

pub mod analyze;
pub mod checks;
pub mod config;
pub mod report;
pub mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use weylpinch::kahler::MIN_SPHERE_SAMPLES;
use weylpinch::models::{grid_box, reference_invariants, Model};

use crate::analyze::{integrate_model, record_invariant_checks, run_analyze, InvariantChecks};
use crate::checks::CheckLog;
use crate::config::{
    config_digest, load_metric, metric_file_choice, model_name, orientation_sign, parse_grid, parse_model,
    parse_orientation, parse_point, parse_suites, AnalysisConfig, Backend, Format, MetricChoice, PointSet,
};
use crate::report::{emit, GlobalRecords, Report};
use crate::verify::{check_suite, run_verify, VerifyConfig, DEFAULT_ORDER};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("output error: {0}")]
    Output(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        EXIT_ERROR
    }
}

#[derive(Debug, Parser)]
#[command(name = "weylpinch", version, about = "Curvature and Weyl-pinching laboratory for 4-manifolds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pointwise curvature analysis on a model or a metric file.
    Analyze(AnalyzeArgs),
    /// Run a named verification suite.
    Verify(VerifyArgs),
    /// Integrate the characteristic numbers of a compact model.
    Integrate(IntegrateArgs),
    /// List the model catalog.
    Models,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Report path; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    pub format: String,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Catalog model, optionally with inline parameters: `product_s2xs2(1,2)`.
    #[arg(long, conflicts_with = "metric")]
    pub model: Option<String>,
    /// Comma-separated model parameters.
    #[arg(long, requires = "model")]
    pub params: Option<String>,
    /// Metric specification file.
    #[arg(long)]
    pub metric: Option<String>,
    /// Evaluation point `x1,x2,x3,x4`; repeatable.
    #[arg(long = "point", allow_hyphen_values = true, conflicts_with = "grid")]
    pub points: Vec<String>,
    /// Cell-centred grid `NxNxNxN` over the model's grid box.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value = "spectra,pinch")]
    pub suites: String,
    #[arg(long, default_value = "+1", allow_hyphen_values = true)]
    pub orientation: String,
    /// Gauss rule order for the invariants suite.
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub order: usize,
    /// Sphere samples for curvature extremization.
    #[arg(long, default_value_t = 8192)]
    pub budget: usize,
    #[arg(long, default_value = "hyperdual")]
    pub backend: String,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// One of all, lemma1, lemma2, lemma3, prop2, berger, hall_murphy, psi,
    /// weitzenboeck, signature, chi.
    pub suite: String,
    /// Sample count for sweeps, sphere samples for extremization suites.
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub order: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub params: Option<String>,
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub order: usize,
    #[arg(long, default_value = "+1", allow_hyphen_values = true)]
    pub orientation: String,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Serialize)]
struct IntegrateConfig {
    #[serde(serialize_with = "model_name")]
    model: Model,
    params: Vec<f64>,
    orientation: i8,
    quadrature_order: usize,
    format: Format,
}

fn check_order(order: usize) -> Result<(), CliError> {
    if order == 0 {
        return Err(CliError::Config("quadrature order must be positive".into()));
    }
    Ok(())
}

pub fn analysis_config(a: &AnalyzeArgs) -> Result<AnalysisConfig, CliError> {
    let metric = match (&a.model, &a.metric) {
        (Some(m), None) => {
            let (model, params) = parse_model(m, a.params.as_deref())?;
            MetricChoice::Builtin { model, params }
        }
        (None, Some(path)) => metric_file_choice(path)?,
        _ => return Err(CliError::Config("give exactly one of --model or --metric".into())),
    };
    let backend: Backend = a.backend.parse()?;
    let loaded = load_metric(&metric, backend)?;
    let points = if !a.points.is_empty() {
        PointSet::Explicit {
            points: a.points.iter().map(|p| parse_point(p)).collect::<Result<_, _>>()?,
        }
    } else {
        let counts = match &a.grid {
            Some(g) => parse_grid(g)?,
            None => [2; 4],
        };
        PointSet::Grid {
            counts,
            bounds: grid_box(&loaded),
        }
    };
    if a.budget < MIN_SPHERE_SAMPLES {
        return Err(CliError::Config(format!("--budget must be at least {MIN_SPHERE_SAMPLES}")));
    }
    check_order(a.order)?;
    Ok(AnalysisConfig {
        metric,
        points,
        orientation: orientation_sign(parse_orientation(&a.orientation)?),
        suites: parse_suites(&a.suites)?,
        quadrature_order: a.order,
        sphere_samples: a.budget,
        backend,
        format: a.out.format.parse()?,
    })
}

fn finish(report: &Report, format: Format, out: &OutputArgs) -> Result<i32, CliError> {
    emit(&report.render(format)?, out.output.as_deref())?;
    Ok(if report.summary.pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn summarize(checks: &CheckLog) {
    for r in checks.records() {
        eprintln!("{}", r.line());
    }
}

fn cmd_analyze(a: &AnalyzeArgs) -> Result<i32, CliError> {
    let cfg = analysis_config(a)?;
    let metric = load_metric(&cfg.metric, cfg.backend)?;
    let outcome = run_analyze(&cfg, &metric)?;
    summarize(&outcome.checks);
    let report = Report::new("analyze", &cfg, outcome.points, outcome.global, outcome.checks.into_records());
    finish(&report, cfg.format, &a.out)
}

fn cmd_verify(a: &VerifyArgs) -> Result<i32, CliError> {
    check_suite(&a.suite)?;
    check_order(a.order)?;
    let cfg = VerifyConfig {
        suite: a.suite.clone(),
        budget: a.budget,
        quadrature_order: a.order,
        format: a.out.format.parse()?,
    };
    let (_, seed) = config_digest(&cfg);
    let outcome = run_verify(&cfg, seed)?;
    let lines: Vec<String> = outcome.checks.records().iter().map(|r| r.line()).collect();
    let report = Report::new("verify", &cfg, Vec::new(), outcome.global, outcome.checks.into_records());
    match &a.out.output {
        Some(_) => {
            for l in &lines {
                println!("{l}");
            }
        }
        // the report itself goes to stdout
        None => {
            for l in &lines {
                eprintln!("{l}");
            }
        }
    }
    finish(&report, cfg.format, &a.out)
}

fn cmd_integrate(a: &IntegrateArgs) -> Result<i32, CliError> {
    let (model, params) = parse_model(&a.model, a.params.as_deref())?;
    if !model.is_compact() {
        return Err(CliError::Config(format!("{} is non-compact; nothing to integrate", model.name())));
    }
    check_order(a.order)?;
    let orientation = parse_orientation(&a.orientation)?;
    let cfg = IntegrateConfig {
        model,
        params: params.clone(),
        orientation: orientation_sign(orientation),
        quadrature_order: a.order,
        format: a.out.format.parse()?,
    };
    let metric = load_metric(
        &MetricChoice::Builtin {
            model,
            params,
        },
        Backend::Hyperdual,
    )?;
    let rec = integrate_model(&metric, a.order, orientation)?;
    let mut log = CheckLog::new();
    record_invariant_checks(&rec, InvariantChecks::for_model(Some(model), orientation), &mut log, "invariants");
    summarize(&log);
    eprintln!("tau = {:.6}  chi = {:.6}  volume = {:.6}", rec.tau, rec.chi, rec.volume);
    let global = GlobalRecords {
        invariants: vec![rec],
        skipped: Vec::new(),
    };
    let report = Report::new("integrate", &cfg, Vec::new(), global, log.into_records());
    finish(&report, cfg.format, &a.out)
}

fn fmt_opt<T: std::fmt::Display>(x: Option<T>) -> String {
    x.map_or_else(|| "-".into(), |v| v.to_string())
}

pub fn models_table() -> String {
    let mut out = format!(
        "{:<24} {:<10} {:<22} {:<8} {:<7} {:<9} {:>6} {:>4} {:>4} {:>10}\n",
        "model", "params", "coords", "compact", "kahler", "einstein", "s", "chi", "tau", "volume"
    );
    for m in Model::ALL {
        let p = m.default_params();
        let r = reference_invariants(m, &p).expect("default parameters are valid");
        let params: Vec<String> = m.param_names().iter().zip(&p).map(|(n, v)| format!("{n}={v}")).collect();
        out.push_str(&format!(
            "{:<24} {:<10} {:<22} {:<8} {:<7} {:<9} {:>6} {:>4} {:>4} {:>10}\n",
            m.name(),
            if params.is_empty() { "-".into() } else { params.join(",") },
            m.coords().join(" "),
            m.is_compact(),
            r.kahler,
            r.einstein,
            r.scalar,
            fmt_opt(r.chi),
            fmt_opt(r.tau),
            r.volume.map_or_else(|| "-".into(), |v| format!("{v:.4}")),
        ));
    }
    out
}

fn configure_threads() -> Result<(), CliError> {
    let n = match std::env::var("WEYLPINCH_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("WEYLPINCH_THREADS must be a non-negative integer, got {v:?}")))?,
        Err(_) => 0,
    };
    // a second call in the same process is harmless
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs one parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = configure_threads().and_then(|_| match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Integrate(a) => cmd_integrate(a),
        Command::Models => {
            print!("{}", models_table());
            Ok(EXIT_OK)
        }
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("weylpinch: {e}");
            e.exit_code()
        }
    }
}
