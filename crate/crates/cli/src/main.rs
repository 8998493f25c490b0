use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use metric_sobolev::experiments::{run, ExperimentConfig, Outcome};
use metric_sobolev::io;
use metric_sobolev::report::Format;
use metric_sobolev::Error;
use rayon::prelude::*;

const EXIT_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const THREADS_VAR: &str = "METRIC_SOBOLEV_THREADS";

/// Run a metric-sobolev experiment and write its reports.
#[derive(Debug, Parser)]
#[command(name = "metric-sobolev", version)]
struct Args {
    /// partition-audit, energy-ladder, clarkson-suite, hopflax-suite,
    /// wug-audit, diagnostics-suite, flow-run or snowflake-demo
    #[arg(long, required_unless_present = "manifest")]
    experiment: Option<String>,
    /// Generator such as `interval:2000`, `grid2d:15`, `koch:5`, or a space file
    #[arg(long)]
    space: Option<String>,
    /// constant:c, linear, sin, abs-kink, indicator, random-lipschitz, random, or a field file
    #[arg(long)]
    field: Option<String>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    /// Comma-separated scales, decreasing
    #[arg(long, value_delimiter = ',')]
    deltas: Option<Vec<f64>>,
    /// Comma-separated times
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Number of sampled spaces, fields, curves or trials
    #[arg(long)]
    count: Option<usize>,
    /// Number of random pairs
    #[arg(long)]
    pairs: Option<usize>,
    /// CSV probe grid with rows `point_id,radius`
    #[arg(long)]
    probes: Option<PathBuf>,
    /// JSON curve file for wug-audit
    #[arg(long)]
    curves: Option<PathBuf>,
    /// Output directory; without it the report is printed to stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: String,
    /// JSON array of experiment configs, run concurrently
    #[arg(long, conflicts_with = "experiment")]
    manifest: Option<PathBuf>,
}

impl Args {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            experiment: self.experiment.clone().unwrap_or_default(),
            space: self.space.clone(),
            field: self.field.clone(),
            q: self.q,
            p: self.p,
            deltas: self.deltas.clone(),
            times: self.times.clone(),
            seed: self.seed,
            tau: self.tau,
            steps: self.steps,
            count: self.count,
            pairs: self.pairs,
            probes: self.probes.clone(),
            curves: self.curves.clone(),
            out: self.out.clone(),
            format: Some(self.format.clone()),
        }
    }
}

/// Input problems exit with 2; a run that could not finish counts as failed.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotConverged { .. } | Error::Mismatch(_) => EXIT_FAILED,
        _ => EXIT_CONFIG,
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("{THREADS_VAR} must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn format_of(config: &ExperimentConfig) -> Result<Format, Error> {
    config.format.as_deref().unwrap_or("json").parse()
}

fn write_outcome(outcome: &Outcome, dir: &Path, format: Format) -> Result<(), Error> {
    let ext = match format {
        Format::Json => "json",
        Format::Csv => "csv",
    };
    outcome
        .report
        .emit(&dir.join(format!("report.{ext}")), format)?;
    for (name, body) in &outcome.tables {
        io::write_text(&dir.join(name), body)?;
    }
    Ok(())
}

fn summarize(outcome: &Outcome) {
    let failures: Vec<_> = outcome.report.failures().collect();
    println!(
        "{}: {} ({} checks, {} failed)",
        outcome.report.name,
        if failures.is_empty() { "PASS" } else { "FAIL" },
        outcome.report.checks.len(),
        failures.len()
    );
    for c in failures {
        println!(
            "  FAIL {}: observed {} limit {} {}",
            c.name, c.observed, c.limit, c.detail
        );
    }
}

/// Runs one config; `Ok(true)` when every check passed.
fn execute(config: &ExperimentConfig, print_report: bool) -> Result<(Outcome, bool), Error> {
    let format = format_of(config)?;
    let outcome = run(config)?;
    match &config.out {
        Some(dir) => write_outcome(&outcome, dir, format)?,
        None if print_report => match format {
            Format::Json => println!("{}", outcome.report.to_json()),
            Format::Csv => print!("{}", outcome.report.to_csv()),
        },
        None => {}
    }
    let passed = outcome.report.passed();
    Ok((outcome, passed))
}

fn run_manifest(path: &Path, out: Option<&Path>) -> ExitCode {
    let configs: Vec<ExperimentConfig> = match io::read_text(path).and_then(|t| {
        serde_json::from_str(&t).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let configs: Vec<ExperimentConfig> = configs
        .into_iter()
        .enumerate()
        .map(|(k, mut c)| {
            if c.out.is_none() {
                c.out = out.map(|o| o.join(format!("{k:02}-{}", c.experiment)));
            }
            c
        })
        .collect();
    let results: Vec<_> = configs.par_iter().map(|c| execute(c, false)).collect();
    let mut code = 0u8;
    for (c, r) in configs.iter().zip(results) {
        match r {
            Ok((outcome, passed)) => {
                summarize(&outcome);
                if !passed {
                    code = code.max(EXIT_FAILED);
                }
            }
            Err(e) => {
                eprintln!("error in {}: {e}", c.experiment);
                code = code.max(exit_code(&e));
            }
        }
    }
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    if let Some(path) = &args.manifest {
        return run_manifest(path, args.out.as_deref());
    }
    match execute(&args.config(), true) {
        Ok((outcome, passed)) => {
            if args.out.is_some() {
                summarize(&outcome);
            } else {
                for c in outcome.report.failures() {
                    eprintln!("FAIL {}: observed {} limit {}", c.name, c.observed, c.limit);
                }
            }
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAILED)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
