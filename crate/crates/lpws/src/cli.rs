//! Command implementations behind the `lpws` binary.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use lpws_core::solver::{fit_owlqn, FitResult};
use lpws_core::tuning::{select_lambda, TuningRule, TuningSpec};
use lpws_core::{Coefficients, Error, ModelProblem, ObjectiveKind, SolverConfig};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{CliError, Result};
use crate::experiment::{
    run_bound_experiment, run_coverage_experiment, run_error_experiment, run_robustness_experiment,
    run_solution_comparison, ExperimentReport,
};
use crate::io::{fit_json, read_coefficients, read_design, read_response, write_file};
use crate::plot::{render, PlotKind};
use crate::records::{
    bound_summary_csv, coverage_summary_csv, records_csv, summarize_records, summary_csv, BoundRow,
    CoverageRow, ReplicationRecord,
};

pub const SEED_ENV: &str = "LPWS_SEED";

#[derive(Debug, Parser)]
#[command(name = "lpws", version, about = "Sparse Poisson regression by l1-penalized weighted score")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one data set and write the result as JSON.
    Fit(FitArgs),
    /// Print the tuning parameter chosen by a rule.
    Tune(TuneArgs),
    /// Run a simulation experiment into a directory of CSV files.
    Simulate(SimulateArgs),
    /// Draw an SVG figure from experiment output.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Design matrix CSV (header row, one row per observation).
    #[arg(long)]
    pub x: PathBuf,
    /// Response CSV with a column named y.
    #[arg(long)]
    pub y: PathBuf,
    #[arg(long, default_value = "weighted", value_parser = ["weighted", "loglik"])]
    pub objective: String,
    #[arg(long, conflicts_with = "tuning")]
    pub lambda: Option<f64>,
    #[arg(long, value_parser = ["asymptotic", "gaussian"])]
    pub tuning: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    pub c: f64,
    /// Monte Carlo draws for the gaussian rule.
    #[arg(long, default_value_t = 10_000)]
    pub mc: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long, default_value = "asymptotic")]
    pub rule: String,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    pub c: f64,
    #[arg(long, default_value_t = 10_000)]
    pub mc: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// True coefficients (column beta), required by the exact rule.
    #[arg(long)]
    pub beta_star: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = ["robustness", "errors", "solutions", "coverage", "bound"])]
    pub experiment: String,
    /// Flat key = value file; absent keys take the experiment's defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Worker threads (default: available cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_parser = ["success_rates", "error_box", "solution_scatter"])]
    pub kind: String,
    #[arg(long)]
    pub out: PathBuf,
}

/// Flag, then `LPWS_SEED`, then `fallback`.
pub fn resolve_seed(flag: Option<u64>, fallback: u64) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Input(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(fallback),
    }
}

/// `v` with ten significant digits in positional notation.
pub fn ten_significant(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (9 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

fn warn_if_unstandardized(problem: &ModelProblem) {
    if !problem.is_standardized() {
        eprintln!("warning: design columns are not centered with unit mean square; tuning rules assume they are");
    }
}

pub fn cmd_fit(args: &FitArgs) -> Result<u8> {
    let x = read_design(&args.x)?;
    let y = read_response(&args.y)?;
    if y.len() != x.nrows() {
        return Err(CliError::Input(format!("X has {} rows but y has {}", x.nrows(), y.len())));
    }
    let problem = ModelProblem::new(x, y)?;
    let kind: ObjectiveKind = args.objective.parse()?;
    let seed = resolve_seed(args.seed, 0)?;
    let lambda = match (args.lambda, args.tuning.as_deref()) {
        (Some(l), None) => l,
        (None, Some(rule)) => {
            warn_if_unstandardized(&problem);
            let rule = if rule == "gaussian" { TuningRule::GaussianApprox } else { TuningRule::Asymptotic };
            let spec = TuningSpec::new(rule, args.alpha, args.c).with_mc_samples(args.mc).with_seed(seed);
            select_lambda(&spec, &problem, None)?
        }
        _ => return Err(CliError::Input("give exactly one of --lambda or --tuning".into())),
    };
    let config = SolverConfig::default().with_max_iters(args.max_iters);
    let init = Coefficients::zeros(problem.p());
    let (fit, code): (FitResult, u8) = match fit_owlqn(&problem, kind, lambda, &config, &init) {
        Ok(fit) => {
            let code = if fit.converged { 0 } else { 2 };
            (fit, code)
        }
        Err(Error::Divergence(partial)) => (*partial, 2),
        Err(e) => return Err(e.into()),
    };
    write_file(&args.out, &fit_json(&fit, lambda))?;
    if code != 0 {
        eprintln!(
            "fit did not converge after {} iterations (KKT residual {:e}); partial result written",
            fit.iterations, fit.kkt_residual
        );
    }
    Ok(code)
}

pub fn cmd_tune(args: &TuneArgs) -> Result<String> {
    let rule: TuningRule = args.rule.parse()?;
    let x = read_design(&args.x)?;
    let n = x.nrows();
    let problem = ModelProblem::new(x, vec![0.0; n])?;
    warn_if_unstandardized(&problem);
    let beta_star = args.beta_star.as_deref().map(read_coefficients).transpose()?;
    let seed = resolve_seed(args.seed, 0)?;
    let spec = TuningSpec::new(rule, args.alpha, args.c).with_mc_samples(args.mc).with_seed(seed);
    if spec.violates_dimension_assumption(problem.p()) {
        eprintln!("warning: p / alpha <= 8, outside the range the tuning guarantees cover");
    }
    Ok(ten_significant(select_lambda(&spec, &problem, beta_star.as_ref())?))
}

/// Appends rows to a CSV file, flushing after every batch.
struct RowWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl RowWriter {
    fn create(path: PathBuf, header: &str) -> Result<Self> {
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = Self { path, out: BufWriter::new(file) };
        w.line(header)?;
        w.flush()?;
        Ok(w)
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.out, "{s}").map_err(|e| CliError::io(&self.path, e))
    }

    fn flush(&mut self) -> Result<()> {
        self.out.flush().map_err(|e| CliError::io(&self.path, e))
    }

    fn rows<T>(&mut self, rows: &[T], f: fn(&T) -> String) -> Result<()> {
        for r in rows {
            self.line(&f(r))?;
        }
        self.flush()
    }
}

fn manifest(cfg: &ExperimentConfig, redraws: usize) -> String {
    format!(
        "experiment = {}\nartifact_version = lpws {}\n{}redrawn_coefficients = {redraws}\n",
        cfg.kind.name(),
        env!("CARGO_PKG_VERSION"),
        cfg.to_lines()
    )
}

pub fn load_config(kind: ExperimentKind, path: Option<&Path>, seed_flag: Option<u64>) -> Result<ExperimentConfig> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|e| CliError::io(p, e))?,
        None => String::new(),
    };
    let mut cfg = ExperimentConfig::parse(kind, &text)?;
    cfg.seed = resolve_seed(seed_flag, cfg.seed)?;
    Ok(cfg)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let kind: ExperimentKind = args.experiment.parse()?;
    let cfg = load_config(kind, args.config.as_deref(), args.seed)?;
    let jobs = args.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(CliError::Input("--jobs must be at least 1".into()));
    }
    let dir = &args.out_dir;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    if cfg.p as f64 / cfg.alpha <= 8.0 {
        eprintln!("warning: p / alpha <= 8, outside the range the tuning guarantees cover");
    }

    let mut redraws = 0;
    match kind {
        ExperimentKind::Robustness | ExperimentKind::Errors => {
            let mut w = RowWriter::create(dir.join("records.csv"), ReplicationRecord::HEADER)?;
            let mut sink = |rows: &[ReplicationRecord]| w.rows(rows, ReplicationRecord::csv_row);
            let report: ExperimentReport = if kind == ExperimentKind::Robustness {
                run_robustness_experiment(&cfg, jobs, &mut sink)?
            } else {
                run_error_experiment(&cfg, jobs, &mut sink)?
            };
            redraws = report.redraws;
            write_file(&dir.join("summary.csv"), &summary_csv(&summarize_records(&report.records)))?;
        }
        ExperimentKind::Solutions => {
            let table = run_solution_comparison(&cfg)?;
            write_file(&dir.join("solutions.csv"), &table.csv())?;
            write_file(&dir.join("records.csv"), &records_csv(&table.records))?;
            write_file(&dir.join("summary.csv"), &summary_csv(&summarize_records(&table.records)))?;
        }
        ExperimentKind::Coverage => {
            let mut w = RowWriter::create(dir.join("coverage.csv"), CoverageRow::HEADER)?;
            let rows = run_coverage_experiment(&cfg, jobs, &mut |r| w.rows(r, CoverageRow::csv_row))?;
            write_file(&dir.join("summary.csv"), &coverage_summary_csv(&rows))?;
        }
        ExperimentKind::Bound => {
            let mut w = RowWriter::create(dir.join("bounds.csv"), BoundRow::HEADER)?;
            let rows = run_bound_experiment(&cfg, jobs, &mut |r| w.rows(r, BoundRow::csv_row))?;
            let covered = rows.iter().filter(|r| r.covered).count();
            if covered < cfg.reps {
                eprintln!("warning: only {covered} of {} requested covered replications within max_reps", cfg.reps);
            }
            write_file(&dir.join("summary.csv"), &bound_summary_csv(&rows))?;
        }
    }
    if redraws > 0 {
        eprintln!("note: {redraws} coefficient draws were replaced because a Poisson rate exceeded the sampler bound");
    }
    write_file(&dir.join("manifest.txt"), &manifest(&cfg, redraws))
}

pub fn cmd_plot(args: &PlotArgs) -> Result<()> {
    let kind: PlotKind = args.kind.parse()?;
    let svg = render(&args.input, kind)?;
    write_file(&args.out, &svg)
}

/// Runs a parsed command; returns the process exit code.
pub fn run(cli: &Cli) -> u8 {
    let outcome = match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Tune(a) => cmd_tune(a).map(|v| {
            println!("{v}");
            0
        }),
        Command::Simulate(a) => cmd_simulate(a).map(|()| 0),
        Command::Plot(a) => cmd_plot(a).map(|()| 0),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(ten_significant(0.1352079395689763), "0.1352079396");
        assert_eq!(ten_significant(12.5), "12.50000000");
        assert_eq!(ten_significant(3.0e-5), "0.00003000000000");
    }
}
