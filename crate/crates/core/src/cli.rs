//! The `dre-deletion` command line.
//!
//! ```text
//! dre-deletion <generate|q1|q2|q3|test|mmd> [--config PATH] [--set KEY=VALUE]... [--out DIR] [--threads N]
//! ```
//!
//! Exit codes: 0 on success, 2 for usage and configuration errors, 3 for
//! failures while running.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::dre::dre_bound;
use crate::harness::{
    run_deletion_trials, run_mmd, run_question_on, training_seeds, write_outputs, Experiment,
    ExperimentConfig, Question, RunSummary,
};
use crate::stats::StatisticDistribution;
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "dre-deletion",
    version,
    about = "Density-ratio approximate deletion experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON experiment config; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override one config key, e.g. `--set lambda=0.6`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Output directory; overrides `output_dir` from the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Write the training set with its deletion mask to dataset.csv.
    Generate,
    /// Does the estimator approximate the exact ratio?
    Q1,
    /// Do rejection samples match the re-trained model?
    Q2,
    /// Does the estimator separate the two models?
    Q3,
    /// Calibrated deletion test under both hypotheses.
    Test,
    /// Unbiased and closed-form MMD between the two models.
    Mmd,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Q1 => "q1",
            Command::Q2 => "q2",
            Command::Q3 => "q3",
            Command::Test => "test",
            Command::Mmd => "mmd",
        }
    }
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit code. Diagnostics go to stderr.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return EXIT_OK;
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!("{}", msg.lines().next().unwrap_or("invalid arguments"));
            return EXIT_CONFIG;
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                EXIT_CONFIG
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let mut config = ExperimentConfig::load(cli.config.as_deref(), &cli.set)?;
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} threads: {e}", cli.threads)))?;
    pool.install(|| execute(cli.command, &config))
}

fn execute(command: Command, config: &ExperimentConfig) -> Result<()> {
    let start = Instant::now();
    let experiment = Experiment::prepare(config)?;
    let training = &experiment.training;
    let mut summary = RunSummary {
        command: command.name().to_string(),
        config: config.clone(),
        seeds: training_seeds(config),
        n_train: training.len(),
        n_deleted: training.n_deleted(),
        bound: dre_bound(training.len(), training.n_deleted())?,
        estimators: Vec::new(),
        runtime_seconds: 0.0,
        results: serde_json::Value::Null,
    };
    let dir = &config.output_dir;

    match command {
        Command::Generate => {
            fs::create_dir_all(dir)?;
            training.write_csv(BufWriter::new(File::create(dir.join("dataset.csv"))?))?;
            summary.runtime_seconds = start.elapsed().as_secs_f64();
            let f = BufWriter::new(File::create(dir.join("summary.json"))?);
            serde_json::to_writer_pretty(f, &summary)?;
        }
        Command::Q1 | Command::Q2 | Command::Q3 => {
            let question = match command {
                Command::Q1 => Question::Q1,
                Command::Q2 => Question::Q2,
                _ => Question::Q3,
            };
            let report = run_question_on(config, &experiment, question)?;
            summary.estimators = report.diagnostics();
            summary.results = json!({ "ks_table": report.rows });
            summary.runtime_seconds = start.elapsed().as_secs_f64();
            write_outputs(dir, &report.statistics(), Some(&report.rows), &summary)?;
        }
        Command::Test => {
            let mut statistics = Vec::new();
            let mut results = Vec::new();
            for kind in config.estimators() {
                let s = run_deletion_trials(config, &experiment, &kind, config.test_trials)?;
                statistics.push(StatisticDistribution::new(
                    format!("{kind}/TEST_LR/H0"),
                    s.null_statistics.clone(),
                )?);
                statistics.push(StatisticDistribution::new(
                    format!("{kind}/TEST_LR/H1"),
                    s.alt_statistics.clone(),
                )?);
                results.push(s);
            }
            summary.results = json!({ "deletion_tests": results });
            summary.runtime_seconds = start.elapsed().as_secs_f64();
            write_outputs(dir, &statistics, None, &summary)?;
        }
        Command::Mmd => {
            let report = run_mmd(config, &experiment)?;
            summary.results = json!({
                "closed_form": report.closed_form,
                "bandwidth": report.bandwidth,
                "h0_mean": report.null.mean(),
                "h0_standard_error": report.null.standard_error(),
                "h1_mean": report.alt.mean(),
                "h1_standard_error": report.alt.standard_error(),
            });
            summary.runtime_seconds = start.elapsed().as_secs_f64();
            write_outputs(dir, &[report.null, report.alt], None, &summary)?;
        }
    }
    Ok(())
}
