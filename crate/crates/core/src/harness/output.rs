use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use super::{ExperimentConfig, KsRow, QuestionReport};
use crate::stats::{write_statistics_csv, StatisticDistribution};
use crate::Result;

/// Per-estimator run diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct EstimatorDiagnostics {
    pub estimator: String,
    pub clamped_ratios: usize,
    pub rejection_attempts: u64,
    pub rejection_accepted: u64,
    pub acceptance_rate: Option<f64>,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub command: String,
    pub config: ExperimentConfig,
    pub seeds: BTreeMap<&'static str, u64>,
    pub n_train: usize,
    pub n_deleted: usize,
    pub bound: f64,
    pub estimators: Vec<EstimatorDiagnostics>,
    pub runtime_seconds: f64,
    /// Command-specific results.
    #[serde(skip_serializing_if = "Value::is_null")]
    pub results: Value,
}

impl QuestionReport {
    pub fn diagnostics(&self) -> Vec<EstimatorDiagnostics> {
        self.runs
            .iter()
            .map(|run| EstimatorDiagnostics {
                estimator: run.kind.to_string(),
                clamped_ratios: run.output.clamped,
                rejection_attempts: run.output.attempts,
                rejection_accepted: run.output.accepted,
                acceptance_rate: run.output.acceptance_rate(),
            })
            .collect()
    }

    /// Every series, named `<estimator>/<series>`.
    pub fn statistics(&self) -> Vec<StatisticDistribution> {
        self.runs
            .iter()
            .flat_map(|run| {
                let label = run.kind.to_string();
                run.output
                    .series
                    .values()
                    .map(move |s| StatisticDistribution {
                        name: format!("{label}/{}", s.name),
                        values: s.values.clone(),
                    })
            })
            .collect()
    }
}

/// Writes `experiment,estimator,statistic,ks,critical_05` rows.
pub fn write_ks_table<W: Write>(out: W, rows: &[KsRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(["experiment", "estimator", "statistic", "ks", "critical_05"])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `statistics.csv`, `ks_table.csv` (when `rows` is given) and
/// `summary.json` into `dir`, creating it if needed.
pub fn write_outputs(
    dir: &Path,
    statistics: &[StatisticDistribution],
    rows: Option<&[KsRow]>,
    summary: &RunSummary,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_statistics_csv(
        BufWriter::new(File::create(dir.join("statistics.csv"))?),
        statistics,
    )?;
    if let Some(rows) = rows {
        write_ks_table(
            BufWriter::new(File::create(dir.join("ks_table.csv"))?),
            rows,
        )?;
    }
    let mut f = BufWriter::new(File::create(dir.join("summary.json"))?);
    serde_json::to_writer_pretty(&mut f, summary)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}
