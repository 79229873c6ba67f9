//! Matrix sweeps: cross-product expansion, parallel execution, CSV and JSON
//! output, per-cell summaries.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{run_repetition, ExperimentSetting, RunOptions, RunRecord, RunStatus};
use crate::oracles::RegionShape;
use crate::search::{Alg1Mode, OrientationPolicy, Strategy};

pub const CSV_HEADER: &str = "setting_id,rep,d,theta,shape,delta,gamma,strategy,N,lambda,L,alg1_mode,orientation_policy,s_ratio,s_afr,s_rfr,stderr,probes,iterations,wall_time_ms,seed,status";

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> SweepError + '_ {
    move |source| SweepError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parameter lists whose cross product forms the experiment; each key
/// holds every value to sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Matrix {
    pub dimensions: Vec<usize>,
    pub failure_rates: Vec<f64>,
    pub shapes: Vec<RegionShape>,
    pub compactness: Vec<f64>,
    /// Degrees.
    pub rotations: Vec<f64>,
    pub strategies: Vec<Strategy>,
    pub boundary_counts: Vec<usize>,
    #[serde(default = "default_lambda")]
    pub lambda: Vec<u32>,
    #[serde(default = "default_extension")]
    pub extension_length: Vec<f64>,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub alg1_mode: Alg1Mode,
    #[serde(default)]
    pub orientation_policy: OrientationPolicy,
    #[serde(default = "default_candidates")]
    pub dsb_candidates: usize,
    #[serde(default = "default_candidates")]
    pub fscs_candidates: usize,
    #[serde(default = "default_probe_budget")]
    pub probe_budget: u64,
    #[serde(default = "default_finder_budget")]
    pub finder_budget: u64,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
}

fn default_lambda() -> Vec<u32> {
    vec![20]
}
fn default_extension() -> Vec<f64> {
    vec![1.0]
}
fn default_repetitions() -> u32 {
    50
}
fn default_candidates() -> usize {
    10
}
fn default_probe_budget() -> u64 {
    RunOptions::default().probe_budget
}
fn default_finder_budget() -> u64 {
    RunOptions::default().finder_budget
}
fn default_mc_samples() -> usize {
    RunOptions::default().mc_samples
}

impl Matrix {
    pub fn from_toml_str(text: &str) -> Result<Self, SweepError> {
        let m: Matrix = toml::from_str(text).map_err(|e| SweepError::Config(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, SweepError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            SweepError::Config(msg) => SweepError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.repetitions < 1 {
            return Err(SweepError::Config("repetitions must be >= 1".into()));
        }
        for s in self.settings() {
            s.validate().map_err(|e| SweepError::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Cross product in a fixed nesting order.
    pub fn settings(&self) -> Vec<ExperimentSetting> {
        let mut out = Vec::new();
        for &d in &self.dimensions {
            for &theta in &self.failure_rates {
                for &shape in &self.shapes {
                    for &delta in &self.compactness {
                        for &gamma in &self.rotations {
                            for &strategy in &self.strategies {
                                for &n in &self.boundary_counts {
                                    for &lambda in &self.lambda {
                                        for &extension_length in &self.extension_length {
                                            out.push(ExperimentSetting {
                                                d,
                                                theta,
                                                shape,
                                                delta,
                                                gamma,
                                                strategy,
                                                n,
                                                lambda,
                                                extension_length,
                                                repetitions: self.repetitions,
                                                base_seed: self.base_seed,
                                            });
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            alg1_mode: self.alg1_mode,
            orientation_policy: self.orientation_policy,
            dsb_candidates: self.dsb_candidates,
            fscs_candidates: self.fscs_candidates,
            probe_budget: self.probe_budget,
            finder_budget: self.finder_budget,
            mc_samples: self.mc_samples,
            record_timing: true,
        }
    }
}

/// One line of `records.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub setting_id: String,
    pub rep: u32,
    pub d: usize,
    pub theta: f64,
    pub shape: RegionShape,
    pub delta: f64,
    pub gamma: f64,
    pub strategy: Strategy,
    #[serde(rename = "N")]
    pub n: usize,
    pub lambda: u32,
    #[serde(rename = "L")]
    pub extension_length: f64,
    pub alg1_mode: Alg1Mode,
    pub orientation_policy: OrientationPolicy,
    pub s_ratio: f64,
    pub s_afr: f64,
    pub s_rfr: f64,
    pub stderr: f64,
    pub probes: u64,
    pub iterations: u64,
    pub wall_time_ms: f64,
    pub seed: u64,
    pub status: RunStatus,
}

impl From<&RunRecord> for CsvRow {
    fn from(r: &RunRecord) -> Self {
        let s = &r.setting;
        CsvRow {
            setting_id: r.setting_id.clone(),
            rep: r.rep,
            d: s.d,
            theta: s.theta,
            shape: s.shape,
            delta: s.delta,
            gamma: s.gamma,
            strategy: s.strategy,
            n: s.n,
            lambda: s.lambda,
            extension_length: s.extension_length,
            alg1_mode: r.alg1_mode,
            orientation_policy: r.orientation_policy,
            s_ratio: r.s_ratio,
            s_afr: r.s_afr,
            s_rfr: r.s_rfr,
            stderr: r.stderr,
            probes: r.probes,
            iterations: r.iterations,
            wall_time_ms: r.wall_time_ms,
            seed: r.seed,
            status: r.status,
        }
    }
}

/// Per-cell means over the runs that produced a measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub setting_id: String,
    pub d: usize,
    pub theta: f64,
    pub shape: RegionShape,
    pub delta: f64,
    pub gamma: f64,
    pub strategy: Strategy,
    #[serde(rename = "N")]
    pub n: usize,
    pub lambda: u32,
    #[serde(rename = "L")]
    pub extension_length: f64,
    pub runs: usize,
    pub measured_runs: usize,
    pub mean_s_ratio: f64,
    pub sd_s_ratio: f64,
    pub mean_wall_time_ms: f64,
    pub mean_iterations: f64,
    pub mean_probes: f64,
}

/// Groups rows by setting id, in order of first appearance.
pub fn summarize(rows: &[CsvRow]) -> Vec<CellSummary> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&CsvRow>> = BTreeMap::new();
    for row in rows {
        let entry = groups.entry(&row.setting_id).or_default();
        if entry.is_empty() {
            order.push(&row.setting_id);
        }
        entry.push(row);
    }
    order
        .into_iter()
        .map(|id| {
            let group = &groups[id];
            let first = group[0];
            let measured: Vec<&&CsvRow> = group.iter().filter(|r| r.status.is_success()).collect();
            let k = measured.len() as f64;
            let mean = |f: &dyn Fn(&CsvRow) -> f64| {
                if measured.is_empty() {
                    0.0
                } else {
                    measured.iter().map(|r| f(r)).sum::<f64>() / k
                }
            };
            let mean_s_ratio = mean(&|r| r.s_ratio);
            let sd_s_ratio = if measured.len() > 1 {
                (measured
                    .iter()
                    .map(|r| (r.s_ratio - mean_s_ratio).powi(2))
                    .sum::<f64>()
                    / (k - 1.0))
                    .sqrt()
            } else {
                0.0
            };
            CellSummary {
                setting_id: id.to_string(),
                d: first.d,
                theta: first.theta,
                shape: first.shape,
                delta: first.delta,
                gamma: first.gamma,
                strategy: first.strategy,
                n: first.n,
                lambda: first.lambda,
                extension_length: first.extension_length,
                runs: group.len(),
                measured_runs: measured.len(),
                mean_s_ratio,
                sd_s_ratio,
                mean_wall_time_ms: mean(&|r| r.wall_time_ms),
                mean_iterations: mean(&|r| r.iterations as f64),
                mean_probes: mean(&|r| r.probes as f64),
            }
        })
        .collect()
}

pub fn read_records_csv(path: &Path) -> Result<Vec<CsvRow>, SweepError> {
    let mut reader = csv::Reader::from_path(path)?;
    let header: Vec<&str> = reader.headers()?.iter().collect();
    if header.join(",") != CSV_HEADER {
        return Err(SweepError::Config(format!(
            "{}: unexpected CSV header",
            path.display()
        )));
    }
    reader
        .deserialize()
        .collect::<Result<Vec<CsvRow>, _>>()
        .map_err(SweepError::from)
}

pub fn write_summary_csv(path: &Path, cells: &[CellSummary]) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_path(path)?;
    for c in cells {
        w.serialize(c)?;
    }
    if cells.is_empty() {
        // keep a header even when there is nothing to summarise
        drop(w);
        fs::write(
            path,
            "setting_id,d,theta,shape,delta,gamma,strategy,N,lambda,L,runs,measured_runs,mean_s_ratio,sd_s_ratio,mean_wall_time_ms,mean_iterations,mean_probes\n",
        )
        .map_err(io_err(path))?;
        return Ok(());
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub jobs: usize,
    pub out_dir: PathBuf,
    /// Write one JSON file per run under `runs/`.
    pub write_json: bool,
    pub record_timing: bool,
}

impl SweepOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        SweepOptions {
            jobs: 1,
            out_dir: out_dir.into(),
            write_json: true,
            record_timing: true,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepReport {
    pub rows: usize,
    /// Runs that ended without a measurement.
    pub failed_runs: usize,
    /// Setting ids skipped because the region cannot fit in the domain.
    pub skipped: Vec<String>,
    pub summary: Vec<CellSummary>,
}

impl SweepReport {
    pub fn is_partial(&self) -> bool {
        self.failed_runs > 0
    }
}

/// Runs every feasible cell of `matrix`, writing `records.csv`,
/// `summary.csv` and `runs/*.json` under the output directory. Output is
/// identical for any worker count.
pub fn sweep(matrix: &Matrix, options: &SweepOptions) -> Result<SweepReport, SweepError> {
    matrix.validate()?;
    let out = &options.out_dir;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let runs_dir = out.join("runs");
    if options.write_json {
        fs::create_dir_all(&runs_dir).map_err(io_err(&runs_dir))?;
    }

    let mut report = SweepReport::default();
    let mut cells = Vec::new();
    for s in matrix.settings() {
        match s.check_feasible() {
            Ok(()) => cells.push(s),
            Err(e) => {
                warn!("skipping infeasible cell {}: {e}", s.setting_id());
                report.skipped.push(s.setting_id());
            }
        }
    }
    let tasks: Vec<(usize, u32)> = cells
        .iter()
        .enumerate()
        .flat_map(|(i, s)| (0..s.repetitions).map(move |rep| (i, rep)))
        .collect();
    info!(
        "sweep: {} cells, {} runs, {} workers",
        cells.len(),
        tasks.len(),
        options.jobs
    );

    let mut run_options = matrix.run_options();
    run_options.record_timing = options.record_timing;

    let csv_path = out.join("records.csv");
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(&csv_path)?;
    writer.write_record(CSV_HEADER.split(','))?;
    writer.flush().map_err(io_err(&csv_path))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs.max(1))
        .build()
        .map_err(|e| SweepError::Config(e.to_string()))?;

    let (tx, rx) = mpsc::channel::<(usize, RunRecord)>();
    let mut rows: Vec<CsvRow> = Vec::with_capacity(tasks.len());
    let mut first_error: Option<SweepError> = None;
    std::thread::scope(|scope| {
        let (cells, tasks, run_options) = (&cells, &tasks, &run_options);
        scope.spawn(move || {
            pool.install(|| {
                tasks
                    .par_iter()
                    .enumerate()
                    .for_each_with(tx, |tx, (k, &(cell, rep))| {
                        let record = run_repetition(&cells[cell], rep, run_options);
                        // the receiver only hangs up after a write error
                        let _ = tx.send((k, record));
                    });
            });
        });

        // single ordered writer
        let mut pending: BTreeMap<usize, RunRecord> = BTreeMap::new();
        let mut next = 0;
        for (k, record) in rx {
            pending.insert(k, record);
            while let Some(record) = pending.remove(&next) {
                next += 1;
                if first_error.is_some() {
                    continue;
                }
                let row = CsvRow::from(&record);
                let written = write_run(&mut writer, &row, &record, &runs_dir, options.write_json, &csv_path);
                match written {
                    Ok(()) => {
                        if !record.status.is_success() {
                            warn!(
                                "{} rep {}: {}",
                                record.setting_id,
                                record.rep,
                                record.error.as_deref().unwrap_or(record.status.as_str())
                            );
                            report.failed_runs += 1;
                        }
                        rows.push(row);
                    }
                    Err(e) => first_error = Some(e),
                }
            }
        }
    });
    if let Some(e) = first_error {
        return Err(e);
    }

    report.rows = rows.len();
    report.summary = summarize(&rows);
    write_summary_csv(&out.join("summary.csv"), &report.summary)?;
    Ok(report)
}

fn write_run(
    writer: &mut csv::Writer<fs::File>,
    row: &CsvRow,
    record: &RunRecord,
    runs_dir: &Path,
    write_json: bool,
    csv_path: &Path,
) -> Result<(), SweepError> {
    writer.serialize(row)?;
    writer.flush().map_err(io_err(csv_path))?;
    if write_json {
        let path = runs_dir.join(format!("{}-r{}.json", record.setting_id, record.rep));
        let json = serde_json::to_vec_pretty(record)?;
        fs::write(&path, json).map_err(io_err(&path))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
dimensions = [2]
failure_rates = [0.01]
shapes = ["rectangle", "ellipse"]
compactness = [1]
rotations = [0, 45]
strategies = ["dsb"]
boundary_counts = [20]
repetitions = 2
base_seed = 3
mc_samples = 1000
"#;

    #[test]
    fn matrix_expands_cross_product() {
        let m = Matrix::from_toml_str(SMALL).unwrap();
        let s = m.settings();
        assert_eq!(s.len(), 4);
        assert_eq!(s[1].gamma, 45.0);
        assert_eq!(m.lambda, vec![20]);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(Matrix::from_toml_str(&format!("{SMALL}\nfoo = 1\n")).is_err());
        let bad = SMALL.replace("compactness = [1]", "compactness = [0.5]");
        assert!(matches!(Matrix::from_toml_str(&bad), Err(SweepError::Config(_))));
    }

    #[test]
    fn csv_row_serializes_in_header_order() {
        let m = Matrix::from_toml_str(SMALL).unwrap();
        let record = run_repetition(&m.settings()[0], 0, &m.run_options());
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(CsvRow::from(&record)).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
    }

    #[test]
    fn summary_means_skip_failed_runs() {
        let m = Matrix::from_toml_str(SMALL).unwrap();
        let record = run_repetition(&m.settings()[0], 0, &m.run_options());
        let mut a = CsvRow::from(&record);
        a.s_ratio = 0.5;
        let mut b = a.clone();
        b.rep = 1;
        b.s_ratio = 0.7;
        let mut c = a.clone();
        c.rep = 2;
        c.status = RunStatus::Error;
        c.s_ratio = 0.0;
        let s = summarize(&[a, b, c]);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].runs, 3);
        assert_eq!(s[0].measured_runs, 2);
        assert!((s[0].mean_s_ratio - 0.6).abs() < 1e-12);
    }
}
