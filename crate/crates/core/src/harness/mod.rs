//! Experiment orchestration: settings, seeded repetitions, run records,
//! matrix sweeps and SVG rendering.

mod render;
mod sweep;

pub use render::{render_svg, RenderError};
pub use sweep::{
    read_records_csv, summarize, sweep, write_summary_csv, CellSummary, CsvRow, Matrix,
    SweepError, SweepOptions, SweepReport, CSV_HEADER,
};

use std::fmt;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::{GeometryError, InputDomain, Point};
use crate::measure::{measure_points, measure_run, RegionMeasure, VolumeMethod};
use crate::oracles::{place_region, OracleError, RegionOracle, RegionShape, RegionSpec, RegionTemplate};
use crate::search::{
    find_first_failure, run_strategy, Alg1Mode, OrientationPolicy, SearchConfig, SearchError,
    StopReason, Strategy,
};

/// Random streams of one run, one per phase, so that changing how many
/// numbers one phase consumes never shifts another.
const STREAM_PLACEMENT: u64 = 0;
const STREAM_FINDER: u64 = 1;
const STREAM_SEARCH: u64 = 2;
const STREAM_MEASURE: u64 = 3;

/// One cell of the experiment matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSetting {
    pub d: usize,
    pub theta: f64,
    pub shape: RegionShape,
    pub delta: f64,
    /// Rotation angle in degrees.
    pub gamma: f64,
    pub strategy: Strategy,
    #[serde(rename = "N")]
    pub n: usize,
    pub lambda: u32,
    #[serde(rename = "L")]
    pub extension_length: f64,
    pub repetitions: u32,
    pub base_seed: u64,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid setting: {0}")]
    InvalidSetting(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl ExperimentSetting {
    /// Filesystem-safe identifier, e.g.
    /// `d2-rectangle-t0.001-dl1-g0-dsb-n100-lam20-L1`.
    pub fn setting_id(&self) -> String {
        format!(
            "d{}-{}-t{}-dl{}-g{}-{}-n{}-lam{}-L{}",
            self.d,
            self.shape,
            self.theta,
            self.delta,
            self.gamma,
            self.strategy,
            self.n,
            self.lambda,
            self.extension_length
        )
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::InvalidSetting(m));
        if self.d < 1 {
            return bad("d must be >= 1".into());
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return bad(format!("theta {} outside (0, 1]", self.theta));
        }
        if !(self.delta >= 1.0 && self.delta.is_finite()) {
            return bad(format!("delta {} must be >= 1", self.delta));
        }
        if !self.gamma.is_finite() {
            return bad("gamma must be finite".into());
        }
        if self.n < 1 || self.lambda < 1 || self.repetitions < 1 {
            return bad("N, lambda and repetitions must be >= 1".into());
        }
        if !(self.extension_length > 0.0 && self.extension_length.is_finite()) {
            return bad(format!("L {} must be > 0", self.extension_length));
        }
        Ok(())
    }

    pub fn template(&self) -> RegionTemplate {
        RegionTemplate {
            shape: self.shape,
            theta: self.theta,
            delta: self.delta,
            gamma_deg: self.gamma,
        }
    }

    pub fn domain(&self) -> Result<InputDomain, HarnessError> {
        Ok(InputDomain::unit(self.d)?)
    }

    /// Whether the region fits inside the unit domain at all.
    pub fn check_feasible(&self) -> Result<(), HarnessError> {
        crate::oracles::derive_extents(self.shape, self.theta, self.delta, &self.domain()?)?;
        Ok(())
    }
}

/// Settings shared by every run of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub alg1_mode: Alg1Mode,
    pub orientation_policy: OrientationPolicy,
    pub dsb_candidates: usize,
    pub fscs_candidates: usize,
    pub probe_budget: u64,
    /// Test executions allowed for locating the first failure.
    pub finder_budget: u64,
    pub mc_samples: usize,
    /// When false, `wall_time_ms` is recorded as 0 so output is
    /// byte-reproducible.
    pub record_timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            alg1_mode: Alg1Mode::Bracketing,
            orientation_policy: OrientationPolicy::AllPerSource,
            dsb_candidates: 10,
            fscs_candidates: 10,
            probe_budget: 1_000_000,
            finder_budget: 20_000,
            mc_samples: 200_000,
            record_timing: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// All N boundary inputs harvested.
    Ok,
    /// The strategy stopped early (budget, empty pool or stall).
    Short,
    NoFailure,
    Infeasible,
    Error,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::Short => "short",
            RunStatus::NoFailure => "no_failure",
            RunStatus::Infeasible => "infeasible",
            RunStatus::Error => "error",
        }
    }

    /// Whether the run produced a measurement.
    pub fn is_success(self) -> bool {
        matches!(self, RunStatus::Ok | RunStatus::Short)
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RunStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "ok" => RunStatus::Ok,
            "short" => RunStatus::Short,
            "no_failure" => RunStatus::NoFailure,
            "infeasible" => RunStatus::Infeasible,
            "error" => RunStatus::Error,
            other => return Err(format!("unknown run status `{other}`")),
        })
    }
}

/// Everything one repetition produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub setting_id: String,
    pub rep: u32,
    pub seed: u64,
    pub setting: ExperimentSetting,
    pub alg1_mode: Alg1Mode,
    pub orientation_policy: OrientationPolicy,
    pub rotation_plane: Option<(usize, usize)>,
    pub mc_samples: usize,
    pub status: RunStatus,
    pub error: Option<String>,
    pub region: Option<RegionSpec>,
    pub first_failure: Option<Point>,
    /// Test executions spent locating the first failure.
    pub finder_executions: u64,
    pub source_inputs: Vec<Point>,
    pub boundary_inputs: Vec<Point>,
    /// Oracle calls made by the strategy.
    pub probes: u64,
    pub iterations: u64,
    pub rays: u64,
    pub degenerate_rays: u64,
    /// Rays that ended on the miss streak without a failure-causing probe.
    pub consecutive_miss_rays: u64,
    pub stop: Option<StopReason>,
    /// Identification time: strategy start to its last boundary input.
    pub wall_time_ms: f64,
    pub s_afr: f64,
    pub s_rfr: f64,
    pub s_ratio: f64,
    pub stderr: f64,
    pub method: Option<VolumeMethod>,
    pub degenerate: bool,
}

impl RunRecord {
    fn empty(setting: &ExperimentSetting, rep: u32, seed: u64, options: &RunOptions) -> Self {
        RunRecord {
            setting_id: setting.setting_id(),
            rep,
            seed,
            setting: setting.clone(),
            alg1_mode: options.alg1_mode,
            orientation_policy: options.orientation_policy,
            rotation_plane: None,
            mc_samples: options.mc_samples,
            status: RunStatus::Error,
            error: None,
            region: None,
            first_failure: None,
            finder_executions: 0,
            source_inputs: Vec::new(),
            boundary_inputs: Vec::new(),
            probes: 0,
            iterations: 0,
            rays: 0,
            degenerate_rays: 0,
            consecutive_miss_rays: 0,
            stop: None,
            wall_time_ms: 0.0,
            s_afr: 0.0,
            s_rfr: 0.0,
            s_ratio: 0.0,
            stderr: 0.0,
            method: None,
            degenerate: false,
        }
    }

    fn failed(mut self, status: RunStatus, message: String) -> Self {
        self.status = status;
        self.error = Some(message);
        self
    }

    /// The hull's point set: boundary inputs followed by sources.
    pub fn afr_points(&self) -> Vec<Point> {
        self.boundary_inputs
            .iter()
            .chain(&self.source_inputs)
            .cloned()
            .collect()
    }

    /// Recomputes the measurement from the stored points and region, with
    /// the measurement stream of the original run.
    pub fn remeasure(&self) -> Option<RegionMeasure> {
        let region = self.region.as_ref()?;
        let domain = InputDomain::unit(self.setting.d).ok()?;
        let mut rng = stream(self.seed, STREAM_MEASURE);
        Some(measure_points(
            &self.afr_points(),
            region,
            &domain,
            self.mc_samples,
            &mut rng,
        ))
    }
}

/// Per-run seed: the first eight bytes of SHA-256 over the base seed, the
/// setting id and the repetition index.
pub fn derive_seed(base_seed: u64, setting_id: &str, rep: u32) -> u64 {
    let digest = Sha256::new()
        .chain_update(base_seed.to_le_bytes())
        .chain_update(setting_id.as_bytes())
        .chain_update(rep.to_le_bytes())
        .finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Runs repetition `rep` of `setting`. Failures are reported through the
/// record's status rather than as errors.
pub fn run_repetition(setting: &ExperimentSetting, rep: u32, options: &RunOptions) -> RunRecord {
    let id = setting.setting_id();
    let seed = derive_seed(setting.base_seed, &id, rep);
    let mut record = RunRecord::empty(setting, rep, seed, options);
    if let Err(e) = setting.validate() {
        return record.failed(RunStatus::Error, e.to_string());
    }
    let domain = match setting.domain() {
        Ok(d) => d,
        Err(e) => return record.failed(RunStatus::Error, e.to_string()),
    };

    let spec = match place_region(&setting.template(), &domain, &mut stream(seed, STREAM_PLACEMENT)) {
        Ok(spec) => spec,
        Err(e @ OracleError::Infeasible(_)) => return record.failed(RunStatus::Infeasible, e.to_string()),
        Err(e) => return record.failed(RunStatus::Error, e.to_string()),
    };
    record.rotation_plane = spec.plane;
    record.region = Some(spec.clone());
    let mut oracle = RegionOracle::new(spec.clone());

    let first = match find_first_failure(
        &mut oracle,
        &domain,
        options.fscs_candidates,
        &mut stream(seed, STREAM_FINDER),
        options.finder_budget,
    ) {
        Ok(f) => f,
        Err(SearchError::NoFailureFound { executions }) => {
            record.finder_executions = executions;
            return record.failed(
                RunStatus::NoFailure,
                format!("no failure-causing input within {executions} executions"),
            );
        }
        Err(e) => return record.failed(RunStatus::Error, e.to_string()),
    };
    record.first_failure = Some(first.point.clone());
    record.finder_executions = first.executions;

    let config = SearchConfig {
        strategy: setting.strategy,
        extension_length: setting.extension_length,
        lambda: setting.lambda,
        target: setting.n,
        dsb_candidates: options.dsb_candidates,
        fscs_candidates: options.fscs_candidates,
        orientation_policy: options.orientation_policy,
        alg1_mode: options.alg1_mode,
        probe_budget: options.probe_budget,
        seed,
    };
    let started = Instant::now();
    let harvest = match run_strategy(
        &first.point,
        &config,
        &mut oracle,
        &domain,
        &mut stream(seed, STREAM_SEARCH),
    ) {
        Ok(h) => h,
        Err(e) => return record.failed(RunStatus::Error, e.to_string()),
    };
    let elapsed = started.elapsed();
    if options.record_timing {
        // never report zero for a run that did work
        record.wall_time_ms = (elapsed.as_secs_f64() * 1e3).max(1e-6);
    }

    let measure = measure_run(
        &harvest,
        &spec,
        &domain,
        options.mc_samples,
        &mut stream(seed, STREAM_MEASURE),
    );
    record.status = if harvest.stop == StopReason::TargetReached {
        RunStatus::Ok
    } else {
        RunStatus::Short
    };
    record.probes = harvest.probes;
    record.iterations = harvest.iterations;
    record.rays = harvest.rays;
    record.degenerate_rays = harvest.degenerate_rays;
    record.consecutive_miss_rays = harvest.consecutive_miss_rays;
    record.stop = Some(harvest.stop);
    record.source_inputs = harvest.source_inputs;
    record.boundary_inputs = harvest.boundary_inputs;
    record.s_afr = measure.s_afr;
    record.s_rfr = measure.s_rfr;
    record.s_ratio = measure.s_ratio;
    record.stderr = measure.stderr;
    record.method = Some(measure.method);
    record.degenerate = measure.degenerate;
    record
}

/// All repetitions of one setting, in order.
pub fn run_setting(setting: &ExperimentSetting, options: &RunOptions) -> Vec<RunRecord> {
    (0..setting.repetitions)
        .map(|rep| run_repetition(setting, rep, options))
        .collect()
}
