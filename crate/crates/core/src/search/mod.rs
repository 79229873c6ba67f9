//! Boundary search: the first-failure finder, the per-ray bisection search
//! and the fixed/diverse orientation strategies that harvest boundary inputs.

mod boundary;
mod finder;
mod strategy;

pub use boundary::{
    search_boundary, search_boundary_traced, LiteralState, ProbeOutcome, ProbeStep, RayOutcome,
    RayParams,
};
pub use finder::{find_first_failure, select_fscs_candidate, FirstFailure};
pub use strategy::{
    next_dsb_orientation, run_dsb, run_fsb, run_strategy, select_most_diverse, FsbVariant,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, Point};
use crate::oracles::OracleError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Fsb1,
    Fsb2,
    Dsb,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Fsb1 => "fsb1",
            Strategy::Fsb2 => "fsb2",
            Strategy::Dsb => "dsb",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "fsb1" => Ok(Strategy::Fsb1),
            "fsb2" => Ok(Strategy::Fsb2),
            "dsb" => Ok(Strategy::Dsb),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How a single ray is searched.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alg1Mode {
    /// March outward by the extension length, then bisect the bracket
    /// between the deepest hit and the nearest miss.
    #[default]
    Bracketing,
    /// The printed retract-and-halve rule: the orientation flips on every
    /// miss and flips back after a hit on a retracted point.
    Literal,
}

impl Alg1Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Alg1Mode::Bracketing => "bracketing",
            Alg1Mode::Literal => "literal",
        }
    }
}

impl std::str::FromStr for Alg1Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bracketing" => Ok(Alg1Mode::Bracketing),
            "literal" => Ok(Alg1Mode::Literal),
            other => Err(format!("unknown search mode `{other}`")),
        }
    }
}

/// Whether a drawn FSB source is extended along every orientation of the
/// fixed set or along one orientation chosen at random.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrientationPolicy {
    #[default]
    AllPerSource,
    OnePerSource,
}

impl OrientationPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            OrientationPolicy::AllPerSource => "all-per-source",
            OrientationPolicy::OnePerSource => "one-per-source",
        }
    }
}

impl std::str::FromStr for OrientationPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all-per-source" | "all" => Ok(OrientationPolicy::AllPerSource),
            "one-per-source" | "one" => Ok(OrientationPolicy::OnePerSource),
            other => Err(format!("unknown orientation policy `{other}`")),
        }
    }
}

/// Every tunable of one boundary-search run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub strategy: Strategy,
    /// Initial extension length, in domain units.
    pub extension_length: f64,
    /// Consecutive misses that end one ray.
    pub lambda: u32,
    /// Number of boundary inputs to harvest.
    pub target: usize,
    /// DSB candidate orientations per draw.
    pub dsb_candidates: usize,
    /// FSCS-ART candidates per executed test when locating the first failure.
    pub fscs_candidates: usize,
    pub orientation_policy: OrientationPolicy,
    pub alg1_mode: Alg1Mode,
    /// Cap on oracle calls made by the strategy.
    pub probe_budget: u64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            strategy: Strategy::Dsb,
            extension_length: 1.0,
            lambda: 20,
            target: 100,
            dsb_candidates: 10,
            fscs_candidates: 10,
            orientation_policy: OrientationPolicy::AllPerSource,
            alg1_mode: Alg1Mode::Bracketing,
            probe_budget: 1_000_000,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |msg: String| Err(SearchError::InvalidConfig(msg));
        if !(self.extension_length > 0.0 && self.extension_length.is_finite()) {
            return bad(format!("extension length {} must be > 0", self.extension_length));
        }
        if self.lambda < 1 {
            return bad("lambda must be >= 1".into());
        }
        if self.target < 1 {
            return bad("target boundary count must be >= 1".into());
        }
        if self.dsb_candidates < 1 || self.fscs_candidates < 1 {
            return bad("candidate counts must be >= 1".into());
        }
        if self.probe_budget < self.target as u64 {
            return bad(format!(
                "probe budget {} below target {}",
                self.probe_budget, self.target
            ));
        }
        Ok(())
    }

    pub fn ray_params(&self) -> RayParams {
        RayParams {
            extension_length: self.extension_length,
            lambda: self.lambda,
            mode: self.alg1_mode,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    TargetReached,
    BudgetExhausted,
    /// FSB ran out of unused sources.
    PoolExhausted,
    /// DSB went many consecutive rounds without a new boundary input.
    Stalled,
}

/// The result of one strategy run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryHarvest {
    pub source_inputs: Vec<Point>,
    pub boundary_inputs: Vec<Point>,
    /// Algorithm steps, including out-of-domain probes.
    pub iterations: u64,
    /// Oracle calls.
    pub probes: u64,
    pub rays: u64,
    /// Rays that found no failure-causing input beyond their source.
    pub degenerate_rays: u64,
    /// Rays ended by `lambda` consecutive misses before reaching any
    /// failure-causing probe.
    pub consecutive_miss_rays: u64,
    /// DSB first-orthant orientations drawn.
    pub orientation_draws: u64,
    /// FSB sources in the order they were retired.
    pub retired_sources: Vec<Point>,
    pub stop: StopReason,
}

impl BoundaryHarvest {
    pub(crate) fn new(source_inputs: Vec<Point>) -> Self {
        BoundaryHarvest {
            source_inputs,
            boundary_inputs: Vec::new(),
            iterations: 0,
            probes: 0,
            rays: 0,
            degenerate_rays: 0,
            consecutive_miss_rays: 0,
            orientation_draws: 0,
            retired_sources: Vec::new(),
            stop: StopReason::TargetReached,
        }
    }

    pub fn budget_exhausted(&self) -> bool {
        self.stop == StopReason::BudgetExhausted
    }

    pub(crate) fn absorb(&mut self, ray: &RayOutcome, lambda: u32) {
        self.iterations += ray.iterations;
        self.probes += ray.probes;
        self.rays += 1;
        if ray.degenerate {
            self.degenerate_rays += 1;
        }
        if ray.degenerate && ray.max_miss_streak >= lambda {
            self.consecutive_miss_rays += 1;
        }
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("no failure-causing input found within {executions} executions")]
    NoFailureFound { executions: u64 },
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error("source input {0:?} is outside the input domain")]
    SourceOutsideDomain(Vec<f64>),
    #[error("no initial failure-causing source given")]
    NoSources,
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
