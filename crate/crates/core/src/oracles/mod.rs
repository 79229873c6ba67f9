//! Pass/fail verdict providers.

mod external;
mod region;

pub use external::{format_coordinate, CommandTemplate, ExternalOracle, FailConvention};
pub use region::{
    default_plane, derive_extents, place_region, unit_ball_volume, RegionOracle, RegionShape, RegionSpec,
    RegionTemplate,
};

use crate::geometry::{GeometryError, Point};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Fail,
    Pass,
}

impl Verdict {
    pub fn is_fail(self) -> bool {
        self == Verdict::Fail
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleStats {
    pub probe_count: u64,
    pub fail_count: u64,
}

impl OracleStats {
    pub(crate) fn record(&mut self, verdict: Verdict) {
        self.probe_count += 1;
        if verdict.is_fail() {
            self.fail_count += 1;
        }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle expects dimension {expected}, got a point of dimension {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("infeasible region: {0}")]
    Infeasible(String),
    #[error("invalid region parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid command template: {0}")]
    InvalidTemplate(String),
    #[error("external oracle unavailable: failed to run `{program}`: {source}")]
    Unavailable {
        program: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Anything that can classify a test input as failure-causing or not.
///
/// Callers never submit points outside the input domain.
pub trait Oracle {
    fn dimension(&self) -> usize;

    fn verdict(&mut self, p: &Point) -> Result<Verdict, OracleError>;

    fn stats(&self) -> OracleStats;
}

impl<O: Oracle + ?Sized> Oracle for &mut O {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }

    fn verdict(&mut self, p: &Point) -> Result<Verdict, OracleError> {
        (**self).verdict(p)
    }

    fn stats(&self) -> OracleStats {
        (**self).stats()
    }
}

impl<O: Oracle + ?Sized> Oracle for Box<O> {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }

    fn verdict(&mut self, p: &Point) -> Result<Verdict, OracleError> {
        (**self).verdict(p)
    }

    fn stats(&self) -> OracleStats {
        (**self).stats()
    }
}

/// Wraps a closure as an oracle. Handy for tests and ad-hoc regions.
pub struct FnOracle<F> {
    dimension: usize,
    classify: F,
    stats: OracleStats,
}

impl<F: FnMut(&Point) -> bool> FnOracle<F> {
    /// `classify` returns `true` for failure-causing inputs.
    pub fn new(dimension: usize, classify: F) -> Self {
        FnOracle {
            dimension,
            classify,
            stats: OracleStats::default(),
        }
    }
}

impl<F: FnMut(&Point) -> bool> Oracle for FnOracle<F> {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn verdict(&mut self, p: &Point) -> Result<Verdict, OracleError> {
        if p.dim() != self.dimension {
            return Err(OracleError::DimensionMismatch {
                expected: self.dimension,
                found: p.dim(),
            });
        }
        let v = if (self.classify)(p) {
            Verdict::Fail
        } else {
            Verdict::Pass
        };
        self.stats.record(v);
        Ok(v)
    }

    fn stats(&self) -> OracleStats {
        self.stats
    }
}
