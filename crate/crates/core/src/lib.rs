//! Boundary-search identification of software failure regions.
//!
//! Starting from one failure-causing input, rays are searched outward for
//! the edge of the failure region; the convex hull of the harvested
//! boundary inputs approximates the region and is compared against the
//! real one in simulation.

pub mod geometry;
pub mod harness;
pub mod measure;
pub mod oracles;
pub mod search;

pub use geometry::{InputDomain, Orientation, Point};
pub use measure::{measure_run, RegionMeasure};
pub use oracles::{FnOracle, Oracle, RegionOracle, RegionShape, RegionSpec, Verdict};
pub use search::{run_strategy, Alg1Mode, BoundaryHarvest, OrientationPolicy, SearchConfig, Strategy};
