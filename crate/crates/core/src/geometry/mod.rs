//! Local variations `f_t = I + t phi` of level-set partitions.
//!
//! Velocity fields are sums of compactly supported polynomial bumps. The
//! module pushes partitions forward through `f_t`, measures the resulting
//! changes in total variation and in weighted area, and evaluates both sides
//! of the first-order stationarity identity on the facets of a control.

mod field;
mod fixtures;
mod partition;
mod stationarity;
mod variation;

pub use field::{inverse_map, Bump, VectorField};
pub use fixtures::{disk_suite, stripes_suite, CheckRow, Fixture};
pub use partition::{
    pushed_tv, pushforward, rasterize, DiskPartition, InterfaceSegment, LevelSets, RasterPartition,
};
pub use stationarity::{
    default_dictionary, stationarity_residual, CellInterpolant, PairTerm, StationarityReport,
    StationarityTerm,
};
pub use variation::{
    halving, lipschitz_check, linear_coefficient, taylor_linear_check, taylor_tv_check,
    tv_coefficient, LipschitzPair, LipschitzReport, SlopeRow, TaylorReport,
};
