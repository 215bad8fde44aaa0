//! Fast Marching for 2D eikonal problems with additive factoring of rarefaction fans.
//!
//! Point-source fans are handled with cone factors; fans born at obstacle corners are
//! detected while marching and factored locally with cone+plane (non-permeable) or
//! cone+2-planes (slowly permeable) functions.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod domain;
pub mod error;
pub mod factor;
pub mod geometry;
pub mod heap;
pub mod oracles;
pub mod output;
pub mod path;
pub mod scenario;
pub mod solver;
pub mod update;

pub use domain::{
    point_in_obstacles, CornerCandidate, Discretization, Grid2D, NodeClass, ObstacleWorld,
    Permeability, Problem, Quadrant, RectObstacle, SideHint, SourceSet, SpeedField,
};
pub use error::{Error, Result};
pub use factor::{
    build_corner_factor, build_permeable_corner_factor, eval_factor, fan_sector_angle,
    refract_angles, sector_classify, snell_beta, ConePlane, ConeTwoPlanes, FactorFunction,
    Refraction, SnellAngles,
};
pub use geometry::{Point, Vec2};
pub use heap::IndexedMinHeap;
pub use oracles::{
    eval_linear_speed_solution, line_integrated_time, visibility_distance, LinearSpeedProblem,
    VisibilityOracle,
};
pub use path::{
    extract_trajectory, interpolate_gradient, interpolate_value, Trajectory, TrajectoryOptions,
    TrajectoryStatus,
};
pub use scenario::{parse_scenario, Scenario, Study};
pub use solver::{
    approximate_characteristic_direction, choose_factor, detect_rarefying_corner, fmm_solve,
    initialize_sources, BallInit, CornerFactorKind, CornerVerdict, FanEntry, Method, NodeStatus,
    SolveResult, SolveStats, SolverConfig,
};
pub use update::{
    factored_update, unfactored_update, AxisNeighbor, Branch, NeighborData, UpdateResult,
};
