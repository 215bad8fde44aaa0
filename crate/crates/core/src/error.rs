use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::Point;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("obstacle {index}: {reason}")]
    InvalidObstacle { index: usize, reason: String },

    #[error("obstacle {index} corner {corner} is not on a grid node")]
    MisalignedObstacle { index: usize, corner: Point },

    #[error("point {0} lies outside the domain")]
    OutOfDomain(Point),

    #[error("speed must be positive, got {value} at {at}")]
    NonPositiveSpeed { value: f64, at: Point },

    #[error("invalid speed field: {0}")]
    InvalidSpeed(String),

    #[error("speed ratio must be at least 1, got {0}")]
    InvalidSpeedRatio(f64),

    #[error("source {0} is not a grid node of the free domain")]
    InvalidSource(Point),

    #[error("source {0} lies inside a non-permeable obstacle")]
    SourceInObstacle(Point),

    #[error("update requested with no available neighbor")]
    NoNeighbor,

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("initialization ball of radius {radius} contains no node besides the source")]
    BallTooSmall { radius: f64 },

    #[error("causality violated: node {node} accepted with u = {value} after u = {previous}")]
    CausalityViolation {
        node: usize,
        value: f64,
        previous: f64,
    },

    #[error("zero gradient at node {0}; characteristic direction undefined")]
    DegenerateGradient(usize),

    #[error("degenerate corner geometry: {0}")]
    DegenerateCorner(String),

    #[error("characteristic direction points into the obstacle; corner is regular")]
    RegularCorner,

    #[error("error mask selects no node")]
    EmptyMask,

    #[error("grids are not nested: {0}")]
    NonNestedGrids(String),

    #[error("convergence analysis: {0}")]
    Analysis(String),

    #[error("trajectory: {0}")]
    Trajectory(String),

    #[error("scenario `{path}`: {message}")]
    Scenario { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn scenario(path: impl Into<String>, message: impl Into<String>) -> Self {
        let path = path.into();
        Error::Scenario {
            path: if path.is_empty() {
                "(top level)".into()
            } else {
                path
            },
            message: message.into(),
        }
    }
}
