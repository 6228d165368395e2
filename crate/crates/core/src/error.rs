use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid angle grid: {0}")]
    InvalidGrid(String),

    #[error("curvature not positive at node {node} (value {value:e})")]
    PositivityLost { node: usize, value: f64 },

    #[error("curve not closed: gap {gap:e} exceeds {threshold:e}")]
    NotClosed { gap: f64, threshold: f64 },

    #[error("not strictly convex: min radius of curvature {min_radius:e} <= 0")]
    NotConvex { min_radius: f64 },

    #[error("center ({x}, {y}) is not interior to the curve")]
    CenterOutside { x: f64, y: f64 },

    #[error("profile is not G{order}-symmetric: residual {residual:e}")]
    NotSymmetric { order: usize, residual: f64 },

    #[error("profile is not in S{order}: min Pi' margin {margin:e}")]
    NotInSn { order: usize, margin: f64 },

    #[error("need at least {needed} recorded snapshots, got {got}")]
    InsufficientSnapshots { needed: usize, got: usize },

    #[error("need at least {needed} paths, got {got}")]
    InsufficientPaths { needed: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
