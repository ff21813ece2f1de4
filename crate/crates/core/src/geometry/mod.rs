//! Walking geometry, rasterization and distance fields.

mod clearance;
mod field;
mod grid;
mod polygon;
mod scenario;

pub use clearance::ClearanceMap;
pub use field::{descend, distance_field, DistanceField, Target};
pub use grid::{rasterize, OccupancyGrid, NEIGHBORS_4, NEIGHBORS_8};
pub use polygon::{orient, Polygon, Rect, Segment, EPS};
pub use scenario::{load_geometry, RegionKind, ScenarioFile, TwoWallLayout, WalkingGeometry};

use thiserror::Error;

/// Default grid resolution in meters.
pub const DEFAULT_RESOLUTION: f64 = 0.10;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("bounds have zero area")]
    EmptyBounds,
    #[error("obstacle {index} is not a simple polygon")]
    NotSimple { index: usize },
    #[error("obstacles {first} and {second} overlap")]
    Overlap { first: usize, second: usize },
    #[error("{region} region is not a simple polygon")]
    RegionNotSimple { region: RegionKind },
    #[error("{region} region extends outside the bounds")]
    RegionOutsideBounds { region: RegionKind },
    #[error("{region} region intersects obstacle {index}")]
    RegionIntersectsObstacle { region: RegionKind, index: usize },
    #[error("resolution must be positive and finite, got {0}")]
    BadResolution(f64),
    #[error("origin and destination are disconnected: {0}")]
    Disconnected(String),
    #[error("distance-field target covers no walkable cell")]
    TargetNotWalkable,
}
