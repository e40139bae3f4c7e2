//! Synthetic labeled traces over a parametric conventional-road route.
//!
//! A longitudinal point-mass follows style-dependent target speeds along
//! the route: cruise at a fraction of the posted limit, slow for curves
//! and roundabouts, halt at stop lines, and respect shared traffic spots.
//! Sensor channels are derived from the kinematics plus Gaussian noise.

mod profile;
mod route;
mod sim;

use thiserror::Error;

pub use profile::{NoiseScales, StyleProfile, CORNER_LATERAL_ACCEL};
pub use route::{
    default_route, haversine_m, Pose, RouteGeometry, RouteSpec, Segment, SegmentKind, TurnDirection,
    DEFAULT_ROUTE_LENGTH_M, EARTH_RADIUS_M,
};
pub use sim::{simulate, simulate_experiment, SimConfig, TrafficZone, REPETITIONS};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    ConfigInvalid(String),
    #[error("route file line {line}: {reason}")]
    RouteParse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn read_route(path: impl AsRef<std::path::Path>) -> Result<RouteSpec, SimError> {
    std::fs::read_to_string(path)?.parse()
}

pub fn write_route(route: &RouteSpec, path: impl AsRef<std::path::Path>) -> Result<(), SimError> {
    std::fs::write(path, route.to_string())?;
    Ok(())
}
