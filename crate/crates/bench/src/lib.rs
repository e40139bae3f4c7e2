//! Shared fixtures for the criterion benches.

use drivestyle::ann::{Mlp, DEFAULT_HIDDEN};
use drivestyle::drivesim::{default_route, simulate_experiment};
use drivestyle::{ClassScheme, Dataset, FeatureSet, Topology};

/// The default three-style experiment for master seed 1.
pub fn experiment() -> Dataset {
    simulate_experiment(&default_route(1), 1).expect("default experiment simulates")
}

/// Untrained classifier shaped for `fs` under the three-class scheme.
pub fn network(fs: &FeatureSet) -> Mlp {
    Mlp::init(&Topology::for_task(fs, ClassScheme::ThreeClass, &DEFAULT_HIDDEN), 1)
}

/// Per-style velocity samples from [`experiment`].
pub fn velocity_groups() -> [Vec<f64>; 3] {
    experiment().grouped(drivestyle::Field::Velocity)
}

pub const RMC: &str = "$GPRMC,093012.00,A,3921.840,N,00030.780,W,43.20,200.0,141026,,,A*4B";
