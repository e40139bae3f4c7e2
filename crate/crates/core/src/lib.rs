//! Driving-style recognition from a GPS receiver and a 6-axis inertial
//! sensor.
//!
//! The pipeline: raw NMEA and IMU streams are fused into 1 Hz
//! [`Register`]s ([`ingest`]), or synthesized by the [`drivesim`] route
//! simulator; per-style distributions are compared with rank tests
//! ([`stats`]); a small feedforward classifier ([`ann`]) is trained and
//! evaluated under the random-split protocol ([`eval`]); and a debounced
//! alert engine ([`alert`]) turns per-register predictions into driver
//! warnings. Tracks export to GeoJSON through [`export`].

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alert;
pub mod ann;
pub mod drivesim;
pub mod eval;
pub mod export;
pub mod ingest;
pub mod record;
pub mod seed;
pub mod stats;

pub use ann::{Network, Topology, TrainConfig};
pub use record::{ClassScheme, Dataset, DrivingStyle, FeatureSet, Field, NormalizationStats, Provenance, Register};
