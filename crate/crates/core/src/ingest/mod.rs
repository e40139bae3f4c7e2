//! Raw sensor ingestion: NMEA RMC sentences, MPU-6050 raw counts, 1 Hz
//! fusion into registers, and the register CSV log.

mod fuse;
mod imu;
mod log;
mod nmea;

pub use fuse::{fuse, FusionReport};
pub use imu::{
    accel_raw_to_ms2, gyro_raw_to_dps, read_imu_csv, read_imu_csv_from, ImuError, ImuRawSample, ImuScale,
    STANDARD_GRAVITY,
};
pub use log::{read_log, read_log_from, write_log, write_log_to, LogError, LogReader, LOG_HEADER};
pub use nmea::{nmea_checksum, parse_rmc, scan_nmea, NmeaError, NmeaFix, NmeaScan, KNOTS_TO_KMH};
