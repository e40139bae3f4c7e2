use std::fs::File;
use std::io::{self, Read};
use std::path::Path;

use thiserror::Error;

/// Standard gravity, m/s².
pub const STANDARD_GRAVITY: f64 = 9.80665;

/// One raw MPU-6050 reading in signed 16-bit counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuRawSample {
    /// Seconds, on the same clock as the GPS UTC time of day.
    pub timestamp: f64,
    pub accel: [i16; 3],
    pub gyro: [i16; 3],
}

/// Count-to-unit scale factors. Defaults: ±2 g accelerometer range
/// (16 384 LSB/g) and ±250 °/s gyroscope range (131 LSB per °/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuScale {
    pub accel_lsb_per_g: f64,
    pub gyro_lsb_per_dps: f64,
}

impl Default for ImuScale {
    fn default() -> Self {
        Self { accel_lsb_per_g: 16_384.0, gyro_lsb_per_dps: 131.0 }
    }
}

impl ImuScale {
    pub fn accel_ms2(&self, count: f64) -> f64 {
        count / self.accel_lsb_per_g * STANDARD_GRAVITY
    }

    pub fn gyro_dps(&self, count: f64) -> f64 {
        count / self.gyro_lsb_per_dps
    }
}

pub fn accel_raw_to_ms2(count: i16) -> f64 {
    ImuScale::default().accel_ms2(f64::from(count))
}

pub fn gyro_raw_to_dps(count: i16) -> f64 {
    ImuScale::default().gyro_dps(f64::from(count))
}

#[derive(Debug, Error)]
pub enum ImuError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("imu csv line {line}: {reason}")]
    Parse { line: u64, reason: String },
}

/// Reads `timestamp_s,ax,ay,az,gx,gy,gz` rows (header required).
pub fn read_imu_csv(path: impl AsRef<Path>) -> Result<Vec<ImuRawSample>, ImuError> {
    read_imu_csv_from(File::open(path)?)
}

pub fn read_imu_csv_from<R: Read>(reader: R) -> Result<Vec<ImuRawSample>, ImuError> {
    let mut csv = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut samples = Vec::new();
    for record in csv.records() {
        let record = record.map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => ImuError::Io(io),
            other => ImuError::Parse { line: 0, reason: format!("{other:?}") },
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 7 {
            return Err(ImuError::Parse { line, reason: format!("expected 7 columns, found {}", record.len()) });
        }
        let timestamp: f64 = record[0]
            .parse()
            .ok()
            .filter(|t: &f64| t.is_finite())
            .ok_or_else(|| ImuError::Parse { line, reason: format!("bad timestamp `{}`", &record[0]) })?;
        let mut counts = [0i16; 6];
        for (i, slot) in counts.iter_mut().enumerate() {
            *slot = record[i + 1].parse().map_err(|_| ImuError::Parse {
                line,
                reason: format!("bad count `{}` in column {}", &record[i + 1], i + 2),
            })?;
        }
        samples.push(ImuRawSample {
            timestamp,
            accel: [counts[0], counts[1], counts[2]],
            gyro: [counts[3], counts[4], counts[5]],
        });
    }
    Ok(samples)
}
