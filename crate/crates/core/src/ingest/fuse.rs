use super::imu::{ImuRawSample, ImuScale};
use super::nmea::NmeaFix;
use crate::record::Register;

/// Output of [`fuse`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FusionReport {
    pub registers: Vec<Register>,
    /// Valid fixes without any IMU sample in their window.
    pub dropped: usize,
    /// Void fixes, skipped.
    pub invalid: usize,
    pub valid_fixes: usize,
}

/// Fuses time-ordered GPS fixes with time-ordered IMU samples.
///
/// Each valid fix at time `t` yields one register whose inertial channels
/// are the per-channel mean of the IMU samples with timestamps in
/// `(t - 1, t]`, converted with `scale`. Both inputs are consumed in a
/// single forward pass.
pub fn fuse<F, I>(fixes: F, imu: I, scale: ImuScale) -> FusionReport
where
    F: IntoIterator<Item = NmeaFix>,
    I: IntoIterator<Item = ImuRawSample>,
{
    let mut report = FusionReport::default();
    let mut imu = imu.into_iter().peekable();

    for fix in fixes {
        if !fix.valid {
            report.invalid += 1;
            continue;
        }
        report.valid_fixes += 1;
        let window_start = fix.utc_time - 1.0;

        while imu.next_if(|s| s.timestamp <= window_start).is_some() {}

        let mut sums = [0.0f64; 6];
        let mut n = 0usize;
        while let Some(sample) = imu.next_if(|s| s.timestamp <= fix.utc_time) {
            for (k, &c) in sample.accel.iter().chain(&sample.gyro).enumerate() {
                sums[k] += f64::from(c);
            }
            n += 1;
        }
        if n == 0 {
            report.dropped += 1;
            continue;
        }
        let mean = |k: usize| sums[k] / n as f64;
        let register = Register {
            time_of_day: fix.utc_time,
            latitude: fix.latitude,
            longitude: fix.longitude,
            velocity: fix.speed_kmh,
            fa: [scale.accel_ms2(mean(0)), scale.accel_ms2(mean(1)), scale.accel_ms2(mean(2))],
            fg: [scale.gyro_dps(mean(3)), scale.gyro_dps(mean(4)), scale.gyro_dps(mean(5))],
            label: None,
        };
        match register.validate() {
            Ok(r) => report.registers.push(r),
            Err(_) => report.dropped += 1,
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fix(t: f64, valid: bool) -> NmeaFix {
        NmeaFix { utc_time: t, latitude: 39.4, longitude: -0.5, speed_kmh: 50.0, valid }
    }

    fn sample(t: f64, az: i16) -> ImuRawSample {
        ImuRawSample { timestamp: t, accel: [0, 0, az], gyro: [131, -262, 0] }
    }

    #[test]
    fn averages_constant_window() {
        let imu: Vec<_> = (0..10).map(|i| sample(99.05 + 0.1 * i as f64, 16_384)).collect();
        let report = fuse([fix(100.0, true)], imu, ImuScale::default());
        assert_eq!(report.registers.len(), 1);
        let r = report.registers[0];
        assert_eq!(r.fa[2], 9.80665);
        assert!((r.fg[0] - 1.0).abs() < 1e-12 && (r.fg[1] + 2.0).abs() < 1e-12);
        assert_eq!(r.velocity, 50.0);
    }

    #[test]
    fn void_fix_emits_nothing() {
        let report = fuse([fix(100.0, false)], [sample(99.5, 0)], ImuScale::default());
        assert!(report.registers.is_empty());
        assert_eq!((report.invalid, report.valid_fixes, report.dropped), (1, 0, 0));
    }

    #[test]
    fn empty_imu_drops_every_valid_fix() {
        let fixes = vec![fix(1.0, true), fix(2.0, false), fix(3.0, true), fix(4.0, true)];
        let report = fuse(fixes, Vec::new(), ImuScale::default());
        assert!(report.registers.is_empty());
        assert_eq!(report.dropped, 3);
    }

    #[test]
    fn window_is_half_open() {
        // 9.0 belongs to the window ending at 9.0, not the one ending at 10.0
        let imu = vec![sample(9.0, 100), sample(10.0, 300)];
        let report = fuse([fix(9.0, true), fix(10.0, true)], imu, ImuScale::default());
        assert_eq!(report.registers.len(), 2);
        assert!((report.registers[0].fa[2] - 100.0 / 16_384.0 * 9.80665).abs() < 1e-12);
        assert!((report.registers[1].fa[2] - 300.0 / 16_384.0 * 9.80665).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn registers_plus_drops_equal_valid_fixes(
            fix_flags in prop::collection::vec(any::<bool>(), 0..40),
            imu_times in prop::collection::vec(0.0..45.0f64, 0..200),
        ) {
            let fixes: Vec<_> = fix_flags.iter().enumerate().map(|(i, &v)| fix(i as f64 + 1.0, v)).collect();
            let mut times = imu_times;
            times.sort_by(f64::total_cmp);
            let imu: Vec<_> = times.into_iter().map(|t| sample(t, 16_000)).collect();
            let report = fuse(fixes, imu, ImuScale::default());
            prop_assert_eq!(report.registers.len() + report.dropped, report.valid_fixes);
            prop_assert_eq!(report.valid_fixes, fix_flags.iter().filter(|&&v| v).count());
        }
    }
}
