use crate::record::DrivingStyle;

/// Per-channel standard deviations of the additive Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseScales {
    /// km/h
    pub velocity: f64,
    /// m/s²
    pub fa: [f64; 3],
    /// deg/s
    pub fg: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StyleProfile {
    pub style: DrivingStyle,
    /// Cruise speed on open road as a fraction of the posted limit.
    pub cruise_fraction_of_limit: f64,
    /// Maximum throttle acceleration, m/s².
    pub accel_mag: f64,
    /// Maximum braking deceleration, m/s².
    pub brake_mag: f64,
    /// Deceleration planned when approaching a slower zone, m/s². Low values
    /// mean braking early and gently.
    pub anticipation_decel: f64,
    /// Scales the comfortable cornering speed `sqrt(a_lat * R)`.
    pub corner_speed_factor: f64,
    /// Seconds spent at rest at a stop line.
    pub stop_dwell_s: f64,
    /// Relative standard deviation of the slow wander around the target speed.
    pub speed_wander: f64,
    pub noise: NoiseScales,
}

/// Lateral acceleration defining the comfortable cornering speed, m/s².
pub const CORNER_LATERAL_ACCEL: f64 = 2.5;

/// Gyro roll/pitch noise is shared by every style so those channels carry
/// no style information.
const FG_XY_NOISE: f64 = 0.6;

impl StyleProfile {
    pub fn preset(style: DrivingStyle) -> Self {
        match style {
            DrivingStyle::Con => Self {
                style,
                cruise_fraction_of_limit: 0.76,
                accel_mag: 1.0,
                brake_mag: 1.5,
                anticipation_decel: 0.8,
                corner_speed_factor: 0.85,
                stop_dwell_s: 3.0,
                speed_wander: 0.015,
                noise: NoiseScales { velocity: 0.3, fa: [0.12, 0.12, 0.10], fg: [FG_XY_NOISE, FG_XY_NOISE, 0.30] },
            },
            DrivingStyle::Nor => Self {
                style,
                cruise_fraction_of_limit: 0.88,
                accel_mag: 1.5,
                brake_mag: 2.5,
                anticipation_decel: 1.1,
                corner_speed_factor: 1.0,
                stop_dwell_s: 2.0,
                speed_wander: 0.015,
                noise: NoiseScales { velocity: 0.3, fa: [0.18, 0.18, 0.12], fg: [FG_XY_NOISE, FG_XY_NOISE, 0.40] },
            },
            DrivingStyle::Agg => Self {
                style,
                cruise_fraction_of_limit: 1.07,
                accel_mag: 2.6,
                brake_mag: 4.0,
                anticipation_decel: 2.4,
                corner_speed_factor: 1.2,
                stop_dwell_s: 1.0,
                speed_wander: 0.02,
                noise: NoiseScales { velocity: 0.3, fa: [0.30, 0.30, 0.15], fg: [FG_XY_NOISE, FG_XY_NOISE, 0.55] },
            },
        }
    }

    /// A vehicle that never moves.
    pub fn stationary(style: DrivingStyle) -> Self {
        Self { cruise_fraction_of_limit: 0.0, speed_wander: 0.0, ..Self::preset(style) }
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        let positive = [
            ("accel_mag", self.accel_mag),
            ("brake_mag", self.brake_mag),
            ("anticipation_decel", self.anticipation_decel),
            ("corner_speed_factor", self.corner_speed_factor),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(format!("{name} must be positive"));
            }
        }
        if self.anticipation_decel > self.brake_mag {
            return Err("anticipation_decel cannot exceed brake_mag".into());
        }
        let non_negative = [
            ("cruise_fraction_of_limit", self.cruise_fraction_of_limit),
            ("stop_dwell_s", self.stop_dwell_s),
            ("speed_wander", self.speed_wander),
            ("velocity noise", self.noise.velocity),
        ];
        for (name, v) in
            non_negative.into_iter().chain(self.noise.fa.iter().chain(&self.noise.fg).map(|&v| ("noise", v)))
        {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(format!("{name} must be finite and non-negative"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_ordered() {
        let [c, n, a] = DrivingStyle::ALL.map(StyleProfile::preset);
        assert!(c.cruise_fraction_of_limit < n.cruise_fraction_of_limit);
        assert!(n.cruise_fraction_of_limit < a.cruise_fraction_of_limit);
        assert!(c.accel_mag < n.accel_mag && n.accel_mag < a.accel_mag);
        assert!(c.brake_mag < n.brake_mag && n.brake_mag < a.brake_mag);
        assert_eq!(c.noise.fg[..2], a.noise.fg[..2]);
        for p in [c, n, a] {
            p.validate().unwrap();
        }
    }
}
