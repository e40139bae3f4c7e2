use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::route::{RouteSpec, SegmentKind};
use super::{SimError, StyleProfile};
use crate::ingest::STANDARD_GRAVITY;
use crate::record::{Dataset, DrivingStyle, Provenance, Register};
use crate::seed::{derive_path, derive_seed, splitmix64};

/// A stretch of road where traffic caps everyone's speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficZone {
    pub start_m: f64,
    pub length_m: f64,
    pub speed_kmh: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub route: RouteSpec,
    pub profile: StyleProfile,
    pub seed: u64,
    /// Seconds after midnight of the first register.
    pub start_time_of_day: f64,
    /// Seconds between registers.
    pub timestep: f64,
    pub traffic: Vec<TrafficZone>,
    /// Simulation stops after this many seconds even if the route is unfinished.
    pub max_duration_s: f64,
}

impl SimConfig {
    pub fn new(route: RouteSpec, profile: StyleProfile, seed: u64) -> Self {
        Self {
            route,
            profile,
            seed,
            start_time_of_day: 9.0 * 3600.0,
            timestep: 1.0,
            traffic: Vec::new(),
            max_duration_s: 3600.0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.route.validate()?;
        self.profile.validate().map_err(SimError::ConfigInvalid)?;
        let invalid = |m: &str| Err(SimError::ConfigInvalid(m.into()));
        if !(self.timestep > 0.0) || !self.timestep.is_finite() {
            return invalid("timestep must be positive");
        }
        if !self.start_time_of_day.is_finite() {
            return invalid("start time must be finite");
        }
        if !(self.max_duration_s > 0.0) || !self.max_duration_s.is_finite() {
            return invalid("max duration must be positive");
        }
        for z in &self.traffic {
            if !(z.length_m > 0.0) || !(z.speed_kmh >= 0.0) || !z.start_m.is_finite() {
                return invalid("traffic zone needs positive length and non-negative speed");
            }
        }
        Ok(())
    }
}

const KMH: f64 = 1.0 / 3.6;
/// Wander autocorrelation per second.
const WANDER_PHI: f64 = 0.95;
/// Vertical shake on a speed bump per m/s of speed, m/s².
const BUMP_GAIN: f64 = 0.35;
/// Road roughness on faz per m/s of speed, m/s².
const ROUGHNESS_GAIN: f64 = 0.004;
/// Envelope resolution, metres.
const GRID: f64 = 1.0;

/// Relative spread of free-flow speed between segments.
pub const ROAD_CHARACTER_SPREAD: f64 = 0.06;

/// Free-flow speed also depends on sight lines and lane width, which the
/// posted limit does not capture. Segment `idx` gets a fixed factor within
/// `1 ± ROAD_CHARACTER_SPREAD`, shared by every driver.
pub fn road_character(idx: usize) -> f64 {
    let u = (splitmix64(idx as u64) >> 11) as f64 / (1u64 << 53) as f64;
    1.0 + ROAD_CHARACTER_SPREAD * (2.0 * u - 1.0)
}

/// Desired speed (m/s) at every grid point, before anticipation.
fn target_speeds(cfg: &SimConfig) -> Vec<f64> {
    let route = &cfg.route;
    let p = &cfg.profile;
    let n = (route.total_length() / GRID).ceil() as usize + 1;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let s = i as f64 * GRID;
        let (idx, _) = route.segment_at(s);
        let seg = &route.segments[idx];
        let mut v = seg.speed_limit_kmh * KMH * p.cruise_fraction_of_limit * road_character(idx);
        if let SegmentKind::Curve { radius_m, .. } | SegmentKind::Roundabout { radius_m } = seg.kind {
            v = v.min(p.corner_speed_factor * (super::profile::CORNER_LATERAL_ACCEL * radius_m).sqrt());
        }
        for z in &cfg.traffic {
            if s >= z.start_m && s < z.start_m + z.length_m {
                v = v.min(z.speed_kmh * KMH);
            }
        }
        out.push(v);
    }
    out
}

/// Backward pass: the fastest speed from which every slower zone ahead can
/// be reached at the anticipation deceleration.
fn envelope(targets: &[f64], decel: f64) -> Vec<f64> {
    let mut env = targets.to_vec();
    for i in (0..env.len().saturating_sub(1)).rev() {
        let reach = (env[i + 1] * env[i + 1] + 2.0 * decel * GRID).sqrt();
        env[i] = env[i].min(reach);
    }
    env
}

fn sample_envelope(env: &[f64], s: f64) -> f64 {
    let i = ((s / GRID).floor().max(0.0) as usize).min(env.len() - 1);
    env[i]
}

/// Simulate one trip at 1 / `timestep` Hz. All registers carry the
/// profile's style as label.
pub fn simulate(cfg: &SimConfig) -> Result<Dataset, SimError> {
    cfg.validate()?;
    let route = &cfg.route;
    let p = &cfg.profile;
    let dt = cfg.timestep;
    let total = route.total_length();
    let geometry = route.geometry();
    let env = envelope(&target_speeds(cfg), p.anticipation_decel);
    let stops: Vec<f64> = route
        .segment_starts()
        .iter()
        .zip(&route.segments)
        .filter(|(_, seg)| seg.kind == SegmentKind::Stop)
        .map(|(start, seg)| start + seg.length_m)
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0));
    let mut gauss = move || -> f64 { rng.sample(StandardNormal) };

    let mut registers = Vec::new();
    let (mut s, mut v, mut elapsed) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut wander = 0.0;
    let mut next_stop = 0;
    let mut dwell = 0.0;
    let wander_innov = (1.0 - WANDER_PHI * WANDER_PHI).sqrt();

    let mut emit = |s: f64, v: f64, accel: f64, elapsed: f64, gauss: &mut dyn FnMut() -> f64| {
        let (idx, offset) = route.segment_at(s);
        let seg = &route.segments[idx];
        let kappa = seg.curvature_at(offset);
        let theta = seg.grade().atan();
        let (lat, lon) = geometry.lat_lon_at(s);
        let bump = if seg.kind == SegmentKind::SpeedBump { BUMP_GAIN * v * gauss() } else { 0.0 };
        let nz = &p.noise;
        let velocity = if v > 0.0 { (v / KMH + nz.velocity * gauss()).max(0.0) } else { 0.0 };
        let fa = [
            accel + STANDARD_GRAVITY * theta.sin() + nz.fa[0] * gauss(),
            v * v * kappa + nz.fa[1] * gauss(),
            STANDARD_GRAVITY * theta.cos() + bump + (nz.fa[2] + ROUGHNESS_GAIN * v) * gauss(),
        ];
        let fg = [nz.fg[0] * gauss(), nz.fg[1] * gauss(), (v * kappa).to_degrees() + nz.fg[2] * gauss()];
        registers.push(Register {
            time_of_day: (cfg.start_time_of_day + elapsed).rem_euclid(86_400.0),
            latitude: lat,
            longitude: lon,
            velocity,
            fa,
            fg,
            label: Some(p.style),
        });
    };

    emit(s, v, 0.0, elapsed, &mut gauss);
    while s < total && elapsed + dt <= cfg.max_duration_s {
        wander = WANDER_PHI * wander + wander_innov * p.speed_wander * gauss();
        let (mut s_new, mut v_new);
        if dwell > 0.0 {
            dwell -= dt;
            s_new = s;
            v_new = 0.0;
        } else {
            let look = s + v * dt;
            let mut desired = sample_envelope(&env, look) * (1.0 + wander);
            if let Some(&stop) = stops.get(next_stop) {
                desired = desired.min((2.0 * p.anticipation_decel * (stop - look).max(0.0)).sqrt());
            }
            v_new = if desired > v {
                let ratio = v / desired;
                (v + p.accel_mag * (1.0 - ratio.powi(4)).max(0.1) * dt).min(desired)
            } else {
                (v - p.brake_mag * dt).max(desired)
            }
            .max(0.0);
            s_new = s + 0.5 * (v + v_new) * dt;
            if let Some(&stop) = stops.get(next_stop) {
                if s_new >= stop || (stop - s_new < 2.0 && v_new <= p.brake_mag * dt) {
                    s_new = s_new.min(stop);
                    v_new = 0.0;
                    dwell = p.stop_dwell_s;
                    next_stop += 1;
                }
            }
        }
        if s_new >= total {
            break;
        }
        let accel = (v_new - v) / dt;
        elapsed += dt;
        emit(s_new, v_new, accel, elapsed, &mut gauss);
        s = s_new;
        v = v_new;
    }

    Ok(Dataset::new(registers, Provenance::Simulated { seed: cfg.seed }))
}

/// Repetitions of each style in the experiment.
pub const REPETITIONS: usize = 3;
/// First trip of the day starts at 09:00.
const DAY_START_S: f64 = 9.0 * 3600.0;
/// Spacing between the three trips of a day.
const SLOT_SPACING_S: f64 = 25.0 * 60.0;

/// Traffic spots for one repetition, shared by every style driven that day.
fn traffic_zones(route: &RouteSpec, rng: &mut ChaCha8Rng) -> Vec<TrafficZone> {
    let total = route.total_length();
    let count = 1;
    (0..count)
        .map(|_| TrafficZone {
            start_m: rng.random_range(800.0..total - 800.0),
            length_m: rng.random_range(100.0..250.0),
            speed_kmh: rng.random_range(15.0..35.0),
        })
        .collect()
}

/// Three styles driven three times each over `route`: one repetition per
/// day, trips in a rotating order from 09:00. Per-trip cruise and
/// acceleration jitter comes from the trip's own sub-seed.
pub fn simulate_experiment(route: &RouteSpec, seed: u64) -> Result<Dataset, SimError> {
    let mut registers = Vec::new();
    for rep in 0..REPETITIONS {
        let mut day_rng = ChaCha8Rng::seed_from_u64(derive_path(seed, &[rep as u64, 99]));
        let traffic = traffic_zones(route, &mut day_rng);
        for slot in 0..3 {
            let style = DrivingStyle::ALL[(slot + rep) % 3];
            let trip_seed = derive_path(seed, &[rep as u64, style.code() as u64]);
            let mut trip_rng = ChaCha8Rng::seed_from_u64(derive_seed(trip_seed, 7));
            let mut profile = StyleProfile::preset(style);
            profile.cruise_fraction_of_limit *= 1.0 + 0.01 * trip_rng.sample::<f64, _>(StandardNormal);
            profile.accel_mag *= 1.0 + 0.05 * trip_rng.sample::<f64, _>(StandardNormal);
            let start = DAY_START_S + SLOT_SPACING_S * slot as f64 + trip_rng.random_range(-90.0..90.0);
            let cfg = SimConfig {
                start_time_of_day: start,
                traffic: traffic.clone(),
                ..SimConfig::new(route.clone(), profile, trip_seed)
            };
            registers.extend(simulate(&cfg)?.registers);
        }
    }
    Ok(Dataset::new(registers, Provenance::Simulated { seed }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drivesim::{default_route, haversine_m};
    use crate::record::Field;
    use crate::stats::median;

    fn trip(style: DrivingStyle, seed: u64) -> Dataset {
        simulate(&SimConfig::new(default_route(seed), StyleProfile::preset(style), seed)).unwrap()
    }

    #[test]
    fn road_character_stays_in_band() {
        let factors: Vec<f64> = (0..200).map(road_character).collect();
        assert!(factors.iter().all(|f| (f - 1.0).abs() <= ROAD_CHARACTER_SPREAD));
        let mean = factors.iter().sum::<f64>() / factors.len() as f64;
        assert!((mean - 1.0).abs() < 0.01);
        assert_eq!(road_character(3), road_character(3));
    }

    #[test]
    fn identical_config_gives_identical_trace() {
        assert_eq!(trip(DrivingStyle::Agg, 4), trip(DrivingStyle::Agg, 4));
        assert_ne!(trip(DrivingStyle::Agg, 4), trip(DrivingStyle::Agg, 5));
    }

    #[test]
    fn nor_traversal_takes_about_ten_minutes() {
        for seed in 0..10 {
            let n = trip(DrivingStyle::Nor, seed).len();
            assert!((540..=660).contains(&n), "seed {seed}: {n} s");
        }
    }

    #[test]
    fn velocity_medians_are_calibrated_and_ordered() {
        for seed in 0..10 {
            let m = DrivingStyle::ALL.map(|s| {
                let v: Vec<f64> = trip(s, seed).registers.iter().map(|r| r.velocity).collect();
                median(&v).unwrap()
            });
            assert!(m[0] < m[1] && m[1] < m[2], "seed {seed}: {m:?}");
            assert!((64.0..=73.0).contains(&m[1]), "seed {seed}: {m:?}");
        }
    }

    #[test]
    fn faz_median_is_near_gravity() {
        for style in DrivingStyle::ALL {
            let d = trip(style, 2);
            let faz: Vec<f64> = d.registers.iter().map(|r| r.fa[2]).collect();
            let m = median(&faz).unwrap();
            assert!((9.6..=10.1).contains(&m), "{style}: {m}");
        }
    }

    #[test]
    fn speed_changes_are_physical() {
        for style in DrivingStyle::ALL {
            let p = StyleProfile::preset(style);
            // Reported speed carries Gaussian noise on both ends of a step.
            let bound = p.accel_mag.max(p.brake_mag) * 3.6 + 12.0 * p.noise.velocity;
            let d = trip(style, 11);
            for w in d.registers.windows(2) {
                assert!(w[1].velocity >= 0.0);
                assert!(
                    (w[1].velocity - w[0].velocity).abs() <= bound,
                    "{style}: {} -> {}",
                    w[0].velocity,
                    w[1].velocity
                );
            }
        }
    }

    #[test]
    fn positions_follow_speed() {
        for style in DrivingStyle::ALL {
            let d = trip(style, 5);
            for w in d.registers.windows(2) {
                let mean_speed = 0.5 * (w[0].velocity + w[1].velocity) / 3.6;
                if mean_speed < 10.0 / 3.6 {
                    continue;
                }
                let dist = haversine_m(w[0].latitude, w[0].longitude, w[1].latitude, w[1].longitude);
                assert!((dist - mean_speed).abs() <= 0.1 * mean_speed, "{style}: {dist} m vs {mean_speed} m/s");
            }
        }
    }

    #[test]
    fn time_advances_one_second_per_register() {
        let d = trip(DrivingStyle::Con, 1);
        for (k, r) in d.registers.iter().enumerate() {
            assert_eq!(r.time_of_day, 9.0 * 3600.0 + k as f64);
            assert_eq!(r.label, Some(DrivingStyle::Con));
            r.validate().unwrap();
        }
    }

    #[test]
    fn stationary_vehicle_rests() {
        let mut cfg = SimConfig::new(default_route(1), StyleProfile::stationary(DrivingStyle::Nor), 3);
        cfg.max_duration_s = 120.0;
        let d = simulate(&cfg).unwrap();
        assert_eq!(d.len(), 121);
        assert!(d.registers.iter().all(|r| r.velocity == 0.0));
        let fgz: Vec<f64> = d.registers.iter().map(|r| r.fg[2]).collect();
        let faz: Vec<f64> = d.registers.iter().map(|r| r.fa[2]).collect();
        assert!(median(&fgz).unwrap().abs() < 0.2);
        assert!((median(&faz).unwrap() - STANDARD_GRAVITY).abs() < 0.05);
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = SimConfig::new(default_route(1), StyleProfile::preset(DrivingStyle::Nor), 3);
        cfg.timestep = 0.0;
        assert!(matches!(simulate(&cfg), Err(SimError::ConfigInvalid(_))));
        let mut cfg = SimConfig::new(default_route(1), StyleProfile::preset(DrivingStyle::Nor), 3);
        cfg.profile.accel_mag = -1.0;
        assert!(matches!(simulate(&cfg), Err(SimError::ConfigInvalid(_))));
        let mut cfg = SimConfig::new(default_route(1), StyleProfile::preset(DrivingStyle::Nor), 3);
        cfg.route.segments.clear();
        assert!(matches!(simulate(&cfg), Err(SimError::ConfigInvalid(_))));
    }

    #[test]
    fn traffic_zone_caps_speed_for_everyone() {
        let route = default_route(1);
        let zone = TrafficZone { start_m: 3000.0, length_m: 200.0, speed_kmh: 20.0 };
        for style in DrivingStyle::ALL {
            let mut cfg = SimConfig::new(route.clone(), StyleProfile::preset(style), 8);
            cfg.traffic = vec![zone];
            let slow = simulate(&cfg).unwrap();
            cfg.traffic.clear();
            let free = simulate(&cfg).unwrap();
            assert!(slow.len() > free.len(), "{style}");
        }
    }

    #[test]
    fn experiment_shape() {
        let d = simulate_experiment(&default_route(1), 1).unwrap();
        assert!((4800..=5800).contains(&d.len()), "{}", d.len());
        let [c, n, a] = DrivingStyle::ALL.map(|s| d.count(s));
        assert!(c > n && n > a, "{c} {n} {a}");
        assert_eq!(d, simulate_experiment(&default_route(1), 1).unwrap());
        assert_eq!(d.grouped(Field::Velocity).iter().map(Vec::len).sum::<usize>(), d.len());
    }
}
