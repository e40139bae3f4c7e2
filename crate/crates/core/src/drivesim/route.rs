//! Parametric conventional-road routes.
//!
//! Text format, one item per line, `#` starts a comment:
//!
//! ```text
//! start <lat_deg> <lon_deg> <heading_deg>
//! <kind> <length_m> <limit_kmh> <param>
//! ```
//!
//! `kind` is one of `straight`, `curve`, `roundabout`, `stop`,
//! `speed_bump`, `slope`. `param` is `-` except for `curve`
//! (`radius=<m>,dir=left|right`), `roundabout` (`radius=<m>`) and
//! `slope` (`grade=<percent>`). Heading is degrees clockwise from north.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SimError;

/// Mean Earth radius used by the local projection, metres.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TurnDirection {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentKind {
    Straight,
    Curve {
        radius_m: f64,
        direction: TurnDirection,
    },
    /// Enter deflecting right, circulate left, exit right; no net heading change.
    Roundabout {
        radius_m: f64,
    },
    /// The vehicle must halt at the end of the segment.
    Stop,
    SpeedBump,
    Slope {
        grade_pct: f64,
    },
}

impl SegmentKind {
    pub fn name(&self) -> &'static str {
        match self {
            SegmentKind::Straight => "straight",
            SegmentKind::Curve { .. } => "curve",
            SegmentKind::Roundabout { .. } => "roundabout",
            SegmentKind::Stop => "stop",
            SegmentKind::SpeedBump => "speed_bump",
            SegmentKind::Slope { .. } => "slope",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub length_m: f64,
    pub speed_limit_kmh: f64,
}

impl Segment {
    pub fn new(kind: SegmentKind, length_m: f64, speed_limit_kmh: f64) -> Self {
        Self { kind, length_m, speed_limit_kmh }
    }

    /// Signed path curvature (1/m, positive to the left) at `offset` metres
    /// into the segment.
    pub fn curvature_at(&self, offset: f64) -> f64 {
        match self.kind {
            SegmentKind::Curve { radius_m, direction: TurnDirection::Left } => 1.0 / radius_m,
            SegmentKind::Curve { radius_m, direction: TurnDirection::Right } => -1.0 / radius_m,
            SegmentKind::Roundabout { radius_m } => {
                let f = offset / self.length_m;
                if (0.25..0.75).contains(&f) {
                    1.0 / radius_m
                } else {
                    -1.0 / radius_m
                }
            }
            _ => 0.0,
        }
    }

    /// Road grade as a fraction (rise over run).
    pub fn grade(&self) -> f64 {
        match self.kind {
            SegmentKind::Slope { grade_pct } => grade_pct / 100.0,
            _ => 0.0,
        }
    }

    /// Piecewise-constant curvature pieces as `(length, curvature)`.
    fn pieces(&self) -> Vec<(f64, f64)> {
        match self.kind {
            SegmentKind::Roundabout { radius_m } => {
                let q = self.length_m / 4.0;
                vec![(q, -1.0 / radius_m), (2.0 * q, 1.0 / radius_m), (q, -1.0 / radius_m)]
            }
            _ => vec![(self.length_m, self.curvature_at(0.0))],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteSpec {
    pub start_lat: f64,
    pub start_lon: f64,
    /// Degrees clockwise from north.
    pub start_heading_deg: f64,
    pub segments: Vec<Segment>,
}

/// Planar pose in the local east/north frame; `theta` is counter-clockwise
/// from east, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub east: f64,
    pub north: f64,
    pub theta: f64,
}

impl Pose {
    fn advance(self, length: f64, curvature: f64) -> Pose {
        if curvature.abs() < 1e-12 {
            Pose { east: self.east + length * self.theta.cos(), north: self.north + length * self.theta.sin(), ..self }
        } else {
            let theta = self.theta + curvature * length;
            Pose {
                east: self.east + (theta.sin() - self.theta.sin()) / curvature,
                north: self.north - (theta.cos() - self.theta.cos()) / curvature,
                theta,
            }
        }
    }
}

impl RouteSpec {
    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length_m).sum()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::ConfigInvalid(msg));
        if self.segments.is_empty() {
            return bad("route has no segments".into());
        }
        if !(-90.0..=90.0).contains(&self.start_lat)
            || !(-180.0..=180.0).contains(&self.start_lon)
            || !self.start_heading_deg.is_finite()
        {
            return bad("route start is outside geographic bounds".into());
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.length_m > 0.0) || !s.length_m.is_finite() {
                return bad(format!("segment {i} has non-positive length"));
            }
            if !(s.speed_limit_kmh >= 0.0) || !s.speed_limit_kmh.is_finite() {
                return bad(format!("segment {i} has an invalid speed limit"));
            }
            match s.kind {
                SegmentKind::Curve { radius_m, .. } | SegmentKind::Roundabout { radius_m } if !(radius_m > 0.0) => {
                    return bad(format!("segment {i} has non-positive radius"));
                }
                SegmentKind::Slope { grade_pct } if !(grade_pct.abs() < 30.0) => {
                    return bad(format!("segment {i} grade is implausible"));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn count(&self, kind: &str) -> usize {
        self.segments.iter().filter(|s| s.kind.name() == kind).count()
    }

    /// Index of the segment containing distance `s` (clamped to the route).
    pub fn segment_at(&self, s: f64) -> (usize, f64) {
        let mut start = 0.0;
        for (i, seg) in self.segments.iter().enumerate() {
            if s < start + seg.length_m || i + 1 == self.segments.len() {
                return (i, (s - start).clamp(0.0, seg.length_m));
            }
            start += seg.length_m;
        }
        unreachable!("validated routes have segments")
    }

    /// Distance from the route start to the beginning of each segment.
    pub fn segment_starts(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.segments
            .iter()
            .map(|s| {
                let start = acc;
                acc += s.length_m;
                start
            })
            .collect()
    }

    /// Geometry sampler for this route.
    pub fn geometry(&self) -> RouteGeometry<'_> {
        let theta0 = (90.0 - self.start_heading_deg).to_radians();
        let mut pose = Pose { east: 0.0, north: 0.0, theta: theta0 };
        let mut starts = Vec::with_capacity(self.segments.len());
        for seg in &self.segments {
            starts.push(pose);
            for (len, k) in seg.pieces() {
                pose = pose.advance(len, k);
            }
        }
        RouteGeometry { route: self, starts, offsets: self.segment_starts() }
    }
}

pub struct RouteGeometry<'a> {
    route: &'a RouteSpec,
    starts: Vec<Pose>,
    offsets: Vec<f64>,
}

impl RouteGeometry<'_> {
    pub fn pose_at(&self, s: f64) -> Pose {
        let (i, mut rem) = self.route.segment_at(s);
        let mut pose = self.starts[i];
        for (len, k) in self.route.segments[i].pieces() {
            let step = rem.min(len);
            pose = pose.advance(step, k);
            rem -= step;
            if rem <= 0.0 {
                break;
            }
        }
        pose
    }

    /// Latitude and longitude (degrees) at distance `s` along the route.
    pub fn lat_lon_at(&self, s: f64) -> (f64, f64) {
        let pose = self.pose_at(s);
        let lat0 = self.route.start_lat.to_radians();
        let lat = self.route.start_lat + (pose.north / EARTH_RADIUS_M).to_degrees();
        let lon = self.route.start_lon + (pose.east / (EARTH_RADIUS_M * lat0.cos())).to_degrees();
        (lat, lon)
    }

    pub fn segment_start(&self, i: usize) -> f64 {
        self.offsets[i]
    }
}

/// Great-circle distance in metres.
pub fn haversine_m(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * a.sqrt().asin()
}

/// The 10 km template: residential exit, conventional road with
/// roundabouts, stops, bumps and slopes, workplace entry.
fn template() -> Vec<Segment> {
    use SegmentKind::*;
    use TurnDirection::*;
    let curve = |r: f64, d| Curve { radius_m: r, direction: d };
    vec![
        Segment::new(Straight, 350.0, 80.0),
        Segment::new(SpeedBump, 15.0, 30.0),
        Segment::new(Straight, 450.0, 80.0),
        Segment::new(curve(220.0, Left), 260.0, 80.0),
        Segment::new(Straight, 700.0, 80.0),
        Segment::new(Roundabout { radius_m: 20.0 }, 70.0, 40.0),
        Segment::new(Straight, 500.0, 80.0),
        Segment::new(Slope { grade_pct: 4.0 }, 650.0, 80.0),
        Segment::new(curve(160.0, Right), 230.0, 80.0),
        Segment::new(Straight, 600.0, 80.0),
        Segment::new(Stop, 30.0, 40.0),
        Segment::new(Straight, 400.0, 80.0),
        Segment::new(curve(350.0, Left), 380.0, 80.0),
        Segment::new(Straight, 750.0, 90.0),
        Segment::new(Slope { grade_pct: -3.5 }, 550.0, 90.0),
        Segment::new(Roundabout { radius_m: 17.0 }, 60.0, 40.0),
        Segment::new(Straight, 450.0, 90.0),
        Segment::new(curve(140.0, Left), 210.0, 90.0),
        Segment::new(curve(200.0, Right), 240.0, 90.0),
        Segment::new(Straight, 600.0, 90.0),
        Segment::new(Straight, 350.0, 90.0),
        Segment::new(Stop, 30.0, 40.0),
        Segment::new(curve(260.0, Right), 300.0, 90.0),
        Segment::new(Straight, 450.0, 90.0),
        Segment::new(Straight, 300.0, 90.0),
    ]
}

/// Nominal route length, metres.
pub const DEFAULT_ROUTE_LENGTH_M: f64 = 10_000.0;

/// Default 10 km route. The seed perturbs segment lengths (±8 %) and curve
/// radii (±10 %); lengths are then rescaled to exactly 10 km.
pub fn default_route(seed: u64) -> RouteSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut segments = template();
    for seg in &mut segments {
        seg.length_m *= rng.random_range(0.92..1.08);
        match &mut seg.kind {
            SegmentKind::Curve { radius_m, .. } => *radius_m *= rng.random_range(0.9..1.1),
            SegmentKind::Roundabout { radius_m } => *radius_m *= rng.random_range(0.9..1.1),
            _ => {}
        }
    }
    let scale = DEFAULT_ROUTE_LENGTH_M / segments.iter().map(|s| s.length_m).sum::<f64>();
    for seg in &mut segments {
        seg.length_m *= scale;
    }
    RouteSpec { start_lat: 39.3640, start_lon: -0.5130, start_heading_deg: 200.0, segments }
}

impl fmt::Display for RouteSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# drivestyle route")?;
        writeln!(f, "start {:?} {:?} {:?}", self.start_lat, self.start_lon, self.start_heading_deg)?;
        for s in &self.segments {
            let param = match s.kind {
                SegmentKind::Curve { radius_m, direction } => {
                    let dir = if direction == TurnDirection::Left { "left" } else { "right" };
                    format!("radius={radius_m:?},dir={dir}")
                }
                SegmentKind::Roundabout { radius_m } => format!("radius={radius_m:?}"),
                SegmentKind::Slope { grade_pct } => format!("grade={grade_pct:?}"),
                _ => "-".into(),
            };
            writeln!(f, "{} {:?} {:?} {}", s.kind.name(), s.length_m, s.speed_limit_kmh, param)?;
        }
        Ok(())
    }
}

impl FromStr for RouteSpec {
    type Err = SimError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = |line: usize, msg: &str| SimError::RouteParse { line, reason: msg.to_string() };
        let mut start = None;
        let mut segments = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let num = |t: &str| t.parse::<f64>().map_err(|_| err(line_no, "invalid number"));
            if tokens[0] == "start" {
                if tokens.len() != 4 {
                    return Err(err(line_no, "start needs lat, lon and heading"));
                }
                start = Some((num(tokens[1])?, num(tokens[2])?, num(tokens[3])?));
                continue;
            }
            if tokens.len() != 4 {
                return Err(err(line_no, "segment needs kind, length, limit and param"));
            }
            let length_m = num(tokens[1])?;
            let speed_limit_kmh = num(tokens[2])?;
            let params: Vec<(&str, &str)> = tokens[3].split(',').filter_map(|kv| kv.split_once('=')).collect();
            let get = |key: &str| -> Result<f64, SimError> {
                params
                    .iter()
                    .find(|(k, _)| *k == key)
                    .ok_or_else(|| err(line_no, &format!("missing `{key}`")))
                    .and_then(|(_, v)| num(v))
            };
            let kind = match tokens[0] {
                "straight" => SegmentKind::Straight,
                "stop" => SegmentKind::Stop,
                "speed_bump" => SegmentKind::SpeedBump,
                "curve" => {
                    let direction = match params.iter().find(|(k, _)| *k == "dir").map(|(_, v)| *v) {
                        Some("left") => TurnDirection::Left,
                        Some("right") => TurnDirection::Right,
                        _ => return Err(err(line_no, "curve needs dir=left|right")),
                    };
                    SegmentKind::Curve { radius_m: get("radius")?, direction }
                }
                "roundabout" => SegmentKind::Roundabout { radius_m: get("radius")? },
                "slope" => SegmentKind::Slope { grade_pct: get("grade")? },
                _ => return Err(err(line_no, "unknown segment kind")),
            };
            segments.push(Segment { kind, length_m, speed_limit_kmh });
        }
        let (start_lat, start_lon, start_heading_deg) = start.ok_or_else(|| err(0, "missing start line"))?;
        let route = RouteSpec { start_lat, start_lon, start_heading_deg, segments };
        route.validate()?;
        Ok(route)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_route_is_ten_km_with_features() {
        for seed in 0..20 {
            let r = default_route(seed);
            assert!((r.total_length() - 10_000.0).abs() <= 200.0);
            assert!(r.count("roundabout") >= 2);
            assert!(r.count("stop") >= 2);
            assert!(r.count("speed_bump") >= 1);
            assert!(r.count("slope") >= 1);
            r.validate().unwrap();
            for s in &r.segments {
                if matches!(s.kind, SegmentKind::Straight | SegmentKind::Curve { .. } | SegmentKind::Slope { .. }) {
                    assert!(s.speed_limit_kmh == 80.0 || s.speed_limit_kmh == 90.0);
                } else {
                    assert!(s.speed_limit_kmh < 80.0);
                }
            }
        }
    }

    #[test]
    fn default_route_is_deterministic() {
        assert_eq!(default_route(3), default_route(3));
        assert_ne!(default_route(3), default_route(4));
    }

    #[test]
    fn text_format_round_trips() {
        let r = default_route(9);
        let back: RouteSpec = r.to_string().parse().unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn text_format_errors() {
        assert!("straight 10 80 -".parse::<RouteSpec>().is_err());
        assert!("start 39 -0.5 0\nwiggle 10 80 -".parse::<RouteSpec>().is_err());
        assert!("start 39 -0.5 0\ncurve 10 80 radius=100".parse::<RouteSpec>().is_err());
        assert!("start 39 -0.5 0\nstraight -10 80 -".parse::<RouteSpec>().is_err());
        let ok: RouteSpec = "start 39 -0.5 0 # north\nslope 100 80 grade=3\n".parse().unwrap();
        assert_eq!(ok.segments[0].grade(), 0.03);
    }

    #[test]
    fn geometry_is_continuous_and_arc_length_preserving() {
        let r = default_route(1);
        let g = r.geometry();
        let mut prev = g.lat_lon_at(0.0);
        let step = 5.0;
        let mut s = step;
        while s < r.total_length() {
            let cur = g.lat_lon_at(s);
            let d = haversine_m(prev.0, prev.1, cur.0, cur.1);
            assert!((d - step).abs() < 0.05, "at {s}: {d}");
            prev = cur;
            s += step;
        }
    }

    #[test]
    fn roundabout_has_no_net_heading_change() {
        let seg = Segment::new(SegmentKind::Roundabout { radius_m: 20.0 }, 70.0, 40.0);
        let route = RouteSpec { start_lat: 0.0, start_lon: 0.0, start_heading_deg: 90.0, segments: vec![seg] };
        let end = route.geometry().pose_at(70.0);
        assert!(end.theta.abs() < 1e-12);
    }

    #[test]
    fn haversine_one_degree_of_latitude() {
        let d = haversine_m(0.0, 0.0, 1.0, 0.0);
        assert!((d - EARTH_RADIUS_M.to_radians()).abs() < 1e-6);
    }
}
