//! Register data model, driving-style labels, feature extraction and
//! min-max normalization shared by every other module.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Seconds in a day; time of day lives in `[0, SECONDS_PER_DAY)`.
pub const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecordError {
    #[error("field `{0}` is out of range or not finite")]
    FieldOutOfRange(&'static str),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dataset contains unlabeled registers")]
    UnlabeledData,
    #[error("unknown driving style `{0}`")]
    UnknownStyle(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("unknown feature set `{0}`")]
    UnknownFeatureSet(String),
    #[error("unknown class scheme `{0}`")]
    UnknownScheme(String),
}

/// Driving style label. Integer codes are stable: Con = 0, Nor = 1, Agg = 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DrivingStyle {
    Con = 0,
    Nor = 1,
    Agg = 2,
}

impl DrivingStyle {
    pub const ALL: [DrivingStyle; 3] = [DrivingStyle::Con, DrivingStyle::Nor, DrivingStyle::Agg];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(DrivingStyle::Con),
            1 => Some(DrivingStyle::Nor),
            2 => Some(DrivingStyle::Agg),
            _ => None,
        }
    }

    /// Upper-case tag used in the register CSV (`CON`, `NOR`, `AGG`).
    pub fn tag(self) -> &'static str {
        match self {
            DrivingStyle::Con => "CON",
            DrivingStyle::Nor => "NOR",
            DrivingStyle::Agg => "AGG",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            DrivingStyle::Con => "conservative",
            DrivingStyle::Nor => "normal",
            DrivingStyle::Agg => "aggressive",
        }
    }
}

impl fmt::Display for DrivingStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            DrivingStyle::Con => "Con",
            DrivingStyle::Nor => "Nor",
            DrivingStyle::Agg => "Agg",
        };
        f.write_str(name)
    }
}

impl FromStr for DrivingStyle {
    type Err = RecordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "con" | "conservative" | "0" => Ok(DrivingStyle::Con),
            "nor" | "normal" | "1" => Ok(DrivingStyle::Nor),
            "agg" | "aggressive" | "2" => Ok(DrivingStyle::Agg),
            other => Err(RecordError::UnknownStyle(other.to_string())),
        }
    }
}

/// One fused 1 Hz sample.
///
/// `fa` is acceleration in m/s² and `fg` turning speed in °/s, both on
/// vehicle axes: x forward, y tangential (lateral), z along gravity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Register {
    pub time_of_day: f64,
    pub latitude: f64,
    pub longitude: f64,
    /// km/h
    pub velocity: f64,
    pub fa: [f64; 3],
    pub fg: [f64; 3],
    pub label: Option<DrivingStyle>,
}

impl Register {
    /// Checks every field invariant, returning the register unchanged.
    pub fn validate(self) -> Result<Self, RecordError> {
        let checks: [(&'static str, f64, f64, f64); 4] = [
            ("time", self.time_of_day, 0.0, SECONDS_PER_DAY),
            ("latitude", self.latitude, -90.0, 90.0),
            ("longitude", self.longitude, -180.0, 180.0),
            ("velocity", self.velocity, 0.0, f64::INFINITY),
        ];
        for (name, value, lo, hi) in checks {
            if !value.is_finite() || value < lo || value > hi {
                return Err(RecordError::FieldOutOfRange(name));
            }
        }
        if self.time_of_day >= SECONDS_PER_DAY {
            return Err(RecordError::FieldOutOfRange("time"));
        }
        const INERTIAL: [Field; 6] = [Field::Fax, Field::Fay, Field::Faz, Field::Fgx, Field::Fgy, Field::Fgz];
        for field in INERTIAL {
            if !field.value(&self).is_finite() {
                return Err(RecordError::FieldOutOfRange(field.name()));
            }
        }
        Ok(self)
    }

    pub fn with_label(mut self, label: Option<DrivingStyle>) -> Self {
        self.label = label;
        self
    }
}

/// Validates a register; see [`Register::validate`].
pub fn validate_register(r: Register) -> Result<Register, RecordError> {
    r.validate()
}

/// A single scalar channel of a register usable as a classifier input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    Velocity,
    Latitude,
    Longitude,
    /// Seconds since midnight divided by 86 400.
    Time,
    /// Cyclical time encoding, sin(2π t / 86 400). Not used by the named sets.
    TimeSin,
    /// Cyclical time encoding, cos(2π t / 86 400).
    TimeCos,
    Fax,
    Fay,
    Faz,
    Fgx,
    Fgy,
    Fgz,
}

impl Field {
    pub const ALL: [Field; 12] = [
        Field::Velocity,
        Field::Latitude,
        Field::Longitude,
        Field::Time,
        Field::TimeSin,
        Field::TimeCos,
        Field::Fax,
        Field::Fay,
        Field::Faz,
        Field::Fgx,
        Field::Fgy,
        Field::Fgz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::Velocity => "velocity",
            Field::Latitude => "latitude",
            Field::Longitude => "longitude",
            Field::Time => "time",
            Field::TimeSin => "time_sin",
            Field::TimeCos => "time_cos",
            Field::Fax => "fax",
            Field::Fay => "fay",
            Field::Faz => "faz",
            Field::Fgx => "fgx",
            Field::Fgy => "fgy",
            Field::Fgz => "fgz",
        }
    }

    /// Encoded value of this field for `r`.
    pub fn value(self, r: &Register) -> f64 {
        let phase = std::f64::consts::TAU * r.time_of_day / SECONDS_PER_DAY;
        match self {
            Field::Velocity => r.velocity,
            Field::Latitude => r.latitude,
            Field::Longitude => r.longitude,
            Field::Time => r.time_of_day / SECONDS_PER_DAY,
            Field::TimeSin => phase.sin(),
            Field::TimeCos => phase.cos(),
            Field::Fax => r.fa[0],
            Field::Fay => r.fa[1],
            Field::Faz => r.fa[2],
            Field::Fgx => r.fg[0],
            Field::Fgy => r.fg[1],
            Field::Fgz => r.fg[2],
        }
    }
}

impl FromStr for Field {
    type Err = RecordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase();
        let alias = match key.as_str() {
            "speed" | "speed_kmh" | "v" => "velocity",
            "lat" | "lat_deg" => "latitude",
            "lon" | "lon_deg" => "longitude",
            "time_s" | "t" => "time",
            k => k,
        };
        Field::ALL.into_iter().find(|f| f.name() == alias).ok_or(RecordError::UnknownFeature(key))
    }
}

/// Selection and order of register fields fed to the classifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FeatureSet {
    /// velocity, lat, lon, time, fax, fay, faz, fgx, fgy, fgz
    Full10,
    /// velocity, lat, lon, time, fax, fay, faz
    Acc7,
    /// velocity, lat, lon, time, fgx, fgy, fgz
    Gyro7,
    /// velocity, fgx, fgy, fgz
    GyroNoGeoTime4,
    /// Any ordered subset of [`Field`]s.
    Custom(Vec<Field>),
}

impl FeatureSet {
    pub fn fields(&self) -> Cow<'_, [Field]> {
        use Field::*;
        match self {
            FeatureSet::Full10 => Cow::Borrowed(&[Velocity, Latitude, Longitude, Time, Fax, Fay, Faz, Fgx, Fgy, Fgz]),
            FeatureSet::Acc7 => Cow::Borrowed(&[Velocity, Latitude, Longitude, Time, Fax, Fay, Faz]),
            FeatureSet::Gyro7 => Cow::Borrowed(&[Velocity, Latitude, Longitude, Time, Fgx, Fgy, Fgz]),
            FeatureSet::GyroNoGeoTime4 => Cow::Borrowed(&[Velocity, Fgx, Fgy, Fgz]),
            FeatureSet::Custom(fields) => Cow::Borrowed(fields.as_slice()),
        }
    }

    pub fn len(&self) -> usize {
        self.fields().len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields().is_empty()
    }

    /// Short name used on the command line and in model files.
    pub fn name(&self) -> String {
        match self {
            FeatureSet::Full10 => "full10".into(),
            FeatureSet::Acc7 => "acc7".into(),
            FeatureSet::Gyro7 => "gyro7".into(),
            FeatureSet::GyroNoGeoTime4 => "gyro4".into(),
            FeatureSet::Custom(fields) => {
                let names: Vec<_> = fields.iter().map(|f| f.name()).collect();
                format!("custom:{}", names.join(","))
            }
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for FeatureSet {
    type Err = RecordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase();
        if let Some(list) = key.strip_prefix("custom:") {
            let fields =
                list.split(',').filter(|p| !p.trim().is_empty()).map(Field::from_str).collect::<Result<Vec<_>, _>>()?;
            if fields.is_empty() {
                return Err(RecordError::UnknownFeatureSet(key));
            }
            return Ok(FeatureSet::Custom(fields));
        }
        match key.as_str() {
            "full10" | "full" => Ok(FeatureSet::Full10),
            "acc7" => Ok(FeatureSet::Acc7),
            "gyro7" => Ok(FeatureSet::Gyro7),
            "gyro4" | "gyronogeotime4" => Ok(FeatureSet::GyroNoGeoTime4),
            _ => Err(RecordError::UnknownFeatureSet(key)),
        }
    }
}

/// Projects a register onto the feature set, in the set's field order.
pub fn extract_features(r: &Register, fs: &FeatureSet) -> Vec<f64> {
    fs.fields().iter().map(|f| f.value(r)).collect()
}

/// How the three labels are mapped to classifier outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassScheme {
    ThreeClass,
    /// Con registers are removed; classes Nor, Agg.
    TwoClassDropCon,
    /// Con registers are relabeled Nor; classes Nor, Agg.
    TwoClassMerged,
}

impl ClassScheme {
    pub const ALL: [ClassScheme; 3] =
        [ClassScheme::ThreeClass, ClassScheme::TwoClassDropCon, ClassScheme::TwoClassMerged];

    /// Output classes in ascending code order.
    pub fn classes(self) -> &'static [DrivingStyle] {
        match self {
            ClassScheme::ThreeClass => &DrivingStyle::ALL,
            ClassScheme::TwoClassDropCon | ClassScheme::TwoClassMerged => &[DrivingStyle::Nor, DrivingStyle::Agg],
        }
    }

    pub fn n_classes(self) -> usize {
        self.classes().len()
    }

    /// Output index of `style`, if the scheme has that class.
    pub fn class_index(self, style: DrivingStyle) -> Option<usize> {
        self.classes().iter().position(|&c| c == style)
    }

    /// Label after applying the scheme; `None` means the register is dropped.
    pub fn map_label(self, style: DrivingStyle) -> Option<DrivingStyle> {
        match (self, style) {
            (ClassScheme::TwoClassDropCon, DrivingStyle::Con) => None,
            (ClassScheme::TwoClassMerged, DrivingStyle::Con) => Some(DrivingStyle::Nor),
            (_, s) => Some(s),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassScheme::ThreeClass => "3c",
            ClassScheme::TwoClassDropCon => "drop-con",
            ClassScheme::TwoClassMerged => "merged",
        }
    }
}

impl fmt::Display for ClassScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassScheme {
    type Err = RecordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "3c" | "three-class" | "three" => Ok(ClassScheme::ThreeClass),
            "drop-con" | "dropcon" => Ok(ClassScheme::TwoClassDropCon),
            "merged" | "merge" => Ok(ClassScheme::TwoClassMerged),
            other => Err(RecordError::UnknownScheme(other.to_string())),
        }
    }
}

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Simulated { seed: u64 },
    Ingested { source: String },
    Derived(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub registers: Vec<Register>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(registers: Vec<Register>, provenance: Provenance) -> Self {
        Self { registers, provenance }
    }

    pub fn len(&self) -> usize {
        self.registers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registers.is_empty()
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.registers.iter().all(|r| r.label.is_some())
    }

    /// Errors unless every register carries a label.
    pub fn require_labeled(&self) -> Result<(), RecordError> {
        if self.is_fully_labeled() {
            Ok(())
        } else {
            Err(RecordError::UnlabeledData)
        }
    }

    pub fn count(&self, style: DrivingStyle) -> usize {
        self.registers.iter().filter(|r| r.label == Some(style)).count()
    }

    /// Values of one field, grouped by label in code order (Con, Nor, Agg).
    pub fn grouped(&self, field: Field) -> [Vec<f64>; 3] {
        let mut groups: [Vec<f64>; 3] = Default::default();
        for r in &self.registers {
            if let Some(style) = r.label {
                groups[style.code() as usize].push(field.value(r));
            }
        }
        groups
    }

    pub fn features(&self, fs: &FeatureSet) -> Vec<Vec<f64>> {
        self.registers.iter().map(|r| extract_features(r, fs)).collect()
    }
}

/// Applies a class scheme to a fully labeled dataset.
pub fn apply_scheme(data: &Dataset, scheme: ClassScheme) -> Result<Dataset, RecordError> {
    data.require_labeled()?;
    let registers = data
        .registers
        .iter()
        .filter_map(|r| {
            let style = r.label.expect("checked above");
            scheme.map_label(style).map(|s| r.with_label(Some(s)))
        })
        .collect();
    Ok(Dataset::new(registers, data.provenance.clone()))
}

/// Per-feature min/max fitted on a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationStats {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormalizationStats {
    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// Fits min/max over a set of already extracted feature vectors.
    pub fn fit<'a, I>(vectors: I) -> Result<Self, RecordError>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut iter = vectors.into_iter();
        let first = iter.next().ok_or(RecordError::EmptyDataset)?;
        let mut min = first.to_vec();
        let mut max = first.to_vec();
        for v in iter {
            if v.len() != min.len() {
                return Err(RecordError::DimensionMismatch { expected: min.len(), got: v.len() });
            }
            for (i, &x) in v.iter().enumerate() {
                min[i] = min[i].min(x);
                max[i] = max[i].max(x);
            }
        }
        Ok(Self { min, max })
    }

    /// Maps each component to `(x - min) / (max - min)` clamped to `[0, 1]`.
    /// Constant features map to 0.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>, RecordError> {
        if v.len() != self.dim() {
            return Err(RecordError::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        Ok(v.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&x, (&lo, &hi))| {
                let span = hi - lo;
                if span > 0.0 {
                    ((x - lo) / span).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect())
    }
}

pub fn fit_normalization(data: &Dataset, fs: &FeatureSet) -> Result<NormalizationStats, RecordError> {
    let vectors = data.features(fs);
    NormalizationStats::fit(vectors.iter().map(Vec::as_slice))
}

pub fn apply_normalization(v: &[f64], stats: &NormalizationStats) -> Result<Vec<f64>, RecordError> {
    stats.apply(v)
}

#[cfg(test)]
pub(crate) fn sample_register() -> Register {
    Register {
        time_of_day: 43_200.0,
        latitude: 39.35,
        longitude: -0.45,
        velocity: 68.5,
        fa: [0.1, -0.2, 9.8],
        fg: [1.0, 2.0, 3.0],
        label: None,
    }
}
