//! Domain records: AIS observations, port IoT readings and voyages.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, Timelike, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::LatLon;

/// UTC instant, microsecond precision.
pub type Timestamp = DateTime<Utc>;

/// Raw column name to cell text, as read from one CSV row.
pub type FieldMap = BTreeMap<String, String>;

pub const AIS_COLUMNS: [&str; 12] = [
    "Timestamp",
    "MMSI",
    "Latitude",
    "Longitude",
    "SOG",
    "COG",
    "Heading",
    "ROT",
    "Draught",
    "Ship Type",
    "Ship Length",
    "Ship Width",
];

pub const IOT_COLUMNS: [&str; 9] = [
    "Timestamp",
    "Equipment Index",
    "Device Identify",
    "Latitude",
    "Longitude",
    "Altitude",
    "Velocity",
    "Direction",
    "Work Type",
];

/// AIS heading value meaning "not available".
pub const HEADING_UNAVAILABLE: u16 = 511;
/// AIS rate-of-turn value meaning "not available".
pub const ROT_UNAVAILABLE: f64 = -128.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("field `{0}` out of range or unparsable")]
    OutOfRange(String),
    #[error("unparsable timestamp `{0}`")]
    UnparsableTimestamp(String),
    #[error("invalid work type `{0}` (expected U or L)")]
    InvalidWorkType(String),
}

/// A sensor value that may carry the protocol's "not available" sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Reading<T> {
    Present(T),
    Unavailable,
}

impl<T: Copy> Reading<T> {
    pub fn present(&self) -> Option<T> {
        match self {
            Reading::Present(v) => Some(*v),
            Reading::Unavailable => None,
        }
    }

    pub fn is_available(&self) -> bool {
        matches!(self, Reading::Present(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AisRecord {
    pub timestamp: Timestamp,
    /// Opaque vessel identifier; anonymised feeds use labels such as `Ship1`.
    pub mmsi: String,
    pub lat: f64,
    pub lon: f64,
    /// Speed over ground, knots.
    pub sog: f64,
    /// Course over ground, degrees in [0, 360).
    pub cog: f64,
    pub heading: Reading<u16>,
    /// Rate of turn, degrees per minute.
    pub rot: Reading<f64>,
    pub draught: f64,
    pub ship_type: u16,
    pub ship_length: f64,
    pub ship_width: f64,
}

impl AisRecord {
    pub fn position(&self) -> LatLon<f64> {
        LatLon::new(self.lat, self.lon)
    }

    pub fn to_field_map(&self) -> FieldMap {
        let heading = match self.heading {
            Reading::Present(h) => h.to_string(),
            Reading::Unavailable => HEADING_UNAVAILABLE.to_string(),
        };
        let rot = match self.rot {
            Reading::Present(r) => r.to_string(),
            Reading::Unavailable => ROT_UNAVAILABLE.to_string(),
        };
        let values = [
            format_ais_timestamp(&self.timestamp),
            self.mmsi.clone(),
            self.lat.to_string(),
            self.lon.to_string(),
            self.sog.to_string(),
            self.cog.to_string(),
            heading,
            rot,
            self.draught.to_string(),
            self.ship_type.to_string(),
            self.ship_length.to_string(),
            self.ship_width.to_string(),
        ];
        AIS_COLUMNS
            .iter()
            .zip(values)
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WorkType {
    Unloading,
    Loading,
}

impl WorkType {
    pub fn code(&self) -> &'static str {
        match self {
            WorkType::Unloading => "U",
            WorkType::Loading => "L",
        }
    }
}

impl FromStr for WorkType {
    type Err = ValidationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "U" => Ok(WorkType::Unloading),
            "L" => Ok(WorkType::Loading),
            other => Err(ValidationError::InvalidWorkType(other.to_string())),
        }
    }
}

impl fmt::Display for WorkType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// One reading from an IoT unit on port equipment (quay crane, yard truck, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IotRecord {
    pub timestamp: Timestamp,
    pub equipment_index: String,
    pub device_id: u32,
    pub lat: f64,
    pub lon: f64,
    pub altitude: f64,
    /// m/s
    pub velocity: f64,
    pub direction: f64,
    pub work_type: WorkType,
}

impl IotRecord {
    pub fn to_field_map(&self) -> FieldMap {
        let values = [
            self.timestamp.format("%Y-%m-%dT%H:%M:%S%.fZ").to_string(),
            self.equipment_index.clone(),
            self.device_id.to_string(),
            self.lat.to_string(),
            self.lon.to_string(),
            self.altitude.to_string(),
            self.velocity.to_string(),
            self.direction.to_string(),
            self.work_type.code().to_string(),
        ];
        IOT_COLUMNS
            .iter()
            .zip(values)
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }
}

/// A vessel's planned approach to the terminal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Voyage {
    pub vessel_id: String,
    /// Waypoints from origin to the destination berth.
    pub route: Vec<LatLon<f64>>,
    pub departure: Timestamp,
    pub promised_eta: Timestamp,
    /// knots
    pub max_speed: f64,
    /// Containers to handle at the terminal.
    pub van_count: u32,
    pub draught: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VoyageError {
    #[error("voyage {0}: route needs at least two waypoints")]
    ShortRoute(String),
    #[error("voyage {0}: consecutive waypoints {1} and {2} coincide")]
    RepeatedWaypoint(String, usize, usize),
    #[error("voyage {0}: promised ETA must be after departure")]
    EtaBeforeDeparture(String),
    #[error("voyage {0}: max speed must be positive")]
    NonPositiveSpeed(String),
    #[error("voyage {0}: invalid waypoint {1}")]
    InvalidWaypoint(String, usize),
}

impl Voyage {
    pub fn validate(&self) -> Result<(), VoyageError> {
        let id = || self.vessel_id.clone();
        if self.route.len() < 2 {
            return Err(VoyageError::ShortRoute(id()));
        }
        if let Some(i) = self.route.iter().position(|p| !p.is_valid()) {
            return Err(VoyageError::InvalidWaypoint(id(), i));
        }
        if let Some(i) = self.route.windows(2).position(|w| w[0] == w[1]) {
            return Err(VoyageError::RepeatedWaypoint(id(), i, i + 1));
        }
        if self.promised_eta <= self.departure {
            return Err(VoyageError::EtaBeforeDeparture(id()));
        }
        if !(self.max_speed > 0.0 && self.max_speed.is_finite()) {
            return Err(VoyageError::NonPositiveSpeed(id()));
        }
        Ok(())
    }

    pub fn destination(&self) -> LatLon<f64> {
        *self.route.last().expect("validated route")
    }
}

/// Formats as in AIS exports: `2019-07-03 00:00:15.015121 UTC`.
pub fn format_ais_timestamp(t: &Timestamp) -> String {
    t.format("%Y-%m-%d %H:%M:%S%.6f UTC").to_string()
}

/// Accepts `2019-07-03 00:00:15.015121 UTC` and RFC 3339 (`2021-10-31T20:59:59Z`,
/// also with a stray space before the `T`). Sub-microsecond digits are truncated.
pub fn parse_timestamp(raw: &str) -> Result<Timestamp, ValidationError> {
    let s = raw.trim();
    let err = || ValidationError::UnparsableTimestamp(raw.to_string());
    let parsed = if let Some(body) = s.strip_suffix(" UTC").or_else(|| s.strip_suffix("UTC")) {
        NaiveDateTime::parse_from_str(body.trim(), "%Y-%m-%d %H:%M:%S%.f")
            .map(|n| n.and_utc())
            .map_err(|_| err())?
    } else {
        let normalized = s.replacen(" T", "T", 1);
        DateTime::parse_from_rfc3339(&normalized)
            .map(|d| d.with_timezone(&Utc))
            .map_err(|_| err())?
    };
    let micros_ns = parsed.nanosecond() / 1_000 * 1_000;
    parsed.with_nanosecond(micros_ns).ok_or_else(err)
}

fn field<'a>(raw: &'a FieldMap, name: &str) -> Result<&'a str, ValidationError> {
    raw.get(name)
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .ok_or_else(|| ValidationError::MissingField(name.to_string()))
}

fn number(raw: &FieldMap, name: &str) -> Result<f64, ValidationError> {
    let v: f64 = field(raw, name)?
        .parse()
        .map_err(|_| ValidationError::OutOfRange(name.to_string()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ValidationError::OutOfRange(name.to_string()))
    }
}

fn bounded(raw: &FieldMap, name: &str, ok: impl Fn(f64) -> bool) -> Result<f64, ValidationError> {
    let v = number(raw, name)?;
    if ok(v) {
        Ok(v)
    } else {
        Err(ValidationError::OutOfRange(name.to_string()))
    }
}

fn integral(v: f64) -> bool {
    v.fract() == 0.0
}

/// Parses and range-checks one AIS row. Heading 511 and ROT -128 become
/// [`Reading::Unavailable`].
pub fn validate_ais_record(raw: &FieldMap) -> Result<AisRecord, ValidationError> {
    let timestamp = parse_timestamp(field(raw, "Timestamp")?)?;
    let mmsi = field(raw, "MMSI")?.to_string();
    let lat = bounded(raw, "Latitude", |v| (-90.0..=90.0).contains(&v))?;
    let lon = bounded(raw, "Longitude", |v| (-180.0..=180.0).contains(&v))?;
    let sog = bounded(raw, "SOG", |v| v >= 0.0)?;
    let cog = bounded(raw, "COG", |v| (0.0..360.0).contains(&v))?;
    let heading = bounded(raw, "Heading", |v| {
        integral(v) && ((0.0..=359.0).contains(&v) || v == HEADING_UNAVAILABLE as f64)
    })?;
    let heading = if heading == HEADING_UNAVAILABLE as f64 {
        Reading::Unavailable
    } else {
        Reading::Present(heading as u16)
    };
    let rot = bounded(raw, "ROT", |v| (-720.0..=720.0).contains(&v))?;
    let rot = if rot == ROT_UNAVAILABLE {
        Reading::Unavailable
    } else {
        Reading::Present(rot)
    };
    let draught = bounded(raw, "Draught", |v| v >= 0.0)?;
    let ship_type = bounded(raw, "Ship Type", |v| integral(v) && (0.0..=u16::MAX as f64).contains(&v))?;
    let ship_length = bounded(raw, "Ship Length", |v| v > 0.0)?;
    let ship_width = bounded(raw, "Ship Width", |v| v > 0.0)?;
    Ok(AisRecord {
        timestamp,
        mmsi,
        lat,
        lon,
        sog,
        cog,
        heading,
        rot,
        draught,
        ship_type: ship_type as u16,
        ship_length,
        ship_width,
    })
}

pub fn validate_iot_record(raw: &FieldMap) -> Result<IotRecord, ValidationError> {
    let timestamp = parse_timestamp(field(raw, "Timestamp")?)?;
    let equipment_index = field(raw, "Equipment Index")?.to_string();
    let device_id = bounded(raw, "Device Identify", |v| {
        integral(v) && (0.0..=u32::MAX as f64).contains(&v)
    })? as u32;
    let lat = bounded(raw, "Latitude", |v| (-90.0..=90.0).contains(&v))?;
    let lon = bounded(raw, "Longitude", |v| (-180.0..=180.0).contains(&v))?;
    let altitude = number(raw, "Altitude")?;
    let velocity = bounded(raw, "Velocity", |v| v >= 0.0)?;
    let direction = bounded(raw, "Direction", |v| (0.0..=360.0).contains(&v))?;
    let work_type = field(raw, "Work Type")?.parse()?;
    Ok(IotRecord {
        timestamp,
        equipment_index,
        device_id,
        lat,
        lon,
        altitude,
        velocity,
        direction,
        work_type,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(values: [&str; 12]) -> FieldMap {
        AIS_COLUMNS
            .iter()
            .zip(values)
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    const SHIP1: [&str; 12] = [
        "2019-07-03 00:00:15.015121 UTC",
        "Ship1",
        "35.09359667",
        "129.0357483",
        "0",
        "0",
        "137",
        "0",
        "4.4",
        "52",
        "30",
        "10",
    ];

    #[test]
    fn first_ais_row_is_valid() {
        let rec = validate_ais_record(&row(SHIP1)).unwrap();
        assert_eq!(rec.heading, Reading::Present(137));
        assert_eq!(rec.rot, Reading::Present(0.0));
        assert_eq!(rec.lat, 35.09359667);
        assert_eq!(rec.timestamp.timestamp_subsec_micros(), 15121);
        assert_eq!(rec.ship_type, 52);
    }

    #[test]
    fn sentinels_become_unavailable() {
        let mut v = SHIP1;
        v[6] = "511";
        v[7] = "-128";
        let rec = validate_ais_record(&row(v)).unwrap();
        assert_eq!(rec.heading, Reading::Unavailable);
        assert_eq!(rec.rot, Reading::Unavailable);
    }

    #[test]
    fn latitude_out_of_range() {
        let mut v = SHIP1;
        v[2] = "95.0";
        assert_eq!(
            validate_ais_record(&row(v)),
            Err(ValidationError::OutOfRange("Latitude".into()))
        );
    }

    #[test]
    fn missing_and_bad_fields() {
        let mut m = row(SHIP1);
        m.remove("Draught");
        assert_eq!(
            validate_ais_record(&m),
            Err(ValidationError::MissingField("Draught".into()))
        );
        let mut v = SHIP1;
        v[0] = "yesterday";
        assert!(matches!(
            validate_ais_record(&row(v)),
            Err(ValidationError::UnparsableTimestamp(_))
        ));
        let mut v = SHIP1;
        v[6] = "400";
        assert_eq!(
            validate_ais_record(&row(v)),
            Err(ValidationError::OutOfRange("Heading".into()))
        );
        let mut v = SHIP1;
        v[5] = "360";
        assert_eq!(
            validate_ais_record(&row(v)),
            Err(ValidationError::OutOfRange("COG".into()))
        );
    }

    #[test]
    fn validation_is_idempotent() {
        let mut v = SHIP1;
        v[6] = "511";
        v[7] = "-128";
        let once = validate_ais_record(&row(v)).unwrap();
        let twice = validate_ais_record(&once.to_field_map()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn timestamp_formats() {
        let a = parse_timestamp("2021-10-31T20:59:59Z").unwrap();
        let b = parse_timestamp("2021-10-31 T20:59:59Z").unwrap();
        let c = parse_timestamp("2021-10-31 20:59:59.000000 UTC").unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        let d = parse_timestamp("2019-07-03 00:00:15.0151219 UTC").unwrap();
        assert_eq!(d.timestamp_subsec_nanos(), 15_121_000);
    }

    #[test]
    fn work_type_codes() {
        assert_eq!("U".parse::<WorkType>().unwrap(), WorkType::Unloading);
        assert_eq!("L".parse::<WorkType>().unwrap(), WorkType::Loading);
        assert_eq!(
            "X".parse::<WorkType>(),
            Err(ValidationError::InvalidWorkType("X".into()))
        );
    }

    #[test]
    fn voyage_invariants() {
        let t0 = parse_timestamp("2021-01-01T00:00:00Z").unwrap();
        let mut v = Voyage {
            vessel_id: "V1".into(),
            route: vec![LatLon::new(34.0, 128.0), LatLon::new(35.0, 129.0)],
            departure: t0,
            promised_eta: t0 + chrono::Duration::hours(10),
            max_speed: 18.0,
            van_count: 500,
            draught: 9.0,
        };
        assert!(v.validate().is_ok());
        v.route.push(LatLon::new(35.0, 129.0));
        assert!(matches!(v.validate(), Err(VoyageError::RepeatedWaypoint(..))));
        v.route.pop();
        v.promised_eta = t0;
        assert!(matches!(v.validate(), Err(VoyageError::EtaBeforeDeparture(_))));
    }
}
