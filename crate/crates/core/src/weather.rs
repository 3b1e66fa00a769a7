//! Gridded weather snapshots and their time series.

use serde::{Deserialize, Serialize};

use crate::geo::LatLon;
use crate::model::Timestamp;

/// Air-quality indices reported by a port monitoring station.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AirQuality {
    pub pm25: f64,
    pub pm10: f64,
    pub no: f64,
    pub nox: f64,
    pub so: f64,
    pub so2: f64,
    pub co: f64,
    pub co2: f64,
    pub o3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WeatherCell {
    /// degrees
    pub wind_direction: f64,
    /// m/s
    pub wind_speed: f64,
    /// percent
    pub humidity: f64,
    pub air_quality: AirQuality,
}

impl WeatherCell {
    pub fn is_valid(&self) -> bool {
        let aq = &self.air_quality;
        self.wind_speed >= 0.0
            && (0.0..=100.0).contains(&self.humidity)
            && [aq.pm25, aq.pm10, aq.no, aq.nox, aq.so, aq.so2, aq.co, aq.co2, aq.o3]
                .iter()
                .all(|v| *v >= 0.0)
    }
}

/// Weather variables in tensor channel order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeatherChannel {
    WindDirection,
    WindSpeed,
    Humidity,
    Pm25,
    Pm10,
    No,
    Nox,
    So,
    So2,
    Co,
    Co2,
    O3,
}

impl WeatherChannel {
    pub const ALL: [WeatherChannel; 12] = [
        WeatherChannel::WindDirection,
        WeatherChannel::WindSpeed,
        WeatherChannel::Humidity,
        WeatherChannel::Pm25,
        WeatherChannel::Pm10,
        WeatherChannel::No,
        WeatherChannel::Nox,
        WeatherChannel::So,
        WeatherChannel::So2,
        WeatherChannel::Co,
        WeatherChannel::Co2,
        WeatherChannel::O3,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            WeatherChannel::WindDirection => "wind_direction",
            WeatherChannel::WindSpeed => "wind_speed",
            WeatherChannel::Humidity => "humidity",
            WeatherChannel::Pm25 => "pm2_5",
            WeatherChannel::Pm10 => "pm10",
            WeatherChannel::No => "no",
            WeatherChannel::Nox => "nox",
            WeatherChannel::So => "so",
            WeatherChannel::So2 => "so2",
            WeatherChannel::Co => "co",
            WeatherChannel::Co2 => "co2",
            WeatherChannel::O3 => "o3",
        }
    }

    pub fn value(&self, c: &WeatherCell) -> f64 {
        let aq = &c.air_quality;
        match self {
            WeatherChannel::WindDirection => c.wind_direction,
            WeatherChannel::WindSpeed => c.wind_speed,
            WeatherChannel::Humidity => c.humidity,
            WeatherChannel::Pm25 => aq.pm25,
            WeatherChannel::Pm10 => aq.pm10,
            WeatherChannel::No => aq.no,
            WeatherChannel::Nox => aq.nox,
            WeatherChannel::So => aq.so,
            WeatherChannel::So2 => aq.so2,
            WeatherChannel::Co => aq.co,
            WeatherChannel::Co2 => aq.co2,
            WeatherChannel::O3 => aq.o3,
        }
    }
}

/// One weather snapshot on a regular lat/lon grid. Row 0 is the southern edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherField {
    /// South-west corner of cell (0, 0).
    pub origin: LatLon<f64>,
    pub cell_size_deg: f64,
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<WeatherCell>,
    pub valid_at: Timestamp,
}

impl WeatherField {
    pub fn uniform(
        origin: LatLon<f64>,
        cell_size_deg: f64,
        rows: usize,
        cols: usize,
        cell: WeatherCell,
        valid_at: Timestamp,
    ) -> Self {
        Self {
            origin,
            cell_size_deg,
            rows,
            cols,
            cells: vec![cell; rows * cols],
            valid_at,
        }
    }

    pub fn cell(&self, row: usize, col: usize) -> &WeatherCell {
        &self.cells[row * self.cols + col]
    }

    /// Centre of cell `(row, col)`.
    pub fn cell_center(&self, row: usize, col: usize) -> LatLon<f64> {
        LatLon::new(
            self.origin.lat + (row as f64 + 0.5) * self.cell_size_deg,
            self.origin.lon + (col as f64 + 0.5) * self.cell_size_deg,
        )
    }

    /// Nearest cell to `p`; positions outside the field snap to the border.
    pub fn nearest_index(&self, p: LatLon<f64>) -> (usize, usize) {
        let clamp = |x: f64, n: usize| -> usize {
            if x.is_nan() || x < 0.0 {
                0
            } else {
                (x as usize).min(n - 1)
            }
        };
        let r = ((p.lat - self.origin.lat) / self.cell_size_deg).floor();
        let c = ((p.lon - self.origin.lon) / self.cell_size_deg).floor();
        (clamp(r, self.rows), clamp(c, self.cols))
    }

    pub fn sample(&self, p: LatLon<f64>) -> &WeatherCell {
        let (r, c) = self.nearest_index(p);
        self.cell(r, c)
    }

    pub fn is_valid(&self) -> bool {
        self.rows > 0
            && self.cols > 0
            && self.cell_size_deg > 0.0
            && self.cells.len() == self.rows * self.cols
            && self.cells.iter().all(WeatherCell::is_valid)
    }
}

/// Snapshots ordered by `valid_at`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WeatherSeries {
    pub fields: Vec<WeatherField>,
}

impl WeatherSeries {
    pub fn new(mut fields: Vec<WeatherField>) -> Self {
        fields.sort_by_key(|f| f.valid_at);
        Self { fields }
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// Snapshot closest in time to `t`; the earlier one wins a tie.
    pub fn nearest(&self, t: Timestamp) -> Option<&WeatherField> {
        let idx = self.fields.partition_point(|f| f.valid_at < t);
        let after = self.fields.get(idx);
        let before = idx.checked_sub(1).and_then(|i| self.fields.get(i));
        match (before, after) {
            (Some(b), Some(a)) => {
                if (t - b.valid_at) <= (a.valid_at - t) {
                    Some(b)
                } else {
                    Some(a)
                }
            }
            (b, a) => b.or(a),
        }
    }

    pub fn sample(&self, p: LatLon<f64>, t: Timestamp) -> Option<&WeatherCell> {
        self.nearest(t).map(|f| f.sample(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_timestamp;

    fn field_at(t: &str, ws: f64) -> WeatherField {
        WeatherField::uniform(
            LatLon::new(34.0, 128.0),
            0.5,
            4,
            4,
            WeatherCell {
                wind_speed: ws,
                humidity: 50.0,
                ..Default::default()
            },
            parse_timestamp(t).unwrap(),
        )
    }

    #[test]
    fn nearest_snapshot_in_time() {
        let s = WeatherSeries::new(vec![
            field_at("2021-01-01T01:00:00Z", 2.0),
            field_at("2021-01-01T00:00:00Z", 1.0),
        ]);
        let at = |t: &str| s.nearest(parse_timestamp(t).unwrap()).unwrap().cells[0].wind_speed;
        assert_eq!(at("2020-12-31T00:00:00Z"), 1.0);
        assert_eq!(at("2021-01-01T00:29:00Z"), 1.0);
        assert_eq!(at("2021-01-01T00:30:00Z"), 1.0);
        assert_eq!(at("2021-01-01T00:31:00Z"), 2.0);
        assert_eq!(at("2021-01-02T00:00:00Z"), 2.0);
        assert!(WeatherSeries::default().nearest(parse_timestamp("2021-01-01T00:00:00Z").unwrap()).is_none());
    }

    #[test]
    fn nearest_cell_clamps_at_border() {
        let f = field_at("2021-01-01T00:00:00Z", 1.0);
        assert_eq!(f.nearest_index(LatLon::new(34.1, 128.1)), (0, 0));
        assert_eq!(f.nearest_index(LatLon::new(35.9, 129.9)), (3, 3));
        assert_eq!(f.nearest_index(LatLon::new(20.0, 140.0)), (0, 3));
        assert_eq!(f.nearest_index(LatLon::new(34.6, 129.1)), (1, 2));
    }

    #[test]
    fn validity() {
        let mut f = field_at("2021-01-01T00:00:00Z", 1.0);
        assert!(f.is_valid());
        f.cells[3].humidity = 120.0;
        assert!(!f.is_valid());
    }
}
