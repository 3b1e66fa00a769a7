//! Seeded synthetic traffic: voyages on approach routes, a drifting weather
//! field, and AIS traces whose speed responds to that weather.
//!
//! Weather model (per cell, `t` in hours since `start`):
//!
//! ```text
//! wind_speed = 8 + 6 sin(2 pi t / period + phase + 0.8 lat + 0.6 lon)   [m/s]
//! speed      = v0 * (1 + perturbation * clamp(-(wind_speed - 8) / 6, -1, 1))
//! ```
//!
//! Wind direction, humidity and the air-quality indices follow their own
//! phases and carry no information about speed.

use std::f64::consts::PI;

use chrono::Duration;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{initial_bearing_deg, point_along_route, route_length_nm, LatLon};
use crate::model::{parse_timestamp, AisRecord, Reading, Timestamp, Voyage};
use crate::seed::rng_for;
use crate::weather::{AirQuality, WeatherCell, WeatherField, WeatherSeries};

/// Container terminal approach point used by the default route templates.
pub const PORT_OF_BUSAN: LatLon<f64> = LatLon {
    lat: 35.08,
    lon: 129.05,
};

pub fn default_route_templates() -> Vec<Vec<LatLon<f64>>> {
    let p = |lat, lon| LatLon { lat, lon };
    vec![
        // Yellow Sea / west coast
        vec![p(34.0, 125.5), p(34.6, 127.6), p(35.0, 128.9), PORT_OF_BUSAN],
        // East China Sea, from the south
        vec![p(32.2, 128.6), p(34.2, 129.0), p(35.0, 129.1), PORT_OF_BUSAN],
        // Kanmon strait
        vec![p(34.6, 131.6), p(34.9, 130.0), p(35.05, 129.15), PORT_OF_BUSAN],
        // East Sea, coastal from the north
        vec![p(37.5, 130.5), p(36.0, 129.7), p(35.15, 129.15), PORT_OF_BUSAN],
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_vessels: usize,
    /// Earliest departure; departures spread uniformly over the horizon.
    pub start: Timestamp,
    pub horizon_hours: f64,
    pub route_templates: Vec<Vec<LatLon<f64>>>,
    /// Jitter applied to every waypoint except the destination, degrees.
    pub route_jitter_deg: f64,
    pub speed_range_knots: (f64, f64),
    pub van_count_range: (u32, u32),
    /// Strength of the weather effect on along-route speed, in [0, 0.9].
    pub weather_perturbation: f64,
    pub sampling_interval_minutes: u32,
    pub weather_interval_minutes: u32,
    pub weather_cell_deg: f64,
    pub weather_period_hours: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_vessels: 40,
            start: parse_timestamp("2021-01-01T00:00:00Z").expect("literal"),
            horizon_hours: 72.0,
            route_templates: default_route_templates(),
            route_jitter_deg: 0.05,
            speed_range_knots: (12.0, 18.0),
            van_count_range: (300, 1500),
            weather_perturbation: 0.3,
            sampling_interval_minutes: 10,
            weather_interval_minutes: 30,
            weather_cell_deg: 0.25,
            weather_period_hours: 18.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid synthetic traffic config: {0}")]
    InvalidConfig(String),
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidConfig(m.to_string()));
        let (smin, smax) = self.speed_range_knots;
        let (vmin, vmax) = self.van_count_range;
        if !(self.horizon_hours > 0.0) {
            return bad("horizon_hours must be positive");
        }
        if self.route_templates.is_empty() {
            return bad("at least one route template is required");
        }
        for (i, r) in self.route_templates.iter().enumerate() {
            if r.len() < 2 || r.windows(2).any(|w| w[0] == w[1]) || r.iter().any(|p| !p.is_valid()) {
                return bad(&format!("route template {i} is degenerate"));
            }
        }
        if !(smin > 0.0 && smin <= smax && smax.is_finite()) {
            return bad("speed_range_knots must satisfy 0 < min <= max");
        }
        if vmin > vmax {
            return bad("van_count_range must satisfy min <= max");
        }
        if !(0.0..=0.9).contains(&self.weather_perturbation) {
            return bad("weather_perturbation must lie in [0, 0.9]");
        }
        if self.sampling_interval_minutes == 0 || self.weather_interval_minutes == 0 {
            return bad("sampling intervals must be positive");
        }
        if !(self.weather_cell_deg > 0.0) || !(self.weather_period_hours > 0.0) {
            return bad("weather cell size and period must be positive");
        }
        if !(self.route_jitter_deg >= 0.0) {
            return bad("route_jitter_deg must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arrival {
    pub vessel_id: String,
    pub actual_arrival: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Traffic {
    pub voyages: Vec<Voyage>,
    pub weather: WeatherSeries,
    /// All AIS samples, ordered by (timestamp, MMSI).
    pub ais: Vec<AisRecord>,
    /// Ground-truth arrival instants, one per voyage.
    pub arrivals: Vec<Arrival>,
}

impl Traffic {
    pub fn arrival_of(&self, vessel_id: &str) -> Option<Timestamp> {
        self.arrivals
            .iter()
            .find(|a| a.vessel_id == vessel_id)
            .map(|a| a.actual_arrival)
    }

    /// AIS trace of one vessel in time order.
    pub fn trace_of(&self, vessel_id: &str) -> Vec<AisRecord> {
        self.ais.iter().filter(|r| r.mmsi == vessel_id).cloned().collect()
    }
}

/// Along-route speed multiplier for a weather cell.
pub fn speed_multiplier(cell: &WeatherCell, perturbation: f64) -> f64 {
    let f = (-(cell.wind_speed - 8.0) / 6.0).clamp(-1.0, 1.0);
    1.0 + perturbation * f
}

struct WeatherPhases([f64; 13]);

impl WeatherPhases {
    fn cell(&self, p: LatLon<f64>, t_hours: f64, period: f64) -> WeatherCell {
        let ph = &self.0;
        let w = |k: usize, per: f64, a: f64, b: f64| {
            (2.0 * PI * t_hours / per + ph[k] + a * p.lat + b * p.lon).sin()
        };
        let wind_speed = 8.0 + 6.0 * w(0, period, 0.8, 0.6);
        let wind_direction = (200.0 + 80.0 * w(1, 31.0, 0.3, 0.1)).rem_euclid(360.0);
        let humidity = (65.0 + 20.0 * w(2, 24.0, 0.1, 0.5)).clamp(0.0, 100.0);
        let aq = |k: usize, base: f64, amp: f64, per: f64| base + amp * w(k, per, 0.4, -0.3);
        WeatherCell {
            wind_direction,
            wind_speed,
            humidity,
            air_quality: AirQuality {
                pm25: aq(3, 22.0, 10.0, 20.0),
                pm10: aq(4, 40.0, 15.0, 26.0),
                no: aq(5, 12.0, 6.0, 14.0),
                nox: aq(6, 30.0, 12.0, 17.0),
                so: aq(7, 4.0, 2.0, 29.0),
                so2: aq(8, 5.0, 2.5, 23.0),
                co: aq(9, 0.5, 0.2, 19.0),
                co2: aq(10, 415.0, 10.0, 37.0),
                o3: aq(11, 35.0, 12.0, 24.0),
            },
        }
    }
}

fn micros(hours: f64) -> Duration {
    Duration::microseconds((hours * 3.6e9).round() as i64)
}

/// Deterministic synthetic traffic for `cfg`.
pub fn generate_traffic(cfg: &SynthConfig) -> Result<Traffic, SynthError> {
    cfg.validate()?;
    if cfg.n_vessels == 0 {
        return Ok(Traffic {
            voyages: Vec::new(),
            weather: WeatherSeries::default(),
            ais: Vec::new(),
            arrivals: Vec::new(),
        });
    }
    let mut root = rng_for(cfg.seed, "weather", 0);
    let mut phases = [0.0; 13];
    for ph in phases.iter_mut() {
        *ph = root.gen_range(0.0..2.0 * PI);
    }
    let phases = WeatherPhases(phases);

    // voyage geometry first, so the weather grid can cover every route
    struct Plan {
        voyage: Voyage,
        v0: f64,
        ship_type: u16,
        length: f64,
        width: f64,
    }
    let p = cfg.weather_perturbation;
    let mut plans = Vec::with_capacity(cfg.n_vessels);
    for i in 0..cfg.n_vessels {
        let mut rng = rng_for(cfg.seed, "vessel", i as u64);
        let template = &cfg.route_templates[rng.gen_range(0..cfg.route_templates.len())];
        let last = template.len() - 1;
        let j = cfg.route_jitter_deg;
        let route: Vec<LatLon<f64>> = template
            .iter()
            .enumerate()
            .map(|(k, w)| {
                if k == last || j == 0.0 {
                    *w
                } else {
                    LatLon::new(w.lat + rng.gen_range(-j..=j), w.lon + rng.gen_range(-j..=j))
                }
            })
            .collect();
        let (smin, smax) = cfg.speed_range_knots;
        let v0 = if smin < smax { rng.gen_range(smin..smax) } else { smin };
        let offset_min = rng.gen_range(0..((cfg.horizon_hours * 60.0).ceil() as i64).max(1));
        let departure = cfg.start + Duration::minutes(offset_min);
        let length_nm = route_length_nm(&route);
        let (vmin, vmax) = cfg.van_count_range;
        let van_count = rng.gen_range(vmin..=vmax);
        let draught = (rng.gen_range(8.0..14.5_f64) * 10.0).round() / 10.0;
        let ship_type = rng.gen_range(70..=79);
        let length = rng.gen_range(150..=350) as f64;
        let width = (length / 7.0).round();
        plans.push(Plan {
            voyage: Voyage {
                vessel_id: format!("V{i:04}"),
                route,
                departure,
                promised_eta: departure + micros(length_nm / v0),
                max_speed: ((v0 * (1.0 + p)) * 10.0).ceil() / 10.0,
                van_count,
                draught,
            },
            v0,
            ship_type,
            length,
            width,
        });
    }

    // weather grid covering all routes for the whole traffic window
    let (mut lat0, mut lat1, mut lon0, mut lon1) = (90.0_f64, -90.0_f64, 180.0_f64, -180.0_f64);
    for pl in &plans {
        for w in &pl.voyage.route {
            lat0 = lat0.min(w.lat);
            lat1 = lat1.max(w.lat);
            lon0 = lon0.min(w.lon);
            lon1 = lon1.max(w.lon);
        }
    }
    let margin = 1.0;
    let cell = cfg.weather_cell_deg;
    let origin = LatLon::new(lat0 - margin, lon0 - margin);
    let rows = ((lat1 - lat0 + 2.0 * margin) / cell).ceil() as usize;
    let cols = ((lon1 - lon0 + 2.0 * margin) / cell).ceil() as usize;
    let slowest = cfg.speed_range_knots.0 * (1.0 - p);
    let longest = plans
        .iter()
        .map(|pl| route_length_nm(&pl.voyage.route))
        .fold(0.0, f64::max);
    let span_hours = cfg.horizon_hours + longest / slowest + 2.0;
    let step = cfg.weather_interval_minutes as i64;
    let n_snapshots = (span_hours * 60.0 / step as f64).ceil() as i64 + 1;
    let fields = (0..n_snapshots)
        .map(|k| {
            let valid_at = cfg.start + Duration::minutes(k * step);
            let t_h = (k * step) as f64 / 60.0;
            let mut cells = Vec::with_capacity(rows * cols);
            for r in 0..rows {
                for c in 0..cols {
                    let center = LatLon::new(
                        origin.lat + (r as f64 + 0.5) * cell,
                        origin.lon + (c as f64 + 0.5) * cell,
                    );
                    cells.push(phases.cell(center, t_h, cfg.weather_period_hours));
                }
            }
            WeatherField {
                origin,
                cell_size_deg: cell,
                rows,
                cols,
                cells,
                valid_at,
            }
        })
        .collect();
    let weather = WeatherSeries::new(fields);

    let mut ais = Vec::new();
    let mut arrivals = Vec::with_capacity(plans.len());
    let sample_every = cfg.sampling_interval_minutes as i64;
    for pl in &plans {
        let v = &pl.voyage;
        let length_nm = route_length_nm(&v.route);
        let mut travelled = 0.0;
        let mut minute: i64 = 0;
        let record = |at: Timestamp, pos: LatLon<f64>, seg: usize, sog: f64| {
            let cog = initial_bearing_deg(v.route[seg], v.route[seg + 1]);
            AisRecord {
                timestamp: at,
                mmsi: v.vessel_id.clone(),
                lat: pos.lat,
                lon: pos.lon,
                sog,
                cog,
                heading: Reading::Present((cog.round() as u16) % 360),
                rot: Reading::Present(0.0),
                draught: v.draught,
                ship_type: pl.ship_type,
                ship_length: pl.length,
                ship_width: pl.width,
            }
        };
        let arrival = loop {
            let now = v.departure + Duration::minutes(minute);
            let (pos, seg) = point_along_route(&v.route, travelled).expect("validated route");
            let w = weather.sample(pos, now).expect("weather covers voyage");
            let speed = (pl.v0 * speed_multiplier(w, p)).min(v.max_speed);
            if minute % sample_every == 0 {
                ais.push(record(now, pos, seg, speed));
            }
            let step_nm = speed / 60.0;
            if travelled + step_nm >= length_nm {
                let frac_min = (length_nm - travelled) / speed * 60.0;
                let at = now + micros(frac_min / 60.0);
                let seg = v.route.len() - 2;
                ais.push(record(at, v.destination(), seg, speed));
                break at;
            }
            travelled += step_nm;
            minute += 1;
        };
        arrivals.push(Arrival {
            vessel_id: v.vessel_id.clone(),
            actual_arrival: arrival,
        });
    }
    ais.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.mmsi.cmp(&b.mmsi)));

    Ok(Traffic {
        voyages: plans.into_iter().map(|p| p.voyage).collect(),
        weather,
        ais,
        arrivals,
    })
}
