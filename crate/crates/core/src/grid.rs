//! Ship-centred multi-channel spatiotemporal input tensors.
//!
//! Cell `(row, col)` of a grid centred on `c` with half extent `h` covers
//! `[c + (i - h) * cell, c + (i - h + 1) * cell)` along each axis, i.e.
//! `index = floor((p - c) / cell) + h`. Rows grow northwards, columns
//! eastwards. Channel 0 is path occupancy; the remaining channels are the
//! weather variables in [`WeatherChannel::ALL`] order, resampled by
//! nearest-cell lookup, followed by optional forecast copies.

use std::io::Write;

use chrono::Duration;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::LatLon;
use crate::model::{AisRecord, Timestamp};
use crate::num::Scalar;
use crate::weather::{WeatherChannel, WeatherSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OccupancyMode {
    /// Number of samples in the cell during the step.
    #[default]
    Count,
    /// 1 if any sample fell in the cell during the step.
    Binary,
}

/// Grid geometry and window length, independent of the vessel position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub half_extent_cells: usize,
    pub cell_size_deg: f64,
    pub t_steps: usize,
    pub step_minutes: u32,
    pub occupancy: OccupancyMode,
    /// Extra weather channel blocks sampled `k * step` after each slice instant.
    pub forecast_steps: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            half_extent_cells: 16,
            cell_size_deg: 0.05,
            t_steps: 8,
            step_minutes: 30,
            occupancy: OccupancyMode::Count,
            forecast_steps: 0,
        }
    }
}

impl GridConfig {
    pub fn centered_on(&self, center: LatLon<f64>) -> GridSpec {
        GridSpec {
            center,
            config: self.clone(),
        }
    }

    pub fn side(&self) -> usize {
        2 * self.half_extent_cells + 1
    }

    pub fn channels(&self) -> Vec<Channel> {
        let mut out = vec![Channel::Occupancy];
        for lead in 0..=self.forecast_steps {
            out.extend(
                WeatherChannel::ALL
                    .iter()
                    .map(|&variable| Channel::Weather { variable, lead }),
            );
        }
        out
    }

    /// `(T, H, W, C)` of tensors built with this configuration.
    pub fn shape(&self) -> [usize; 4] {
        let side = self.side();
        [self.t_steps, side, side, self.channels().len()]
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.half_extent_cells < 1 {
            return Err(GridError::SpecMismatch("half_extent_cells must be >= 1".into()));
        }
        if !(self.cell_size_deg > 0.0 && self.cell_size_deg.is_finite()) {
            return Err(GridError::SpecMismatch("cell_size_deg must be > 0".into()));
        }
        if self.t_steps < 1 || self.step_minutes < 1 {
            return Err(GridError::SpecMismatch("t_steps and step_minutes must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// The vessel's current position.
    pub center: LatLon<f64>,
    #[serde(flatten)]
    pub config: GridConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    Occupancy,
    Weather { variable: WeatherChannel, lead: usize },
}

impl Channel {
    pub fn name(&self) -> String {
        match self {
            Channel::Occupancy => "occupancy".into(),
            Channel::Weather { variable, lead: 0 } => variable.name().into(),
            Channel::Weather { variable, lead } => format!("{}_f{lead}", variable.name()),
        }
    }
}

/// Dense `(T, H, W, C)` block in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridTensor<S> {
    pub shape: [usize; 4],
    pub channels: Vec<Channel>,
    pub values: Vec<S>,
}

impl<S: Scalar> GridTensor<S> {
    pub fn zeros(shape: [usize; 4], channels: Vec<Channel>) -> Self {
        debug_assert_eq!(shape[3], channels.len());
        Self {
            shape,
            channels,
            values: vec![S::zero(); shape.iter().product()],
        }
    }

    #[inline]
    pub fn offset(&self, t: usize, row: usize, col: usize, ch: usize) -> usize {
        let [_, h, w, c] = self.shape;
        ((t * h + row) * w + col) * c + ch
    }

    #[inline]
    pub fn get(&self, t: usize, row: usize, col: usize, ch: usize) -> S {
        self.values[self.offset(t, row, col, ch)]
    }

    #[inline]
    pub fn set(&mut self, t: usize, row: usize, col: usize, ch: usize, v: S) {
        let i = self.offset(t, row, col, ch);
        self.values[i] = v;
    }

    /// Sum of the occupancy channel over the grid at step `t`.
    pub fn occupancy_total(&self, t: usize) -> S {
        let [_, h, w, _] = self.shape;
        let mut acc = S::zero();
        for r in 0..h {
            for c in 0..w {
                acc = acc + self.get(t, r, c, 0);
            }
        }
        acc
    }

    /// Flat CSV, one row per `(t, row, col)` with one column per channel.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string(), "row".into(), "col".into()];
        header.extend(self.channels.iter().map(Channel::name));
        w.write_record(&header)?;
        let [t_n, h, wd, c_n] = self.shape;
        for t in 0..t_n {
            for r in 0..h {
                for c in 0..wd {
                    let mut rec = vec![t.to_string(), r.to_string(), c.to_string()];
                    rec.extend((0..c_n).map(|ch| format!("{:?}", self.get(t, r, c, ch))));
                    w.write_record(&rec)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Remaining minutes from the window's current instant to the actual arrival.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaLabel {
    pub remaining_minutes: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("grid spec mismatch: {0}")]
    SpecMismatch(String),
    #[error("arrival precedes the window's current instant")]
    ArrivalBeforeWindow,
}

/// Cell containing `p`, or `None` when outside the grid.
pub fn cell_index(spec: &GridSpec, p: LatLon<f64>) -> Option<(usize, usize)> {
    let h = spec.config.half_extent_cells as i64;
    let cell = spec.config.cell_size_deg;
    let axis = |d: f64| -> Option<usize> {
        let k = (d / cell).floor();
        if !k.is_finite() {
            return None;
        }
        let i = k as i64 + h;
        (0..=2 * h).contains(&i).then_some(i as usize)
    };
    Some((axis(p.lat - spec.center.lat)?, axis(p.lon - spec.center.lon)?))
}

/// Centre of cell `(row, col)`.
pub fn cell_center(spec: &GridSpec, row: usize, col: usize) -> LatLon<f64> {
    let h = spec.config.half_extent_cells as f64;
    let cell = spec.config.cell_size_deg;
    LatLon::new(
        spec.center.lat + (row as f64 - h + 0.5) * cell,
        spec.center.lon + (col as f64 - h + 0.5) * cell,
    )
}

/// Builds the `T`-step tensor ending at the last record's timestamp.
///
/// Step `s` (0-based, oldest first) covers `(now - (T - s) * step, now - (T - s - 1) * step]`.
/// Records older than the window or outside the grid are dropped. Weather for
/// a step is the snapshot nearest its closing instant. A label is produced when
/// `arrival` is given.
pub fn build_grid_sequence<S: Scalar>(
    trajectory: &[AisRecord],
    weather: &WeatherSeries,
    spec: &GridSpec,
    arrival: Option<Timestamp>,
) -> Result<(GridTensor<S>, Option<EtaLabel>), GridError> {
    spec.config.validate()?;
    if trajectory.is_empty() {
        return Err(GridError::EmptyTrajectory);
    }
    if weather.is_empty() {
        return Err(GridError::SpecMismatch("weather series is empty".into()));
    }
    let mut records: Vec<&AisRecord> = trajectory.iter().collect();
    records.sort_by_key(|r| r.timestamp);
    let now = records.last().expect("non-empty").timestamp;

    let cfg = &spec.config;
    let channels = cfg.channels();
    let shape = cfg.shape();
    let [t_steps, side, _, _] = shape;
    let step = Duration::minutes(cfg.step_minutes as i64);
    let mut tensor = GridTensor::<S>::zeros(shape, channels);

    let window_start = now - step * t_steps as i32;
    for r in records.iter().filter(|r| r.timestamp > window_start) {
        let since = (r.timestamp - window_start).num_microseconds().expect("window fits i64");
        let step_us = step.num_microseconds().expect("step fits i64");
        // (start, start + step] belongs to step 0
        let s = ((since - 1) / step_us) as usize;
        let s = s.min(t_steps - 1);
        if let Some((row, col)) = cell_index(spec, r.position()) {
            let cur = tensor.get(s, row, col, 0);
            let next = match cfg.occupancy {
                OccupancyMode::Count => cur + S::one(),
                OccupancyMode::Binary => S::one(),
            };
            tensor.set(s, row, col, 0, next);
        }
    }

    let n_weather = WeatherChannel::ALL.len();
    for s in 0..t_steps {
        let closes = now - step * (t_steps - 1 - s) as i32;
        for lead in 0..=cfg.forecast_steps {
            let at = closes + step * lead as i32;
            let field = weather.nearest(at).expect("non-empty series");
            for row in 0..side {
                for col in 0..side {
                    let wc = field.sample(cell_center(spec, row, col));
                    for (k, var) in WeatherChannel::ALL.iter().enumerate() {
                        let ch = 1 + lead * n_weather + k;
                        tensor.set(s, row, col, ch, S::lit(var.value(wc)));
                    }
                }
            }
        }
    }

    let label = match arrival {
        Some(a) if a < now => return Err(GridError::ArrivalBeforeWindow),
        Some(a) => Some(EtaLabel {
            remaining_minutes: (a - now).num_microseconds().expect("fits") as f64 / 6.0e7,
        }),
        None => None,
    };
    Ok((tensor, label))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_timestamp, Reading};
    use crate::weather::{WeatherCell, WeatherField};

    fn rec(t: &str, lat: f64, lon: f64) -> AisRecord {
        AisRecord {
            timestamp: parse_timestamp(t).unwrap(),
            mmsi: "V1".into(),
            lat,
            lon,
            sog: 10.0,
            cog: 90.0,
            heading: Reading::Present(90),
            rot: Reading::Unavailable,
            draught: 9.0,
            ship_type: 70,
            ship_length: 200.0,
            ship_width: 30.0,
        }
    }

    fn uniform_weather(ws: f64) -> WeatherSeries {
        WeatherSeries::new(vec![WeatherField::uniform(
            LatLon::new(30.0, 125.0),
            0.5,
            20,
            20,
            WeatherCell {
                wind_speed: ws,
                humidity: 60.0,
                wind_direction: 180.0,
                ..Default::default()
            },
            parse_timestamp("2021-01-01T00:00:00Z").unwrap(),
        )])
    }

    fn spec(center: LatLon<f64>, half: usize, cell: f64, t: usize) -> GridSpec {
        GridConfig {
            half_extent_cells: half,
            cell_size_deg: cell,
            t_steps: t,
            ..Default::default()
        }
        .centered_on(center)
    }

    /// Index by testing every cell's bounds.
    fn brute_force_cell(spec: &GridSpec, p: LatLon<f64>) -> Option<(usize, usize)> {
        let side = spec.config.side();
        let h = spec.config.half_extent_cells as f64;
        let cs = spec.config.cell_size_deg;
        let mut hit = None;
        for row in 0..side {
            for col in 0..side {
                let lat_lo = spec.center.lat + (row as f64 - h) * cs;
                let lon_lo = spec.center.lon + (col as f64 - h) * cs;
                if p.lat >= lat_lo && p.lat < lat_lo + cs && p.lon >= lon_lo && p.lon < lon_lo + cs {
                    assert!(hit.is_none(), "cells overlap");
                    hit = Some((row, col));
                }
            }
        }
        hit
    }

    #[test]
    fn center_maps_to_center_cell() {
        let s = spec(LatLon::new(35.0, 129.0), 2, 0.1, 1);
        assert_eq!(cell_index(&s, s.center), Some((2, 2)));
    }

    #[test]
    fn one_column_east() {
        let s = spec(LatLon::new(35.0, 129.0), 2, 0.1, 1);
        let p = LatLon::new(35.05, 129.15);
        assert_eq!(cell_index(&s, p), Some((2, 3)));
        assert_eq!(brute_force_cell(&s, p), Some((2, 3)));
    }

    #[test]
    fn far_east_is_outside() {
        let s = spec(LatLon::new(35.0, 129.0), 2, 0.1, 1);
        assert_eq!(cell_index(&s, LatLon::new(35.0, 129.0 + 1.2)), None);
    }

    #[test]
    fn index_agrees_with_bounds_scan() {
        let s = spec(LatLon::new(35.0, 129.0), 3, 0.07, 1);
        for i in 0..80 {
            for j in 0..80 {
                // stay clear of cell edges, where the two float paths may round differently
                let p = LatLon::new(34.7 + i as f64 * 0.0077 + 1e-6, 128.7 + j as f64 * 0.0077 + 1e-6);
                let edge_dist = |d: f64| {
                    let x = d / 0.07;
                    (x - x.round()).abs()
                };
                if edge_dist(p.lat - 35.0) < 1e-6 || edge_dist(p.lon - 129.0) < 1e-6 {
                    continue;
                }
                assert_eq!(cell_index(&s, p), brute_force_cell(&s, p), "{p:?}");
            }
        }
    }

    #[test]
    fn single_stationary_record() {
        let s = spec(LatLon::new(35.0, 129.0), 1, 0.1, 1);
        let (t, label) =
            build_grid_sequence::<f64>(&[rec("2021-01-01T00:00:00Z", 35.0, 129.0)], &uniform_weather(5.0), &s, None)
                .unwrap();
        assert!(label.is_none());
        assert_eq!(t.shape, [1, 3, 3, 13]);
        for r in 0..3 {
            for c in 0..3 {
                let expected = if (r, c) == (1, 1) { 1.0 } else { 0.0 };
                assert_eq!(t.get(0, r, c, 0), expected);
            }
        }
    }

    #[test]
    fn two_adjacent_cells() {
        let s = spec(LatLon::new(35.0, 129.0), 1, 0.1, 1);
        let a = rec("2021-01-01T00:00:00Z", 35.02, 129.05);
        let b = rec("2021-01-01T00:10:00Z", 35.02, 129.13);
        assert_eq!(brute_force_cell(&s, a.position()), Some((1, 1)));
        assert_eq!(brute_force_cell(&s, b.position()), Some((1, 2)));
        let (t, _) = build_grid_sequence::<f64>(&[a, b], &uniform_weather(5.0), &s, None).unwrap();
        assert_eq!(t.get(0, 1, 1, 0), 1.0);
        assert_eq!(t.get(0, 1, 2, 0), 1.0);
        assert_eq!(t.occupancy_total(0), 2.0);
    }

    #[test]
    fn uniform_weather_fills_every_cell() {
        let s = spec(LatLon::new(35.0, 129.0), 2, 0.1, 3);
        let traj = [rec("2021-01-01T00:00:00Z", 35.0, 129.0)];
        let (t, _) = build_grid_sequence::<f32>(&traj, &uniform_weather(7.5), &s, None).unwrap();
        let ws = 1 + WeatherChannel::ALL
            .iter()
            .position(|c| *c == WeatherChannel::WindSpeed)
            .unwrap();
        for step in 0..3 {
            for r in 0..5 {
                for c in 0..5 {
                    assert_eq!(t.get(step, r, c, ws), 7.5);
                }
            }
        }
    }

    #[test]
    fn window_and_steps() {
        let mut cfg = GridConfig {
            half_extent_cells: 2,
            cell_size_deg: 0.1,
            t_steps: 2,
            step_minutes: 30,
            ..Default::default()
        };
        let traj = [
            rec("2021-01-01T00:00:00Z", 35.0, 129.0), // exactly at window start: dropped
            rec("2021-01-01T00:10:00Z", 35.0, 129.0),
            rec("2021-01-01T00:30:00Z", 35.0, 129.0),
            rec("2021-01-01T00:31:00Z", 35.0, 129.0),
            rec("2021-01-01T00:40:00Z", 35.0, 129.0),
            rec("2021-01-01T01:00:00Z", 35.0, 129.0),
        ];
        let s = cfg.centered_on(LatLon::new(35.0, 129.0));
        let arrival = parse_timestamp("2021-01-01T02:30:00Z").unwrap();
        let (t, label) = build_grid_sequence::<f64>(&traj, &uniform_weather(1.0), &s, Some(arrival)).unwrap();
        assert_eq!(t.occupancy_total(0), 2.0);
        assert_eq!(t.occupancy_total(1), 3.0);
        assert_eq!(label.unwrap().remaining_minutes, 90.0);

        cfg.occupancy = OccupancyMode::Binary;
        let s = cfg.centered_on(LatLon::new(35.0, 129.0));
        let (t, _) = build_grid_sequence::<f64>(&traj, &uniform_weather(1.0), &s, None).unwrap();
        assert_eq!(t.occupancy_total(1), 1.0);

        let early = parse_timestamp("2021-01-01T00:30:00Z").unwrap();
        assert_eq!(
            build_grid_sequence::<f64>(&traj, &uniform_weather(1.0), &s, Some(early)),
            Err(GridError::ArrivalBeforeWindow)
        );
    }

    #[test]
    fn errors() {
        let s = spec(LatLon::new(35.0, 129.0), 1, 0.1, 1);
        assert_eq!(
            build_grid_sequence::<f64>(&[], &uniform_weather(1.0), &s, None),
            Err(GridError::EmptyTrajectory)
        );
        let bad = spec(LatLon::new(35.0, 129.0), 0, 0.1, 1);
        assert!(matches!(
            build_grid_sequence::<f64>(&[rec("2021-01-01T00:00:00Z", 35.0, 129.0)], &uniform_weather(1.0), &bad, None),
            Err(GridError::SpecMismatch(_))
        ));
    }

    #[test]
    fn forecast_channels_append() {
        let cfg = GridConfig {
            half_extent_cells: 1,
            forecast_steps: 2,
            ..Default::default()
        };
        assert_eq!(cfg.shape(), [8, 3, 3, 1 + 12 * 3]);
        assert_eq!(cfg.channels()[13].name(), "wind_direction_f1");
    }

    #[test]
    fn csv_layout() {
        let s = spec(LatLon::new(35.0, 129.0), 1, 0.1, 1);
        let (t, _) =
            build_grid_sequence::<f64>(&[rec("2021-01-01T00:00:00Z", 35.0, 129.0)], &uniform_weather(5.0), &s, None)
                .unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 9);
        assert!(lines[0].starts_with("t,row,col,occupancy,wind_direction,wind_speed"));
        assert!(lines[5].starts_with("0,1,1,1.0,"));
    }
}
