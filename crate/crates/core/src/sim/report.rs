use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{PunctualityStats, SimConfig};
use crate::model::Timestamp;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VesselOutcome {
    pub vessel_id: String,
    pub van_count: u32,
    pub rta: bool,
    pub promised_eta: Timestamp,
    /// ETA the port last believed before arrival.
    pub believed_eta: Timestamp,
    pub actual_arrival: Timestamp,
    pub berth: Option<String>,
    pub service_start: Option<Timestamp>,
    pub service_end: Option<Timestamp>,
    pub anchorage_minutes: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub seed: u64,
    pub rta_rate: f64,
    pub strategy: String,
    pub throughput_vans_per_crane_hour: f64,
    pub effective_seconds_per_van: f64,
    /// |actual arrival - believed ETA| over delayed vessels, minutes.
    pub punctuality: Option<PunctualityStats<f64>>,
    pub total_waiting_minutes: f64,
    pub emission_proxy: f64,
    pub vans_handled: u64,
    pub vans_scheduled: u64,
    pub vessels_served: usize,
    pub backlog_vessels: usize,
    pub rta_vessels: usize,
    pub replans: usize,
    pub charged_crane_hours: f64,
    pub idle_crane_hours: f64,
    pub vessels: Vec<VesselOutcome>,
    pub config: SimConfig,
}

pub const REPORT_CSV_HEADER: [&str; 17] = [
    "seed",
    "rta_rate",
    "strategy",
    "throughput_vans_per_crane_hour",
    "effective_seconds_per_van",
    "punctuality_mean",
    "punctuality_median",
    "punctuality_std",
    "total_waiting_minutes",
    "emission_proxy",
    "vans_handled",
    "vans_scheduled",
    "vessels_served",
    "backlog_vessels",
    "rta_vessels",
    "replans",
    "idle_crane_hours",
];

impl SimReport {
    /// Anchorage waiting of every served vessel, by vessel id.
    pub fn anchorage_waiting(&self) -> Vec<(String, f64)> {
        self.vessels
            .iter()
            .filter_map(|v| v.anchorage_minutes.map(|m| (v.vessel_id.clone(), m)))
            .collect()
    }

    pub fn csv_row(&self) -> Vec<String> {
        let p = |f: fn(&PunctualityStats<f64>) -> f64| self.punctuality.as_ref().map_or(String::new(), |s| f(s).to_string());
        vec![
            self.seed.to_string(),
            self.rta_rate.to_string(),
            self.strategy.clone(),
            self.throughput_vans_per_crane_hour.to_string(),
            self.effective_seconds_per_van.to_string(),
            p(|s| s.mean),
            p(|s| s.median),
            p(|s| s.std),
            self.total_waiting_minutes.to_string(),
            self.emission_proxy.to_string(),
            self.vans_handled.to_string(),
            self.vans_scheduled.to_string(),
            self.vessels_served.to_string(),
            self.backlog_vessels.to_string(),
            self.rta_vessels.to_string(),
            self.replans.to_string(),
            self.idle_crane_hours.to_string(),
        ]
    }
}

pub fn write_reports_csv<W: Write>(out: W, reports: &[SimReport]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_CSV_HEADER)?;
    for r in reports {
        w.write_record(r.csv_row())?;
    }
    w.flush()?;
    Ok(())
}
