use chrono::Duration;
use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::berth::{homogeneous_berths, PlanParams, VesselCall};
use crate::model::{parse_timestamp, Timestamp};
use crate::seed::rng_for;

pub const NOISY_ORACLE_ID: &str = "noisy-oracle";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Strategy {
    /// The initial plan is kept; cranes wait for late vessels.
    WithoutPrediction,
    /// A revised ETA is predicted when the delay becomes known and the plan is rebuilt.
    WithPrediction { predictor_id: String },
}

impl Strategy {
    pub fn with_noisy_oracle() -> Self {
        Strategy::WithPrediction {
            predictor_id: NOISY_ORACLE_ID.to_string(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Strategy::WithoutPrediction => "without",
            Strategy::WithPrediction { .. } => "with",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelayFamily {
    Lognormal,
}

/// Arrival delay of a vessel that misses its promised ETA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayModel {
    pub family: DelayFamily,
    pub mean_minutes: f64,
    /// Standard deviation, minutes.
    pub std_minutes: f64,
}

impl Default for DelayModel {
    fn default() -> Self {
        Self {
            family: DelayFamily::Lognormal,
            mean_minutes: 121.9,
            std_minutes: 265.1,
        }
    }
}

impl DelayModel {
    pub fn distribution(&self) -> Result<LogNormal<f64>, SimError> {
        if !(self.mean_minutes > 0.0 && self.std_minutes >= 0.0) {
            return Err(SimError::InvalidConfig("delay mean must be > 0 and std >= 0".into()));
        }
        let s2 = (1.0 + (self.std_minutes / self.mean_minutes).powi(2)).ln();
        let mu = self.mean_minutes.ln() - s2 / 2.0;
        LogNormal::new(mu, s2.sqrt()).map_err(|e| SimError::InvalidConfig(e.to_string()))
    }
}

/// Stand-in predictor: the true remaining time scaled by `1 + e`, with `e`
/// normal and `E|e|` equal to `mape_percent / 100`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoisyOracle {
    pub mape_percent: f64,
}

impl Default for NoisyOracle {
    fn default() -> Self {
        Self { mape_percent: 7.0 }
    }
}

impl NoisyOracle {
    pub fn sigma(&self) -> f64 {
        self.mape_percent / 100.0 * (std::f64::consts::PI / 2.0).sqrt()
    }
}

/// Poisson arrivals with van counts uniform on `mean * (1 ± spread)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSpec {
    pub start: Timestamp,
    pub days: f64,
    pub arrivals_per_day: f64,
    pub mean_van_count: f64,
    pub van_count_spread: f64,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self {
            start: parse_timestamp("2021-01-01T00:00:00Z").expect("valid literal"),
            days: 30.0,
            arrivals_per_day: 7.0,
            mean_van_count: 800.0,
            van_count_spread: 0.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmissionParams {
    pub approach_nm: f64,
    pub approach_speed_knots: f64,
    /// Fuel units per minute at anchorage.
    pub hotel_rate: f64,
    pub k_cubic: f64,
}

impl Default for EmissionParams {
    fn default() -> Self {
        Self {
            approach_nm: 20.0,
            approach_speed_knots: 12.0,
            hotel_rate: 0.1,
            k_cubic: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub rta_rate: f64,
    pub strategy: Strategy,
    pub delay: DelayModel,
    pub predictor: NoisyOracle,
    /// How long before the promised ETA a delay becomes known.
    pub detection_lead_minutes: f64,
    pub handling_seconds_per_van: f64,
    pub n_berths: usize,
    pub crane_slots_per_berth: u32,
    pub cranes_per_vessel: u32,
    /// Cranes available for planning.
    pub crane_pool: u32,
    /// Cranes in operation, alternating day by day from a seed-chosen phase.
    pub active_cranes: [u32; 2],
    pub schedule: ScheduleSpec,
    /// Explicit schedule; replaces the synthetic one when present.
    pub vessels: Option<Vec<VesselCall>>,
    pub emission: EmissionParams,
    /// Events later than `schedule.start + horizon` are not processed.
    pub horizon_hours: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            rta_rate: 0.3,
            strategy: Strategy::WithoutPrediction,
            delay: DelayModel::default(),
            predictor: NoisyOracle::default(),
            detection_lead_minutes: 240.0,
            handling_seconds_per_van: 128.7,
            n_berths: 6,
            crane_slots_per_berth: 2,
            cranes_per_vessel: 2,
            crane_pool: 15,
            active_cranes: [13, 14],
            schedule: ScheduleSpec::default(),
            vessels: None,
            emission: EmissionParams::default(),
            horizon_hours: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if !(0.0..=1.0).contains(&self.rta_rate) {
            return bad("rta_rate must be in [0, 1]");
        }
        if !(self.handling_seconds_per_van > 0.0) {
            return bad("handling_seconds_per_van must be > 0");
        }
        if self.detection_lead_minutes < 0.0 {
            return bad("detection_lead_minutes must be >= 0");
        }
        if self.predictor.mape_percent < 0.0 {
            return bad("predictor mape_percent must be >= 0");
        }
        if self.active_cranes.iter().any(|&c| c == 0 || c > self.crane_pool) {
            return bad("active_cranes must be in 1..=crane_pool");
        }
        if let Strategy::WithPrediction { predictor_id } = &self.strategy {
            if predictor_id != NOISY_ORACLE_ID {
                return Err(SimError::UnknownPredictor(predictor_id.clone()));
            }
        }
        let s = &self.schedule;
        if self.vessels.is_none()
            && !(s.days > 0.0 && s.arrivals_per_day > 0.0 && s.mean_van_count > 0.0 && (0.0..1.0).contains(&s.van_count_spread))
        {
            return bad("schedule needs positive days, arrivals and vans, spread in [0, 1)");
        }
        self.delay.distribution()?;
        self.plan_params().validate().map_err(SimError::Plan)?;
        Ok(())
    }

    /// Vans per crane-hour at the baseline handling time.
    pub fn handling_rate(&self) -> f64 {
        3600.0 / self.handling_seconds_per_van
    }

    pub fn plan_params(&self) -> PlanParams {
        PlanParams {
            berths: homogeneous_berths(self.n_berths, self.crane_slots_per_berth),
            crane_pool: self.crane_pool,
            handling_rate: self.handling_rate(),
            cranes_per_vessel: self.cranes_per_vessel,
            horizon_end: None,
        }
    }

    pub fn with_rate_strategy(&self, rate: f64, strategy: Strategy, seed: u64) -> Self {
        Self {
            seed,
            rta_rate: rate,
            strategy,
            ..self.clone()
        }
    }
}

/// The explicit schedule when given, else a synthetic one from the seed.
/// The synthetic schedule does not depend on the rate or the strategy.
pub fn schedule_for(cfg: &SimConfig) -> Vec<VesselCall> {
    match &cfg.vessels {
        Some(v) => v.clone(),
        None => generate_schedule(&cfg.schedule, cfg.seed),
    }
}

pub fn generate_schedule(spec: &ScheduleSpec, seed: u64) -> Vec<VesselCall> {
    let mut rng = rng_for(seed, "schedule", 0);
    let gap = Exp::new(spec.arrivals_per_day / 24.0).expect("positive rate");
    let lo = spec.mean_van_count * (1.0 - spec.van_count_spread);
    let hi = spec.mean_van_count * (1.0 + spec.van_count_spread);
    let mut out = Vec::new();
    let mut hours = gap.sample(&mut rng);
    while hours < spec.days * 24.0 {
        let vans = rng.gen_range(lo..=hi).round().max(1.0) as u32;
        out.push(VesselCall {
            vessel_id: format!("V{:04}", out.len() + 1),
            eta: spec.start + Duration::microseconds((hours * 3.6e9).round() as i64),
            van_count: vans,
        });
        hours += gap.sample(&mut rng);
    }
    out
}
