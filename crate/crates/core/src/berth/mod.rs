//! Discrete-berth planning: greedy first-fit, ETA-driven re-planning and an
//! exhaustive oracle for small instances.
//!
//! Objective throughout is total waiting, the sum of `service_start - eta`.

mod greedy;
mod oracle;
mod validate;

pub use greedy::{build_initial_plan, build_plan_for_calls, replan_on_eta_update, replan_lenient, PastEtaWarning};
pub use oracle::{brute_force_optimal, brute_force_for_calls, ORACLE_MAX_BERTHS, ORACLE_MAX_VESSELS};
pub use validate::{validate_plan, PlanViolation};

use std::collections::BTreeMap;

use chrono::Duration;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Timestamp, Voyage};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Berth {
    pub berth_id: String,
    /// Most quay cranes that can work a vessel at this berth.
    pub crane_slots: u32,
}

impl Berth {
    pub fn new(berth_id: impl Into<String>, crane_slots: u32) -> Self {
        Self {
            berth_id: berth_id.into(),
            crane_slots,
        }
    }
}

/// `n` identical berths named `B1..Bn`.
pub fn homogeneous_berths(n: usize, crane_slots: u32) -> Vec<Berth> {
    (1..=n).map(|i| Berth::new(format!("B{i}"), crane_slots)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BerthAssignment {
    #[serde(rename = "vessel")]
    pub vessel_id: String,
    #[serde(rename = "berth")]
    pub berth_id: String,
    #[serde(rename = "start")]
    pub service_start: Timestamp,
    #[serde(rename = "end")]
    pub service_end: Timestamp,
    #[serde(rename = "cranes")]
    pub cranes_assigned: u32,
}

impl BerthAssignment {
    pub fn waiting_minutes(&self, eta: Timestamp) -> f64 {
        (self.service_start - eta).num_microseconds().unwrap_or(i64::MAX) as f64 / 6.0e7
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanParams {
    pub berths: Vec<Berth>,
    pub crane_pool: u32,
    /// Vans per crane-hour.
    pub handling_rate: f64,
    /// Cranes requested per vessel; capped by the berth's slots and the pool.
    pub cranes_per_vessel: u32,
    /// Services must finish by this instant when set.
    #[serde(default)]
    pub horizon_end: Option<Timestamp>,
}

impl Default for PlanParams {
    fn default() -> Self {
        Self {
            berths: homogeneous_berths(6, 2),
            crane_pool: 15,
            handling_rate: 28.0,
            cranes_per_vessel: 2,
            horizon_end: None,
        }
    }
}

impl PlanParams {
    pub fn validate(&self) -> Result<(), PlanError> {
        if self.berths.is_empty() {
            return Err(PlanError::NoBerths);
        }
        if self.crane_pool == 0 {
            return Err(PlanError::InvalidParameter("crane_pool must be >= 1".into()));
        }
        if self.cranes_per_vessel == 0 {
            return Err(PlanError::InvalidParameter("cranes_per_vessel must be >= 1".into()));
        }
        if !(self.handling_rate > 0.0 && self.handling_rate.is_finite()) {
            return Err(PlanError::InvalidParameter("handling_rate must be positive".into()));
        }
        if let Some(b) = self.berths.iter().find(|b| b.crane_slots == 0) {
            return Err(PlanError::InvalidParameter(format!("berth {} has no crane slots", b.berth_id)));
        }
        let mut ids: Vec<&str> = self.berths.iter().map(|b| b.berth_id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(PlanError::InvalidParameter("duplicate berth id".into()));
        }
        Ok(())
    }

    pub fn cranes_at(&self, berth: usize) -> u32 {
        self.cranes_per_vessel
            .min(self.berths[berth].crane_slots)
            .min(self.crane_pool)
    }

    /// True when every berth working at once cannot exhaust the pool.
    pub fn pool_is_slack(&self) -> bool {
        (0..self.berths.len()).map(|b| self.cranes_at(b)).sum::<u32>() <= self.crane_pool
    }

    /// `van_count / (cranes * rate)` hours, to the microsecond.
    pub fn service_duration(&self, van_count: u32, cranes: u32) -> Duration {
        let hours = van_count as f64 / (cranes as f64 * self.handling_rate);
        Duration::microseconds((hours * 3.6e9).round() as i64)
    }
}

/// What the planner needs to know about one vessel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VesselCall {
    pub vessel_id: String,
    pub eta: Timestamp,
    pub van_count: u32,
}

impl From<&Voyage> for VesselCall {
    fn from(v: &Voyage) -> Self {
        Self {
            vessel_id: v.vessel_id.clone(),
            eta: v.promised_eta,
            van_count: v.van_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerthPlan {
    pub plan_version: u64,
    /// Ordered by start, then berth, then vessel.
    pub assignments: Vec<BerthAssignment>,
    /// Believed ETA of every known vessel, including those with nothing to handle.
    pub eta_map: BTreeMap<String, Timestamp>,
    pub van_counts: BTreeMap<String, u32>,
    pub params: PlanParams,
}

impl BerthPlan {
    pub fn assignment(&self, vessel_id: &str) -> Option<&BerthAssignment> {
        self.assignments.iter().find(|a| a.vessel_id == vessel_id)
    }

    pub fn total_waiting_minutes(&self) -> f64 {
        self.assignments
            .iter()
            .map(|a| a.waiting_minutes(self.eta_map[&a.vessel_id]))
            .sum()
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub(crate) fn berth_index(&self, berth_id: &str) -> Option<usize> {
        self.params.berths.iter().position(|b| b.berth_id == berth_id)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("no berths configured")]
    NoBerths,
    #[error("invalid planning parameter: {0}")]
    InvalidParameter(String),
    #[error("vessel {0} appears more than once")]
    DuplicateVessel(String),
    #[error("no feasible slot for vessel {0} within the horizon")]
    InfeasibleVessel(String),
    #[error("unknown vessel {0}")]
    UnknownVessel(String),
    #[error("vessel {0} is already in service and cannot be moved")]
    AlreadyStarted(String),
    #[error("new ETA {new_eta} for vessel {vessel_id} is before the planning instant {now}")]
    PastEta {
        vessel_id: String,
        new_eta: Timestamp,
        now: Timestamp,
    },
    #[error("instance too large for exhaustive search ({vessels} vessels, {berths} berths)")]
    TooLarge { vessels: usize, berths: usize },
}
