//! Seeded discrete-event simulation of berth and quay-crane operations.

mod calibrate;
mod config;
mod engine;
mod queue;
mod report;
mod stats;
mod svg;
mod sweep;

pub use calibrate::{calibrate, endpoint_targets, CalibrationGrid, CalibrationResult, CalibrationTarget, FittedTarget};
pub use svg::waiting_chart_svg;
pub use config::{
    generate_schedule, schedule_for, DelayFamily, DelayModel, EmissionParams, NoisyOracle, ScheduleSpec, SimConfig,
    Strategy, NOISY_ORACLE_ID,
};
pub use engine::{run_scenario, run_simulation};
pub use queue::{Event, EventKind, EventQueue};
pub use sweep::{replicate_seeds, run_cells, run_sweep, summarize, write_sweep_csv, SweepRow, SWEEP_CSV_HEADER};
pub use report::{write_reports_csv, SimReport, VesselOutcome, REPORT_CSV_HEADER};
pub use stats::{
    emission_proxy, punctuality_stats, revenue_analysis, waiting_time_report, PunctualityStats, RevenueRow,
    StatsError, WaitingReport, WaitingRow,
};

use crate::berth::PlanError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("unknown predictor '{0}'")]
    UnknownPredictor(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("initial plan is not usable: {0}")]
    InfeasiblePlan(String),
    #[error("schedule has no vessels")]
    EmptySchedule,
    #[error("no vessel completed service within the horizon")]
    NothingServed,
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("seed list is empty")]
    EmptySeeds,
}
