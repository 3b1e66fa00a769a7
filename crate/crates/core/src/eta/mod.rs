//! Delay (RTA) detection, ETA prediction and prediction-error metrics.

mod dataset;
mod metrics;
mod predictor;
mod rta;

pub use dataset::{
    build_samples, evaluate_predictor, run_benchmark, BenchmarkConfig, BenchmarkError, BenchmarkResult,
    DistanceBucket, EtaSample, SampleOptions,
};
pub use metrics::{evaluate, MetricReport, MetricRow, MetricsError};
pub use predictor::{
    make_predictor, predict_eta_kinematic, predict_eta_model, EtaPrediction, EtaPredictor,
    KinematicPredictor, KinematicSummary, PredictorInput, RidgeGridPredictor, RidgeState,
    TrainingSample, KINEMATIC_ID, PREDICTOR_IDS, RIDGE_ID,
};
pub use rta::{detect_rta, detect_rta_with_bound, RtaStatus};

use thiserror::Error;

use crate::geo::GeoError;
use crate::grid::GridError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EtaError {
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("vessel is stationary; no kinematic ETA")]
    ZeroSpeed,
    #[error("tensor shape {found:?} does not match trained shape {expected:?}")]
    ShapeMismatch {
        expected: [usize; 4],
        found: [usize; 4],
    },
    #[error("predictor has not been fitted")]
    NotFitted,
    #[error("no training samples")]
    NoTrainingData,
    #[error("unknown predictor `{id}`; available: {}", available.join(", "))]
    UnknownPredictor { id: String, available: Vec<String> },
    #[error("least-squares system is singular")]
    Singular,
    #[error("predictor state: {0}")]
    State(String),
}
