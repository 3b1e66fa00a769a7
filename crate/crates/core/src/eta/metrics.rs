use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("predictions ({0}) and actuals ({1}) differ in length")]
    LengthMismatch(usize, usize),
    #[error("no samples")]
    Empty,
    #[error("actual value at index {0} is zero; MAPE undefined")]
    ZeroActual(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport<S> {
    pub rmse_minutes: S,
    pub mape_percent: S,
    pub n: usize,
}

/// One JSON row of an evaluation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub predictor_id: String,
    pub rmse_min: f64,
    pub mape_pct: f64,
    pub n: usize,
}

impl MetricRow {
    pub fn new(predictor_id: impl Into<String>, report: &MetricReport<f64>) -> Self {
        Self {
            predictor_id: predictor_id.into(),
            rmse_min: report.rmse_minutes,
            mape_pct: report.mape_percent,
            n: report.n,
        }
    }
}

/// RMSE and MAPE (percent) of `predictions` against `actuals`.
pub fn evaluate<S: Scalar>(predictions: &[S], actuals: &[S]) -> Result<MetricReport<S>, MetricsError> {
    if predictions.len() != actuals.len() {
        return Err(MetricsError::LengthMismatch(predictions.len(), actuals.len()));
    }
    if actuals.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some(i) = actuals.iter().position(|a| a.is_zero()) {
        return Err(MetricsError::ZeroActual(i));
    }
    let n = S::from_usize_lossy(actuals.len());
    let (sq, ape) = predictions
        .iter()
        .zip(actuals)
        .fold((S::zero(), S::zero()), |(sq, ape), (&p, &a)| {
            let e = p - a;
            (sq + e * e, ape + (e / a).abs())
        });
    Ok(MetricReport {
        rmse_minutes: (sq / n).sqrt(),
        mape_percent: S::lit(100.0) * ape / n,
        n: actuals.len(),
    })
}
