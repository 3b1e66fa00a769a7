use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, EtaError, EtaPredictor, KinematicPredictor, KinematicSummary, MetricReport};
use super::{PredictorInput, RidgeGridPredictor, TrainingSample};
use crate::geo::{route_remaining_nm, LatLon};
use crate::grid::{build_grid_sequence, EtaLabel, GridConfig};
use crate::ingest::{generate_traffic, SynthConfig, SynthError, Traffic};
use crate::model::Timestamp;
use crate::seed::derive_seed;
use crate::units::nm_to_km;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleOptions {
    /// Grid layout; each sample's grid is centred on the vessel's latest fix.
    pub grid: GridConfig,
    /// Take every `stride`-th AIS record of a trace as a prediction instant.
    pub stride: usize,
    /// Skip instants closer than this to the destination, nautical miles.
    pub min_remaining_nm: f64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            stride: 3,
            min_remaining_nm: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaSample {
    pub vessel_id: String,
    pub now: Timestamp,
    pub remaining_km: f64,
    pub input: PredictorInput,
    pub label: EtaLabel,
}

impl EtaSample {
    pub fn training(&self) -> TrainingSample {
        TrainingSample {
            input: self.input.clone(),
            label: self.label,
        }
    }
}

/// Remaining-distance filter, `[min_km, max_km)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceBucket {
    pub min_km: f64,
    pub max_km: f64,
}

impl DistanceBucket {
    pub fn contains(&self, km: f64) -> bool {
        km >= self.min_km && km < self.max_km
    }
}

/// Labelled samples for every voyage with a known arrival, in voyage order.
pub fn build_samples(traffic: &Traffic, opts: &SampleOptions) -> Result<Vec<EtaSample>, EtaError> {
    let stride = opts.stride.max(1);
    let per_voyage: Vec<Result<Vec<EtaSample>, EtaError>> = traffic
        .voyages
        .par_iter()
        .map(|voyage| {
            let Some(arrival) = traffic.arrival_of(&voyage.vessel_id) else {
                return Ok(Vec::new());
            };
            let trace = traffic.trace_of(&voyage.vessel_id);
            let mut out = Vec::new();
            for i in (0..trace.len()).step_by(stride) {
                let fix = &trace[i];
                if fix.timestamp >= arrival || fix.sog <= 0.0 {
                    continue;
                }
                let pos = LatLon::new(fix.lat, fix.lon);
                let remaining_nm = route_remaining_nm(&voyage.route, pos)?;
                if remaining_nm < opts.min_remaining_nm {
                    continue;
                }
                let spec = opts.grid.centered_on(pos);
                let (tensor, label) =
                    build_grid_sequence::<f64>(&trace[..=i], &traffic.weather, &spec, Some(arrival))?;
                out.push(EtaSample {
                    vessel_id: voyage.vessel_id.clone(),
                    now: fix.timestamp,
                    remaining_km: nm_to_km(remaining_nm),
                    input: PredictorInput {
                        tensor,
                        summary: KinematicSummary {
                            remaining_nm,
                            recent_sog: fix.sog,
                        },
                    },
                    label: label.expect("arrival supplied"),
                });
            }
            Ok(out)
        })
        .collect();
    let mut samples = Vec::new();
    for v in per_voyage {
        samples.extend(v?);
    }
    Ok(samples)
}

/// Predictions clamped at zero, scored against labels.
pub fn evaluate_predictor(
    predictor: &dyn EtaPredictor,
    samples: &[EtaSample],
    bucket: Option<DistanceBucket>,
) -> Result<MetricReport<f64>, EtaError> {
    let chosen: Vec<&EtaSample> = samples
        .iter()
        .filter(|s| bucket.is_none_or(|b| b.contains(s.remaining_km)))
        .collect();
    let preds = chosen
        .iter()
        .map(|s| predictor.predict_minutes(&s.input).map(|m| m.max(0.0)))
        .collect::<Result<Vec<_>, _>>()?;
    let actuals: Vec<f64> = chosen.iter().map(|s| s.label.remaining_minutes).collect();
    Ok(evaluate(&preds, &actuals)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub traffic: SynthConfig,
    pub samples: SampleOptions,
    /// Ridge penalties tried by cross-validation.
    pub lambdas: Vec<f64>,
    /// Independent fleets pooled for training; one more is drawn for testing.
    pub train_fleets: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            traffic: SynthConfig::default(),
            samples: SampleOptions::default(),
            lambdas: RidgeGridPredictor::default().lambdas,
            train_fleets: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub seed: u64,
    pub kinematic: MetricReport<f64>,
    pub reference: MetricReport<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchmarkError {
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Eta(#[from] EtaError),
}

/// Fit the reference predictor on one synthetic fleet and score both
/// predictors on an independent fleet drawn from the same configuration.
pub fn run_benchmark(cfg: &BenchmarkConfig, seed: u64) -> Result<BenchmarkResult, BenchmarkError> {
    let fleet = |index| {
        let mut t = cfg.traffic.clone();
        t.seed = derive_seed(seed, "eta-benchmark", index);
        generate_traffic(&t)
    };
    let mut train = Vec::new();
    for i in 0..cfg.train_fleets.max(1) {
        train.extend(build_samples(&fleet(i as u64 + 1)?, &cfg.samples)?);
    }
    let test = build_samples(&fleet(0)?, &cfg.samples)?;
    let mut reference = RidgeGridPredictor::new(cfg.lambdas.clone());
    let training: Vec<TrainingSample> = train.iter().map(EtaSample::training).collect();
    reference.fit(&training)?;
    Ok(BenchmarkResult {
        seed,
        kinematic: evaluate_predictor(&KinematicPredictor, &test, None)?,
        reference: evaluate_predictor(&reference, &test, None)?,
    })
}
