use serde::{Deserialize, Serialize};

use super::{run_cells, summarize, SimConfig, SimError, Strategy};

/// Mean throughput a calibrated configuration should reproduce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTarget {
    pub rta_rate: f64,
    pub strategy: Strategy,
    pub throughput: f64,
}

/// Published endpoint throughputs, vans per crane-hour.
pub fn endpoint_targets() -> Vec<CalibrationTarget> {
    let t = |rta_rate, strategy, throughput| CalibrationTarget {
        rta_rate,
        strategy,
        throughput,
    };
    vec![
        t(0.05, Strategy::WithoutPrediction, 27.77),
        t(0.30, Strategy::WithoutPrediction, 26.82),
        t(0.05, Strategy::with_noisy_oracle(), 27.96),
        t(0.30, Strategy::with_noisy_oracle(), 27.67),
    ]
}

/// Candidate values; the delay moments stay fixed at the configured ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationGrid {
    pub handling_seconds_per_van: Vec<f64>,
    pub arrivals_per_day: Vec<f64>,
}

impl Default for CalibrationGrid {
    fn default() -> Self {
        Self {
            handling_seconds_per_van: (0..=24).map(|i| 126.0 + 0.25 * i as f64).collect(),
            arrivals_per_day: vec![4.5, 5.0, 5.5, 6.0, 6.5, 7.0, 7.5, 8.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedTarget {
    pub target: CalibrationTarget,
    pub achieved: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub config: SimConfig,
    /// Sum of squared relative errors over the targets.
    pub objective: f64,
    pub fitted: Vec<FittedTarget>,
    pub candidates_evaluated: usize,
    pub seeds: Vec<u64>,
}

fn fit(cfg: &SimConfig, targets: &[CalibrationTarget], seeds: &[u64]) -> Result<Vec<FittedTarget>, SimError> {
    targets
        .iter()
        .map(|t| {
            let cells = run_cells(cfg, &[t.rta_rate], std::slice::from_ref(&t.strategy), seeds)?;
            let achieved = summarize(&cells[0])?.mean_throughput;
            Ok(FittedTarget {
                target: t.clone(),
                achieved,
                relative_error: (achieved - t.throughput) / t.throughput,
            })
        })
        .collect()
}

/// Exhaustive grid search. Ties keep the earlier candidate, so the result
/// depends only on the inputs.
pub fn calibrate(
    base: &SimConfig,
    grid: &CalibrationGrid,
    targets: &[CalibrationTarget],
    seeds: &[u64],
) -> Result<CalibrationResult, SimError> {
    if seeds.is_empty() {
        return Err(SimError::EmptySeeds);
    }
    if targets.is_empty() || grid.handling_seconds_per_van.is_empty() || grid.arrivals_per_day.is_empty() {
        return Err(SimError::InvalidConfig("calibration needs targets and a non-empty grid".into()));
    }
    let mut best: Option<(f64, SimConfig, Vec<FittedTarget>)> = None;
    let mut evaluated = 0;
    for &h in &grid.handling_seconds_per_van {
        for &a in &grid.arrivals_per_day {
            let mut cfg = base.clone();
            cfg.handling_seconds_per_van = h;
            cfg.schedule.arrivals_per_day = a;
            cfg.validate()?;
            let fitted = fit(&cfg, targets, seeds)?;
            evaluated += 1;
            let objective: f64 = fitted.iter().map(|f| f.relative_error.powi(2)).sum();
            if best.as_ref().is_none_or(|(b, _, _)| objective < *b) {
                best = Some((objective, cfg, fitted));
            }
        }
    }
    let (objective, config, fitted) = best.expect("grid is not empty");
    Ok(CalibrationResult {
        config,
        objective,
        fitted,
        candidates_evaluated: evaluated,
        seeds: seeds.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_the_closer_handling_time() {
        let mut base = SimConfig::default();
        base.schedule.days = 4.0;
        let grid = CalibrationGrid {
            handling_seconds_per_van: vec![100.0, 128.0, 160.0],
            arrivals_per_day: vec![7.0],
        };
        let targets = [CalibrationTarget {
            rta_rate: 0.0,
            strategy: Strategy::WithoutPrediction,
            throughput: 3600.0 / 128.0,
        }];
        let r = calibrate(&base, &grid, &targets, &[1, 2, 3]).unwrap();
        assert_eq!(r.config.handling_seconds_per_van, 128.0);
        assert_eq!(r.candidates_evaluated, 3);
        assert!(calibrate(&base, &grid, &targets, &[]).is_err());
    }
}
