use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seed::derive_seed;

use super::{run_scenario, SimConfig, SimError, SimReport, Strategy};

/// Mean outcome of one (rate, strategy) cell over all seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub rta_rate: f64,
    pub strategy: String,
    pub n_seeds: usize,
    pub mean_throughput: f64,
    /// 3600 over the mean throughput, so the pair stays reciprocal.
    pub seconds_per_van: f64,
    pub std_throughput: f64,
    /// Pooled over every delayed vessel of every seed.
    pub mean_punctuality: Option<f64>,
    pub mean_total_waiting_minutes: f64,
    pub mean_emission_proxy: f64,
}

pub const SWEEP_CSV_HEADER: [&str; 9] = [
    "rta_rate",
    "strategy",
    "n_seeds",
    "seconds_per_van",
    "vans_per_crane_hour",
    "std_vans_per_crane_hour",
    "mean_punctuality_minutes",
    "mean_total_waiting_minutes",
    "mean_emission_proxy",
];

/// `n` replicate seeds split from one root seed.
pub fn replicate_seeds(root: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|i| derive_seed(root, "replicate", i)).collect()
}

/// Run every (rate, strategy, seed) cell in parallel. Reports come back
/// grouped by cell in input order, seeds in input order within a cell.
pub fn run_cells(
    base: &SimConfig,
    rates: &[f64],
    strategies: &[Strategy],
    seeds: &[u64],
) -> Result<Vec<Vec<SimReport>>, SimError> {
    if seeds.is_empty() {
        return Err(SimError::EmptySeeds);
    }
    let cells: Vec<SimConfig> = rates
        .iter()
        .flat_map(|&r| strategies.iter().flat_map(move |s| seeds.iter().map(move |&seed| (r, s.clone(), seed))))
        .map(|(r, s, seed)| base.with_rate_strategy(r, s, seed))
        .collect();
    let reports = cells.par_iter().map(run_scenario).collect::<Result<Vec<_>, _>>()?;
    Ok(reports.chunks(seeds.len()).map(<[SimReport]>::to_vec).collect())
}

pub fn summarize(reports: &[SimReport]) -> Result<SweepRow, SimError> {
    let first = reports.first().ok_or(SimError::EmptySeeds)?;
    let n = reports.len() as f64;
    let thr: Vec<f64> = reports.iter().map(|r| r.throughput_vans_per_crane_hour).collect();
    let mean = thr.iter().sum::<f64>() / n;
    let var = thr.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    let (dev_sum, dev_n) = reports
        .iter()
        .filter_map(|r| r.punctuality.as_ref())
        .fold((0.0, 0usize), |(s, k), p| (s + p.mean * p.n as f64, k + p.n));
    Ok(SweepRow {
        rta_rate: first.rta_rate,
        strategy: first.strategy.clone(),
        n_seeds: reports.len(),
        mean_throughput: mean,
        seconds_per_van: 3600.0 / mean,
        std_throughput: var.sqrt(),
        mean_punctuality: (dev_n > 0).then(|| dev_sum / dev_n as f64),
        mean_total_waiting_minutes: reports.iter().map(|r| r.total_waiting_minutes).sum::<f64>() / n,
        mean_emission_proxy: reports.iter().map(|r| r.emission_proxy).sum::<f64>() / n,
    })
}

/// One row per (rate, strategy), rates outermost.
pub fn run_sweep(base: &SimConfig, rates: &[f64], strategies: &[Strategy], seeds: &[u64]) -> Result<Vec<SweepRow>, SimError> {
    run_cells(base, rates, strategies, seeds)?.iter().map(|c| summarize(c)).collect()
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.rta_rate.to_string(),
            r.strategy.clone(),
            r.n_seeds.to_string(),
            format!("{:.4}", r.seconds_per_van),
            format!("{:.4}", r.mean_throughput),
            format!("{:.4}", r.std_throughput),
            r.mean_punctuality.map_or(String::new(), |p| format!("{p:.4}")),
            format!("{:.4}", r.mean_total_waiting_minutes),
            format!("{:.4}", r.mean_emission_proxy),
        ])?;
    }
    w.flush()?;
    Ok(())
}
