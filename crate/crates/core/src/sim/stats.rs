use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("no values")]
    Empty,
    #[error("leg {index} has distance but no positive speed")]
    ZeroSpeedLeg { index: usize },
    #[error("vessel sets differ: {0}")]
    MismatchedVessels(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PunctualityStats<S> {
    pub mean: S,
    /// Lower middle value for an even count.
    pub median: S,
    /// Population standard deviation.
    pub std: S,
    pub n: usize,
}

pub fn punctuality_stats<S: Scalar>(deviations: &[S]) -> Result<PunctualityStats<S>, StatsError> {
    if deviations.is_empty() {
        return Err(StatsError::Empty);
    }
    let n = deviations.len();
    let nf = S::from_usize_lossy(n);
    let mean = deviations.iter().copied().sum::<S>() / nf;
    let var = deviations.iter().map(|&d| (d - mean) * (d - mean)).sum::<S>() / nf;
    let mut sorted = deviations.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(PunctualityStats {
        mean,
        median: sorted[(n - 1) / 2],
        std: var.sqrt(),
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevenueRow<S> {
    pub cranes: u32,
    pub daily_without: S,
    pub daily_with: S,
    pub day_diff: S,
    pub year_diff: S,
    pub revenue: S,
}

/// Extra vans and their value when each of `cranes` cranes handles
/// `thr_with` instead of `thr_without` vans per hour.
pub fn revenue_analysis<S: Scalar>(
    thr_without: S,
    thr_with: S,
    cranes: impl IntoIterator<Item = u32>,
    hours_per_day: S,
    days: S,
    value_per_van: S,
) -> Vec<RevenueRow<S>> {
    cranes
        .into_iter()
        .map(|k| {
            let ks = S::lit(k as f64);
            let daily_without = thr_without * hours_per_day * ks;
            let daily_with = thr_with * hours_per_day * ks;
            let day_diff = daily_with - daily_without;
            let year_diff = day_diff * days;
            RevenueRow {
                cranes: k,
                daily_without,
                daily_with,
                day_diff,
                year_diff,
                revenue: year_diff * value_per_van,
            }
        })
        .collect()
}

/// Fuel for sailing legs `(distance_nm, speed_knots)` under a cubic power
/// law plus hotel load while waiting.
pub fn emission_proxy<S: Scalar>(legs: &[(S, S)], waiting_minutes: S, hotel_rate: S, k_cubic: S) -> Result<S, StatsError> {
    let mut sailing = S::zero();
    for (index, &(d, v)) in legs.iter().enumerate() {
        if d == S::zero() {
            continue;
        }
        if !(v > S::zero()) {
            return Err(StatsError::ZeroSpeedLeg { index });
        }
        sailing = sailing + k_cubic * d * v * v;
    }
    Ok(sailing + hotel_rate * waiting_minutes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaitingRow<S> {
    pub vessel_id: String,
    pub without_minutes: S,
    pub with_minutes: S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaitingReport<S> {
    /// Ordered by vessel id.
    pub rows: Vec<WaitingRow<S>>,
    pub total_without: S,
    pub total_with: S,
    /// `100 * (without - with) / without`; zero when nobody waited without prediction.
    pub reduction_percent: S,
}

/// Per-vessel anchorage waiting under both strategies.
pub fn waiting_time_report<S: Scalar>(
    without: &[(String, S)],
    with: &[(String, S)],
) -> Result<WaitingReport<S>, StatsError> {
    if without.is_empty() && with.is_empty() {
        return Err(StatsError::Empty);
    }
    let a: BTreeMap<&str, S> = without.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let b: BTreeMap<&str, S> = with.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    if a.len() != without.len() || b.len() != with.len() {
        return Err(StatsError::MismatchedVessels("duplicate vessel id".into()));
    }
    if let Some(k) = a.keys().find(|k| !b.contains_key(*k)).or_else(|| b.keys().find(|k| !a.contains_key(*k))) {
        return Err(StatsError::MismatchedVessels(format!("{k} is not in both sets")));
    }
    let rows: Vec<WaitingRow<S>> = a
        .iter()
        .map(|(k, &w)| WaitingRow {
            vessel_id: k.to_string(),
            without_minutes: w,
            with_minutes: b[k],
        })
        .collect();
    let total_without = rows.iter().map(|r| r.without_minutes).sum::<S>();
    let total_with = rows.iter().map(|r| r.with_minutes).sum::<S>();
    let reduction_percent = if total_without > S::zero() {
        S::lit(100.0) * (total_without - total_with) / total_without
    } else {
        S::zero()
    };
    Ok(WaitingReport {
        rows,
        total_without,
        total_with,
        reduction_percent,
    })
}
