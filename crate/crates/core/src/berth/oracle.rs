use std::collections::BTreeMap;

use super::greedy::{service_duration, Occupancy};
use super::{BerthAssignment, BerthPlan, PlanError, PlanParams, VesselCall};
use crate::model::{Timestamp, Voyage};

pub const ORACLE_MAX_VESSELS: usize = 8;
pub const ORACLE_MAX_BERTHS: usize = 2;

/// Minimum total waiting over all vessel orders and berth choices, using
/// promised ETAs.
pub fn brute_force_optimal(voyages: &[Voyage], params: &PlanParams) -> Result<BerthPlan, PlanError> {
    let calls: Vec<VesselCall> = voyages.iter().map(VesselCall::from).collect();
    brute_force_for_calls(&calls, params)
}

/// Every order of the vessels is tried with every berth choice; each vessel
/// goes after the last service on its berth as early as the crane pool
/// allows. Some optimal schedule is always reached this way. The first
/// optimum in id order wins ties.
pub fn brute_force_for_calls(calls: &[VesselCall], params: &PlanParams) -> Result<BerthPlan, PlanError> {
    params.validate()?;
    let mut eta_map = BTreeMap::new();
    let mut van_counts = BTreeMap::new();
    for c in calls {
        if eta_map.insert(c.vessel_id.clone(), c.eta).is_some() {
            return Err(PlanError::DuplicateVessel(c.vessel_id.clone()));
        }
        van_counts.insert(c.vessel_id.clone(), c.van_count);
    }
    let mut work: Vec<&VesselCall> = calls.iter().filter(|c| c.van_count > 0).collect();
    work.sort_by(|a, b| a.vessel_id.cmp(&b.vessel_id));
    if work.len() > ORACLE_MAX_VESSELS || params.berths.len() > ORACLE_MAX_BERTHS {
        return Err(PlanError::TooLarge {
            vessels: work.len(),
            berths: params.berths.len(),
        });
    }

    let mut search = Search {
        params,
        calls: &work,
        occ: Occupancy::new(params),
        stack: Vec::new(),
        best: None,
    };
    search.dfs(0, 0);
    let mut assignments = match search.best {
        Some((_, a)) => a,
        None if work.is_empty() => Vec::new(),
        None => return Err(PlanError::InfeasibleVessel(work[0].vessel_id.clone())),
    };
    let berth_of = |id: &str| params.berths.iter().position(|b| b.berth_id == id);
    assignments.sort_by(|a, b| {
        (a.service_start, berth_of(&a.berth_id), &a.vessel_id).cmp(&(b.service_start, berth_of(&b.berth_id), &b.vessel_id))
    });
    Ok(BerthPlan {
        plan_version: 0,
        assignments,
        eta_map,
        van_counts,
        params: params.clone(),
    })
}

struct Search<'a> {
    params: &'a PlanParams,
    calls: &'a [&'a VesselCall],
    occ: Occupancy<'a>,
    stack: Vec<BerthAssignment>,
    /// Total waiting in microseconds and the assignments reaching it.
    best: Option<(i64, Vec<BerthAssignment>)>,
}

impl Search<'_> {
    fn dfs(&mut self, placed: u32, waiting_us: i64) {
        if self.best.as_ref().is_some_and(|(b, _)| waiting_us >= *b) {
            return;
        }
        if self.stack.len() == self.calls.len() {
            self.best = Some((waiting_us, self.stack.clone()));
            return;
        }
        for (i, call) in self.calls.iter().enumerate() {
            if placed & (1 << i) != 0 {
                continue;
            }
            for b in 0..self.params.berths.len() {
                let cranes = self.params.cranes_at(b);
                let dur = service_duration(self.params, call.van_count, cranes);
                let earliest: Timestamp = self.occ.berth_end(b).map_or(call.eta, |e| e.max(call.eta));
                let start = self.occ.earliest_on_berth(b, earliest, dur, cranes);
                if self.params.horizon_end.is_some_and(|h| start + dur > h) {
                    continue;
                }
                let wait = (start - call.eta).num_microseconds().expect("waiting fits i64");
                self.occ.add(b, start, start + dur, cranes);
                self.stack.push(BerthAssignment {
                    vessel_id: call.vessel_id.clone(),
                    berth_id: self.params.berths[b].berth_id.clone(),
                    service_start: start,
                    service_end: start + dur,
                    cranes_assigned: cranes,
                });
                self.dfs(placed | (1 << i), waiting_us + wait);
                self.stack.pop();
                self.occ.remove_last(b, start);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::berth::{build_plan_for_calls, homogeneous_berths, validate_plan};
    use crate::model::parse_timestamp;
    use chrono::Duration;

    fn t(h: f64) -> Timestamp {
        parse_timestamp("2021-01-01T00:00:00Z").unwrap() + Duration::microseconds((h * 3.6e9) as i64)
    }

    fn call(id: &str, eta_h: f64, vans: u32) -> VesselCall {
        VesselCall {
            vessel_id: id.into(),
            eta: t(eta_h),
            van_count: vans,
        }
    }

    fn params(berths: usize) -> PlanParams {
        PlanParams {
            berths: homogeneous_berths(berths, 2),
            crane_pool: 15,
            handling_rate: 25.0,
            cranes_per_vessel: 2,
            horizon_end: None,
        }
    }

    #[test]
    fn empty_and_single() {
        let p = brute_force_for_calls(&[], &params(2)).unwrap();
        assert!(p.assignments.is_empty());
        assert_eq!(p.total_waiting_minutes(), 0.0);
        let calls = [call("A", 1.0, 80)];
        assert_eq!(
            brute_force_for_calls(&calls, &params(1)).unwrap(),
            build_plan_for_calls(&calls, &params(1)).unwrap()
        );
    }

    #[test]
    fn fcfs_optimal_instance_matches_greedy() {
        // staggered ETAs, equal lengths: first come first served is optimal
        let calls = [call("A", 0.0, 100), call("B", 1.0, 100), call("C", 2.5, 100)];
        let o = brute_force_for_calls(&calls, &params(1)).unwrap();
        let g = build_plan_for_calls(&calls, &params(1)).unwrap();
        assert_eq!(o.total_waiting_minutes(), g.total_waiting_minutes());
        assert_eq!(o.total_waiting_minutes(), 60.0 + 90.0);
    }

    #[test]
    fn oracle_beats_fcfs_when_a_long_job_arrives_first() {
        // A (10 h) arrives just before two short jobs; serving them first is cheaper
        let calls = [call("A", 0.0, 500), call("B", 0.1, 25), call("C", 0.1, 25)];
        let o = brute_force_for_calls(&calls, &params(1)).unwrap();
        let g = build_plan_for_calls(&calls, &params(1)).unwrap();
        assert!(o.total_waiting_minutes() < g.total_waiting_minutes());
        validate_plan(&o).unwrap();
    }

    #[test]
    fn too_large() {
        let calls: Vec<_> = (0..9).map(|i| call(&format!("V{i}"), i as f64, 10)).collect();
        assert_eq!(
            brute_force_for_calls(&calls, &params(1)),
            Err(PlanError::TooLarge { vessels: 9, berths: 1 })
        );
        assert!(matches!(
            brute_force_for_calls(&calls[..2], &params(3)),
            Err(PlanError::TooLarge { berths: 3, .. })
        ));
    }
}
