use std::collections::BTreeMap;

use chrono::Duration;

use super::{BerthAssignment, BerthPlan, PlanError, PlanParams, VesselCall};
use crate::model::{Timestamp, Voyage};

/// Berth and crane usage of the assignments placed so far.
pub(crate) struct Occupancy<'a> {
    params: &'a PlanParams,
    /// Per berth, non-overlapping intervals sorted by start.
    by_berth: Vec<Vec<(Timestamp, Timestamp)>>,
    all: Vec<(Timestamp, Timestamp, u32)>,
    slack: bool,
}

impl<'a> Occupancy<'a> {
    pub(crate) fn new(params: &'a PlanParams) -> Self {
        Self {
            params,
            by_berth: vec![Vec::new(); params.berths.len()],
            all: Vec::new(),
            slack: params.pool_is_slack(),
        }
    }

    pub(crate) fn add(&mut self, berth: usize, start: Timestamp, end: Timestamp, cranes: u32) {
        let ivs = &mut self.by_berth[berth];
        let at = ivs.partition_point(|iv| iv.0 < start);
        ivs.insert(at, (start, end));
        self.all.push((start, end, cranes));
    }

    pub(crate) fn remove_last(&mut self, berth: usize, start: Timestamp) {
        let ivs = &mut self.by_berth[berth];
        if let Some(i) = ivs.iter().position(|iv| iv.0 == start) {
            ivs.remove(i);
        }
        self.all.pop();
    }

    pub(crate) fn berth_end(&self, berth: usize) -> Option<Timestamp> {
        self.by_berth[berth].iter().map(|iv| iv.1).max()
    }

    fn berth_free(&self, berth: usize, start: Timestamp, end: Timestamp) -> bool {
        let ivs = &self.by_berth[berth];
        let i = ivs.partition_point(|iv| iv.1 <= start);
        i == ivs.len() || ivs[i].0 >= end
    }

    fn cranes_free(&self, start: Timestamp, end: Timestamp, cranes: u32) -> bool {
        if self.slack {
            return true;
        }
        let overlapping: Vec<_> = self.all.iter().filter(|iv| iv.0 < end && iv.1 > start).collect();
        // usage only rises at `start` or at a later interval start
        std::iter::once(start)
            .chain(overlapping.iter().map(|iv| iv.0).filter(|&s| s > start))
            .all(|x| {
                let used: u32 = overlapping
                    .iter()
                    .filter(|iv| iv.0 <= x && iv.1 > x)
                    .map(|iv| iv.2)
                    .sum();
                used + cranes <= self.params.crane_pool
            })
    }

    /// Earliest start at or after `earliest` where the berth is idle and the
    /// pool has `cranes` free for the whole service.
    pub(crate) fn earliest_on_berth(
        &self,
        berth: usize,
        earliest: Timestamp,
        dur: Duration,
        cranes: u32,
    ) -> Timestamp {
        if self.slack {
            let ivs = &self.by_berth[berth];
            let mut t = earliest;
            let mut i = ivs.partition_point(|iv| iv.1 <= t);
            while i < ivs.len() && ivs[i].0 < t + dur {
                t = t.max(ivs[i].1);
                i += 1;
            }
            return t;
        }
        let mut candidates: Vec<Timestamp> = std::iter::once(earliest)
            .chain(self.all.iter().map(|iv| iv.1).filter(|&e| e > earliest))
            .collect();
        candidates.sort_unstable();
        candidates
            .into_iter()
            .find(|&t| self.berth_free(berth, t, t + dur) && self.cranes_free(t, t + dur, cranes))
            .expect("every constraint is released after the last service ends")
    }

    /// Earliest-starting berth for `call`, lowest index on ties.
    pub(crate) fn place(&self, call: &VesselCall, earliest: Timestamp) -> Result<BerthAssignment, PlanError> {
        let mut best: Option<(Timestamp, usize, Duration, u32)> = None;
        for b in 0..self.params.berths.len() {
            let cranes = self.params.cranes_at(b);
            let dur = service_duration(self.params, call.van_count, cranes);
            let t = self.earliest_on_berth(b, earliest, dur, cranes);
            if self.params.horizon_end.is_some_and(|h| t + dur > h) {
                continue;
            }
            if best.is_none_or(|(bt, ..)| t < bt) {
                best = Some((t, b, dur, cranes));
            }
        }
        let (start, b, dur, cranes) = best.ok_or_else(|| PlanError::InfeasibleVessel(call.vessel_id.clone()))?;
        Ok(BerthAssignment {
            vessel_id: call.vessel_id.clone(),
            berth_id: self.params.berths[b].berth_id.clone(),
            service_start: start,
            service_end: start + dur,
            cranes_assigned: cranes,
        })
    }
}

/// Never shorter than one microsecond, so a service always has extent.
pub(crate) fn service_duration(params: &PlanParams, van_count: u32, cranes: u32) -> Duration {
    params
        .service_duration(van_count, cranes)
        .max(Duration::microseconds(1))
}

fn sort_assignments(params: &PlanParams, assignments: &mut [BerthAssignment]) {
    let berth_of = |id: &str| params.berths.iter().position(|b| b.berth_id == id);
    assignments.sort_by(|a, b| {
        (a.service_start, berth_of(&a.berth_id), &a.vessel_id).cmp(&(b.service_start, berth_of(&b.berth_id), &b.vessel_id))
    });
}

/// Frozen assignments stay; `calls` are inserted first-fit in (eta, id) order,
/// none starting before `floor`.
fn schedule(
    params: &PlanParams,
    frozen: Vec<BerthAssignment>,
    calls: &mut [VesselCall],
    floor: Option<Timestamp>,
) -> Result<Vec<BerthAssignment>, PlanError> {
    let mut occ = Occupancy::new(params);
    for a in &frozen {
        let b = params
            .berths
            .iter()
            .position(|b| b.berth_id == a.berth_id)
            .ok_or_else(|| PlanError::InvalidParameter(format!("unknown berth {}", a.berth_id)))?;
        occ.add(b, a.service_start, a.service_end, a.cranes_assigned);
    }
    calls.sort_by(|a, b| (a.eta, &a.vessel_id).cmp(&(b.eta, &b.vessel_id)));
    let mut out = frozen;
    for call in calls.iter().filter(|c| c.van_count > 0) {
        let earliest = floor.map_or(call.eta, |f| call.eta.max(f));
        let a = occ.place(call, earliest)?;
        let b = params.berths.iter().position(|b| b.berth_id == a.berth_id).expect("placed on a known berth");
        occ.add(b, a.service_start, a.service_end, a.cranes_assigned);
        out.push(a);
    }
    sort_assignments(params, &mut out);
    Ok(out)
}

/// Greedy first-fit in promised-ETA order. Vessels with nothing to handle
/// are tracked in the ETA map but get no assignment.
pub fn build_initial_plan(voyages: &[Voyage], params: &PlanParams) -> Result<BerthPlan, PlanError> {
    let calls: Vec<VesselCall> = voyages.iter().map(VesselCall::from).collect();
    build_plan_for_calls(&calls, params)
}

pub fn build_plan_for_calls(calls: &[VesselCall], params: &PlanParams) -> Result<BerthPlan, PlanError> {
    params.validate()?;
    let mut eta_map = BTreeMap::new();
    let mut van_counts = BTreeMap::new();
    for c in calls {
        if eta_map.insert(c.vessel_id.clone(), c.eta).is_some() {
            return Err(PlanError::DuplicateVessel(c.vessel_id.clone()));
        }
        van_counts.insert(c.vessel_id.clone(), c.van_count);
    }
    let mut calls = calls.to_vec();
    let assignments = schedule(params, Vec::new(), &mut calls, None)?;
    Ok(BerthPlan {
        plan_version: 0,
        assignments,
        eta_map,
        van_counts,
        params: params.clone(),
    })
}

/// Issued when a lenient re-plan moves a past ETA up to the planning instant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PastEtaWarning {
    pub vessel_id: String,
    pub requested: Timestamp,
    pub clamped_to: Timestamp,
}

/// Re-insert the updated vessel and every vessel not yet in service at `now`.
///
/// Services that started at or before `now` stay where they are. When the
/// update changes nothing, the input plan is returned unchanged, version included.
pub fn replan_on_eta_update(
    plan: &BerthPlan,
    vessel_id: &str,
    new_eta: Timestamp,
    now: Timestamp,
) -> Result<BerthPlan, PlanError> {
    if !plan.eta_map.contains_key(vessel_id) {
        return Err(PlanError::UnknownVessel(vessel_id.to_string()));
    }
    if new_eta < now {
        return Err(PlanError::PastEta {
            vessel_id: vessel_id.to_string(),
            new_eta,
            now,
        });
    }
    replan_inner(plan, vessel_id, new_eta, now)
}

/// As [`replan_on_eta_update`], but a past ETA is clamped to `now`.
pub fn replan_lenient(
    plan: &BerthPlan,
    vessel_id: &str,
    new_eta: Timestamp,
    now: Timestamp,
) -> Result<(BerthPlan, Option<PastEtaWarning>), PlanError> {
    if !plan.eta_map.contains_key(vessel_id) {
        return Err(PlanError::UnknownVessel(vessel_id.to_string()));
    }
    let warning = (new_eta < now).then(|| PastEtaWarning {
        vessel_id: vessel_id.to_string(),
        requested: new_eta,
        clamped_to: now,
    });
    Ok((replan_inner(plan, vessel_id, new_eta.max(now), now)?, warning))
}

fn replan_inner(plan: &BerthPlan, vessel_id: &str, new_eta: Timestamp, now: Timestamp) -> Result<BerthPlan, PlanError> {
    let (frozen, _): (Vec<_>, Vec<_>) = plan.assignments.iter().cloned().partition(|a| a.service_start <= now);
    if frozen.iter().any(|a| a.vessel_id == vessel_id) {
        return Err(PlanError::AlreadyStarted(vessel_id.to_string()));
    }
    let mut eta_map = plan.eta_map.clone();
    eta_map.insert(vessel_id.to_string(), new_eta);
    let mut calls: Vec<VesselCall> = eta_map
        .iter()
        .filter(|(id, _)| !frozen.iter().any(|a| &a.vessel_id == *id))
        .map(|(id, &eta)| VesselCall {
            vessel_id: id.clone(),
            eta,
            van_count: plan.van_counts.get(id).copied().unwrap_or(0),
        })
        .collect();
    let assignments = schedule(&plan.params, frozen, &mut calls, Some(now))?;
    if assignments == plan.assignments && eta_map == plan.eta_map {
        return Ok(plan.clone());
    }
    Ok(BerthPlan {
        plan_version: plan.plan_version + 1,
        assignments,
        eta_map,
        van_counts: plan.van_counts.clone(),
        params: plan.params.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::berth::{homogeneous_berths, validate_plan};
    use crate::model::parse_timestamp;

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

    // 2 cranes at 25 vans/crane-hour: 100 vans take 2 h
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
    fn single_vessel_starts_at_eta() {
        let p = build_plan_for_calls(&[call("A", 3.0, 100)], &params(1)).unwrap();
        let a = p.assignment("A").unwrap();
        assert_eq!(a.service_start, t(3.0));
        assert_eq!(a.service_end, t(5.0));
        validate_plan(&p).unwrap();
    }

    #[test]
    fn same_eta_one_berth_queues_by_id() {
        let p = build_plan_for_calls(&[call("B", 0.0, 100), call("A", 0.0, 100)], &params(1)).unwrap();
        assert_eq!(p.assignment("A").unwrap().service_start, t(0.0));
        assert_eq!(p.assignment("B").unwrap().service_start, t(2.0));
        assert_eq!(p.total_waiting_minutes(), 120.0);
    }

    #[test]
    fn empty_and_zero_van() {
        let p = build_plan_for_calls(&[], &params(2)).unwrap();
        assert!(p.assignments.is_empty());
        let p = build_plan_for_calls(&[call("Z", 1.0, 0)], &params(2)).unwrap();
        assert!(p.assignments.is_empty());
        assert!(p.eta_map.contains_key("Z"));
    }

    #[test]
    fn errors() {
        let mut no_berths = params(1);
        no_berths.berths.clear();
        assert_eq!(build_plan_for_calls(&[], &no_berths), Err(PlanError::NoBerths));
        assert_eq!(
            build_plan_for_calls(&[call("A", 0.0, 1), call("A", 1.0, 1)], &params(1)),
            Err(PlanError::DuplicateVessel("A".into()))
        );
        let mut tight = params(1);
        tight.horizon_end = Some(t(1.0));
        assert_eq!(
            build_plan_for_calls(&[call("A", 0.0, 100)], &tight),
            Err(PlanError::InfeasibleVessel("A".into()))
        );
        let p = build_plan_for_calls(&[call("A", 0.0, 100)], &params(1)).unwrap();
        assert_eq!(
            replan_on_eta_update(&p, "Q", t(1.0), t(0.0)),
            Err(PlanError::UnknownVessel("Q".into()))
        );
        assert!(matches!(
            replan_on_eta_update(&p, "A", t(-1.0), t(-0.5)),
            Err(PlanError::PastEta { .. })
        ));
        assert_eq!(
            replan_on_eta_update(&p, "A", t(3.0), t(0.5)),
            Err(PlanError::AlreadyStarted("A".into()))
        );
    }

    #[test]
    fn gap_is_filled_first_fit() {
        // A occupies 0-2, C occupies 6-8; B (2 h) fits in the gap
        let p = build_plan_for_calls(
            &[call("A", 0.0, 100), call("C", 6.0, 100), call("B", 1.0, 100)],
            &params(1),
        )
        .unwrap();
        assert_eq!(p.assignment("B").unwrap().service_start, t(2.0));
    }

    #[test]
    fn later_eta_without_conflict_moves_only_that_vessel() {
        let p = build_plan_for_calls(&[call("A", 0.0, 100), call("B", 10.0, 100)], &params(1)).unwrap();
        let q = replan_on_eta_update(&p, "B", t(12.0), t(-1.0)).unwrap();
        assert_eq!(q.plan_version, 1);
        assert_eq!(q.assignment("A"), p.assignment("A"));
        assert_eq!(q.assignment("B").unwrap().service_start, t(12.0));
        validate_plan(&q).unwrap();
    }

    #[test]
    fn successor_promoted_into_vacated_slot() {
        // one berth; A at 0, B at 1 waits until 2, C at 2 waits until 4
        let p = build_plan_for_calls(
            &[call("A", 0.0, 100), call("B", 1.0, 100), call("C", 2.0, 100)],
            &params(1),
        )
        .unwrap();
        let q = replan_on_eta_update(&p, "B", t(5.0), t(-1.0)).unwrap();
        assert_eq!(q.assignment("C").unwrap().service_start, t(2.0));
        assert_eq!(q.assignment("B").unwrap().service_start, t(5.0));
        validate_plan(&q).unwrap();
        // untouched, C would still wait from 2 to 4
        let untouched = p.assignment("C").unwrap().waiting_minutes(t(2.0));
        assert_eq!(untouched, 120.0);
        assert!(q.total_waiting_minutes() < untouched);
    }

    #[test]
    fn replan_is_idempotent() {
        let p = build_plan_for_calls(&[call("A", 0.0, 100), call("B", 1.0, 100)], &params(1)).unwrap();
        let q = replan_on_eta_update(&p, "B", t(4.0), t(-1.0)).unwrap();
        let r = replan_on_eta_update(&q, "B", t(4.0), t(-1.0)).unwrap();
        assert_eq!(q, r);
    }

    #[test]
    fn started_services_are_frozen() {
        let p = build_plan_for_calls(&[call("A", 0.0, 100), call("B", 0.5, 100)], &params(1)).unwrap();
        // B is re-announced for 0.6 h while A is in service
        let q = replan_on_eta_update(&p, "B", t(0.6), t(0.5)).unwrap();
        assert_eq!(q.assignment("A"), p.assignment("A"));
        assert_eq!(q.assignment("B").unwrap().service_start, t(2.0));
    }

    #[test]
    fn lenient_clamps_past_eta() {
        let p = build_plan_for_calls(&[call("A", 5.0, 100)], &params(1)).unwrap();
        let (q, w) = replan_lenient(&p, "A", t(1.0), t(2.0)).unwrap();
        assert_eq!(w.unwrap().clamped_to, t(2.0));
        assert_eq!(q.assignment("A").unwrap().service_start, t(2.0));
    }

    #[test]
    fn crane_pool_binds() {
        // 2 berths but only 2 cranes: services cannot overlap
        let mut pr = params(2);
        pr.crane_pool = 2;
        let p = build_plan_for_calls(&[call("A", 0.0, 100), call("B", 0.0, 100)], &pr).unwrap();
        assert_eq!(p.assignment("B").unwrap().service_start, t(2.0));
        validate_plan(&p).unwrap();
    }

    #[test]
    fn json_field_names() {
        let p = build_plan_for_calls(&[call("A", 0.0, 100)], &params(1)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&p.to_json().unwrap()).unwrap();
        let a = &v["assignments"][0];
        for k in ["vessel", "berth", "start", "end", "cranes"] {
            assert!(a.get(k).is_some(), "{k}");
        }
        assert_eq!(v["plan_version"], 0);
        assert_eq!(BerthPlan::from_json(&p.to_json().unwrap()).unwrap(), p);
    }
}
