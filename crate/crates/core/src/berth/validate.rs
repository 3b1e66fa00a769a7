use std::collections::BTreeSet;

use serde::Serialize;

use super::BerthPlan;
use crate::model::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanViolation {
    EmptyService { vessel: String },
    UnknownBerth { vessel: String, berth: String },
    UnknownVessel { vessel: String },
    DuplicateVessel { vessel: String },
    CraneSlots { vessel: String, cranes: u32, slots: u32 },
    StartBeforeEta { vessel: String, start: Timestamp, eta: Timestamp },
    BerthOverlap { berth: String, first: String, second: String },
    CranePoolExceeded { at: Timestamp, used: u32, pool: u32 },
}

/// Check every plan invariant; all violations are reported.
pub fn validate_plan(plan: &BerthPlan) -> Result<(), Vec<PlanViolation>> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for a in &plan.assignments {
        let vessel = a.vessel_id.clone();
        if !seen.insert(&a.vessel_id) {
            out.push(PlanViolation::DuplicateVessel { vessel: vessel.clone() });
        }
        if a.service_start >= a.service_end {
            out.push(PlanViolation::EmptyService { vessel: vessel.clone() });
        }
        match plan.berth_index(&a.berth_id) {
            None => out.push(PlanViolation::UnknownBerth {
                vessel: vessel.clone(),
                berth: a.berth_id.clone(),
            }),
            Some(b) => {
                let slots = plan.params.berths[b].crane_slots;
                if a.cranes_assigned == 0 || a.cranes_assigned > slots {
                    out.push(PlanViolation::CraneSlots {
                        vessel: vessel.clone(),
                        cranes: a.cranes_assigned,
                        slots,
                    });
                }
            }
        }
        match plan.eta_map.get(&a.vessel_id) {
            None => out.push(PlanViolation::UnknownVessel { vessel }),
            Some(&eta) if a.service_start < eta => out.push(PlanViolation::StartBeforeEta {
                vessel,
                start: a.service_start,
                eta,
            }),
            Some(_) => {}
        }
    }

    for berth in &plan.params.berths {
        let mut on: Vec<_> = plan.assignments.iter().filter(|a| a.berth_id == berth.berth_id).collect();
        on.sort_by_key(|a| a.service_start);
        for w in on.windows(2) {
            if w[1].service_start < w[0].service_end {
                out.push(PlanViolation::BerthOverlap {
                    berth: berth.berth_id.clone(),
                    first: w[0].vessel_id.clone(),
                    second: w[1].vessel_id.clone(),
                });
            }
        }
    }

    // usage is piecewise constant and only rises at a service start
    for a in &plan.assignments {
        let at = a.service_start;
        let used: u32 = plan
            .assignments
            .iter()
            .filter(|b| b.service_start <= at && b.service_end > at)
            .map(|b| b.cranes_assigned)
            .sum();
        if used > plan.params.crane_pool && !out.iter().any(|v| matches!(v, PlanViolation::CranePoolExceeded { at: t, .. } if *t == at)) {
            out.push(PlanViolation::CranePoolExceeded {
                at,
                used,
                pool: plan.params.crane_pool,
            });
        }
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::berth::{build_plan_for_calls, homogeneous_berths, PlanParams, VesselCall};
    use crate::model::parse_timestamp;
    use chrono::Duration;

    fn plan() -> BerthPlan {
        let t0 = parse_timestamp("2021-01-01T00:00:00Z").unwrap();
        let calls: Vec<VesselCall> = ["A", "B", "C"]
            .iter()
            .enumerate()
            .map(|(i, id)| VesselCall {
                vessel_id: id.to_string(),
                eta: t0 + Duration::hours(i as i64),
                van_count: 100,
            })
            .collect();
        let params = PlanParams {
            berths: homogeneous_berths(2, 2),
            crane_pool: 4,
            handling_rate: 25.0,
            cranes_per_vessel: 2,
            horizon_end: None,
        };
        build_plan_for_calls(&calls, &params).unwrap()
    }

    #[test]
    fn built_plan_is_valid() {
        validate_plan(&plan()).unwrap();
    }

    #[test]
    fn detects_each_violation() {
        let mut p = plan();
        p.assignments[1].berth_id = p.assignments[0].berth_id.clone();
        p.assignments[2].service_start = p.eta_map["C"] - Duration::minutes(1);
        p.assignments[0].cranes_assigned = 3;
        let errs = validate_plan(&p).unwrap_err();
        assert!(errs.iter().any(|e| matches!(e, PlanViolation::BerthOverlap { .. })));
        assert!(errs.iter().any(|e| matches!(e, PlanViolation::StartBeforeEta { .. })));
        assert!(errs.iter().any(|e| matches!(e, PlanViolation::CraneSlots { .. })));

        let mut p = plan();
        p.params.crane_pool = 2;
        let errs = validate_plan(&p).unwrap_err();
        assert!(errs.iter().any(|e| matches!(e, PlanViolation::CranePoolExceeded { used: 4, .. })));

        let mut p = plan();
        p.eta_map.remove("A");
        p.assignments[1].service_end = p.assignments[1].service_start;
        let errs = validate_plan(&p).unwrap_err();
        assert!(errs.contains(&PlanViolation::UnknownVessel { vessel: "A".into() }));
        assert!(errs.iter().any(|e| matches!(e, PlanViolation::EmptyService { .. })));
    }
}
