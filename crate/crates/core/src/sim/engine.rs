use std::collections::{BTreeMap, HashSet};

use chrono::Duration;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::{schedule_for, SimConfig, Strategy};
use super::queue::{EventKind, EventQueue};
use super::report::{SimReport, VesselOutcome};
use super::stats::{emission_proxy, punctuality_stats};
use super::SimError;
use crate::berth::{build_plan_for_calls, replan_lenient, validate_plan, BerthPlan, PlanError, VesselCall};
use crate::model::Timestamp;
use crate::seed::rng_for;

/// Build the initial plan for the configured schedule and simulate it.
pub fn run_scenario(cfg: &SimConfig) -> Result<SimReport, SimError> {
    cfg.validate()?;
    let calls = schedule_for(cfg);
    let plan0 = build_plan_for_calls(&calls, &cfg.plan_params()).map_err(SimError::Plan)?;
    run_simulation(cfg, &plan0)
}

struct Vessel {
    call: VesselCall,
    rta: bool,
    actual: Timestamp,
    believed: Timestamp,
    /// Relative error of the stand-in predictor.
    noise: f64,
    arrived: bool,
    berth: Option<usize>,
    start: Option<Timestamp>,
    end: Option<Timestamp>,
    done: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum BerthState {
    Idle,
    /// Gang and cranes reserved from `ready`, waiting for the vessel.
    Calling { vessel: usize, ready: Timestamp, cranes: u32 },
    Busy { vessel: usize, ready: Timestamp, cranes: u32 },
}

/// Time is accounted in crane-microseconds.
struct Sim<'a> {
    cfg: &'a SimConfig,
    plan: BerthPlan,
    vessels: Vec<Vessel>,
    index_of: BTreeMap<String, usize>,
    berth_of_id: BTreeMap<String, usize>,
    berths: Vec<BerthState>,
    /// Per berth, vessels in planned-start order.
    seqs: Vec<Vec<usize>>,
    planned: Vec<Option<(usize, Timestamp, u32)>>,
    queue: EventQueue,
    wakes: HashSet<(usize, Timestamp)>,
    cranes_in_use: u32,
    active: u32,
    crane_phase: usize,
    charged: i128,
    idle: i128,
    vans: u64,
    replans: usize,
}

fn micros(d: Duration) -> i128 {
    d.num_microseconds().expect("durations within the simulated span fit i64") as i128
}

impl<'a> Sim<'a> {
    fn day_of(&self, t: Timestamp) -> i64 {
        (t - self.cfg.schedule.start).num_microseconds().unwrap_or(0).div_euclid(86_400_000_000)
    }

    fn active_on(&self, day: i64) -> u32 {
        self.cfg.active_cranes[(day + self.crane_phase as i64).rem_euclid(2) as usize]
    }

    fn sync_plan(&mut self) {
        self.seqs = vec![Vec::new(); self.berths.len()];
        self.planned = vec![None; self.vessels.len()];
        for a in &self.plan.assignments {
            let v = self.index_of[&a.vessel_id];
            let b = self.berth_of_id[&a.berth_id];
            self.seqs[b].push(v);
            self.planned[v] = Some((b, a.service_start, a.cranes_assigned));
        }
    }

    fn head(&self, b: usize) -> Option<usize> {
        self.seqs[b].iter().copied().find(|&v| self.vessels[v].start.is_none())
    }

    fn start_service(&mut self, b: usize, v: usize, ready: Timestamp, cranes: u32, now: Timestamp) {
        let dur = self.plan.params.service_duration(self.vessels[v].call.van_count, cranes).max(Duration::microseconds(1));
        let end = now + dur;
        let vessel = &mut self.vessels[v];
        vessel.start = Some(now);
        vessel.end = Some(end);
        vessel.berth = Some(b);
        self.berths[b] = BerthState::Busy { vessel: v, ready, cranes };
        self.queue.push(end, EventKind::ServiceComplete { berth: b, vessel: v });
    }

    fn dispatch(&mut self, now: Timestamp) {
        for b in 0..self.berths.len() {
            match self.berths[b] {
                BerthState::Busy { .. } => {}
                BerthState::Calling { vessel, ready, cranes } => {
                    if self.vessels[vessel].arrived {
                        self.start_service(b, vessel, ready, cranes, now);
                    }
                }
                BerthState::Idle => {
                    let Some(v) = self.head(b) else { continue };
                    let (_, planned_start, cranes) = self.planned[v].expect("sequenced vessels are planned");
                    if now < planned_start {
                        if self.wakes.insert((b, planned_start)) {
                            self.queue.push(planned_start, EventKind::BerthingStart { berth: b });
                        }
                        continue;
                    }
                    if self.cranes_in_use + cranes > self.active {
                        continue;
                    }
                    self.cranes_in_use += cranes;
                    self.berths[b] = BerthState::Calling { vessel: v, ready: now, cranes };
                    if self.vessels[v].arrived {
                        self.start_service(b, v, now, cranes, now);
                    }
                }
            }
        }
    }

    fn apply_eta_update(&mut self, v: usize, eta: Timestamp, now: Timestamp) -> Result<(), SimError> {
        self.vessels[v].believed = eta;
        let id = self.vessels[v].call.vessel_id.clone();
        match replan_lenient(&self.plan, &id, eta, now) {
            Ok((next, _)) => {
                if next.plan_version != self.plan.plan_version {
                    self.replans += 1;
                }
                self.plan = next;
            }
            Err(PlanError::AlreadyStarted(_)) => return Ok(()),
            Err(e) => return Err(SimError::Plan(e)),
        }
        self.sync_plan();
        // a gang called for a vessel that is no longer next, or no longer due, stands down
        for b in 0..self.berths.len() {
            if let BerthState::Calling { vessel, ready, cranes } = self.berths[b] {
                let still_due = self.head(b) == Some(vessel)
                    && self.planned[vessel].is_some_and(|(pb, s, _)| pb == b && s <= now);
                if !still_due {
                    let cost = cranes as i128 * micros(now - ready);
                    self.charged += cost;
                    self.idle += cost;
                    self.cranes_in_use -= cranes;
                    self.berths[b] = BerthState::Idle;
                }
            }
        }
        Ok(())
    }
}

/// Simulate `plan0` under the configured delays and strategy.
pub fn run_simulation(cfg: &SimConfig, plan0: &BerthPlan) -> Result<SimReport, SimError> {
    cfg.validate()?;
    let mut calls = schedule_for(cfg);
    if calls.is_empty() {
        return Err(SimError::EmptySchedule);
    }
    calls.sort_by(|a, b| (a.eta, &a.vessel_id).cmp(&(b.eta, &b.vessel_id)));
    if let Err(v) = validate_plan(plan0) {
        return Err(SimError::InfeasiblePlan(format!("{} violations, first: {:?}", v.len(), v[0])));
    }
    for c in &calls {
        if plan0.eta_map.get(&c.vessel_id) != Some(&c.eta) || plan0.van_counts.get(&c.vessel_id) != Some(&c.van_count) {
            return Err(SimError::InfeasiblePlan(format!("plan does not match the schedule for {}", c.vessel_id)));
        }
        if c.van_count > 0 && plan0.assignment(&c.vessel_id).is_none() {
            return Err(SimError::InfeasiblePlan(format!("{} has no berth", c.vessel_id)));
        }
    }
    if plan0.eta_map.len() != calls.len() {
        return Err(SimError::InfeasiblePlan("plan lists vessels outside the schedule".into()));
    }

    let delay = cfg.delay.distribution()?;
    let sigma = cfg.predictor.sigma();
    let vessels: Vec<Vessel> = calls
        .iter()
        .enumerate()
        .map(|(i, call)| {
            // every draw is taken whatever the rate, so delayed sets nest as the rate grows
            let mut rng = rng_for(cfg.seed, "vessel", i as u64);
            let u: f64 = rng.gen();
            let d: f64 = delay.sample(&mut rng);
            let z: f64 = StandardNormal.sample(&mut rng);
            let rta = u < cfg.rta_rate;
            let actual = if rta {
                call.eta + Duration::microseconds((d * 6.0e7).round() as i64)
            } else {
                call.eta
            };
            Vessel {
                call: call.clone(),
                rta,
                actual,
                believed: call.eta,
                noise: (sigma * z).max(-0.9),
                arrived: false,
                berth: None,
                start: None,
                end: None,
                done: false,
            }
        })
        .collect();

    let n_berths = plan0.params.berths.len();
    let mut sim = Sim {
        cfg,
        plan: plan0.clone(),
        index_of: vessels.iter().enumerate().map(|(i, v)| (v.call.vessel_id.clone(), i)).collect(),
        berth_of_id: plan0.params.berths.iter().enumerate().map(|(i, b)| (b.berth_id.clone(), i)).collect(),
        vessels,
        berths: vec![BerthState::Idle; n_berths],
        seqs: Vec::new(),
        planned: Vec::new(),
        queue: EventQueue::new(),
        wakes: HashSet::new(),
        cranes_in_use: 0,
        active: 0,
        crane_phase: rng_for(cfg.seed, "cranes", 0).gen_range(0..2),
        charged: 0,
        idle: 0,
        vans: 0,
        replans: 0,
    };
    sim.sync_plan();

    let lead = Duration::microseconds((cfg.detection_lead_minutes * 6.0e7).round() as i64);
    for (i, v) in sim.vessels.iter().enumerate() {
        sim.queue.push(v.actual, EventKind::VesselArrival { vessel: i });
        if v.rta {
            sim.queue.push(v.call.eta - lead, EventKind::RtaRealized { vessel: i });
        }
    }
    for b in 0..n_berths {
        if let Some(&v) = sim.seqs[b].first() {
            let t = sim.planned[v].expect("planned").1;
            sim.wakes.insert((b, t));
            sim.queue.push(t, EventKind::BerthingStart { berth: b });
        }
    }
    let first = sim.queue.peek_time().expect("schedule is not empty");
    let day = sim.day_of(first);
    sim.active = sim.active_on(day);
    sim.queue.push(
        cfg.schedule.start + Duration::days(day + 1),
        EventKind::CraneShiftChange { day: day + 1 },
    );

    let horizon_end = cfg
        .horizon_hours
        .map(|h| cfg.schedule.start + Duration::microseconds((h * 3.6e9).round() as i64));
    while let Some(ev) = sim.queue.pop() {
        if horizon_end.is_some_and(|h| ev.time > h) {
            break;
        }
        let now = ev.time;
        match ev.kind {
            EventKind::ServiceComplete { berth, vessel } => {
                // charged from the gang call, idle time included
                if let BerthState::Busy { ready, cranes, .. } = sim.berths[berth] {
                    sim.cranes_in_use -= cranes;
                    sim.charged += cranes as i128 * micros(now - ready);
                    let start = sim.vessels[vessel].start.expect("busy berths hold a started vessel");
                    sim.idle += cranes as i128 * micros(start - ready);
                }
                sim.berths[berth] = BerthState::Idle;
                sim.vessels[vessel].done = true;
                sim.vans += sim.vessels[vessel].call.van_count as u64;
                sim.queue.push(now, EventKind::VesselDeparture { vessel });
            }
            EventKind::CraneShiftChange { day } => {
                sim.active = sim.active_on(day);
                if !sim.queue.is_empty() {
                    sim.queue.push(
                        cfg.schedule.start + Duration::days(day + 1),
                        EventKind::CraneShiftChange { day: day + 1 },
                    );
                }
            }
            EventKind::RtaRealized { vessel } => {
                if let Strategy::WithPrediction { .. } = cfg.strategy {
                    let v = &sim.vessels[vessel];
                    let remaining = (v.actual - now).num_microseconds().unwrap_or(0) as f64;
                    let predicted = now + Duration::microseconds((remaining * (1.0 + v.noise)).round() as i64);
                    sim.queue.push(now, EventKind::EtaUpdated { vessel, eta: predicted });
                }
            }
            EventKind::EtaUpdated { vessel, eta } => sim.apply_eta_update(vessel, eta, now)?,
            EventKind::VesselArrival { vessel } => sim.vessels[vessel].arrived = true,
            EventKind::BerthingStart { berth } => {
                sim.wakes.remove(&(berth, now));
            }
            EventKind::VesselDeparture { .. } => {}
        }
        sim.dispatch(now);
    }

    finish(cfg, sim)
}

fn finish(cfg: &SimConfig, sim: Sim<'_>) -> Result<SimReport, SimError> {
    let charged_hours = sim.charged as f64 / 3.6e9;
    if sim.vans == 0 || charged_hours <= 0.0 {
        return Err(SimError::NothingServed);
    }
    let throughput = sim.vans as f64 / charged_hours;
    let served: Vec<&Vessel> = sim.vessels.iter().filter(|v| v.done).collect();

    let deviations: Vec<f64> = sim
        .vessels
        .iter()
        .filter(|v| v.rta && v.arrived)
        .map(|v| (v.actual - v.believed).num_microseconds().unwrap_or(0).abs() as f64 / 6.0e7)
        .collect();
    let punctuality = punctuality_stats(&deviations).ok();

    let e = &cfg.emission;
    let mut outcomes: Vec<VesselOutcome> = sim
        .vessels
        .iter()
        .map(|v| VesselOutcome {
            vessel_id: v.call.vessel_id.clone(),
            van_count: v.call.van_count,
            rta: v.rta,
            promised_eta: v.call.eta,
            believed_eta: v.believed,
            actual_arrival: v.actual,
            berth: v.berth.map(|b| sim.plan.params.berths[b].berth_id.clone()),
            service_start: v.start,
            service_end: v.end.filter(|_| v.done),
            anchorage_minutes: v
                .start
                .filter(|_| v.done)
                .map(|s| (s - v.actual).num_microseconds().unwrap_or(0) as f64 / 6.0e7),
        })
        .collect();
    outcomes.sort_by(|a, b| a.vessel_id.cmp(&b.vessel_id));
    let waits: Vec<f64> = outcomes.iter().filter_map(|o| o.anchorage_minutes).collect();
    let mut emission = 0.0;
    for &w in &waits {
        emission += emission_proxy(&[(e.approach_nm, e.approach_speed_knots)], w, e.hotel_rate, e.k_cubic)
            .map_err(|err| SimError::InvalidConfig(err.to_string()))?;
    }

    Ok(SimReport {
        seed: cfg.seed,
        rta_rate: cfg.rta_rate,
        strategy: cfg.strategy.label().to_string(),
        throughput_vans_per_crane_hour: throughput,
        effective_seconds_per_van: 3600.0 / throughput,
        punctuality,
        total_waiting_minutes: waits.iter().sum(),
        emission_proxy: emission,
        vans_handled: sim.vans,
        vans_scheduled: sim.vessels.iter().map(|v| v.call.van_count as u64).sum(),
        vessels_served: served.len(),
        backlog_vessels: sim.vessels.iter().filter(|v| v.call.van_count > 0 && !v.done).count(),
        rta_vessels: sim.vessels.iter().filter(|v| v.rta).count(),
        replans: sim.replans,
        charged_crane_hours: charged_hours,
        idle_crane_hours: sim.idle as f64 / 3.6e9,
        vessels: outcomes,
        config: cfg.clone(),
    })
}
