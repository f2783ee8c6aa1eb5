//! Co-simulation of vehicle, cage and an in-process control centre on one
//! simulated clock.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tracing::{debug, info, warn};

use dcage_ccc::check::exactly_one_ack;
use dcage_ccc::replay::summaries;
use dcage_ccc::{CccConfig, CccCore, Dispatch, Effects};
use dcage_core::state::{DrivingMode, MissionState};
use dcage_core::Point2;
use dcage_dc::{handle_ccc_frame, DcConfig, DependabilityCage, Effect, Inbound};
use dcage_protocol::{encode, AckOutcome, Body, Command, DcEvent, Direction, EventLogEntry, MapInfo, ObstacleInfo};
use dcage_sim::mission::MissionEvent;
use dcage_sim::{Scenario, Simulation};

use crate::report::{Check, Delivery, EmergencyStop, ModeTransition, Report};
use crate::script::{OperatorScript, ScriptRunner};
use crate::CliError;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the scenario's seed.
    pub seed: Option<u64>,
    /// Sleep one tick period per tick.
    pub realtime: bool,
    pub ccc: CccConfig,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: Report,
    pub log: Vec<EventLogEntry>,
}

impl RunOutput {
    /// The event log as NDJSON.
    pub fn log_text(&self) -> String {
        self.log.iter().map(EventLogEntry::to_line).collect()
    }
}

/// Cage configuration taken from a scenario.
pub fn dc_config(s: &Scenario) -> DcConfig {
    let mut cfg = DcConfig::new(s.vehicle_id.clone());
    cfg.geometry = s.vehicle.geometry;
    cfg.fad_zone = s.zones.fad;
    cfg.lad_zone = s.zones.lad;
    cfg.caps = s.zones.caps();
    cfg.filters = s.filters;
    cfg.cameras = s.cameras;
    cfg.initial_cage_mode = s.dc.cage_mode;
    cfg.door_stale_ms = s.dc.door_stale_ms;
    cfg.telemetry_period_ms = s.dc.telemetry_period_ms;
    cfg.map = MapInfo {
        delivery_points: s.world.delivery_points.clone(),
        route: s.world.route.clone(),
        obstacles: s
            .world
            .obstacles
            .iter()
            .map(|o| ObstacleInfo { name: o.name.clone(), polygon: o.polygon.clone() })
            .collect(),
    };
    cfg
}

fn world_ring(local: &[Point2], pose: &dcage_core::VehiclePose) -> Vec<Point2> {
    local.iter().map(|p| p.to_parent(pose.position(), pose.heading)).collect()
}

/// Bumper-to-obstacle distance and the obstacle it was measured to.
fn front_clearance(s: &Scenario, pose: &dcage_core::VehiclePose) -> Option<(f64, String)> {
    let g = &s.vehicle.geometry;
    let half = g.width / 2.0;
    let bumper = world_ring(&[Point2::new(g.front_x(), -half), Point2::new(g.front_x(), half)], pose);
    s.world
        .obstacles
        .iter()
        .map(|o| (dcage_core::geometry::ring_distance(&bumper, &o.ring()), o.name.clone()))
        .min_by(|a, b| a.0.total_cmp(&b.0))
}

/// Drops messages on a lossy link according to the scenario's faults.
struct Link {
    rng: ChaCha8Rng,
}

impl Link {
    fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        Self { rng }
    }

    fn passes(&mut self, s: &Scenario, t: u64) -> bool {
        let p = s.faults.link_drop_probability(t);
        p <= 0.0 || self.rng.random::<f64>() >= p
    }
}

struct Run<'a> {
    scenario: &'a Scenario,
    ccc: CccCore,
    runner: ScriptRunner,
    /// Outstanding scripted commands by (vehicle, seq).
    in_flight: HashMap<(String, u64), usize>,
    log: Vec<EventLogEntry>,
    to_dc: Vec<dcage_protocol::WireMessage>,
}

impl Run<'_> {
    fn absorb(&mut self, fx: Effects, now: u64) {
        let events: Vec<DcEvent> = fx
            .log
            .iter()
            .filter(|e| e.direction == Direction::FromVehicle)
            .filter_map(|e| match &e.message.body {
                Body::Event(ev) => Some(ev.clone()),
                _ => None,
            })
            .collect();
        self.log.extend(fx.log);
        self.to_dc.extend(fx.to_vehicle);
        for r in fx.resolved {
            if let Some(step) = self.in_flight.remove(&(r.vehicle_id, r.ref_seq)) {
                debug!(step, outcome = ?r.outcome, "scripted command resolved");
                self.runner.resolve(step, r.outcome);
            }
        }
        if !events.is_empty() {
            self.runner.observe(&events, now);
        }
    }

    fn run_script(&mut self, now: u64) {
        for (i, step) in self.runner.due(now) {
            let vehicle = step.vehicle_id.clone().unwrap_or_else(|| self.scenario.vehicle_id.clone());
            info!(step = i, command = step.action.name(), t = now, "operator script sends");
            let (d, fx) = self.ccc.dispatch(&vehicle, step.action, now);
            match d {
                Dispatch::Sent { seq } => {
                    self.runner.sent(i, seq);
                    self.in_flight.insert((vehicle, seq), i);
                }
                Dispatch::Rejected { reason } => self.runner.resolve(i, AckOutcome::Rejected { reason }),
            }
            self.absorb(fx, now);
        }
    }
}

/// Runs a scenario to completion (plus settle time) or its time limit.
pub fn run_scenario(scenario: &Scenario, script: &OperatorScript, opts: &RunOptions) -> Result<RunOutput, CliError> {
    let mut scenario = scenario.clone();
    if let Some(seed) = opts.seed {
        scenario.sim.seed = seed;
    }
    let s = &scenario;
    script.validate(&s.vehicle_id)?;
    let mut dc = DependabilityCage::new(dc_config(s))?;
    let mut sim = Simulation::new(s.clone());
    let mut link = Link::new(s.sim.seed);
    let tick = s.dc.tick_ms;

    let mut run = Run {
        scenario: s,
        ccc: CccCore::new(opts.ccc),
        runner: ScriptRunner::new(script),
        in_flight: HashMap::new(),
        log: Vec::new(),
        to_dc: Vec::new(),
    };
    let reg = dc.register_message(0);
    let fx = run.ccc.ingest(reg, 0);
    run.absorb(fx, 0);

    let mut queue: VecDeque<Inbound> = VecDeque::new();
    let mut assigned = s.mission.is_none();
    let mut finished_at: Option<u64> = None;
    let mut stops: Vec<EmergencyStop> = Vec::new();
    let mut trace: Vec<ModeTransition> = Vec::new();
    let mut deliveries: Vec<Delivery> = Vec::new();
    let mut lifecycle: Vec<(MissionState, MissionState)> = Vec::new();
    let footprint = s.vehicle.geometry.footprint();
    let rings: Vec<(String, Vec<Point2>)> = s.world.obstacles.iter().map(|o| (o.name.clone(), o.ring())).collect();
    let mut min_clearance: BTreeMap<String, f64> = rings.iter().map(|(n, _)| (n.clone(), f64::INFINITY)).collect();
    let mut mode;

    loop {
        let t = sim.time_ms();
        if !assigned && s.mission.as_ref().is_some_and(|m| t >= m.assign_at_ms) {
            let m = s.mission.as_ref().expect("checked");
            queue.push_back(Inbound::local(Command::AssignMission {
                mission_id: m.id.clone(),
                waypoints: s.mission_waypoints(),
            }));
            assigned = true;
        }
        for m in std::mem::take(&mut run.to_dc) {
            if link.passes(s, t) {
                queue.push_back(handle_ccc_frame(&encode(&m)));
            }
        }

        let snap = sim.sense();
        let out = dc.tick(&snap, &mut queue);
        for e in out.effects.iter().cloned() {
            match e {
                Effect::AssignMission { id, waypoints } => {
                    if let Err(reason) = sim.assign_mission(id, waypoints) {
                        warn!(reason, "vehicle refused mission");
                    }
                }
                Effect::Door(a) => sim.door_command(a),
                Effect::ManualControl { speed, steering } => sim.manual_control(speed, steering),
            }
        }
        for e in &out.events {
            if let DcEvent::ModeChanged { from, to } = *e {
                trace.push(ModeTransition { time_ms: t, from, to });
                if to == DrivingMode::EmergencyStop {
                    stops.push(EmergencyStop { time_ms: t, stop_time_ms: None, front_clearance_m: None, obstacle: None });
                }
            }
        }
        mode = out.mode();

        for ev in sim.advance(&out.actuation, mode, tick)? {
            match ev {
                MissionEvent::DeliveryCompleted { name, .. } => {
                    deliveries.push(Delivery { name, time_ms: sim.time_ms(), mode });
                }
                MissionEvent::StateChanged { from, to } => lifecycle.push((from, to)),
                MissionEvent::Arrived { .. } => {}
            }
        }
        let pose = *sim.pose();
        if let Some(last) = stops.last_mut() {
            if last.stop_time_ms.is_none() && mode == DrivingMode::EmergencyStop && pose.speed.abs() < 1e-9 {
                last.stop_time_ms = Some(sim.time_ms());
                if let Some((d, name)) = front_clearance(s, &pose) {
                    last.front_clearance_m = Some(d);
                    last.obstacle = Some(name);
                }
            }
        }
        let body = world_ring(&footprint, &pose);
        for (name, ring) in &rings {
            let d = dcage_core::geometry::ring_distance(&body, ring);
            let slot = min_clearance.get_mut(name).expect("seeded");
            *slot = slot.min(d);
        }

        for m in out.outbound {
            if link.passes(s, t) {
                let fx = run.ccc.ingest(m, t);
                run.absorb(fx, t);
            }
        }
        run.run_script(t);
        let fx = run.ccc.poll(t);
        run.absorb(fx, t);

        if opts.realtime {
            std::thread::sleep(Duration::from_millis(tick));
        }
        if finished_at.is_none() && sim.mission_finished() {
            finished_at = Some(sim.time_ms());
            info!(t = sim.time_ms(), "mission completed");
        }
        let now = sim.time_ms();
        if finished_at.is_some_and(|f| now >= f + s.sim.settle_ms) || now >= s.sim.max_time_ms {
            break;
        }
    }

    let final_mission_state = sim.mission().state;
    let mut report = Report {
        scenario: s.name.clone(),
        seed: s.sim.seed,
        vehicle_id: s.vehicle_id.clone(),
        passed: false,
        final_mission_state,
        final_mode: mode,
        sim_time_ms: sim.time_ms(),
        emergency_stops: stops,
        min_clearance_m: min_clearance,
        mode_trace: trace,
        deliveries,
        script: run.runner.results.clone(),
        checks: Vec::new(),
    };
    report.checks = checks(s, &report, &run.log, &lifecycle);
    report.passed = report.checks.iter().all(|c| c.pass);
    Ok(RunOutput { report, log: run.log })
}

fn checks(s: &Scenario, r: &Report, log: &[EventLogEntry], lifecycle: &[(MissionState, MissionState)]) -> Vec<Check> {
    let mut out = Vec::new();
    let sums = summaries(log);

    let bad = sums.iter().zip(sums.iter().skip(1)).find(|(a, b)| b.seq <= a.seq || b.timestamp < a.timestamp);
    let foreign = sums.iter().find(|x| x.vehicle_id != s.vehicle_id);
    out.push(match (bad, foreign) {
        (Some((a, b)), _) => Check::new("summary_stream", false, format!("seq {} followed by {}", a.seq, b.seq)),
        (_, Some(x)) => Check::new("summary_stream", false, format!("summary for {:?}", x.vehicle_id)),
        _ => Check::new("summary_stream", true, format!("{} summaries", sums.len())),
    });

    let mut transitions: Vec<(MissionState, MissionState)> = lifecycle.to_vec();
    transitions.extend(
        sums.iter()
            .zip(sums.iter().skip(1))
            .filter(|(a, b)| a.mission_state != b.mission_state)
            .map(|(a, b)| (a.mission_state, b.mission_state)),
    );
    out.push(match transitions.iter().find(|(a, b)| !a.may_transition_to(*b)) {
        Some((a, b)) => Check::new("mission_lifecycle", false, format!("illegal transition {a:?} -> {b:?}")),
        None => Check::new("mission_lifecycle", true, format!("{} transitions", transitions.len())),
    });

    let in_es: Vec<_> = sums
        .iter()
        .filter(|x| x.driving_mode == DrivingMode::EmergencyStop)
        .filter(|x| matches!(x.mission_state, MissionState::Active | MissionState::Blocked))
        .collect();
    out.push(match in_es.iter().find(|x| x.mission_state != MissionState::Blocked) {
        Some(x) => Check::new("blocked_while_in_es", false, format!("summary {} reads {:?}", x.seq, x.mission_state)),
        None => Check::new("blocked_while_in_es", true, format!("{} summaries in ES", in_es.len())),
    });

    out.push(match exactly_one_ack(log) {
        Ok(n) => Check::new("exactly_one_ack", true, format!("{n} commands")),
        Err(e) => Check::new("exactly_one_ack", false, e),
    });

    let logged: Vec<(DrivingMode, DrivingMode)> = log
        .iter()
        .filter(|e| e.direction == Direction::FromVehicle)
        .filter_map(|e| match &e.message.body {
            Body::Event(DcEvent::ModeChanged { from, to }) => Some((*from, *to)),
            _ => None,
        })
        .collect();
    let traced: Vec<(DrivingMode, DrivingMode)> = r.mode_trace.iter().map(|t| (t.from, t.to)).collect();
    out.push(if s.faults.link_faults.is_empty() {
        Check::new(
            "trace_matches_log",
            logged == traced,
            format!("{} logged, {} traced", logged.len(), traced.len()),
        )
    } else {
        // Events lost on a lossy link legitimately differ.
        let subseq = {
            let mut it = traced.iter();
            logged.iter().all(|l| it.any(|t| t == l))
        };
        Check::new("trace_matches_log", subseq, "lossy link: logged transitions must be a subsequence")
    });

    for res in &r.script {
        let detail = match (&res.fired_at_ms, &res.outcome) {
            (None, _) => "never triggered".to_string(),
            (Some(t), None) => format!("sent at {t} ms, unresolved"),
            (Some(t), Some(o)) => format!("sent at {t} ms, {o:?}, expected {:?}", res.expected),
        };
        out.push(Check::new(&format!("script[{}] {}", res.step, res.command), res.pass, detail));
    }

    let e = &s.expect;
    if let Some(want) = e.mission_state {
        out.push(Check::new(
            "expect.mission_state",
            r.final_mission_state == want,
            format!("{:?}", r.final_mission_state),
        ));
    }
    if let Some(want) = e.emergency_stops {
        let n = r.emergency_stops.len();
        out.push(Check::new("expect.emergency_stops", n == want, format!("{n} (expected {want})")));
    }
    if let Some([lo, hi]) = e.es_clearance_m {
        let vals: Vec<Option<f64>> = r.emergency_stops.iter().map(|x| x.front_clearance_m).collect();
        let pass = !vals.is_empty() && vals.iter().all(|v| v.is_some_and(|d| (lo..=hi).contains(&d)));
        out.push(Check::new("expect.es_clearance_m", pass, format!("{vals:?} in [{lo}, {hi}]")));
    }
    for (name, want) in &e.deliveries_in_mode {
        let got = r.deliveries.iter().find(|d| &d.name == name).map(|d| d.mode);
        out.push(Check::new(
            &format!("expect.delivery {name}"),
            got == Some(*want),
            format!("{:?} (expected {})", got.map(|m| m.as_str()), want.as_str()),
        ));
    }
    if let Some(want) = &e.mode_sequence {
        let got = r.mode_sequence(DrivingMode::Fad);
        out.push(Check::new(
            "expect.mode_sequence",
            &got == want,
            got.iter().map(|m| m.short()).collect::<Vec<_>>().join(" -> "),
        ));
    }
    out
}
