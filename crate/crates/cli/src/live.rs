//! Vehicle process talking to a control centre over TCP.

use std::collections::VecDeque;
use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use tracing::{info, warn};

use dcage_core::state::MissionState;
use dcage_dc::client::DEFAULT_OUTBOX_CAPACITY;
use dcage_dc::{CccLink, DependabilityCage, Effect, Inbound};
use dcage_protocol::{Command, Direction, EventLogEntry};
use dcage_sim::{Scenario, Simulation};

use crate::headless::dc_config;
use crate::CliError;

#[derive(Debug, Clone)]
pub struct LiveOptions {
    pub ccc_addr: String,
    /// Everything the vehicle sends, as an event log.
    pub record: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiveSummary {
    pub sim_time_ms: u64,
    pub mission_state: MissionState,
    pub dropped: u64,
}

/// Runs in real time until the mission completes (plus settle time) or the
/// scenario's time limit.
pub fn run_live(scenario: &Scenario, opts: &LiveOptions) -> Result<LiveSummary, CliError> {
    let s = scenario;
    let mut dc = DependabilityCage::new(dc_config(s))?;
    let mut sim = Simulation::new(s.clone());
    let tick = Duration::from_millis(s.dc.tick_ms);
    let link = CccLink::start(opts.ccc_addr.clone(), dc.register_message(0), DEFAULT_OUTBOX_CAPACITY);
    let mut record = match &opts.record {
        Some(p) => Some(std::io::BufWriter::new(
            std::fs::File::create(p).map_err(|e| CliError::io(p.display().to_string(), e))?,
        )),
        None => None,
    };
    let mut global_seq = 0;
    info!(addr = %opts.ccc_addr, vehicle = %s.vehicle_id, "vehicle started");

    let mut queue = VecDeque::new();
    let mut assigned = s.mission.is_none();
    let mut finished_at = None;
    let mut next = Instant::now();
    loop {
        let t = sim.time_ms();
        if let Some(m) = s.mission.as_ref().filter(|m| !assigned && t >= m.assign_at_ms) {
            queue.push_back(Inbound::local(Command::AssignMission {
                mission_id: m.id.clone(),
                waypoints: s.mission_waypoints(),
            }));
            assigned = true;
        }
        link.drain_into(&mut queue);
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
        for m in &out.outbound {
            link.send(m);
            if let Some(w) = record.as_mut() {
                let e = EventLogEntry { global_seq, wall_time: t, direction: Direction::FromVehicle, message: m.clone() };
                global_seq += 1;
                w.write_all(e.to_line().as_bytes()).map_err(|e| CliError::io("record", e))?;
            }
        }
        sim.advance(&out.actuation, out.mode(), s.dc.tick_ms)?;
        if finished_at.is_none() && sim.mission_finished() {
            finished_at = Some(sim.time_ms());
            info!(t = sim.time_ms(), "mission completed");
        }
        let now = sim.time_ms();
        if finished_at.is_some_and(|f| now >= f + s.sim.settle_ms) || now >= s.sim.max_time_ms {
            break;
        }
        next += tick;
        if let Some(wait) = next.checked_duration_since(Instant::now()) {
            std::thread::sleep(wait);
        }
    }
    if let Some(mut w) = record {
        w.flush().map_err(|e| CliError::io("record", e))?;
    }
    Ok(LiveSummary { sim_time_ms: sim.time_ms(), mission_state: sim.mission().state, dropped: link.dropped() })
}
